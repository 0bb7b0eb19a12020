//! Branch-safe slit maps.
//!
//! The unit slit map at `x` sends the upper half-plane onto the half-plane
//! minus the vertical segment `(x, x + i]`:
//!
//! ```text
//! s_x(z) = x + sqrt(z - x - 1) * sqrt(z - x + 1)
//! ```
//!
//! Taking the principal root of each factor gives a function that is
//! continuous on the closed half-plane, so no branch state is tracked. Slits
//! of length `δ` are obtained by conjugating with the dilation `z ↦ z/δ`.
//!
//! The module also carries closed forms for the windowed drift
//! `∫_{-n}^{n} (s_x(z) - z) dx`, which the engine uses to restore the
//! contribution of arrivals outside a finite window.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ShlError};
use crate::scalar::{csqrt, ln_upper, Real, C};

/// Default exclusion radius around the branch points `x ± 1`.
pub const BRANCH_EXCLUSION_RADIUS: f64 = 1e-12;

/// Below this distance from the slit base the inverse map switches to the
/// real-line formula with an explicit sign.
const INVERSE_BASE_RADIUS: f64 = 1e-8;

/// A point of the closed upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HalfPlanePoint<T> {
    pub re: T,
    pub im: T,
}

impl<T: Real> HalfPlanePoint<T> {
    /// Builds a point, rejecting `im < 0`. A `-0.0` imaginary part is
    /// normalised to `+0.0` so that boundary points sit on the upper side of
    /// every branch cut.
    pub fn new(re: T, im: T) -> Result<Self> {
        if im < T::zero() || im.is_nan() || re.is_nan() {
            return Err(ShlError::BelowAxis {
                re: re.to_f64_lossy(),
                im: im.to_f64_lossy(),
            });
        }
        Ok(Self { re, im: im + T::zero() })
    }

    pub fn real(re: T) -> Self {
        Self { re, im: T::zero() }
    }

    pub fn imag(im: T) -> Self {
        Self::new(T::zero(), im).expect("imaginary axis point above the axis")
    }

    /// Converts a complex value produced by the maps, clamping roundoff
    /// below the axis.
    #[inline]
    pub fn from_complex(z: C<T>) -> Self {
        Self {
            re: z.re,
            im: z.im.max(T::zero()),
        }
    }

    #[inline]
    pub fn to_complex(self) -> C<T> {
        Complex::new(self.re, self.im)
    }

    pub fn is_boundary(&self) -> bool {
        self.im == T::zero()
    }

    pub fn dist(&self, other: &Self) -> T {
        (self.to_complex() - other.to_complex()).norm()
    }
}

/// Position and length of one slit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlitParams<T> {
    pub x: T,
    pub length: T,
}

impl<T: Real> SlitParams<T> {
    pub fn unit(x: T) -> Self {
        Self { x, length: T::one() }
    }

    pub fn new(x: T, length: T) -> Result<Self> {
        if !(length > T::zero()) || !length.is_finite() {
            return Err(ShlError::NonPositiveLength(length.to_f64_lossy()));
        }
        Ok(Self { x, length })
    }

    #[inline]
    fn is_unit(&self) -> bool {
        self.length == T::one()
    }
}

// ---------------------------------------------------------------------------
// Unit-length maps on raw complex values. The engine calls these directly.

/// `sqrt((z-x)^2 - 1)` on the slit branch.
#[inline]
pub fn slit_root<T: Real>(w: C<T>) -> C<T> {
    let one = C::new(T::one(), T::zero());
    csqrt(w - one) * csqrt(w + one)
}

/// Unit slit map at `x`.
#[inline]
pub fn unit_forward<T: Real>(x: T, z: C<T>) -> C<T> {
    let r = slit_root(z - x);
    C::new(x + r.re, r.im.max(T::zero()))
}

/// Unit slit map at `x` together with its derivative `(z-x)/sqrt((z-x)^2-1)`.
#[inline]
pub fn unit_forward_with_derivative<T: Real>(x: T, z: C<T>) -> (C<T>, C<T>) {
    let w = z - x;
    let r = slit_root(w);
    (C::new(x + r.re, r.im.max(T::zero())), w / r)
}

/// Inverse of [`unit_forward`] on the closed half-plane. Points on the slit
/// itself are sent to the right-hand preimage.
#[inline]
pub fn unit_inverse<T: Real>(x: T, w: C<T>) -> C<T> {
    let u = w - x;
    if u.norm() < T::lit(INVERSE_BASE_RADIUS) {
        return C::new(x + real_inverse_offset(u.re), T::zero());
    }
    if u.re == T::zero() && u.im <= T::one() {
        // On the closed slit: both sides are preimages, take the right one.
        let h = (T::one() - u.im * u.im).max(T::zero()).sqrt();
        return C::new(x + h, T::zero());
    }
    // 1 + u^-2 written as (u - i)(u + i) / u^2 to keep accuracy near the tip.
    let i = C::new(T::zero(), T::one());
    let ratio = ((u - i) * (u + i)) / (u * u);
    let z = u * csqrt(ratio);
    C::new(x + z.re, z.im.max(T::zero()))
}

/// `sign(u) * sqrt(u^2 + 1)` with the tie `u = 0` sent to `+1`.
#[inline]
fn real_inverse_offset<T: Real>(u: T) -> T {
    let m = u.hypot(T::one());
    if u < T::zero() {
        -m
    } else {
        m
    }
}

/// Real-line inverse of the unit slit map.
#[inline]
pub fn unit_inverse_real<T: Real>(x: T, a: T) -> T {
    x + real_inverse_offset(a - x)
}

/// Real part of the unit slit map on the real line: points within distance
/// one of the base are absorbed onto the base.
#[inline]
pub fn unit_real_projection<T: Real>(x: T, a: T) -> T {
    let u = a - x;
    let au = u.abs();
    if au < T::one() {
        x
    } else {
        let m = ((au - T::one()) * (au + T::one())).sqrt();
        if u < T::zero() {
            x - m
        } else {
            x + m
        }
    }
}

// ---------------------------------------------------------------------------
// Public operations on typed points.

/// Slit map `x + sqrt((z-x)^2 - 1)`, scaled by the slit length.
pub fn slit_forward<T: Real>(p: SlitParams<T>, z: HalfPlanePoint<T>) -> HalfPlanePoint<T> {
    let v = if p.is_unit() {
        unit_forward(p.x, z.to_complex())
    } else {
        let d = p.length;
        unit_forward(p.x / d, z.to_complex() / d) * d
    };
    HalfPlanePoint::from_complex(v)
}

/// Derivative of [`slit_forward`], using the default branch-point exclusion.
pub fn slit_derivative<T: Real>(p: SlitParams<T>, z: HalfPlanePoint<T>) -> Result<C<T>> {
    slit_derivative_with_radius(p, z, T::lit(BRANCH_EXCLUSION_RADIUS))
}

pub fn slit_derivative_with_radius<T: Real>(
    p: SlitParams<T>,
    z: HalfPlanePoint<T>,
    radius: T,
) -> Result<C<T>> {
    let d = p.length;
    let w = (z.to_complex() - p.x) / d;
    let dist = (w - T::one()).norm().min((w + T::one()).norm()) * d;
    if dist < radius {
        return Err(ShlError::BranchPoint {
            distance: dist.to_f64_lossy(),
            radius: radius.to_f64_lossy(),
        });
    }
    Ok(w / slit_root(w))
}

/// Exact inverse of [`slit_forward`].
pub fn slit_inverse<T: Real>(p: SlitParams<T>, w: HalfPlanePoint<T>) -> HalfPlanePoint<T> {
    let v = if p.is_unit() {
        unit_inverse(p.x, w.to_complex())
    } else {
        let d = p.length;
        unit_inverse(p.x / d, w.to_complex() / d) * d
    };
    HalfPlanePoint::from_complex(v)
}

/// `x + sign(a-x) sqrt((a-x)^2 + length^2)`; the base itself goes right.
pub fn slit_inverse_real<T: Real>(p: SlitParams<T>, a: T) -> T {
    if p.is_unit() {
        unit_inverse_real(p.x, a)
    } else {
        let d = p.length;
        unit_inverse_real(p.x / d, a / d) * d
    }
}

/// `Re s_x(a)` for real `a`.
pub fn slit_real_projection<T: Real>(p: SlitParams<T>, a: T) -> T {
    if p.is_unit() {
        unit_real_projection(p.x, a)
    } else {
        let d = p.length;
        unit_real_projection(p.x / d, a / d) * d
    }
}

// ---------------------------------------------------------------------------
// Windowed drift in closed form.

/// Antiderivative of `g(w) = sqrt(w^2-1) - w` on the closed upper half-plane.
#[inline]
fn drift_antiderivative<T: Real>(w: C<T>) -> C<T> {
    let r = slit_root(w);
    let s = w + r;
    let half = T::lit(0.5);
    (-(w / s) - ln_upper(s)) * half
}

/// `g(w) = sqrt(w^2-1) - w`, written as `-1/(r+w)` to avoid cancellation.
#[inline]
fn drift_density<T: Real>(w: C<T>) -> C<T> {
    let r = slit_root(w);
    -(r + w).inv()
}

/// `∫_{-n}^{n} (s_x(z) - z) dx` for a unit slit density on `[-n, n]`.
pub fn windowed_drift<T: Real>(z: C<T>, n: T) -> C<T> {
    drift_antiderivative(z + n) - drift_antiderivative(z - n)
}

/// `∂/∂z` of [`windowed_drift`], i.e. `∫_{-n}^{n} (s_x'(z) - 1) dx`.
pub fn windowed_drift_derivative<T: Real>(z: C<T>, n: T) -> C<T> {
    drift_density(z + n) - drift_density(z - n)
}

/// Coefficients of `sqrt(w^2-1) - w = Σ c_k w^{-(2k+1)}`.
const TAIL_SERIES: [f64; 5] = [-0.5, -0.125, -0.0625, -0.0390625, -0.02734375];

/// The series for the tail is used when `n >= 16` and `|z| <= n/2`, where the
/// first omitted term is below `1e-12`.
#[inline]
fn tail_series_applies<T: Real>(z: C<T>, n: T) -> bool {
    n >= T::lit(16.0) && z.norm_sqr() * T::lit(4.0) <= n * n
}

/// `∫_{|x|>n} g(z-x) dx` from the large-argument expansion of `g`:
/// `½ ln((n+z)/(n-z)) + Σ_{k>=1} c_k ((n+z)^{-2k} - (n-z)^{-2k}) / 2k`.
#[inline]
fn tail_drift_series<T: Real>(z: C<T>, n: T) -> C<T> {
    let half = T::lit(0.5);
    let p = (z + n).inv();
    let q = (-z + n).inv();
    let (p2, q2) = (p * p, q * q);
    let mut out = ((z + n) * q).ln() * half;
    let (mut pk, mut qk) = (p2, q2);
    for (k, &c) in TAIL_SERIES.iter().enumerate().skip(1) {
        out = out + (pk - qk) * T::lit(c / (2 * k) as f64);
        pk = pk * p2;
        qk = qk * q2;
    }
    out
}

#[inline]
fn tail_drift_series_derivative<T: Real>(z: C<T>, n: T) -> C<T> {
    let p = (z + n).inv();
    let q = (-z + n).inv();
    let (p2, q2) = (p * p, q * q);
    let mut out = (p + q) * T::lit(0.5);
    let (mut pk, mut qk) = (p * p2, q * q2);
    for &c in TAIL_SERIES.iter().skip(1) {
        out = out - (pk + qk) * T::lit(c);
        pk = pk * p2;
        qk = qk * q2;
    }
    out
}

/// Drift contributed by arrivals outside `[-n, n]`: `iπ/2 - windowed_drift`.
#[inline]
pub fn tail_drift<T: Real>(z: C<T>, n: T) -> C<T> {
    if tail_series_applies(z, n) {
        return tail_drift_series(z, n);
    }
    C::new(T::zero(), T::FRAC_PI_2()) - windowed_drift(z, n)
}

/// `∂/∂z` of [`tail_drift`].
#[inline]
pub fn tail_drift_derivative<T: Real>(z: C<T>, n: T) -> C<T> {
    if tail_series_applies(z, n) {
        return tail_drift_series_derivative(z, n);
    }
    -windowed_drift_derivative(z, n)
}

/// Even real part of the antiderivative for real `|u| > 1`.
#[inline]
fn drift_antiderivative_real<T: Real>(u: T) -> T {
    let au = u.abs();
    let r = ((au - T::one()) * (au + T::one())).sqrt();
    -(au / (r + au) + au.acosh()) * T::lit(0.5)
}

/// Restriction of [`tail_drift`] to real `a` with `|a| <= n - 1`, where it is
/// real-valued. Returns zero outside that range, where no compensation is
/// defined.
#[inline]
pub fn tail_drift_real<T: Real>(a: T, n: T) -> T {
    if a.abs() > n - T::one() {
        return T::zero();
    }
    if tail_series_applies(C::new(a, T::zero()), n) {
        return tail_drift_series(C::new(a, T::zero()), n).re;
    }
    drift_antiderivative_real(n - a) - drift_antiderivative_real(n + a)
}

/// `∫_{-n}^{n} (s_x^{-1}(a) - a) dx` for real `a`.
pub fn windowed_inverse_drift_real<T: Real>(a: T, n: T) -> T {
    fn anti<T: Real>(u: T) -> T {
        let au = u.abs();
        (au / (au.hypot(T::one()) + au) + au.asinh()) * T::lit(0.5)
    }
    anti(a + n) - anti(a - n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-12;

    fn pt(re: f64, im: f64) -> HalfPlanePoint<f64> {
        HalfPlanePoint::new(re, im).unwrap()
    }

    fn close(a: C<f64>, b: C<f64>, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn forward_examples() {
        let s = slit_forward(SlitParams::unit(0.0), pt(0.0, 1.0));
        assert!(close(s.to_complex(), C::new(0.0, 2f64.sqrt()), TOL));
        let s = slit_forward(SlitParams::unit(2.0), pt(2.0, 0.0));
        assert!(close(s.to_complex(), C::new(2.0, 1.0), TOL));
        let s = slit_forward(SlitParams::unit(0.0), pt(3.0, 0.0));
        assert!(close(s.to_complex(), C::new(8f64.sqrt(), 0.0), TOL));
        let s = slit_forward(SlitParams::unit(0.0), pt(0.5, 0.0));
        assert!(close(s.to_complex(), C::new(0.0, 0.75f64.sqrt()), TOL));
        let s = slit_forward(SlitParams::unit(0.0), pt(-3.0, 0.0));
        assert!(close(s.to_complex(), C::new(-8f64.sqrt(), 0.0), TOL));
    }

    #[test]
    fn forward_on_imaginary_axis() {
        for &y in &[1e-6, 0.3, 1.0, 7.0, 1e3] {
            let s = slit_forward(SlitParams::unit(4.0), pt(4.0, y));
            assert!(close(s.to_complex(), C::new(4.0, (y * y + 1.0).sqrt()), 1e-12 * (1.0 + y)));
        }
    }

    #[test]
    fn negative_zero_imaginary_part_is_normalised() {
        let z = HalfPlanePoint::new(-0.5f32, -0.0).unwrap();
        assert!(z.im.is_sign_positive());
        let s = slit_forward(SlitParams::unit(0.0), z);
        assert!(s.im > 0.0);
        assert!(HalfPlanePoint::new(0.0, -1e-300).is_err());
    }

    #[test]
    fn derivative_examples() {
        let p = SlitParams::unit(0.0);
        let d = slit_derivative(p, pt(0.0, 10.0)).unwrap();
        // Frozen from the centred finite-difference oracle at h = 1e-6.
        assert!(close(d, C::new(0.995_037_190_209_989_1, 0.0), 1e-9));
        let d = slit_derivative(p, pt(0.0, 1e9)).unwrap();
        assert!(close(d, C::new(1.0, 0.0), 1e-12));
        let d = slit_derivative(p, pt(2.0, 0.0)).unwrap();
        assert!(close(d, C::new(1.154_700_538_379_251_7, 0.0), 1e-9));
    }

    #[test]
    fn derivative_rejects_branch_points() {
        let p = SlitParams::unit(3.0);
        assert!(matches!(
            slit_derivative(p, pt(4.0, 0.0)),
            Err(ShlError::BranchPoint { .. })
        ));
        assert!(matches!(
            slit_derivative(p, pt(2.0, 1e-13)),
            Err(ShlError::BranchPoint { .. })
        ));
        assert!(slit_derivative(p, pt(2.0, 1e-9)).is_ok());
    }

    #[test]
    fn inverse_examples() {
        let p = SlitParams::unit(0.0);
        let z = slit_inverse(p, pt(8f64.sqrt(), 0.0));
        assert!(close(z.to_complex(), C::new(3.0, 0.0), 1e-12));
        let z = slit_inverse(p, pt(0.0, 5f64.sqrt()));
        assert!(close(z.to_complex(), C::new(0.0, 2.0), 1e-12));
        let z = slit_inverse(p, pt(1.0, 0.0));
        assert!(close(z.to_complex(), C::new(2f64.sqrt(), 0.0), 1e-12));
        let z = slit_inverse(p, pt(-1.0, 0.0));
        assert!(close(z.to_complex(), C::new(-(2f64.sqrt()), 0.0), 1e-12));
    }

    #[test]
    fn inverse_on_the_slit_goes_right() {
        let p = SlitParams::unit(1.5);
        let z = slit_inverse(p, pt(1.5, 0.6));
        assert!(close(z.to_complex(), C::new(1.5 + 0.8, 0.0), 1e-12));
        let z = slit_inverse(p, pt(1.5, 0.0));
        assert!(close(z.to_complex(), C::new(2.5, 0.0), 1e-12));
        let z = slit_inverse(p, pt(1.5, 1.0));
        assert!(close(z.to_complex(), C::new(1.5, 0.0), 1e-12));
    }

    #[test]
    fn inverse_real_examples() {
        assert_eq!(slit_inverse_real(SlitParams::unit(0.0), 0.0), 1.0);
        assert!((slit_inverse_real(SlitParams::unit(3.0), 4.0) - (3.0 + 2f64.sqrt())).abs() < 1e-15);
        assert!((slit_inverse_real(SlitParams::unit(0.0), -2.0) + 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn real_projection_examples() {
        assert_eq!(slit_real_projection(SlitParams::unit(0.0), 0.5), 0.0);
        assert!((slit_real_projection(SlitParams::unit(0.0), 3.0) - 8f64.sqrt()).abs() < 1e-15);
        assert_eq!(slit_real_projection(SlitParams::unit(5.0), 5.0), 5.0);
        assert_eq!(slit_real_projection(SlitParams::unit(5.0), 4.0), 5.0);
    }

    #[test]
    fn scaled_slit_is_a_dilation() {
        let p = SlitParams::new(0.3, 0.1).unwrap();
        let s = slit_forward(p, pt(0.3, 0.0));
        assert!(close(s.to_complex(), C::new(0.3, 0.1), 1e-15));
        let z = pt(0.7, 0.05);
        let back = slit_inverse(p, slit_forward(p, z));
        assert!(close(back.to_complex(), z.to_complex(), 1e-13));
        assert!(SlitParams::new(0.0, 0.0).is_err());
        assert!(SlitParams::new(0.0, -1.0).is_err());
    }

    #[test]
    fn f32_instantiation() {
        let s = slit_forward(SlitParams::unit(0.0f32), HalfPlanePoint::new(0.0f32, 1.0).unwrap());
        assert!((s.im - 2f32.sqrt()).abs() < 1e-6);
        assert!((unit_inverse_real(0.0f32, 0.0) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn windowed_drift_matches_atan_deficit_on_the_axis() {
        // On z = iy the missing tail is i·atan(y/n) to leading order.
        let z = C::new(0.0, 1.0);
        let d = windowed_drift(z, 100.0f64);
        assert!(d.re.abs() < 1e-12);
        assert!((std::f64::consts::FRAC_PI_2 - d.im - (0.01f64).atan()).abs() < 1e-6);
        let t = tail_drift(C::new(0.0, 0.0), 100.0);
        assert!(t.norm() < 1e-12);
    }

    #[test]
    fn tail_series_matches_closed_form() {
        let i_pi_2 = C::new(0.0, std::f64::consts::FRAC_PI_2);
        for &n in &[16.0f64, 50.0, 100.0, 600.0] {
            for &(re, im) in &[(0.0, 0.0), (0.0, 1.0), (0.3, 0.01), (-0.4 * n, 0.2 * n), (0.5 * n, 0.0), (2.0, 7.0)] {
                let z = C::new(re, im);
                let closed = i_pi_2 - windowed_drift(z, n);
                let series = tail_drift_series(z, n);
                assert!((closed - series).norm() < 1e-11, "n={n} z={z}: {closed} vs {series}");
                let dc = -windowed_drift_derivative(z, n);
                let ds = tail_drift_series_derivative(z, n);
                assert!((dc - ds).norm() < 1e-11, "n={n} z={z}: {dc} vs {ds}");
            }
        }
    }

    #[test]
    fn tail_drift_real_agrees_with_complex_form() {
        for &a in &[-20.0f64, -1.5, 0.0, 0.3, 7.0, 48.0] {
            let c = tail_drift(C::new(a, 0.0), 50.0);
            let r = tail_drift_real(a, 50.0);
            assert!((c.re - r).abs() < 1e-12, "a={a}: {c} vs {r}");
            assert!(c.im.abs() < 1e-12, "a={a}: {c}");
        }
    }

    #[test]
    fn windowed_drift_derivative_matches_finite_differences() {
        let z = C::new(1.3, 0.7);
        let h = 1e-5;
        let fd = (windowed_drift(z + h, 30.0) - windowed_drift(z - h, 30.0)) / (2.0 * h);
        assert!(close(fd, windowed_drift_derivative(z, 30.0), 1e-8));
    }

    fn upper() -> impl Strategy<Value = (f64, f64)> {
        (-50.0..50.0f64, -6.0..3.0f64).prop_map(|(re, e)| (re, 10f64.powf(e)))
    }

    proptest! {
        #[test]
        fn round_trip((re, im) in upper(), x in -10.0..10.0f64) {
            let p = SlitParams::unit(x);
            let z = pt(re, im);
            let back = slit_inverse(p, slit_forward(p, z));
            prop_assert!(back.dist(&z) <= 1e-10 * (1.0 + z.to_complex().norm()));
        }

        #[test]
        fn height_never_decreases((re, im) in upper(), x in -10.0..10.0f64) {
            let s = slit_forward(SlitParams::unit(x), pt(re, im));
            prop_assert!(s.im >= im);
        }

        #[test]
        fn shift_covariance((re, im) in upper(), x in -10.0..10.0f64) {
            let a = slit_forward(SlitParams::unit(x), pt(re, im)).to_complex();
            let b = slit_forward(SlitParams::unit(0.0), pt(re - x, im)).to_complex() + x;
            prop_assert!(close(a, b, 1e-12 * (1.0 + a.norm())));
        }

        #[test]
        fn mirror_symmetry((re, im) in upper()) {
            let p = SlitParams::unit(0.0);
            let a = slit_forward(p, pt(re, im)).to_complex();
            let m = slit_forward(p, pt(-re, im)).to_complex();
            prop_assert!(close((-m).conj(), a, 1e-12 * (1.0 + a.norm())));
        }

        #[test]
        fn derivative_matches_finite_differences(re in -5.0..5.0f64, im in 0.05..20.0f64) {
            let p = SlitParams::unit(0.0);
            let z = pt(re, im);
            let h = 1e-6;
            let f = |dz: f64| unit_forward(0.0, z.to_complex() + dz);
            let fd = (f(h) - f(-h)) / (2.0 * h);
            let d = slit_derivative(p, z).unwrap();
            prop_assert!((fd - d).norm() <= 1e-5 * d.norm());
        }

        #[test]
        fn real_inverse_is_strictly_increasing(a in -50.0..50.0f64, gap in 1e-9..10.0f64, x in -5.0..5.0f64) {
            let p = SlitParams::unit(x);
            let fa = slit_inverse_real(p, a);
            let fb = slit_inverse_real(p, a + gap);
            prop_assert!(fa < fb);
            prop_assert!((fa - x).abs() >= 1.0);
        }

        #[test]
        fn projection_is_weakly_monotone(a in -50.0..50.0f64, gap in 0.0..10.0f64, x in -5.0..5.0f64) {
            let p = SlitParams::unit(x);
            prop_assert!(slit_real_projection(p, a) <= slit_real_projection(p, a + gap));
        }
    }
}
