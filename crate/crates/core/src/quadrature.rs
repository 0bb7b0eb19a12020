//! Quadrature for the slit-map integral identities.
//!
//! Integrands are complex valued on the real line. A global adaptive
//! 21-point Gauss–Kronrod scheme handles the core `|x - Re z| <= X0` with
//! break points at the slit singularities `Re z, Re z ± 1`; the tails beyond
//! `X0` are added from their leading asymptotic decay.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ShlError};
use crate::kernel::slit_root;

/// Absolute error target used when none is given.
pub const DEFAULT_ERROR_TARGET: f64 = 1e-8;
/// Maximum number of Kronrod panels before giving up.
pub const DEFAULT_PANEL_BUDGET: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: Complex64,
    pub estimated_error: f64,
    pub panels_used: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    pub error_target: f64,
    pub panel_budget: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            error_target: DEFAULT_ERROR_TARGET,
            panel_budget: DEFAULT_PANEL_BUDGET,
        }
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod21<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut gauss = Complex64::new(0.0, 0.0);
    let mut kronrod = fc * WGK[10];
    for (j, &x) in XGK.iter().enumerate().take(10) {
        let dx = h * x;
        let s = f(c - dx) + f(c + dx);
        kronrod += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let value = kronrod * h;
    let error = ((kronrod - gauss) * h).norm();
    Panel { a, b, value, error }
}

/// Global adaptive integration of `f` over consecutive break points.
pub fn integrate<F: Fn(f64) -> Complex64>(
    f: F,
    breaks: &[f64],
    cfg: QuadratureConfig,
) -> Result<QuadratureResult> {
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            heap.push(kronrod21(&f, w[0], w[1]));
        }
    }
    let mut panels = heap.len();
    loop {
        let err: f64 = heap.iter().map(|p| p.error).sum();
        if err <= cfg.error_target {
            let value = heap.iter().map(|p| p.value).sum();
            return Ok(QuadratureResult {
                value,
                estimated_error: err,
                panels_used: panels,
            });
        }
        if panels + 1 > cfg.panel_budget {
            return Err(ShlError::QuadratureNonConvergence {
                target: cfg.error_target,
                estimate: err,
                panels,
            });
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval no longer splittable in double precision.
            return Err(ShlError::QuadratureNonConvergence {
                target: cfg.error_target,
                estimate: err,
                panels,
            });
        }
        heap.push(kronrod21(&f, worst.a, mid));
        heap.push(kronrod21(&f, mid, worst.b));
        panels += 1;
    }
}

fn core_half_width(re: f64) -> f64 {
    (1e3f64).max(10.0 * (1.0 + re.abs()))
}

/// Sorted break points `c - X0, c - 1, c, c + 1, c + X0`, clipped to `[lo, hi]`.
fn slit_breaks(c: f64, lo: f64, hi: f64) -> Vec<f64> {
    let mut v = vec![lo, hi];
    for p in [c - 1.0, c, c + 1.0] {
        if p > lo && p < hi {
            v.push(p);
        }
    }
    v.sort_by(f64::total_cmp);
    v
}

fn require_interior(z: Complex64) -> Result<()> {
    if z.im > 0.0 {
        Ok(())
    } else {
        Err(ShlError::InvalidArgument(format!(
            "quadrature point must satisfy Im z > 0, got {z}"
        )))
    }
}

/// `s_x(z) - z` as a function of `x`, written without cancellation.
#[inline]
fn displacement(z: Complex64, x: f64) -> Complex64 {
    let w = z - x;
    -(slit_root(w) + w).inv()
}

/// `∫ |s_x(z) - z|^2 dx` over the whole line.
pub fn quad_l2_displacement(z: Complex64) -> Result<QuadratureResult> {
    quad_l2_displacement_with(z, QuadratureConfig::default())
}

pub fn quad_l2_displacement_with(z: Complex64, cfg: QuadratureConfig) -> Result<QuadratureResult> {
    require_interior(z)?;
    let x0 = core_half_width(z.re);
    let breaks = slit_breaks(z.re, z.re - x0, z.re + x0);
    let mut r = integrate(|x| Complex64::new(displacement(z, x).norm_sqr(), 0.0), &breaks, cfg)?;
    // |g(w)|^2 = 1/(4|w|^2) + O(|w|^-4) beyond X0.
    let y = z.im;
    let tail = 2.0 * (std::f64::consts::FRAC_PI_2 - (x0 / y).atan()) / (4.0 * y);
    r.value += tail;
    r.estimated_error += 2.0 / (3.0 * x0.powi(3));
    Ok(r)
}

/// `∫_{-n}^{n} (s_x(z) - z) dx`.
pub fn quad_drift(z: Complex64, n: f64) -> Result<QuadratureResult> {
    quad_drift_with(z, n, QuadratureConfig::default())
}

pub fn quad_drift_with(z: Complex64, n: f64, cfg: QuadratureConfig) -> Result<QuadratureResult> {
    let floor = 4f64.max(2.0 * z.re.abs());
    if !(n >= floor) {
        return Err(ShlError::WindowTooSmall { window: n, floor });
    }
    if z.im < 0.0 {
        return Err(ShlError::InvalidArgument(format!("point below the axis: {z}")));
    }
    let breaks = slit_breaks(z.re, -n, n);
    integrate(|x| displacement(z, x), &breaks, cfg)
}

/// `∫ |s_x^{-1}(0)|^2 dx`, the per-unit-time variance of the inverse boundary flow.
pub fn quad_inverse_l2() -> Result<QuadratureResult> {
    quad_inverse_l2_with(QuadratureConfig::default())
}

/// Integrand of [`quad_inverse_l2`]: `(sqrt(x^2+1) - |x|)^2`.
#[inline]
pub fn inverse_l2_integrand(x: f64) -> f64 {
    let d = x.hypot(1.0) + x.abs();
    1.0 / (d * d)
}

pub fn quad_inverse_l2_with(cfg: QuadratureConfig) -> Result<QuadratureResult> {
    let x0 = 1e3;
    let mut r = integrate(
        |x| Complex64::new(inverse_l2_integrand(x), 0.0),
        &[-x0, 0.0, x0],
        cfg,
    )?;
    // (sqrt(u^2+1)+u)^-2 = 1/(4u^2) - 1/(8u^4) + O(u^-6).
    r.value += 2.0 * (1.0 / (4.0 * x0) - 1.0 / (24.0 * x0.powi(3)));
    r.estimated_error += 1.0 / x0.powi(5);
    Ok(r)
}

/// `∫ |s_x'(z) - 1|^2 dx`.
pub fn quad_derivative_l2(z: Complex64) -> Result<QuadratureResult> {
    quad_derivative_l2_with(z, QuadratureConfig::default())
}

pub fn quad_derivative_l2_with(z: Complex64, cfg: QuadratureConfig) -> Result<QuadratureResult> {
    require_interior(z)?;
    let x0 = core_half_width(z.re);
    let breaks = slit_breaks(z.re, z.re - x0, z.re + x0);
    let mut r = integrate(
        |x| {
            let w = z - x;
            let r = slit_root(w);
            // w/r - 1 = 1/(r (w + r))
            let d = (r * (w + r)).inv();
            Complex64::new(d.norm_sqr(), 0.0)
        },
        &breaks,
        cfg,
    )?;
    // |s'-1|^2 = 1/(4|w|^4) + O(|w|^-6).
    r.value += 1.0 / (6.0 * x0.powi(3));
    r.estimated_error += 1.0 / x0.powi(5);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::windowed_drift;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn i(y: f64) -> Complex64 {
        Complex64::new(0.0, y)
    }

    #[test]
    fn integrate_polynomial_exactly() {
        let r = integrate(|x| Complex64::new(x * x * x - x, 2.0 * x), &[-1.0, 2.0], QuadratureConfig::default()).unwrap();
        assert!((r.value - Complex64::new(2.25, 3.0)).norm() < 1e-13);
    }

    #[test]
    fn drift_converges_to_i_pi_over_two() {
        let r = quad_drift(i(1.0), 100.0).unwrap();
        assert!((r.value - i(FRAC_PI_2)).norm() < 0.05);
        let r = quad_drift(i(1.0), 1000.0).unwrap();
        assert!((r.value - i(FRAC_PI_2)).norm() < 0.005);
        assert!((r.value - i(FRAC_PI_2)).norm() <= PI / 1000.0);
    }

    #[test]
    fn drift_agrees_with_closed_form() {
        for &(z, n) in &[(i(1.0), 100.0), (Complex64::new(5.0, 1.0), 100.0), (Complex64::new(-2.0, 0.05), 20.0), (Complex64::new(0.3, 0.0), 8.0)] {
            let q = quad_drift(z, n).unwrap();
            let c = windowed_drift(z, n);
            assert!((q.value - c).norm() < 1e-7, "z={z} n={n}: {} vs {c}", q.value);
        }
    }

    #[test]
    fn drift_off_centre_exceeds_the_vertical_leg_bound() {
        // The truncated integral at z = 5+i, n = 100 carries a real part of
        // about -log(105/95)/2, so it sits outside pi/95 of i*pi/2.
        let z = Complex64::new(5.0, 1.0);
        let q = quad_drift(z, 100.0).unwrap();
        assert!((q.value - windowed_drift(z, 100.0)).norm() < 1e-7);
        assert!((q.value.re + 0.5 * (105f64 / 95.0).ln()).abs() < 1e-3);
        let err = (q.value - i(FRAC_PI_2)).norm();
        assert!(err > PI / 95.0 && err < 0.06);
    }

    #[test]
    fn drift_error_decays_like_one_over_n() {
        let e1 = (quad_drift(i(1.0), 100.0).unwrap().value - i(FRAC_PI_2)).norm();
        let e2 = (quad_drift(i(1.0), 1000.0).unwrap().value - i(FRAC_PI_2)).norm();
        assert!(e2 / e1 <= 0.2);
    }

    #[test]
    fn drift_rejects_small_windows() {
        assert!(matches!(quad_drift(i(1.0), 3.0), Err(ShlError::WindowTooSmall { .. })));
        assert!(matches!(quad_drift(Complex64::new(10.0, 1.0), 15.0), Err(ShlError::WindowTooSmall { .. })));
    }

    #[test]
    fn inverse_l2_is_four_thirds() {
        let r = quad_inverse_l2().unwrap();
        assert!((r.value.re - 4.0 / 3.0).abs() < 1e-6);
        assert_eq!(inverse_l2_integrand(0.0), 1.0);
    }

    #[test]
    fn inverse_l2_half_line_matches_antiderivative() {
        // Independent closed form: 2x^3/3 + x - (2/3)(x^2+1)^{3/2} from 0 to inf.
        let anti = |x: f64| 2.0 * x.powi(3) / 3.0 + x - 2.0 / 3.0 * (x * x + 1.0).powf(1.5);
        let x0 = 50.0;
        let r = integrate(|x| Complex64::new(inverse_l2_integrand(x), 0.0), &[0.0, x0], QuadratureConfig::default()).unwrap();
        assert!((r.value.re - (anti(x0) - anti(0.0))).abs() < 1e-8);
        let half = quad_inverse_l2().unwrap().value.re / 2.0;
        assert!((half - 2.0 / 3.0).abs() < 1e-7);
    }

    #[test]
    fn l2_displacement_decreases_with_height() {
        let a = quad_l2_displacement(i(1.0)).unwrap().value.re;
        let b = quad_l2_displacement(i(2.0)).unwrap().value.re;
        assert!(a > 0.0 && b < a);
        // Bounded by C/(1+y) with a moderate constant.
        for &y in &[0.01, 0.1, 1.0, 10.0, 100.0] {
            let v = quad_l2_displacement(i(y)).unwrap().value.re;
            assert!(v * (1.0 + y) < 4.0, "y={y} v={v}");
        }
        assert!(quad_l2_displacement(Complex64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn derivative_l2_decays_like_inverse_cube() {
        let a = quad_derivative_l2(i(2.0)).unwrap().value.re;
        let b = quad_derivative_l2(i(4.0)).unwrap().value.re;
        let ratio = b / a;
        assert!((ratio / 0.125 - 1.0).abs() < 0.3, "ratio {ratio}");
        let far = quad_derivative_l2(i(1e3)).unwrap().value.re;
        assert!(far < 1e-8);
        let low = quad_derivative_l2(i(0.5)).unwrap();
        assert!(low.value.re.is_finite() && low.value.re > a);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let cfg = QuadratureConfig { error_target: 1e-300, panel_budget: 10 };
        assert!(matches!(
            quad_l2_displacement_with(i(1.0), cfg),
            Err(ShlError::QuadratureNonConvergence { .. })
        ));
    }
}
