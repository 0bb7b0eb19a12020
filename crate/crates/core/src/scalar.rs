//! Scalar abstraction shared by the kernel and the engine.
//!
//! The slit maps and flows only need floating point arithmetic with a
//! principal complex square root, so they are written once against
//! [`Real`] and instantiated for `f32` and `f64`.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar usable by the slit-map kernel and the process engine.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal or event coordinate.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 is representable in every Real")
    }

    /// Lossless widening used when results leave the generic core.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`].
pub type C<T> = Complex<T>;

/// `ln` restricted to the closed upper half-plane: the argument is taken in
/// `[0, π]` so that a negative real input with a `-0.0` imaginary part still
/// lands on the upper side of the cut.
#[inline]
pub(crate) fn ln_upper<T: Real>(v: C<T>) -> C<T> {
    C::new(v.norm().ln(), v.im.abs().atan2(v.re))
}

/// Principal square root by the algebraic formula. Same branch as
/// `Complex::sqrt`, including the sign of a zero imaginary part, without the
/// trip through polar form.
#[inline]
pub(crate) fn csqrt<T: Real>(z: C<T>) -> C<T> {
    let (a, b) = (z.re, z.im);
    if a == T::zero() && b == T::zero() {
        return C::new(T::zero(), b);
    }
    let m = a.hypot(b);
    let half = T::lit(0.5);
    if a >= T::zero() {
        let t = ((m + a) * half).sqrt();
        C::new(t, b / (t + t))
    } else {
        let t = ((m - a) * half).sqrt();
        C::new(b.abs() / (t + t), t.copysign(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csqrt_matches_principal_root() {
        let vals = [-3.0, -1.0, -1e-9, -0.0, 0.0, 1e-9, 0.5, 2.0, 1e8];
        for &a in &vals {
            for &b in &vals {
                let z = C::new(a, b);
                let ours = csqrt(z);
                let theirs = z.sqrt();
                assert!((ours - theirs).norm() <= 1e-14 * (1.0 + theirs.norm()), "{z}: {ours} vs {theirs}");
                assert_eq!(ours.im.is_sign_negative(), theirs.im.is_sign_negative(), "{z}");
            }
        }
    }
}
