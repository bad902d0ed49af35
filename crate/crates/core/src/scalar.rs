//! Floating-point scalar abstraction for the amplitude-level optics.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};

/// Real scalar used for amplitudes: `f32` or `f64`.
///
/// The two tolerances are precision dependent, so they are provided per type
/// rather than derived from `epsilon()`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Tolerance on norms, unitarity and probability sums.
    fn norm_tol() -> Self;
    /// Amplitudes with modulus below this are dropped from sparse maps.
    fn prune_tol() -> Self;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }
}

impl Scalar for f64 {
    fn norm_tol() -> Self {
        1e-12
    }
    fn prune_tol() -> Self {
        1e-15
    }
}

impl Scalar for f32 {
    fn norm_tol() -> Self {
        1e-5
    }
    fn prune_tol() -> Self {
        1e-7
    }
}

/// `exp(i * phase)`.
pub fn phase<T: Scalar>(angle: T) -> Complex<T> {
    Complex::new(angle.cos(), angle.sin())
}

pub(crate) fn c<T: Scalar>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}
