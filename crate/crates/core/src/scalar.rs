//! Scalar abstraction: the one trait bound the whole crate is generic over.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Floating point scalar usable for every numeric kernel in this crate:
/// grid coordinates, spinor components and Fourier symbols alike.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + rustfft::FftNum
    + Sum
    + Display
    + LowerExp
    + Debug
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`, for tabulated constants.
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant")
    }

    /// Widening conversion to `f64`, for reporting.
    fn to_f64_lossy(self) -> f64;
}

impl Scalar for f32 {
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

/// Complex number over the crate scalar.
pub type C<T> = Complex<T>;

/// `i` as a complex constant.
pub fn im<T: Scalar>() -> C<T> {
    Complex::new(T::zero(), T::one())
}

/// Real number lifted to the complex plane.
pub fn re<T: Scalar>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

/// Shorthand for `T::from_f64_lossy`.
pub fn cast<T: Scalar>(x: f64) -> T {
    T::from_f64_lossy(x)
}
