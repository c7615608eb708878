//! Scalar abstraction shared by every numerical module.

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
///
/// Arithmetic and transcendental functions come from [`RealField`];
/// conversions to and from literals come from `num-traits`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Default {
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    /// Converts a count into the scalar type.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// Lossy conversion back to `f64` for reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over a [`Real`] field.
pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn cplx<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

/// Modulus of a complex scalar.
#[inline]
pub fn cabs<T: Real>(z: &C<T>) -> T {
    nalgebra::ComplexField::modulus(*z)
}

#[inline]
pub(crate) fn creal<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}
