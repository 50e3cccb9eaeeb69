//! Scalar abstractions shared by every numerical kernel.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::Neg;

use num_complex::Complex;
use num_traits::{Float, FloatConst, Num};

/// Real floating-point type the physics is generic over (`f32`, `f64`).
pub trait RealScalar:
    Float + FloatConst + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Lossless-enough conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("literal representable in scalar type")
    }

    fn from_usize(n: usize) -> Self {
        <Self as num_traits::NumCast>::from(n).expect("integer representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl RealScalar for f32 {}
impl RealScalar for f64 {}

/// Ring of matrix entries. Covers exact integers, reals, and complex numbers.
pub trait Ring: Num + Clone + Neg<Output = Self> + Debug + Send + Sync + 'static {}

impl<S> Ring for S where S: Num + Clone + Neg<Output = S> + Debug + Send + Sync + 'static {}

/// Entry-wise magnitude, used for max-abs norms.
pub trait Modulus {
    type Real: PartialOrd + Clone;
    fn modulus(&self) -> Self::Real;
}

impl Modulus for i64 {
    type Real = i64;
    fn modulus(&self) -> i64 {
        self.abs()
    }
}

impl Modulus for f32 {
    type Real = f32;
    fn modulus(&self) -> f32 {
        self.abs()
    }
}

impl Modulus for f64 {
    type Real = f64;
    fn modulus(&self) -> f64 {
        self.abs()
    }
}

impl<T: RealScalar> Modulus for Complex<T> {
    type Real = T;
    fn modulus(&self) -> T {
        self.norm()
    }
}

/// Shorthand for a complex number built from real literals.
pub fn cplx<T: RealScalar>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

pub fn real<T: RealScalar>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}
