//! Scalar abstraction: the numerical kernels are generic over the floating
//! point type, instantiated as `f64` for production runs and `f32` for cheap
//! smoke checks.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating point scalar usable throughout the crate.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Shorthand conversion from an `f64` literal.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("literal not representable in scalar type")
    }

    #[inline]
    fn from_usize_(v: usize) -> Self {
        Self::from_usize(v).expect("usize not representable in scalar type")
    }

    #[inline]
    fn to_f64_(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("scalar not representable as f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Complex number over the crate scalar.
pub type Cx<T> = Complex<T>;

/// `e^{i theta}` as a complex number.
#[inline]
pub fn cis<T: Scalar>(theta: T) -> Cx<T> {
    Cx::new(theta.cos(), theta.sin())
}

/// Imaginary unit.
#[inline]
pub fn iu<T: Scalar>() -> Cx<T> {
    Cx::new(T::zero(), T::one())
}

/// Real constant lifted to a complex number.
#[inline]
pub fn cre<T: Scalar>(x: T) -> Cx<T> {
    Cx::new(x, T::zero())
}

/// `sqrt(1 + |w|^2)`, the Japanese bracket of a complex number.
#[inline]
pub fn bracket<T: Scalar>(w: Cx<T>) -> T {
    (T::one() + w.norm_sqr()).sqrt()
}
