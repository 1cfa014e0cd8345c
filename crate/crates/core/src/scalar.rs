use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type accepted by the signal processing kernels.
///
/// Both `num_traits::Float` and `nalgebra::RealField` are required, so method
/// calls that exist on both (`sqrt`, `abs`, ...) must be written with an
/// explicit `Float::` path inside generic code.
pub trait Scalar:
    Float + RealField + FromPrimitive + ToPrimitive + Copy + Default + Debug + Display + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` constant into `T`.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant representable in scalar type")
}

/// Converts a scalar back to `f64` for reporting.
#[inline]
pub fn to_f64<T: Scalar>(x: T) -> f64 {
    ToPrimitive::to_f64(&x).unwrap_or(f64::NAN)
}
