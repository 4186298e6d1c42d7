//! Floating point abstraction shared by the dynamics, adaptive law and
//! autopilot. Everything numeric is written against [`Scalar`] so the same
//! code runs in `f32` (embedded-style) or `f64` (simulation/oracle) precision.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// floating point: f32 or f64
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Default + Debug + Display + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Scalar>(value: f64) -> T {
    T::from_f64(value).expect("literal representable in scalar type")
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle<T: Scalar>(angle: T) -> T {
    let pi = T::PI();
    let two_pi = pi + pi;
    let mut wrapped = angle - two_pi * ((angle + pi) / two_pi).floor();
    // floor() lands exactly on -pi for odd multiples of pi
    if wrapped <= -pi {
        wrapped = wrapped + two_pi;
    }
    if wrapped > pi {
        wrapped = wrapped - two_pi;
    }
    wrapped
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}
