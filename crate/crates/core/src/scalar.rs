//! Floating-point scalar abstraction shared by every geometric routine.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};

/// Real scalar usable for grid geometry and log-odds arithmetic: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Infallible for both supported float widths.
    #[inline]
    fn lit(value: f64) -> Self {
        <Self as NumCast>::from(value).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Cartesian point or vector in meters.
pub type Vec3<T> = [T; 3];

#[inline]
pub(crate) fn sub<T: Scalar>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn add<T: Scalar>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub(crate) fn norm_sq<T: Scalar>(a: Vec3<T>) -> T {
    a[0] * a[0] + a[1] * a[1] + a[2] * a[2]
}

#[inline]
pub(crate) fn is_finite3<T: Scalar>(a: Vec3<T>) -> bool {
    a.iter().all(|c| c.is_finite())
}
