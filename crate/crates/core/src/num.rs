//! Scalar abstraction: all core math is generic over `Real` (`f32` or `f64`).

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar usable throughout the crate.
///
/// Blanket-implemented for `f32` and `f64`.
pub trait Real: RealField + FromPrimitive + ToPrimitive + Copy {}

impl<T: RealField + FromPrimitive + ToPrimitive + Copy> Real for T {}

/// Converts an `f64` literal into the working scalar type.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal not representable in scalar type")
}

/// Lossy conversion back to `f64`, for diagnostics and serialization.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
