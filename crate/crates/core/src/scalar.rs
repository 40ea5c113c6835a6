//! Scalar abstraction for the Gaussian and rendering math.
//!
//! Token geometry, features, rendered maps and the optimizer are generic over
//! [`Scalar`]. `f32` is the storage type of the GPST format; `f64` is used
//! where finite-difference audits need the extra precision.

use num_traits::{Float, FromPrimitive};
use std::fmt::{Debug, Display};

/// Floating point type usable for token parameters: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64` (rounds to nearest for `f32`).
    fn from_f64_lossy(v: f64) -> Self;

    /// Widening conversion to `f64`.
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn from_f64_lossy(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64_lossy(v: f64) -> Self {
        v
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}
