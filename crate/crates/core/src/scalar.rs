//! Scalar abstraction for the continuous parts of the library (workspace
//! geometry, kinematics). Lattice coordinates and search costs stay integral.

use num_traits::{Float, FromPrimitive, ToPrimitive};
use std::fmt::Debug;

/// Floating point scalar usable for arm geometry: `f32` or `f64`.
pub trait Real: Float + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static {
    #[inline]
    fn from_f64_lossy(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("finite f64 is representable")
    }

    #[inline]
    fn from_i64_lossy(v: i64) -> Self {
        <Self as FromPrimitive>::from_i64(v).expect("integer is representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
