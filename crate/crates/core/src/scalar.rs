//! Floating point scalar abstraction shared by every numeric routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, NumCast, ToPrimitive};

/// Real scalar: `f32` or `f64`.
///
/// Tolerances quoted throughout the crate (`1e-12` reconstruction error and
/// friends) are calibrated for `f64`; the `f32` instantiation is usable but
/// only meaningful at single-precision tolerances.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumCast
    + Sum
    + Debug
    + Display
    + FromStr
    + Default
    + Send
    + Sync
    + serde::Serialize
    + 'static
{
    /// Converts an `f64` literal. Never fails for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
