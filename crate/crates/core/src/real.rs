//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar: `f32` or `f64`.
///
/// Constants are written as `f64` literals and narrowed with [`Real::lit`].
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Sum
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Narrow an `f64` constant to this type.
    #[inline(always)]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable")
    }

    /// Widen to `f64`.
    #[inline(always)]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion to f64")
    }

    /// Convert a count.
    #[inline(always)]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}
