//! Scalar abstraction: all field math is generic over the floating type.

use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating scalar used throughout: f32 or f64.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Sum
    + Display
    + Debug
    + Send
    + Sync
    + 'static
{
    fn from_f64c(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable")
    }

    fn from_usizec(x: usize) -> Self {
        Self::from_usize(x).expect("usize representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}
