//! Scalar abstraction: the whole core is generic over `Real`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar the library is generic over: `f32` or `f64`.
pub trait Real:
    num_traits::Float + num_traits::FromPrimitive + num_traits::ToPrimitive + Debug + Display + Sum + Default + Send + Sync + 'static
{
    /// Shorthand for converting an `f64` literal into `Self`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Converts a cell count or index into the scalar type.
    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("count representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}
