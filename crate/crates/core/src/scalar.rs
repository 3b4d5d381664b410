use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the geometric core is written against (`f32`, `f64`).
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    /// Lossy conversion from a count.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}
