//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts a count or literal, panicking only for values a float cannot represent at all.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("value representable as scalar")
    }

    fn of_usize(value: usize) -> Self {
        Self::from_usize(value).expect("count representable as scalar")
    }

    fn hundred() -> Self {
        Self::of(100.0)
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

/// Arithmetic mean, `None` for an empty iterator.
pub fn mean<T: Scalar>(values: impl IntoIterator<Item = T>) -> Option<T> {
    let mut count = 0usize;
    let mut total = T::zero();
    for v in values {
        total = total + v;
        count += 1;
    }
    (count > 0).then(|| total / T::of_usize(count))
}
