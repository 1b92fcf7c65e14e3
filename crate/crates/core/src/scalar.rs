use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar used by the numerical kernels: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + FromStr + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, for constants and tolerances.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("finite f64 converts to any float")
    }

    /// Conversion from a count.
    fn of_count(count: usize) -> Self {
        Self::from_usize(count).expect("count converts to float")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
