//! Floating-point abstraction shared by the statistics and forecasting code.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar used for percentages and money amounts.
///
/// Implemented for `f32` and `f64`. Everything that is pure arithmetic over
/// inaccuracy samples is written against this trait; the Monte Carlo
/// simulator and the command line work in `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + FromStr
    + Sum
    + Default
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Never fails for finite input.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    fn hundred() -> Self {
        Self::lit(100.0)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts a count to the scalar type.
pub(crate) fn count<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("count fits in a float")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_convert() {
        assert_eq!(<f32 as Scalar>::lit(44.7), 44.7f32);
        assert_eq!(<f64 as Scalar>::hundred(), 100.0);
        assert_eq!(count::<f64>(58), 58.0);
    }
}
