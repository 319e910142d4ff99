//! Numeric abstractions shared by the metric and scoring code.
//!
//! Densities are ratios of integers, so they can be carried either as a float
//! or as an exact rational. Sentiment scores are always floating point.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// A number a density can be expressed in: `f32`, `f64` or `Ratio<i64>`.
pub trait Scalar: Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync {
    /// `numerator / denominator`, rounded if the type is inexact.
    fn ratio(numerator: u64, denominator: u64) -> Self {
        let num = Self::from_u64(numerator).expect("numerator representable");
        let den = Self::from_u64(denominator).expect("denominator representable");
        num / den
    }
}

impl<T> Scalar for T where T: Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync {}

/// Floating point types used for polarity and segmentation weights.
pub trait Real: Float + FromPrimitive + Debug + Send + Sync + std::iter::Sum {}

impl<T> Real for T where T: Float + FromPrimitive + Debug + Send + Sync + std::iter::Sum {}

/// Exact density type.
pub type Rational = Ratio<i64>;
