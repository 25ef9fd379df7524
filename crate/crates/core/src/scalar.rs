//! Scalar abstraction for load metrics.
//!
//! Bin loads are integer counts, but the balance height `m / n` is in general
//! not an integer. Metric computations are generic over the scalar that
//! represents such quantities: the exact rational [`Exact`](crate::Exact) is
//! the default (comparisons against `m / n` are then exact), while `f64` is
//! convenient for report output.

use num_rational::Ratio;
use num_traits::Num;

/// Numeric type that can represent counts and count ratios.
pub trait Scalar: Num + PartialOrd + Clone {
    fn from_count(c: u64) -> Self;

    /// The value `num / den`, exact where the representation allows it.
    fn from_ratio(num: u64, den: u64) -> Self;

    fn to_f64_lossy(&self) -> f64;
}

impl Scalar for f64 {
    fn from_count(c: u64) -> Self {
        c as f64
    }

    fn from_ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn from_count(c: u64) -> Self {
        c as f32
    }

    fn from_ratio(num: u64, den: u64) -> Self {
        num as f32 / den as f32
    }

    fn to_f64_lossy(&self) -> f64 {
        f64::from(*self)
    }
}

impl Scalar for Ratio<i128> {
    fn from_count(c: u64) -> Self {
        Ratio::from_integer(c as i128)
    }

    fn from_ratio(num: u64, den: u64) -> Self {
        Ratio::new(num as i128, den as i128)
    }

    fn to_f64_lossy(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

impl Scalar for Ratio<i64> {
    fn from_count(c: u64) -> Self {
        Ratio::from_integer(c as i64)
    }

    fn from_ratio(num: u64, den: u64) -> Self {
        Ratio::new(num as i64, den as i64)
    }

    fn to_f64_lossy(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}
