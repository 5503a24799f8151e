//! Scalar abstraction for node and edge weights.
//!
//! Weight bookkeeping only needs field arithmetic and an ordering, so it is
//! written once against [`Weight`] and instantiated with `f64` in production,
//! `f32` where memory matters, and exact big rationals for conservation checks.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive};

pub trait Weight: Clone + Debug + PartialOrd + Num + ToPrimitive + Send + Sync + 'static {
    /// `num / den` in this scalar type.
    fn ratio(num: i64, den: i64) -> Self;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Weight for f64 {
    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
}

impl Weight for f32 {
    fn ratio(num: i64, den: i64) -> Self {
        (num as f64 / den as f64) as f32
    }
}

impl Weight for BigRational {
    fn ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
}

/// `base^exp` by repeated multiplication; exact for rationals.
pub fn powi<W: Weight>(base: &W, exp: usize) -> W {
    num_traits::pow::pow(base.clone(), exp)
}
