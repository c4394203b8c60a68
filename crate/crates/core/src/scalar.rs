//! Scalar abstraction for the measure and root-bracketing code.
//!
//! Everything that certifies a claim runs on [`Rational`](crate::Rational);
//! the float instances exist for quick estimates and cross-checks.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive};

pub trait Scalar: Num + Signed + Clone + PartialOrd + Debug {
    /// Exact for rationals, rounded for floats. `den` must be nonzero.
    fn from_ratio(num: i64, den: i64) -> Self;

    fn to_f64_lossy(&self) -> f64;

    fn from_int(v: i64) -> Self {
        Self::from_ratio(v, 1)
    }
}

impl Scalar for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn from_ratio(num: i64, den: i64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn to_f64_lossy(&self) -> f64 {
        *self as f64
    }
}

impl Scalar for BigRational {
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// `base^exp` by repeated squaring.
pub fn powi<T: Scalar>(base: &T, exp: u32) -> T {
    num_traits::pow(base.clone(), exp as usize)
}

/// Midpoint of two scalars.
pub fn midpoint<T: Scalar>(a: &T, b: &T) -> T {
    (a.clone() + b.clone()) / (T::one() + T::one())
}
