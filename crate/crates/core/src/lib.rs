//! Constructions, exact counts, verification and exact search for extremal
//! intersecting set families and intersecting graph families.
//!
//! The exact types used throughout are re-exported here: [`BigCount`] for
//! sizes and [`Rational`] for measures and thresholds. Code that only needs
//! field arithmetic is generic over [`Scalar`].

pub mod constructions;
pub mod counting;
pub mod error;
pub mod forbidden;
pub mod graphfam;
pub mod scalar;
pub mod search;
pub mod setcore;
pub mod thresholds;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Exact nonnegative count.
pub type BigCount = num_bigint::BigUint;
/// Exact signed integer.
pub type BigSigned = num_bigint::BigInt;
/// Exact rational in lowest terms with positive denominator.
pub type Rational = num_rational::BigRational;
/// Double-precision scalar for estimates.
pub type Approx = f64;

pub use constructions::FamilySpec;
pub use setcore::{ElementSet, Permutation, SetFamily};
