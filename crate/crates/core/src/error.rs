use core::fmt;

use crate::model::Violation;

/// Errors raised by model construction and the solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two inputs disagree on a dimension (UE count, RB count, ...).
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// A scalar parameter is outside its admissible range.
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    /// Path loss requested for a distance that is not strictly positive.
    NonPositiveDistance(f64),
    /// No UE may legally occupy this RB under the S-FFR split.
    EmptyEligibleSet { rb: usize },
    /// No allocation satisfying the constraint set was found.
    Infeasible(Violation),
    /// Brute-force enumeration would exceed the configured guard.
    EnumerationTooLarge { size: u128, limit: u128 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch {
                what,
                expected,
                found,
            } => write!(f, "dimension mismatch in {what}: expected {expected}, found {found}"),
            Error::InvalidParameter { name, reason } => {
                write!(f, "invalid parameter `{name}`: {reason}")
            }
            Error::NonPositiveDistance(d) => write!(f, "distance must be positive, got {d} m"),
            Error::EmptyEligibleSet { rb } => write!(f, "resource block {rb} has no eligible UE"),
            Error::Infeasible(v) => write!(f, "no feasible allocation: {v}"),
            Error::EnumerationTooLarge { size, limit } => {
                write!(f, "enumeration of {size} candidates exceeds guard {limit}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T, E = Error> = core::result::Result<T, E>;
