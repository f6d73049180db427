//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("not a homomorphism")]
    NotAHomomorphism,
    #[error("invalid fan: {0}")]
    InvalidFan(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("cone {0} is not a top cone")]
    NotTopCone(usize),
    #[error("chart intersection needs two distinct cones, got {0} twice")]
    SameCone(usize),
    #[error("window excludes generator")]
    WindowExcludesGenerator,
    #[error("insufficient saturation on axis {axis} of cone {cone}")]
    InsufficientSaturation { cone: usize, axis: usize },
    #[error("decomposable candidate: cone {0} has more than one box summand")]
    DecomposableCandidate(usize),
    #[error("outside vanishing range: x = {x} < {min}")]
    OutsideVanishingRange { x: i64, min: i64 },
    #[error("non-finite coefficient: skyscraper class {alpha:?} on cone {cone} has zero weight")]
    NonFiniteCoefficient { cone: usize, alpha: Vec<String> },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
