use alloc::string::String;

use crate::data::ValidationReport;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dataset failed validation: {0}")]
    Invalid(ValidationReport),
    #[error("unknown marker index {marker} (dataset has {n_markers} markers)")]
    UnknownMarker { marker: usize, n_markers: usize },
    #[error("unknown time index {time} (dataset has {n_times} time points)")]
    UnknownTime { time: usize, n_times: usize },
    #[error("empty stratum: no {0} measurements")]
    EmptyStratum(&'static str),
    #[error("invalid false positive rate bounds: {0}")]
    InvalidFpr(String),
    #[error("invalid weight measure: {0}")]
    InvalidMeasure(String),
    #[error("design mismatch: {0}")]
    DesignMismatch(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("degenerate non-diseased density at u = {u}")]
    DegenerateDensity { u: f64 },
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("covariance estimation needs at least two {0} subjects")]
    TooFewSubjects(&'static str),
    #[error("singular covariance matrix; supply a positive ridge")]
    SingularMatrix,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("covariance is not positive semidefinite: quadratic form {0}")]
    NegativeVariance(f64),
    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("contrast produced a non-finite value")]
    NonFiniteContrast,
    #[error("gradient check failed: max abs difference {0}")]
    GradientMismatch(f64),
}
