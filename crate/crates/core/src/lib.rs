//! Nonparametric weighted-AUC statistics for clustered ROC data.
//!
//! The crate estimates weighted areas under empirical ROC curves (AUC,
//! partial AUC, sensitivity at a fixed false positive rate, and finite step
//! measures) when each subject contributes a cluster of correlated
//! measurements. It estimates the covariance of those statistics across
//! markers, readers and time points, combines reader- or time-level
//! differences with equal or inverse-covariance weights, and runs the
//! resulting z-tests. A Monte Carlo harness reproduces coverage and power
//! studies for these procedures.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the command
//! line and parallel study runners live in the companion `wauc` crate.
//!
//! Indices are zero-based throughout the API.

#![no_std]
// NaN must fail positivity checks, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod covariance;
pub mod data;
pub mod error;
pub mod estimators;
pub mod inference;
pub mod math;
pub mod simulation;

pub use covariance::{
    bootstrap_covariance, contrast_covariance, density_ratio, joint_survival, paired_contrast,
    sigma_matrix, sigma_matrix_with, BandwidthRule, BootstrapCovariance, CovarianceEstimate,
    CovarianceOptions,
};
pub use data::{
    Atom, ClusterSample, Contrast, MarkerDataset, Status, Stratum, StudyDesign, SubjectRecord,
    ValidationReport, Violation, WeightMeasure,
};
pub use error::{Error, Result};
pub use estimators::{
    auc, empirical_roc, inverse_survival, pauc, per_time_wauc, sensitivity_at_fpr, survival, wauc,
    wauc_vector, wauc_vector_with, EmpiricalSurvival, StratumRoc, Ties, WaucVector,
};
pub use inference::{
    compare_modalities, delta_h, delta_longitudinal, delta_m, equal_weights, optimal_weights,
    variance_delta, z_test, ComparisonResult, Decomposition, Method, PairedAnalysis,
    VarianceDecomposition, WeightMethod, WeightVector,
};
