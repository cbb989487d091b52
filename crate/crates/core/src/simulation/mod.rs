//! Data generators, population targets and Monte Carlo study drivers.
//!
//! Replicate `r` of a study draws from stream `r` of the master seed, so a
//! report depends only on the scenario and never on evaluation order.

mod baselines;
mod mvn;
mod scenario;
mod study;
mod truth;

pub use baselines::{
    baseline_parametric_auc, baseline_semiparametric_auc, LogisticScoreAuc, LOGISTIC_MAX_ITER,
    LOGISTIC_TOLERANCE,
};
pub use mvn::{compound_symmetry, sample_mvn, Family, MvnSampler};
pub use scenario::*;
pub use study::{
    aggregate, replicate_outcome, replicate_rng, run_coverage_study, run_power_study, run_study,
    CellResult, MethodOutcome, ReplicateOutcome, StudyReport,
};
pub use truth::{binormal_roc, true_wauc, TRUTH_TOLERANCE};
