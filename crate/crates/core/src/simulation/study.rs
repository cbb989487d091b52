use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::covariance::{sigma_matrix_with, CovarianceOptions};
use crate::data::{MarkerDataset, Status};
use crate::error::{Error, Result};
use crate::estimators::wauc_vector_with;
use crate::inference::{PairedAnalysis, WeightMethod, WeightVector};

use super::baselines::{baseline_parametric_auc, baseline_semiparametric_auc};
use super::scenario::{Generator, ScenarioSpec, SimMethod};

/// One method's result on one simulated dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodOutcome {
    Ok {
        estimate: f64,
        /// Target under the weights used in this replicate.
        truth: f64,
        variance: Option<f64>,
        covered: Option<bool>,
        rejected: Option<bool>,
        weight_fallback: bool,
    },
    Failed(Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub index: u64,
    /// Aligned with `ScenarioSpec::methods`.
    pub methods: Vec<MethodOutcome>,
}

/// Generator for replicate `index`: stream `index` of the master seed.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn weighted_truth(truth: &[f64], n_pairs: usize, weights: &WeightVector) -> f64 {
    (0..n_pairs)
        .map(|p| weights.weights[p] * (truth[p] - truth[n_pairs + p]))
        .sum::<f64>()
        / weights.sum
}

fn baseline_delta(
    ds: &MarkerDataset,
    spec: &ScenarioSpec,
    n_pairs: usize,
    auc: impl Fn(&[f64], &[f64]) -> Result<f64>,
) -> Result<f64> {
    let values = spec
        .design
        .strata()
        .into_iter()
        .map(|s| {
            auc(
                &ds.stratum_values(Status::Diseased, s),
                &ds.stratum_values(Status::NonDiseased, s),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((0..n_pairs)
        .map(|p| values[p] - values[n_pairs + p])
        .sum::<f64>()
        / n_pairs as f64)
}

/// Simulates dataset `index` and evaluates every requested method.
pub fn replicate_outcome(generator: &Generator, truth: &[f64], index: u64) -> ReplicateOutcome {
    let spec = generator.spec();
    let ds = generator.generate(&mut replicate_rng(spec.seed, index));
    let n_pairs = spec.design.n_pairs().expect("validated paired design");
    let opts = CovarianceOptions::default();
    let needs_analytic = spec
        .methods
        .iter()
        .any(|m| matches!(m, SimMethod::Equal | SimMethod::Optimal));
    let analytic = if needs_analytic {
        Some(
            wauc_vector_with(&ds, spec.design, &spec.weight_measure, opts.ties).and_then(|v| {
                sigma_matrix_with(&ds, spec.design, &spec.weight_measure, &opts).map(|c| (v, c))
            }),
        )
    } else {
        None
    };
    let equal = crate::inference::equal_weights(n_pairs);
    let methods = spec
        .methods
        .iter()
        .map(|m| {
            let paired = |method: WeightMethod| -> MethodOutcome {
                let (v, c) = match analytic.as_ref().expect("analytic estimates") {
                    Ok(vc) => vc.clone(),
                    Err(e) => return MethodOutcome::Failed(e.clone()),
                };
                match PairedAnalysis::from_parts(v, c, n_pairs, &method, spec.alpha) {
                    Ok(a) => {
                        let t = weighted_truth(truth, n_pairs, &a.weights);
                        let r = &a.result;
                        MethodOutcome::Ok {
                            estimate: r.estimate,
                            truth: t,
                            variance: Some(r.variance),
                            covered: Some(r.ci[0] <= t && t <= r.ci[1]),
                            rejected: Some(r.p < spec.alpha),
                            weight_fallback: a.weights.fallback,
                        }
                    }
                    Err(e) => MethodOutcome::Failed(e),
                }
            };
            let point = |est: Result<f64>| match est {
                Ok(estimate) => MethodOutcome::Ok {
                    estimate,
                    truth: weighted_truth(truth, n_pairs, &equal),
                    variance: None,
                    covered: None,
                    rejected: None,
                    weight_fallback: false,
                },
                Err(e) => MethodOutcome::Failed(e),
            };
            match m {
                SimMethod::Equal => paired(WeightMethod::Equal),
                SimMethod::Optimal => paired(WeightMethod::Optimal { ridge: None }),
                SimMethod::Parametric => point(baseline_delta(&ds, spec, n_pairs, |x, y| {
                    baseline_parametric_auc(x, y).map(|r| r.0)
                })),
                SimMethod::Semiparametric => point(baseline_delta(&ds, spec, n_pairs, |x, y| {
                    baseline_semiparametric_auc(x, y).map(|r| r.auc)
                })),
            }
        })
        .collect();
    ReplicateOutcome { index, methods }
}

/// Monte Carlo summary of one method.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CellResult {
    pub method: SimMethod,
    pub n_ok: usize,
    pub n_failed: usize,
    /// First error message among failed replicates.
    pub first_failure: Option<String>,
    pub mean_truth: f64,
    pub mean_estimate: f64,
    pub bias: f64,
    /// `100 · bias`.
    pub bias_percent: f64,
    pub rmse: f64,
    /// Sample variance of the estimates across replicates.
    pub mc_variance: f64,
    pub mean_variance: Option<f64>,
    pub coverage: Option<f64>,
    pub coverage_se: Option<f64>,
    pub power: Option<f64>,
    pub power_se: Option<f64>,
    pub weight_fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StudyReport {
    pub scenario: String,
    pub seed: u64,
    pub n_reps: usize,
    pub alpha: f64,
    pub cells: Vec<CellResult>,
}

impl StudyReport {
    pub fn cell(&self, method: SimMethod) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.method == method)
    }
}

fn proportion(hits: usize, n: usize) -> (Option<f64>, Option<f64>) {
    if n == 0 {
        return (None, None);
    }
    let p = hits as f64 / n as f64;
    (Some(p), Some(libm::sqrt(p * (1.0 - p) / n as f64)))
}

/// Summarizes outcomes in the order given.
pub fn aggregate(spec: &ScenarioSpec, outcomes: &[ReplicateOutcome]) -> StudyReport {
    let cells = spec
        .methods
        .iter()
        .enumerate()
        .map(|(k, method)| {
            let mut est = Vec::new();
            let mut truth = Vec::new();
            let (mut n_failed, mut first_failure) = (0, None);
            let (mut vars, mut n_cov, mut covered, mut n_rej, mut rejected, mut fallbacks) =
                (Vec::new(), 0, 0, 0, 0, 0);
            for o in outcomes {
                match &o.methods[k] {
                    MethodOutcome::Ok {
                        estimate,
                        truth: t,
                        variance,
                        covered: c,
                        rejected: r,
                        weight_fallback,
                    } => {
                        est.push(*estimate);
                        truth.push(*t);
                        if let Some(v) = variance {
                            vars.push(*v);
                        }
                        if let Some(c) = c {
                            n_cov += 1;
                            covered += usize::from(*c);
                        }
                        if let Some(r) = r {
                            n_rej += 1;
                            rejected += usize::from(*r);
                        }
                        fallbacks += usize::from(*weight_fallback);
                    }
                    MethodOutcome::Failed(e) => {
                        n_failed += 1;
                        if first_failure.is_none() {
                            first_failure = Some(alloc::format!("{e}"));
                        }
                    }
                }
            }
            let n = est.len();
            let nf = n as f64;
            let errors: Vec<f64> = est.iter().zip(&truth).map(|(e, t)| e - t).collect();
            let bias = errors.iter().sum::<f64>() / nf;
            let rmse = libm::sqrt(errors.iter().map(|e| e * e).sum::<f64>() / nf);
            let mean_estimate = est.iter().sum::<f64>() / nf;
            let mc_variance = if n > 1 {
                est.iter()
                    .map(|e| (e - mean_estimate) * (e - mean_estimate))
                    .sum::<f64>()
                    / (nf - 1.0)
            } else {
                f64::NAN
            };
            let (coverage, coverage_se) = proportion(covered, n_cov);
            let (power, power_se) = proportion(rejected, n_rej);
            CellResult {
                method: *method,
                n_ok: n,
                n_failed,
                first_failure,
                mean_truth: truth.iter().sum::<f64>() / nf,
                mean_estimate,
                bias,
                bias_percent: 100.0 * bias,
                rmse,
                mc_variance,
                mean_variance: (!vars.is_empty())
                    .then(|| vars.iter().sum::<f64>() / vars.len() as f64),
                coverage,
                coverage_se,
                power,
                power_se,
                weight_fallbacks: fallbacks,
            }
        })
        .collect();
    StudyReport {
        scenario: spec.name.clone(),
        seed: spec.seed,
        n_reps: spec.n_reps,
        alpha: spec.alpha,
        cells,
    }
}

/// Runs every replicate in order on the current thread.
pub fn run_study(spec: &ScenarioSpec) -> Result<StudyReport> {
    let generator = Generator::new(spec.clone())?;
    let truth = generator.true_vector()?;
    let outcomes: Vec<_> = (0..spec.n_reps as u64)
        .map(|r| replicate_outcome(&generator, &truth, r))
        .collect();
    Ok(aggregate(spec, &outcomes))
}

/// Bias, RMSE and confidence-interval coverage; see [`run_study`].
pub fn run_coverage_study(spec: &ScenarioSpec) -> Result<StudyReport> {
    run_study(spec)
}

/// Rejection rates of the two-sided test; see [`run_study`].
pub fn run_power_study(spec: &ScenarioSpec) -> Result<StudyReport> {
    run_study(spec)
}
