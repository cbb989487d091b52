//! Weighted paired comparisons, delta-method variances and z-tests.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::covariance::{
    contrast_covariance, paired_contrast, sigma_matrix_with, CovarianceEstimate, CovarianceOptions,
};
use crate::data::{Contrast, MarkerDataset, StudyDesign, WeightMeasure};
use crate::error::{Error, Result};
use crate::estimators::{wauc_vector_with, WaucVector};
use crate::math::{normal_quantile, normal_sf};

/// Default ridge is this fraction of the mean diagonal of `Σ_A`.
pub const DEFAULT_RIDGE_FRACTION: f64 = 1e-8;
/// Quadratic forms below `-NEGATIVE_VARIANCE_TOLERANCE` are errors.
pub const NEGATIVE_VARIANCE_TOLERANCE: f64 = 1e-12;

/// Positive combination weights. `weights` are kept unnormalized.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightVector {
    pub weights: Vec<f64>,
    pub sum: f64,
    /// Set when optimal weights had a non-positive entry and equal weights
    /// were substituted.
    pub fallback: bool,
}

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("no weights".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidWeights(alloc::format!(
                "weights must be positive and finite, got {w}"
            )));
        }
        let sum = weights.iter().sum();
        Ok(WeightVector {
            weights,
            sum,
            fallback: false,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn normalized(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w / self.sum).collect()
    }

    /// Gradient of the weighted paired difference with respect to the full
    /// `2P`-vector: `+w_p/Σw` at `p`, `−w_p/Σw` at `P + p`.
    pub fn paired_gradient(&self) -> Vec<f64> {
        let n = self.normalized();
        n.iter().copied().chain(n.iter().map(|w| -w)).collect()
    }
}

pub fn equal_weights(n: usize) -> WeightVector {
    let w = 1.0 / n as f64;
    WeightVector {
        weights: alloc::vec![w; n],
        sum: w * n as f64,
        fallback: false,
    }
}

/// Solves `(Σ_A + ridge·I) w = 1`. `None` selects the default ridge
/// `DEFAULT_RIDGE_FRACTION · trace / R`. Non-positive solutions fall back to
/// equal weights with `fallback` set.
pub fn optimal_weights(cov_diff: &DMatrix<f64>, ridge: Option<f64>) -> Result<WeightVector> {
    let r = cov_diff.nrows();
    if r == 0 || !cov_diff.is_square() {
        return Err(Error::DimensionMismatch {
            expected: r,
            found: cov_diff.ncols(),
        });
    }
    let scale = cov_diff.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for i in 0..r {
        for j in 0..i {
            if (cov_diff[(i, j)] - cov_diff[(j, i)]).abs() > 1e-12 * scale.max(1e-300) {
                return Err(Error::InvalidArgument(
                    "difference covariance is not symmetric".into(),
                ));
            }
        }
    }
    let ridge = match ridge {
        Some(v) if v >= 0.0 && v.is_finite() => v,
        Some(v) => {
            return Err(Error::InvalidArgument(alloc::format!(
                "ridge must be >= 0, got {v}"
            )))
        }
        None => DEFAULT_RIDGE_FRACTION * cov_diff.trace() / r as f64,
    };
    let m = cov_diff + DMatrix::identity(r, r) * ridge;
    let eig = m.symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || min <= 1e-14 * max {
        return Err(Error::SingularMatrix);
    }
    let q = &eig.eigenvectors;
    let ones = DVector::from_element(r, 1.0);
    let coef = (q.transpose() * ones).component_div(&eig.eigenvalues);
    let w = q * coef;
    if w.iter().all(|v| *v > 0.0 && v.is_finite()) {
        WeightVector::new(w.iter().copied().collect())
    } else {
        Ok(WeightVector {
            fallback: true,
            ..equal_weights(r)
        })
    }
}

fn paired_delta(values: &[f64], n_pairs: usize, weights: &WeightVector) -> Result<f64> {
    if weights.len() != n_pairs {
        return Err(Error::DimensionMismatch {
            expected: n_pairs,
            found: weights.len(),
        });
    }
    if values.len() != 2 * n_pairs {
        return Err(Error::DimensionMismatch {
            expected: 2 * n_pairs,
            found: values.len(),
        });
    }
    let total: f64 = (0..n_pairs)
        .map(|p| weights.weights[p] * (values[p] - values[n_pairs + p]))
        .sum();
    Ok(total / weights.sum)
}

/// `(Σw)⁻¹ Σ_r w_r (Ω̂_r − Ω̂_{R+r})` for a multi-reader multi-test vector.
pub fn delta_m(wauc: &WaucVector, weights: &WeightVector) -> Result<f64> {
    match wauc.design {
        StudyDesign::MultiReaderMultiTest { n_readers } => {
            paired_delta(&wauc.values, n_readers, weights)
        }
        _ => Err(Error::DesignMismatch(
            "expected a multi-reader multi-test vector".into(),
        )),
    }
}

/// `(Σw)⁻¹ Σ_k w_k (Ω̂_{1,k} − Ω̂_{2,k})` for a per-time wAUC grid.
pub fn delta_longitudinal(wauc: &WaucVector, weights: &WeightVector) -> Result<f64> {
    match wauc.design {
        StudyDesign::Longitudinal { n_times } => paired_delta(&wauc.values, n_times, weights),
        _ => Err(Error::DesignMismatch(
            "expected a longitudinal per-time vector".into(),
        )),
    }
}

pub fn delta_h(wauc: &WaucVector, h: &Contrast) -> Result<f64> {
    h.eval(&wauc.values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Decomposition {
    pub diseased: f64,
    pub nondiseased: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceDecomposition {
    pub variance: f64,
    pub parts: Decomposition,
}

fn quadratic_form(m: &DMatrix<f64>, g: &[f64]) -> Result<f64> {
    if m.nrows() != g.len() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: g.len(),
        });
    }
    let v = DVector::from_column_slice(g);
    Ok((v.transpose() * m * &v)[(0, 0)])
}

fn clamp_variance(v: f64) -> Result<f64> {
    if v < -NEGATIVE_VARIANCE_TOLERANCE {
        Err(Error::NegativeVariance(v))
    } else {
        Ok(v.max(0.0))
    }
}

/// `gᵀΣg` split into diseased and non-diseased parts.
pub fn variance_of_gradient(cov: &CovarianceEstimate, g: &[f64]) -> Result<VarianceDecomposition> {
    let diseased = clamp_variance(quadratic_form(&cov.sigma1, g)?)?;
    let nondiseased = clamp_variance(quadratic_form(&cov.sigma2, g)?)?;
    Ok(VarianceDecomposition {
        variance: diseased + nondiseased,
        parts: Decomposition {
            diseased,
            nondiseased,
        },
    })
}

/// Delta-method variance `∇h(Ω̂)ᵀ Σ ∇h(Ω̂)`.
pub fn variance_delta(
    cov: &CovarianceEstimate,
    h: &Contrast,
    at: &WaucVector,
) -> Result<VarianceDecomposition> {
    let g = h.gradient(&at.values)?;
    variance_of_gradient(cov, &g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    Equal,
    Optimal,
    Custom,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Equal => "equal",
            Method::Optimal => "optimal",
            Method::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightMethod {
    Equal,
    /// Plug-in inverse-covariance weights; `ridge` as in [`optimal_weights`].
    Optimal {
        ridge: Option<f64>,
    },
    Custom(Vec<f64>),
}

impl WeightMethod {
    pub fn method(&self) -> Method {
        match self {
            WeightMethod::Equal => Method::Equal,
            WeightMethod::Optimal { .. } => Method::Optimal,
            WeightMethod::Custom(_) => Method::Custom,
        }
    }

    pub fn resolve(&self, cov_diff: &DMatrix<f64>) -> Result<WeightVector> {
        match self {
            WeightMethod::Equal => Ok(equal_weights(cov_diff.nrows())),
            WeightMethod::Optimal { ridge } => optimal_weights(cov_diff, *ridge),
            WeightMethod::Custom(w) => {
                if w.len() != cov_diff.nrows() {
                    return Err(Error::DimensionMismatch {
                        expected: cov_diff.nrows(),
                        found: w.len(),
                    });
                }
                WeightVector::new(w.clone())
            }
        }
    }
}

/// Result of a two-sided z-test on a weighted difference.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComparisonResult {
    pub estimate: f64,
    pub variance: f64,
    pub z: f64,
    pub p: f64,
    pub ci: [f64; 2],
    pub alpha: f64,
    /// Unnormalized weights; empty for a bare z-test.
    pub weights: Vec<f64>,
    pub weights_fallback: bool,
    pub method: Method,
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub decomposition: Option<Decomposition>,
}

pub fn z_test(estimate: f64, variance: f64, alpha: f64) -> Result<ComparisonResult> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::NonPositiveVariance(variance));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(alloc::format!(
            "alpha must be in (0,1), got {alpha}"
        )));
    }
    let se = libm::sqrt(variance);
    let z = estimate / se;
    let p = (2.0 * normal_sf(libm::fabs(z))).min(1.0);
    let half = normal_quantile(1.0 - alpha / 2.0) * se;
    Ok(ComparisonResult {
        estimate,
        variance,
        z,
        p,
        ci: [estimate - half, estimate + half],
        alpha,
        weights: Vec::new(),
        weights_fallback: false,
        method: Method::Custom,
        decomposition: None,
    })
}

/// Everything computed by a paired comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedAnalysis {
    pub wauc: WaucVector,
    pub covariance: CovarianceEstimate,
    /// Covariance of the paired differences, `AᵀΣA`.
    pub difference_covariance: DMatrix<f64>,
    pub weights: WeightVector,
    pub result: ComparisonResult,
}

impl PairedAnalysis {
    pub fn run(
        dataset: &MarkerDataset,
        design: StudyDesign,
        w: &WeightMeasure,
        method: &WeightMethod,
        alpha: f64,
        opts: &CovarianceOptions,
    ) -> Result<PairedAnalysis> {
        let n_pairs = design
            .n_pairs()
            .ok_or_else(|| Error::DesignMismatch("comparison needs a paired design".into()))?;
        let wauc = wauc_vector_with(dataset, design, w, opts.ties)?;
        let covariance = sigma_matrix_with(dataset, design, w, opts)?;
        Self::from_parts(wauc, covariance, n_pairs, method, alpha)
    }

    /// Comparison from an already estimated vector and covariance.
    pub fn from_parts(
        wauc: WaucVector,
        covariance: CovarianceEstimate,
        n_pairs: usize,
        method: &WeightMethod,
        alpha: f64,
    ) -> Result<PairedAnalysis> {
        let difference_covariance =
            contrast_covariance(&covariance.sigma, &paired_contrast(n_pairs))?;
        let weights = method.resolve(&difference_covariance)?;
        let estimate = paired_delta(&wauc.values, n_pairs, &weights)?;
        let var = variance_of_gradient(&covariance, &weights.paired_gradient())?;
        let mut result = z_test(estimate, var.variance, alpha)?;
        result.weights = weights.weights.clone();
        result.weights_fallback = weights.fallback;
        result.method = method.method();
        result.decomposition = Some(var.parts);
        Ok(PairedAnalysis {
            wauc,
            covariance,
            difference_covariance,
            weights,
            result,
        })
    }
}

/// Estimates the wAUC vector and its covariance, chooses weights and tests
/// the weighted paired difference.
pub fn compare_modalities(
    dataset: &MarkerDataset,
    design: StudyDesign,
    w: &WeightMeasure,
    method: &WeightMethod,
    alpha: f64,
) -> Result<ComparisonResult> {
    PairedAnalysis::run(
        dataset,
        design,
        w,
        method,
        alpha,
        &CovarianceOptions::default(),
    )
    .map(|a| a.result)
}

/// Labels `"w1".."wR"` for report headers.
pub fn weight_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| alloc::format!("w{i}")).collect()
}
