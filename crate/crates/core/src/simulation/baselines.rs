//! Comparators for the empirical AUC: a binormal plug-in and a logistic-score
//! estimator.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::estimators::StratumRoc;
use crate::math::{mean, normal_cdf, normal_pdf, sample_variance};

pub const LOGISTIC_MAX_ITER: usize = 50;
pub const LOGISTIC_TOLERANCE: f64 = 1e-10;

/// Binormal plug-in AUC `Φ((x̄ − ȳ)/√(s_x² + s_y²))` and its delta-method
/// variance from the sample moments.
pub fn baseline_parametric_auc(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::DegenerateSample(
            "need at least two values per group".into(),
        ));
    }
    let (m, n) = (x.len() as f64, y.len() as f64);
    let delta = mean(x) - mean(y);
    let (vx, vy) = (sample_variance(x), sample_variance(y));
    let s2 = vx + vy;
    if !(s2 > 0.0) {
        return Err(Error::DegenerateSample("zero pooled variance".into()));
    }
    let s = libm::sqrt(s2);
    let z = delta / s;
    let var_z = (vx / m + vy / n) / s2
        + delta * delta / (4.0 * s2 * s2 * s2)
            * (2.0 * vx * vx / (m - 1.0) + 2.0 * vy * vy / (n - 1.0));
    let phi = normal_pdf(z);
    Ok((normal_cdf(z), phi * phi * var_z))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticScoreAuc {
    pub auc: f64,
    /// Intercept and slope on the original measurement scale.
    pub beta: [f64; 2],
    /// Set when the groups are separated or the fit did not converge; `auc`
    /// is then the empirical AUC of the raw values.
    pub separated: bool,
}

/// Fits `logit P(D = 1) = β₀ + β₁·z` by Newton–Raphson and returns the
/// empirical AUC of the fitted scores.
pub fn baseline_semiparametric_auc(x: &[f64], y: &[f64]) -> Result<LogisticScoreAuc> {
    let raw = StratumRoc::new(x.to_vec(), y.to_vec())?;
    let all: Vec<f64> = x.iter().chain(y).copied().collect();
    let centre = mean(&all);
    let spread = if all.len() > 1 {
        libm::sqrt(sample_variance(&all))
    } else {
        0.0
    };
    if !(spread > 0.0) {
        return Err(Error::DegenerateSample("constant measurements".into()));
    }
    let fold = |f: fn(f64, f64) -> f64, v: &[f64], init: f64| v.iter().copied().fold(init, f);
    let (x_min, x_max) = (
        fold(f64::min, x, f64::INFINITY),
        fold(f64::max, x, f64::NEG_INFINITY),
    );
    let (y_min, y_max) = (
        fold(f64::min, y, f64::INFINITY),
        fold(f64::max, y, f64::NEG_INFINITY),
    );
    // in one dimension the MLE exists unless the groups are (quasi-)separated
    if x_min >= y_max || x_max <= y_min {
        return Ok(LogisticScoreAuc {
            auc: raw.auc(),
            beta: [f64::NAN, f64::NAN],
            separated: true,
        });
    }
    let data: Vec<(f64, f64)> = x
        .iter()
        .map(|v| ((v - centre) / spread, 1.0))
        .chain(y.iter().map(|v| ((v - centre) / spread, 0.0)))
        .collect();
    let mut b = [0.0f64; 2];
    let mut converged = false;
    for _ in 0..LOGISTIC_MAX_ITER {
        let (mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(z, d) in &data {
            let p = 1.0 / (1.0 + libm::exp(-(b[0] + b[1] * z)));
            let r = d - p;
            g0 += r;
            g1 += r * z;
            let wt = p * (1.0 - p);
            h00 += wt;
            h01 += wt * z;
            h11 += wt * z * z;
        }
        if libm::sqrt(g0 * g0 + g1 * g1) < LOGISTIC_TOLERANCE {
            converged = true;
            break;
        }
        let det = h00 * h11 - h01 * h01;
        if !(det > 0.0) || !det.is_finite() {
            break;
        }
        b[0] += (h11 * g0 - h01 * g1) / det;
        b[1] += (h00 * g1 - h01 * g0) / det;
        if !(b[0].is_finite() && b[1].is_finite()) {
            break;
        }
    }
    let beta = [b[0] - b[1] * centre / spread, b[1] / spread];
    if !converged {
        return Ok(LogisticScoreAuc {
            auc: raw.auc(),
            beta,
            separated: true,
        });
    }
    if b[1] == 0.0 {
        // constant score: every pair tied
        return Ok(LogisticScoreAuc {
            auc: 0.5,
            beta,
            separated: false,
        });
    }
    let score = |v: &f64| b[0] + b[1] * (v - centre) / spread;
    let scored = StratumRoc::new(x.iter().map(score).collect(), y.iter().map(score).collect())?;
    Ok(LogisticScoreAuc {
        auc: scored.auc(),
        beta,
        separated: false,
    })
}
