use crate::data::WeightMeasure;
use crate::math::{adaptive_simpson, normal_cdf, normal_quantile};

use super::mvn::Family;

pub const TRUTH_TOLERANCE: f64 = 1e-10;

/// Binormal ROC curve `Φ((μx − μy + sd_y·Φ⁻¹(u)) / sd_x)`.
pub fn binormal_roc(mu_x: f64, sd_x: f64, mu_y: f64, sd_y: f64, u: f64) -> f64 {
    normal_cdf((mu_x - mu_y + sd_y * normal_quantile(u)) / sd_x)
}

/// Population wAUC for marginals `N(μ, sd²)`, or their exponentials, which
/// have the same ROC curve.
pub fn true_wauc(
    _family: Family,
    mu_x: f64,
    sd_x: f64,
    mu_y: f64,
    sd_y: f64,
    w: &WeightMeasure,
) -> f64 {
    let roc = |u: f64| binormal_roc(mu_x, sd_x, mu_y, sd_y, u);
    match w {
        WeightMeasure::FullAuc => normal_cdf((mu_x - mu_y) / libm::sqrt(sd_x * sd_x + sd_y * sd_y)),
        WeightMeasure::PartialAuc {
            lower,
            upper,
            normalized,
        } => {
            let v = adaptive_simpson(&roc, *lower, *upper, TRUTH_TOLERANCE);
            if *normalized {
                v / (upper - lower)
            } else {
                v
            }
        }
        WeightMeasure::PointMass(u0) => roc(*u0),
        WeightMeasure::Steps(atoms) => atoms.iter().map(|a| a.mass * roc(a.u)).sum(),
    }
}
