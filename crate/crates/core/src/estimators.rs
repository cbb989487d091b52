//! Empirical survival functions and weighted-AUC point estimators.
//!
//! Every estimator compares pooled diseased measurements `X` with pooled
//! non-diseased measurements `Y` of one stratum (a marker, optionally
//! restricted to one time point). Non-diseased values are sorted ascending
//! and the threshold for false positive rate `u` is the
//! `⌈(1 - u)·n⌉`-th smallest of them.

use alloc::string::String;
use alloc::vec::Vec;

use crate::data::{MarkerDataset, Status, Stratum, StudyDesign, WeightMeasure};
use crate::error::{Error, Result};
use crate::math::ceil_rank;

/// Handling of `X == Y` comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Ties {
    /// `I(X > Y)`: ties count zero.
    #[default]
    Strict,
    /// `I(X > Y) + ½·I(X = Y)`.
    Midrank,
}

/// Right-continuous step survival function `S(x) = #{v > x} / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSurvival {
    sorted: Vec<f64>,
}

impl EmpiricalSurvival {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyStratum("pooled"));
        }
        values.sort_by(f64::total_cmp);
        Ok(EmpiricalSurvival { sorted: values })
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn count_above(&self, x: f64) -> usize {
        self.sorted.len() - self.sorted.partition_point(|v| *v <= x)
    }

    pub fn survival(&self, x: f64) -> f64 {
        self.count_above(x) as f64 / self.n() as f64
    }

    /// One-based order-statistic index `⌈(1 - u)·n⌉`, clamped to `[1, n]`.
    pub fn threshold_rank(&self, u: f64) -> usize {
        ceil_rank((1.0 - u) * self.n() as f64).clamp(1, self.n())
    }

    pub fn inverse_survival(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u <= 1.0) {
            return Err(Error::InvalidFpr(alloc::format!(
                "need 0 < u <= 1, got {u}"
            )));
        }
        Ok(self.sorted[self.threshold_rank(u) - 1])
    }
}

/// Diseased and non-diseased samples of one stratum, ready for estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumRoc {
    x: Vec<f64>,
    y: EmpiricalSurvival,
    ties: Ties,
}

impl StratumRoc {
    pub fn new(mut x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::EmptyStratum("diseased"));
        }
        if y.is_empty() {
            return Err(Error::EmptyStratum("non-diseased"));
        }
        x.sort_by(f64::total_cmp);
        Ok(StratumRoc {
            x,
            y: EmpiricalSurvival::new(y)?,
            ties: Ties::Strict,
        })
    }

    pub fn from_dataset(dataset: &MarkerDataset, stratum: Stratum) -> Result<Self> {
        dataset.check_stratum(stratum)?;
        StratumRoc::new(
            dataset.stratum_values(Status::Diseased, stratum),
            dataset.stratum_values(Status::NonDiseased, stratum),
        )
    }

    pub fn with_ties(mut self, ties: Ties) -> Self {
        self.ties = ties;
        self
    }

    pub fn m(&self) -> usize {
        self.x.len()
    }

    pub fn n(&self) -> usize {
        self.y.n()
    }

    pub fn diseased_sorted(&self) -> &[f64] {
        &self.x
    }

    pub fn nondiseased(&self) -> &EmpiricalSurvival {
        &self.y
    }

    pub fn diseased_survival(&self, t: f64) -> f64 {
        (self.x.len() - self.x.partition_point(|v| *v <= t)) as f64 / self.m() as f64
    }

    /// Twice the number of (X, Y) pairs with `Y` ranked in `(lo, hi]` and
    /// `X` above it (ties counted per `self.ties`).
    fn doubled_window_count(&self, lo: usize, hi: usize) -> u64 {
        let ys = self.y.sorted_values();
        let mut total = 0u64;
        for &x in &self.x {
            let below = ys.partition_point(|y| *y < x);
            let fires = below.min(hi).saturating_sub(lo);
            total += 2 * fires as u64;
            if self.ties == Ties::Midrank {
                let through = ys.partition_point(|y| *y <= x);
                let equal = through.min(hi).saturating_sub(below.max(lo));
                total += equal as u64;
            }
        }
        total
    }

    pub fn auc(&self) -> f64 {
        let pairs = (self.m() * self.n()) as f64;
        self.doubled_window_count(0, self.n()) as f64 / (2.0 * pairs)
    }

    /// Unnormalized partial AUC over FPR range `(u1, u2)`: retains `Y` with
    /// one-based rank in `(⌈(1 - u2)·n⌉, ⌈(1 - u1)·n⌉]`.
    pub fn pauc(&self, u1: f64, u2: f64) -> Result<f64> {
        WeightMeasure::partial(u1, u2)?;
        let n = self.n() as f64;
        let lo = ceil_rank((1.0 - u2) * n);
        let hi = ceil_rank((1.0 - u1) * n).min(self.n());
        let pairs = (self.m() * self.n()) as f64;
        Ok(self.doubled_window_count(lo, hi) as f64 / (2.0 * pairs))
    }

    /// Fraction of diseased values above the `u0` threshold order statistic.
    pub fn sensitivity_at_fpr(&self, u0: f64) -> Result<f64> {
        WeightMeasure::point_mass(u0)?;
        Ok(self.roc_unchecked(u0))
    }

    fn roc_unchecked(&self, u: f64) -> f64 {
        let t = self.y.sorted_values()[self.y.threshold_rank(u) - 1];
        let above = self.x.len() - self.x.partition_point(|v| *v <= t);
        let mut doubled = 2 * above;
        if self.ties == Ties::Midrank {
            doubled += self.x.partition_point(|v| *v <= t) - self.x.partition_point(|v| *v < t);
        }
        doubled as f64 / (2.0 * self.m() as f64)
    }

    /// `Ŝ_D(Ŝ_D̄⁻¹(u))` for `u ∈ (0, 1)`.
    pub fn roc(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::InvalidFpr(alloc::format!("need 0 < u < 1, got {u}")));
        }
        Ok(self.roc_unchecked(u))
    }

    pub fn wauc(&self, w: &WeightMeasure) -> Result<f64> {
        w.check()?;
        match w {
            WeightMeasure::FullAuc => Ok(self.auc()),
            WeightMeasure::PartialAuc {
                lower,
                upper,
                normalized,
            } => {
                let v = self.pauc(*lower, *upper)?;
                Ok(if *normalized { v / (upper - lower) } else { v })
            }
            WeightMeasure::PointMass(u0) => self.sensitivity_at_fpr(*u0),
            WeightMeasure::Steps(atoms) => {
                Ok(atoms.iter().map(|a| a.mass * self.roc_unchecked(a.u)).sum())
            }
        }
    }
}

pub fn survival(stratum: &EmpiricalSurvival, x: f64) -> f64 {
    stratum.survival(x)
}

pub fn inverse_survival(stratum: &EmpiricalSurvival, u: f64) -> Result<f64> {
    stratum.inverse_survival(u)
}

/// AUC of `marker` pooled over all time points.
pub fn auc(dataset: &MarkerDataset, marker: usize) -> Result<f64> {
    Ok(StratumRoc::from_dataset(dataset, Stratum::pooled(marker))?.auc())
}

pub fn pauc(dataset: &MarkerDataset, marker: usize, u1: f64, u2: f64) -> Result<f64> {
    StratumRoc::from_dataset(dataset, Stratum::pooled(marker))?.pauc(u1, u2)
}

pub fn sensitivity_at_fpr(dataset: &MarkerDataset, marker: usize, u0: f64) -> Result<f64> {
    StratumRoc::from_dataset(dataset, Stratum::pooled(marker))?.sensitivity_at_fpr(u0)
}

pub fn wauc(dataset: &MarkerDataset, marker: usize, w: &WeightMeasure) -> Result<f64> {
    StratumRoc::from_dataset(dataset, Stratum::pooled(marker))?.wauc(w)
}

/// wAUC of `marker` using only measurements taken at `time`.
pub fn per_time_wauc(
    dataset: &MarkerDataset,
    marker: usize,
    time: usize,
    w: &WeightMeasure,
) -> Result<f64> {
    StratumRoc::from_dataset(dataset, Stratum::at_time(marker, time))?.wauc(w)
}

pub fn empirical_roc(dataset: &MarkerDataset, marker: usize, u: f64) -> Result<f64> {
    StratumRoc::from_dataset(dataset, Stratum::pooled(marker))?.roc(u)
}

/// Estimated wAUCs laid out by a study design.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WaucVector {
    pub values: Vec<f64>,
    pub labels: Vec<String>,
    pub design: StudyDesign,
    pub weight_measure: WeightMeasure,
}

impl WaucVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Paired differences `Ω̂_p − Ω̂_{P+p}`.
    pub fn differences(&self) -> Result<Vec<f64>> {
        let p = self
            .design
            .n_pairs()
            .ok_or_else(|| Error::DesignMismatch("design has no paired layout".into()))?;
        Ok((0..p)
            .map(|r| self.values[r] - self.values[p + r])
            .collect())
    }
}

pub fn wauc_vector(
    dataset: &MarkerDataset,
    design: StudyDesign,
    w: &WeightMeasure,
) -> Result<WaucVector> {
    wauc_vector_with(dataset, design, w, Ties::Strict)
}

pub fn wauc_vector_with(
    dataset: &MarkerDataset,
    design: StudyDesign,
    w: &WeightMeasure,
    ties: Ties,
) -> Result<WaucVector> {
    design.check(dataset)?;
    w.check()?;
    let values = design
        .strata()
        .into_iter()
        .map(|s| StratumRoc::from_dataset(dataset, s).and_then(|r| r.with_ties(ties).wauc(w)))
        .collect::<Result<Vec<_>>>()?;
    Ok(WaucVector {
        values,
        labels: design.labels(),
        design,
        weight_measure: w.clone(),
    })
}
