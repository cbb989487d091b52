//! Clustered ROC data, study designs, weight measures and contrast functions.
//!
//! All indices in this module are zero-based. File formats and user-facing
//! messages use one-based numbering; [`Violation`]'s `Display` follows that.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Status {
    Diseased,
    NonDiseased,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Diseased => "diseased",
            Status::NonDiseased => "non-diseased",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub marker: usize,
    pub time: usize,
}

/// One marker, either pooled over all time points or restricted to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stratum {
    pub marker: usize,
    pub time: Option<usize>,
}

impl Stratum {
    pub fn pooled(marker: usize) -> Self {
        Stratum { marker, time: None }
    }

    pub fn at_time(marker: usize, time: usize) -> Self {
        Stratum {
            marker,
            time: Some(time),
        }
    }
}

/// Measurements from one subject, the independent sampling unit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SubjectRecord {
    pub subject_id: String,
    cells: BTreeMap<CellKey, Vec<f64>>,
}

impl SubjectRecord {
    pub fn new(subject_id: impl Into<String>) -> Self {
        SubjectRecord {
            subject_id: subject_id.into(),
            cells: BTreeMap::new(),
        }
    }

    /// Appends one replicate to the `(marker, time)` cell.
    pub fn push(&mut self, marker: usize, time: usize, value: f64) {
        self.cells
            .entry(CellKey { marker, time })
            .or_default()
            .push(value);
    }

    pub fn with_cell(
        mut self,
        marker: usize,
        time: usize,
        values: impl IntoIterator<Item = f64>,
    ) -> Self {
        self.cells
            .entry(CellKey { marker, time })
            .or_default()
            .extend(values);
        self
    }

    /// Replicates in the cell, empty when the cell is absent.
    pub fn cell(&self, marker: usize, time: usize) -> &[f64] {
        self.cells
            .get(&CellKey { marker, time })
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn cells(&self) -> impl Iterator<Item = (CellKey, &[f64])> {
        self.cells.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    /// Values of a stratum in time order (replicate order within a time).
    pub fn stratum_values(&self, stratum: Stratum) -> impl Iterator<Item = f64> + '_ {
        self.cells
            .range(
                CellKey {
                    marker: stratum.marker,
                    time: stratum.time.unwrap_or(0),
                }..=CellKey {
                    marker: stratum.marker,
                    time: stratum.time.unwrap_or(usize::MAX),
                },
            )
            .flat_map(|(_, v)| v.iter().copied())
    }

    pub fn stratum_count(&self, stratum: Stratum) -> usize {
        match stratum.time {
            Some(t) => self.cell(stratum.marker, t).len(),
            None => self
                .cells
                .iter()
                .filter(|(k, _)| k.marker == stratum.marker)
                .map(|(_, v)| v.len())
                .sum(),
        }
    }

    /// Applies `f` to every measurement.
    pub fn map_values(&self, f: &impl Fn(f64) -> f64) -> SubjectRecord {
        SubjectRecord {
            subject_id: self.subject_id.clone(),
            cells: self
                .cells
                .iter()
                .map(|(k, v)| (*k, v.iter().map(|x| f(*x)).collect()))
                .collect(),
        }
    }
}

/// Per-subject clusters of one stratum, concatenated in subject order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSample {
    pub values: Vec<f64>,
    /// `values[bounds[i]..bounds[i + 1]]` belongs to subject `i`.
    pub bounds: Vec<usize>,
}

impl ClusterSample {
    pub fn n_subjects(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn cluster(&self, i: usize) -> &[f64] {
        &self.values[self.bounds[i]..self.bounds[i + 1]]
    }

    pub fn cluster_size(&self, i: usize) -> usize {
        self.bounds[i + 1] - self.bounds[i]
    }

    pub fn clusters(&self) -> impl Iterator<Item = &[f64]> {
        self.bounds.windows(2).map(|w| &self.values[w[0]..w[1]])
    }
}

/// Long-format container for diseased and non-diseased subjects.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerDataset {
    diseased: Vec<SubjectRecord>,
    nondiseased: Vec<SubjectRecord>,
    n_markers: usize,
    n_times: usize,
}

impl MarkerDataset {
    /// Builds a dataset without checking it; see [`MarkerDataset::validate`].
    pub fn new(
        n_markers: usize,
        n_times: usize,
        diseased: Vec<SubjectRecord>,
        nondiseased: Vec<SubjectRecord>,
    ) -> Self {
        MarkerDataset {
            diseased,
            nondiseased,
            n_markers,
            n_times,
        }
    }

    /// Builds and validates, failing with the full report on any violation.
    pub fn validated(
        n_markers: usize,
        n_times: usize,
        diseased: Vec<SubjectRecord>,
        nondiseased: Vec<SubjectRecord>,
    ) -> Result<Self> {
        let ds = Self::new(n_markers, n_times, diseased, nondiseased);
        let report = ds.validate();
        if report.is_clean() {
            Ok(ds)
        } else {
            Err(Error::Invalid(report))
        }
    }

    pub fn n_markers(&self) -> usize {
        self.n_markers
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn group(&self, status: Status) -> &[SubjectRecord] {
        match status {
            Status::Diseased => &self.diseased,
            Status::NonDiseased => &self.nondiseased,
        }
    }

    pub fn diseased(&self) -> &[SubjectRecord] {
        &self.diseased
    }

    pub fn nondiseased(&self) -> &[SubjectRecord] {
        &self.nondiseased
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if self.n_markers == 0 || self.n_times == 0 {
            violations.push(Violation::InvalidDimensions {
                n_markers: self.n_markers,
                n_times: self.n_times,
            });
        }
        for status in [Status::Diseased, Status::NonDiseased] {
            let group = self.group(status);
            if group.is_empty() {
                violations.push(Violation::NoSubjects { status });
            }
            for subject in group {
                for (key, values) in subject.cells() {
                    if key.marker >= self.n_markers || key.time >= self.n_times {
                        violations.push(Violation::IndexOutOfRange {
                            status,
                            subject_id: subject.subject_id.clone(),
                            marker: key.marker,
                            time: key.time,
                        });
                        continue;
                    }
                    for (replicate, v) in values.iter().enumerate() {
                        if !v.is_finite() {
                            violations.push(Violation::NonFinite {
                                status,
                                subject_id: subject.subject_id.clone(),
                                marker: key.marker,
                                time: key.time,
                                replicate,
                            });
                        }
                    }
                }
                for marker in 0..self.n_markers {
                    for time in 0..self.n_times {
                        if subject.cell(marker, time).is_empty() {
                            violations.push(Violation::EmptyCell {
                                status,
                                subject_id: subject.subject_id.clone(),
                                marker,
                                time,
                            });
                        }
                    }
                }
            }
        }
        ValidationReport { violations }
    }

    pub fn check_marker(&self, marker: usize) -> Result<()> {
        if marker < self.n_markers {
            Ok(())
        } else {
            Err(Error::UnknownMarker {
                marker,
                n_markers: self.n_markers,
            })
        }
    }

    pub fn check_stratum(&self, stratum: Stratum) -> Result<()> {
        self.check_marker(stratum.marker)?;
        match stratum.time {
            Some(time) if time >= self.n_times => Err(Error::UnknownTime {
                time,
                n_times: self.n_times,
            }),
            _ => Ok(()),
        }
    }

    /// Total diseased and non-diseased measurement counts for a marker,
    /// summed over subjects and time points.
    pub fn pooled_counts(&self, marker: usize) -> Result<(usize, usize)> {
        self.check_marker(marker)?;
        let s = Stratum::pooled(marker);
        let m = self.diseased.iter().map(|r| r.stratum_count(s)).sum();
        let n = self.nondiseased.iter().map(|r| r.stratum_count(s)).sum();
        Ok((m, n))
    }

    pub fn stratum_values(&self, status: Status, stratum: Stratum) -> Vec<f64> {
        self.group(status)
            .iter()
            .flat_map(|r| r.stratum_values(stratum))
            .collect()
    }

    pub fn clusters(&self, status: Status, stratum: Stratum) -> ClusterSample {
        let group = self.group(status);
        let mut values = Vec::new();
        let mut bounds = Vec::with_capacity(group.len() + 1);
        bounds.push(0);
        for subject in group {
            values.extend(subject.stratum_values(stratum));
            bounds.push(values.len());
        }
        ClusterSample { values, bounds }
    }

    /// Dataset made of the given subjects (repeats allowed), in that order.
    pub fn resample(&self, diseased: &[usize], nondiseased: &[usize]) -> MarkerDataset {
        MarkerDataset {
            diseased: diseased.iter().map(|&i| self.diseased[i].clone()).collect(),
            nondiseased: nondiseased
                .iter()
                .map(|&j| self.nondiseased[j].clone())
                .collect(),
            n_markers: self.n_markers,
            n_times: self.n_times,
        }
    }

    /// Applies `f` to every measurement of both groups.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> MarkerDataset {
        MarkerDataset {
            diseased: self.diseased.iter().map(|r| r.map_values(&f)).collect(),
            nondiseased: self.nondiseased.iter().map(|r| r.map_values(&f)).collect(),
            n_markers: self.n_markers,
            n_times: self.n_times,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    InvalidDimensions {
        n_markers: usize,
        n_times: usize,
    },
    NoSubjects {
        status: Status,
    },
    EmptyCell {
        status: Status,
        subject_id: String,
        marker: usize,
        time: usize,
    },
    NonFinite {
        status: Status,
        subject_id: String,
        marker: usize,
        time: usize,
        replicate: usize,
    },
    IndexOutOfRange {
        status: Status,
        subject_id: String,
        marker: usize,
        time: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InvalidDimensions { n_markers, n_times } => write!(
                f,
                "invalid dimensions: {n_markers} markers, {n_times} time points"
            ),
            Violation::NoSubjects { status } => write!(f, "no {status} subjects"),
            Violation::EmptyCell {
                status,
                subject_id,
                marker,
                time,
            } => write!(
                f,
                "empty cell: {status} subject {subject_id} marker {} time {}",
                marker + 1,
                time + 1
            ),
            Violation::NonFinite {
                status,
                subject_id,
                marker,
                time,
                replicate,
            } => write!(
                f,
                "non-finite value at {status} subject {subject_id} marker {} time {} replicate {}",
                marker + 1,
                time + 1,
                replicate + 1
            ),
            Violation::IndexOutOfRange {
                status,
                subject_id,
                marker,
                time,
            } => write!(
                f,
                "index out of range: {status} subject {subject_id} marker {} time {}",
                marker + 1,
                time + 1
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("clean");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// One atom `(u, mass)` of a discrete weight measure.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Atom {
    pub u: f64,
    pub mass: f64,
}

/// Weight measure `W(u)` on false-positive-rate space.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum WeightMeasure {
    /// Lebesgue measure on (0, 1): the AUC.
    FullAuc,
    /// Lebesgue measure on (lower, upper): the partial AUC. Unnormalized
    /// (mass `upper - lower`) unless `normalized`.
    PartialAuc {
        lower: f64,
        upper: f64,
        normalized: bool,
    },
    /// Unit mass at one FPR: sensitivity at that FPR.
    PointMass(f64),
    /// Finite collection of atoms.
    Steps(Vec<Atom>),
}

impl WeightMeasure {
    pub fn partial(lower: f64, upper: f64) -> Result<Self> {
        let w = WeightMeasure::PartialAuc {
            lower,
            upper,
            normalized: false,
        };
        w.check()?;
        Ok(w)
    }

    pub fn partial_normalized(lower: f64, upper: f64) -> Result<Self> {
        let w = WeightMeasure::PartialAuc {
            lower,
            upper,
            normalized: true,
        };
        w.check()?;
        Ok(w)
    }

    pub fn point_mass(u0: f64) -> Result<Self> {
        let w = WeightMeasure::PointMass(u0);
        w.check()?;
        Ok(w)
    }

    pub fn steps(atoms: Vec<Atom>) -> Result<Self> {
        let w = WeightMeasure::Steps(atoms);
        w.check()?;
        Ok(w)
    }

    pub fn check(&self) -> Result<()> {
        match self {
            WeightMeasure::FullAuc => Ok(()),
            WeightMeasure::PartialAuc { lower, upper, .. } => {
                if (0.0..1.0).contains(lower) && *upper <= 1.0 && lower < upper {
                    Ok(())
                } else {
                    Err(Error::InvalidFpr(format!(
                        "need 0 <= u1 < u2 <= 1, got ({lower}, {upper})"
                    )))
                }
            }
            WeightMeasure::PointMass(u0) => {
                if *u0 > 0.0 && *u0 < 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidFpr(format!("need 0 < u0 < 1, got {u0}")))
                }
            }
            WeightMeasure::Steps(atoms) => {
                if atoms.is_empty() {
                    return Err(Error::InvalidMeasure("step measure without atoms".into()));
                }
                for a in atoms {
                    if !(a.u > 0.0 && a.u < 1.0) || !(a.mass > 0.0 && a.mass.is_finite()) {
                        return Err(Error::InvalidMeasure(format!(
                            "atom ({}, {}) needs u in (0,1) and positive mass",
                            a.u, a.mass
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            WeightMeasure::FullAuc | WeightMeasure::PointMass(_) => 1.0,
            WeightMeasure::PartialAuc {
                lower,
                upper,
                normalized,
            } => {
                if *normalized {
                    1.0
                } else {
                    upper - lower
                }
            }
            WeightMeasure::Steps(atoms) => atoms.iter().map(|a| a.mass).sum(),
        }
    }
}

/// Layout of the wAUC vector and how its entries pair up for comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum StudyDesign {
    /// One wAUC per marker, pooled over time points; no pairing.
    Pooled { n_markers: usize },
    /// Marker `r` is (reader r, modality 1); marker `R + r` is (reader r, modality 2).
    MultiReaderMultiTest { n_readers: usize },
    /// Two markers, one wAUC per (marker, time), laid out marker-major.
    Longitudinal { n_times: usize },
}

impl StudyDesign {
    pub fn strata(&self) -> Vec<Stratum> {
        match *self {
            StudyDesign::Pooled { n_markers } => (0..n_markers).map(Stratum::pooled).collect(),
            StudyDesign::MultiReaderMultiTest { n_readers } => {
                (0..2 * n_readers).map(Stratum::pooled).collect()
            }
            StudyDesign::Longitudinal { n_times } => (0..2)
                .flat_map(|m| (0..n_times).map(move |k| Stratum::at_time(m, k)))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            StudyDesign::Pooled { n_markers } => n_markers,
            StudyDesign::MultiReaderMultiTest { n_readers } => 2 * n_readers,
            StudyDesign::Longitudinal { n_times } => 2 * n_times,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of paired differences: entry `p` is compared with entry `P + p`.
    pub fn n_pairs(&self) -> Option<usize> {
        match *self {
            StudyDesign::Pooled { .. } => None,
            StudyDesign::MultiReaderMultiTest { n_readers } => Some(n_readers),
            StudyDesign::Longitudinal { n_times } => Some(n_times),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        match *self {
            StudyDesign::Pooled { n_markers } => {
                (1..=n_markers).map(|m| format!("marker{m}")).collect()
            }
            StudyDesign::MultiReaderMultiTest { n_readers } => (1..=2)
                .flat_map(|md| (1..=n_readers).map(move |r| format!("reader{r}/modality{md}")))
                .collect(),
            StudyDesign::Longitudinal { n_times } => (1..=2)
                .flat_map(|m| (1..=n_times).map(move |k| format!("marker{m}/time{k}")))
                .collect(),
        }
    }

    pub fn check(&self, dataset: &MarkerDataset) -> Result<()> {
        let (l, k) = (dataset.n_markers(), dataset.n_times());
        match *self {
            StudyDesign::Pooled { n_markers } if n_markers == l => Ok(()),
            StudyDesign::Pooled { n_markers } => Err(Error::DesignMismatch(format!(
                "design has {n_markers} markers, dataset has {l}"
            ))),
            StudyDesign::MultiReaderMultiTest { n_readers } => {
                if n_readers == 0 || 2 * n_readers != l {
                    Err(Error::DesignMismatch(format!(
                        "{n_readers} readers need {} markers, dataset has {l}",
                        2 * n_readers
                    )))
                } else {
                    Ok(())
                }
            }
            StudyDesign::Longitudinal { n_times } => {
                if l != 2 || n_times != k || n_times == 0 {
                    Err(Error::DesignMismatch(format!(
                        "longitudinal comparison needs 2 markers and {n_times} times, dataset has {l} and {k}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }
}

type ValueFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradientFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

pub const NUMERIC_GRADIENT_STEP: f64 = 1e-6;

/// Smooth real-valued function of the wAUC vector.
pub struct SmoothContrast {
    value: ValueFn,
    gradient: Option<GradientFn>,
    step: f64,
}

impl fmt::Debug for SmoothContrast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothContrast")
            .field("analytic_gradient", &self.gradient.is_some())
            .field("step", &self.step)
            .finish()
    }
}

#[derive(Debug)]
pub enum Contrast {
    Linear(Vec<f64>),
    Smooth(SmoothContrast),
}

impl Contrast {
    pub fn linear(coefficients: Vec<f64>) -> Self {
        Contrast::Linear(coefficients)
    }

    /// Smooth contrast differentiated numerically by central differences.
    pub fn smooth(value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Contrast::Smooth(SmoothContrast {
            value: Box::new(value),
            gradient: None,
            step: NUMERIC_GRADIENT_STEP,
        })
    }

    pub fn smooth_with_gradient(
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Contrast::Smooth(SmoothContrast {
            value: Box::new(value),
            gradient: Some(Box::new(gradient)),
            step: NUMERIC_GRADIENT_STEP,
        })
    }

    pub fn with_step(self, step: f64) -> Self {
        match self {
            Contrast::Smooth(s) => Contrast::Smooth(SmoothContrast { step, ..s }),
            linear => linear,
        }
    }

    pub fn eval(&self, at: &[f64]) -> Result<f64> {
        let v = match self {
            Contrast::Linear(c) => {
                check_len(c.len(), at.len())?;
                c.iter().zip(at).map(|(c, x)| c * x).sum()
            }
            Contrast::Smooth(s) => (s.value)(at),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteContrast)
        }
    }

    /// Analytic gradient when available, otherwise central differences.
    pub fn gradient(&self, at: &[f64]) -> Result<Vec<f64>> {
        match self {
            Contrast::Linear(c) => {
                check_len(c.len(), at.len())?;
                Ok(c.clone())
            }
            Contrast::Smooth(s) => match &s.gradient {
                Some(g) => {
                    let grad = g(at);
                    check_len(at.len(), grad.len())?;
                    Ok(grad)
                }
                None => self.numeric_gradient(at),
            },
        }
    }

    pub fn numeric_gradient(&self, at: &[f64]) -> Result<Vec<f64>> {
        let step = match self {
            Contrast::Linear(_) => NUMERIC_GRADIENT_STEP,
            Contrast::Smooth(s) => s.step,
        };
        let mut x = at.to_vec();
        let mut grad = Vec::with_capacity(at.len());
        for i in 0..at.len() {
            let orig = x[i];
            x[i] = orig + step;
            let up = self.eval(&x)?;
            x[i] = orig - step;
            let down = self.eval(&x)?;
            x[i] = orig;
            grad.push((up - down) / (2.0 * step));
        }
        Ok(grad)
    }

    /// Compares the supplied gradient with central differences.
    pub fn check_gradient(&self, at: &[f64], tol: f64) -> Result<()> {
        let analytic = self.gradient(at)?;
        let numeric = self.numeric_gradient(at)?;
        let worst = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, n)| libm::fabs(a - n))
            .fold(0.0, f64::max);
        if worst <= tol {
            Ok(())
        } else {
            Err(Error::GradientMismatch(worst))
        }
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn tiny() -> MarkerDataset {
        MarkerDataset::new(
            1,
            1,
            vec![SubjectRecord::new("d1").with_cell(0, 0, [2.0])],
            vec![SubjectRecord::new("n1").with_cell(0, 0, [1.0])],
        )
    }

    #[test]
    fn minimal_dataset_is_clean() {
        assert!(tiny().validate().is_clean());
    }

    #[test]
    fn nan_is_reported() {
        let ds = MarkerDataset::new(
            1,
            1,
            vec![SubjectRecord::new("d1").with_cell(0, 0, [f64::NAN])],
            vec![SubjectRecord::new("n1").with_cell(0, 0, [1.0])],
        );
        let report = ds.validate();
        assert_eq!(report.violations.len(), 1);
        let msg = report.violations[0].to_string();
        assert!(msg.starts_with("non-finite value at"), "{msg}");
        assert!(msg.contains("subject d1 marker 1 time 1"));
    }

    #[test]
    fn missing_marker_is_empty_cell() {
        let ds = MarkerDataset::new(
            2,
            1,
            vec![SubjectRecord::new("d1")
                .with_cell(0, 0, [2.0])
                .with_cell(1, 0, [2.0])],
            vec![SubjectRecord::new("n1").with_cell(0, 0, [1.0])],
        );
        let report = ds.validate();
        assert!(matches!(
            &report.violations[..],
            [Violation::EmptyCell {
                marker: 1,
                status: Status::NonDiseased,
                ..
            }]
        ));
        assert!(report.to_string().starts_with("empty cell"));
    }

    #[test]
    fn out_of_range_and_empty_group() {
        let ds = MarkerDataset::new(
            1,
            1,
            vec![SubjectRecord::new("d1")
                .with_cell(0, 0, [2.0])
                .with_cell(3, 0, [1.0])],
            vec![],
        );
        let report = ds.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::IndexOutOfRange { marker: 3, .. })));
        assert!(report.violations.iter().any(|v| matches!(
            v,
            Violation::NoSubjects {
                status: Status::NonDiseased
            }
        )));
        assert!(MarkerDataset::validated(1, 1, vec![], vec![]).is_err());
    }

    #[test]
    fn pooled_counts_sum_clusters() {
        let ds = MarkerDataset::new(
            1,
            1,
            vec![
                SubjectRecord::new("a").with_cell(0, 0, [1.0, 2.0]),
                SubjectRecord::new("b").with_cell(0, 0, [1.0, 2.0, 3.0, 4.0]),
            ],
            vec![SubjectRecord::new("c").with_cell(0, 0, [0.0])],
        );
        assert_eq!(ds.pooled_counts(0).unwrap(), (6, 1));
        assert!(matches!(
            ds.pooled_counts(1),
            Err(Error::UnknownMarker {
                marker: 1,
                n_markers: 1
            })
        ));

        let nd = (0..2)
            .map(|j| {
                let mut r = SubjectRecord::new(format!("n{j}"));
                for k in 0..3 {
                    r = r.with_cell(0, k, [0.0, 1.0, 2.0]);
                }
                r
            })
            .collect();
        let d = vec![SubjectRecord::new("d")
            .with_cell(0, 0, [1.0])
            .with_cell(0, 1, [1.0])
            .with_cell(0, 2, [1.0])];
        let ds = MarkerDataset::new(1, 3, d, nd);
        assert_eq!(ds.pooled_counts(0).unwrap(), (3, 18));
    }

    #[test]
    fn longitudinal_design_counts() {
        // Two cluster-size halves over three time points.
        let d: Vec<_> = (0..50)
            .map(|i| {
                let m = if i < 25 { 2 } else { 4 };
                let mut r = SubjectRecord::new(format!("d{i}"));
                for k in 0..3 {
                    for _ in 0..m {
                        r.push(0, k, 1.0);
                    }
                }
                r
            })
            .collect();
        let nd = vec![SubjectRecord::new("n")
            .with_cell(0, 0, [0.0])
            .with_cell(0, 1, [0.0])
            .with_cell(0, 2, [0.0])];
        let ds = MarkerDataset::new(1, 3, d, nd);
        assert_eq!(ds.pooled_counts(0).unwrap().0, 450);
    }

    #[test]
    fn stratum_values_follow_time_order() {
        let r = SubjectRecord::new("s")
            .with_cell(0, 1, [3.0])
            .with_cell(0, 0, [1.0, 2.0])
            .with_cell(1, 0, [9.0]);
        let pooled: Vec<_> = r.stratum_values(Stratum::pooled(0)).collect();
        assert_eq!(pooled, vec![1.0, 2.0, 3.0]);
        let t1: Vec<_> = r.stratum_values(Stratum::at_time(0, 1)).collect();
        assert_eq!(t1, vec![3.0]);
        assert_eq!(r.stratum_count(Stratum::pooled(0)), 3);
    }

    #[test]
    fn weight_measure_bounds() {
        assert!(WeightMeasure::partial(0.0, 1.0).is_ok());
        assert!(WeightMeasure::partial(0.5, 0.5).is_err());
        assert!(WeightMeasure::partial(-0.1, 0.5).is_err());
        assert!(WeightMeasure::point_mass(1.0).is_err());
        assert!(WeightMeasure::steps(vec![Atom { u: 0.5, mass: 0.0 }]).is_err());
        assert_eq!(WeightMeasure::partial(0.0, 0.6).unwrap().total_mass(), 0.6);
        assert_eq!(
            WeightMeasure::partial_normalized(0.0, 0.6)
                .unwrap()
                .total_mass(),
            1.0
        );
    }

    #[test]
    fn design_layouts() {
        let d = StudyDesign::MultiReaderMultiTest { n_readers: 2 };
        assert_eq!(
            d.labels(),
            vec![
                "reader1/modality1",
                "reader2/modality1",
                "reader1/modality2",
                "reader2/modality2"
            ]
        );
        let l = StudyDesign::Longitudinal { n_times: 2 };
        assert_eq!(
            l.strata(),
            vec![
                Stratum::at_time(0, 0),
                Stratum::at_time(0, 1),
                Stratum::at_time(1, 0),
                Stratum::at_time(1, 1)
            ]
        );
        assert_eq!(l.n_pairs(), Some(2));
        assert!(d.check(&tiny()).is_err());
    }

    #[test]
    fn linear_gradient_is_exact() {
        let c = Contrast::linear(vec![1.0, -1.0]);
        assert_eq!(c.gradient(&[0.3, 0.9]).unwrap(), vec![1.0, -1.0]);
        assert!(c.eval(&[1.0]).is_err());
    }

    #[test]
    fn numeric_gradient_agrees_with_analytic() {
        let ratio = Contrast::smooth_with_gradient(
            |x| x[0] / x[1],
            |x| vec![1.0 / x[1], -x[0] / (x[1] * x[1])],
        );
        ratio.check_gradient(&[0.9, 0.6], 1e-4).unwrap();
        let wrong = Contrast::smooth_with_gradient(|x| x[0] * x[1], |_| vec![0.0, 0.0]);
        assert!(matches!(
            wrong.check_gradient(&[0.9, 0.6], 1e-4),
            Err(Error::GradientMismatch(_))
        ));
    }
}
