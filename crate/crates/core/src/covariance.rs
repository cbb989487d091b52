//! Covariance of estimated wAUC vectors.
//!
//! Every matrix returned here is on the finite-sample scale: it estimates
//! `Var(Ω̂)` directly. The estimate splits into a diseased part and a
//! non-diseased part, each built from per-subject sums so that correlation
//! within a cluster is accounted for.
//!
//! For the AUC the per-subject sums are placement values (structural
//! components). For other weight measures they are integrals of threshold
//! indicators against `W`; the non-diseased sums are scaled by the kernel
//! density ratio `r̂(u)`. Interval measures are integrated by Gauss–Legendre
//! quadrature; atoms of point and step measures are used as exact nodes.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{ClusterSample, MarkerDataset, Status, Stratum, StudyDesign, WeightMeasure};
use crate::error::{Error, Result};
use crate::estimators::{wauc_vector_with, StratumRoc, Ties};
use crate::math::{gauss_legendre_on, normal_pdf, quantile_sorted};

pub const DEFAULT_QUADRATURE_NODES: usize = 64;
/// Eigenvalues below `-PSD_TOLERANCE · max diagonal` trigger repair.
pub const PSD_TOLERANCE: f64 = 1e-8;
pub const MIN_BOOTSTRAP_REPLICATES: usize = 100;

/// Kernel bandwidth for the density ratio.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BandwidthRule {
    /// `0.9 · min(sd, IQR / 1.34) · n^(-1/5)`, falling back to `sd` when the
    /// IQR is zero.
    #[default]
    Silverman,
    Fixed(f64),
}

impl BandwidthRule {
    pub fn bandwidth(&self, sorted: &[f64]) -> Result<f64> {
        let h = match *self {
            BandwidthRule::Fixed(h) => h,
            BandwidthRule::Silverman => {
                let n = sorted.len();
                if n < 2 {
                    return Err(Error::DegenerateSample(alloc::format!(
                        "bandwidth needs at least two values, got {n}"
                    )));
                }
                let sd = libm::sqrt(crate::math::sample_variance(sorted));
                let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
                let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
                0.9 * spread * libm::pow(n as f64, -0.2)
            }
        };
        if h > 0.0 && h.is_finite() {
            Ok(h)
        } else {
            Err(Error::DegenerateSample(alloc::format!(
                "bandwidth {h} is not positive"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CovarianceOptions {
    pub quadrature_nodes: usize,
    pub bandwidth: BandwidthRule,
    pub ties: Ties,
}

impl Default for CovarianceOptions {
    fn default() -> Self {
        CovarianceOptions {
            quadrature_nodes: DEFAULT_QUADRATURE_NODES,
            bandwidth: BandwidthRule::Silverman,
            ties: Ties::Strict,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    /// `sigma1 + sigma2`.
    pub sigma: DMatrix<f64>,
    /// Diseased contribution.
    pub sigma1: DMatrix<f64>,
    /// Non-diseased contribution.
    pub sigma2: DMatrix<f64>,
    pub labels: Vec<String>,
    /// Set when negative eigenvalues were clipped from either part.
    pub psd_repaired: bool,
}

impl CovarianceEstimate {
    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect()
    }
}

/// Gaussian-kernel estimate of `f_D / f_D̄` at non-diseased quantile thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityRatio {
    x: Vec<f64>,
    y: Vec<f64>,
    hx: f64,
    hy: f64,
}

impl DensityRatio {
    pub fn new(roc: &StratumRoc, rule: BandwidthRule) -> Result<Self> {
        let x = roc.diseased_sorted().to_vec();
        let y = roc.nondiseased().sorted_values().to_vec();
        let hx = rule.bandwidth(&x)?;
        let hy = rule.bandwidth(&y)?;
        Ok(DensityRatio { x, y, hx, hy })
    }

    pub fn bandwidths(&self) -> (f64, f64) {
        (self.hx, self.hy)
    }

    fn kde(values: &[f64], h: f64, at: f64) -> f64 {
        values.iter().map(|v| normal_pdf((at - v) / h)).sum::<f64>() / (values.len() as f64 * h)
    }

    /// Ratio at threshold `t`; `u` only labels the error.
    pub fn at_threshold(&self, t: f64, u: f64) -> Result<f64> {
        let den = Self::kde(&self.y, self.hy, t);
        if !(den > 0.0) {
            return Err(Error::DegenerateDensity { u });
        }
        Ok(Self::kde(&self.x, self.hx, t) / den)
    }
}

/// Proportion of within-subject pairs `(a-value, b-value)` with both above
/// their thresholds, pooled over subjects of `group`. Each subject contributes
/// `count_a · count_b` pairs, counting all time points.
pub fn joint_survival(
    dataset: &MarkerDataset,
    group: Status,
    marker1: usize,
    marker2: usize,
    x1: f64,
    x2: f64,
) -> Result<f64> {
    joint_survival_strata(
        dataset,
        group,
        Stratum::pooled(marker1),
        Stratum::pooled(marker2),
        x1,
        x2,
    )
}

pub fn joint_survival_strata(
    dataset: &MarkerDataset,
    group: Status,
    a: Stratum,
    b: Stratum,
    x1: f64,
    x2: f64,
) -> Result<f64> {
    dataset.check_stratum(a)?;
    dataset.check_stratum(b)?;
    let ca = dataset.clusters(group, a);
    let cb = dataset.clusters(group, b);
    let mut hits = 0usize;
    let mut pairs = 0usize;
    for (va, vb) in ca.clusters().zip(cb.clusters()) {
        hits += va.iter().filter(|v| **v > x1).count() * vb.iter().filter(|v| **v > x2).count();
        pairs += va.len() * vb.len();
    }
    if pairs == 0 {
        return Err(Error::EmptyStratum(match group {
            Status::Diseased => "diseased",
            Status::NonDiseased => "non-diseased",
        }));
    }
    Ok(hits as f64 / pairs as f64)
}

/// `r̂(u)` for a marker pooled over time points.
pub fn density_ratio(
    dataset: &MarkerDataset,
    marker: usize,
    u: f64,
    rule: BandwidthRule,
) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidFpr(alloc::format!("need 0 < u < 1, got {u}")));
    }
    let roc = StratumRoc::from_dataset(dataset, Stratum::pooled(marker))?;
    let t = roc.nondiseased().inverse_survival(u)?;
    DensityRatio::new(&roc, rule)?.at_threshold(t, u)
}

/// Per-subject sums for one stratum and one group.
#[derive(Debug, Clone)]
struct Components {
    sums: Vec<f64>,
    sizes: Vec<f64>,
    total: f64,
}

impl Components {
    /// Per-measurement mean of the sums.
    fn centre(&self) -> f64 {
        self.sums.iter().sum::<f64>() / self.total
    }
}

/// Weighted step function `v ↦ Σ_t w_t · I(v > c_t)` over sorted thresholds.
struct ThresholdSum {
    thresholds: Vec<f64>,
    prefix: Vec<f64>,
    ties: Ties,
}

impl ThresholdSum {
    fn new(mut nodes: Vec<(f64, f64)>, ties: Ties) -> Self {
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut prefix = Vec::with_capacity(nodes.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for (_, w) in &nodes {
            acc += w;
            prefix.push(acc);
        }
        ThresholdSum {
            thresholds: nodes.into_iter().map(|n| n.0).collect(),
            prefix,
            ties,
        }
    }

    fn eval(&self, v: f64) -> f64 {
        let below = self.thresholds.partition_point(|c| *c < v);
        let mut s = self.prefix[below];
        if self.ties == Ties::Midrank {
            let through = self.thresholds.partition_point(|c| *c <= v);
            s += 0.5 * (self.prefix[through] - self.prefix[below]);
        }
        s
    }
}

fn cluster_sums(sample: &ClusterSample, f: impl Fn(f64) -> f64) -> Components {
    let sums: Vec<f64> = sample
        .clusters()
        .map(|c| c.iter().map(|v| f(*v)).sum())
        .collect();
    let sizes: Vec<f64> = sample.clusters().map(|c| c.len() as f64).collect();
    Components {
        sums,
        sizes,
        total: sample.values.len() as f64,
    }
}

/// Integration nodes `(u, weight)` representing `W`.
fn measure_nodes(w: &WeightMeasure, n_nodes: usize) -> Vec<(f64, f64)> {
    match w {
        WeightMeasure::FullAuc => {
            let (u, wt) = gauss_legendre_on(n_nodes, 0.0, 1.0);
            u.into_iter().zip(wt).collect()
        }
        WeightMeasure::PartialAuc {
            lower,
            upper,
            normalized,
        } => {
            let scale = if *normalized {
                1.0 / (upper - lower)
            } else {
                1.0
            };
            let (u, wt) = gauss_legendre_on(n_nodes, *lower, *upper);
            u.into_iter()
                .zip(wt.into_iter().map(|w| w * scale))
                .collect()
        }
        WeightMeasure::PointMass(u0) => alloc::vec![(*u0, 1.0)],
        WeightMeasure::Steps(atoms) => atoms.iter().map(|a| (a.u, a.mass)).collect(),
    }
}

fn count_below(sorted: &[f64], v: f64, ties: Ties) -> f64 {
    let below = sorted.partition_point(|y| *y < v);
    match ties {
        Ties::Strict => below as f64,
        Ties::Midrank => below as f64 + 0.5 * (sorted.partition_point(|y| *y <= v) - below) as f64,
    }
}

fn count_above(sorted: &[f64], v: f64, ties: Ties) -> f64 {
    let through = sorted.partition_point(|x| *x <= v);
    let above = (sorted.len() - through) as f64;
    match ties {
        Ties::Strict => above,
        Ties::Midrank => above + 0.5 * (through - sorted.partition_point(|x| *x < v)) as f64,
    }
}

/// Placement-value sums for the AUC.
fn auc_components(
    roc: &StratumRoc,
    xs: &ClusterSample,
    ys: &ClusterSample,
    ties: Ties,
) -> (Components, Components) {
    let ysorted = roc.nondiseased().sorted_values();
    let xsorted = roc.diseased_sorted();
    let (m, n) = (roc.m() as f64, roc.n() as f64);
    let d = cluster_sums(xs, |x| count_below(ysorted, x, ties) / n);
    let nd = cluster_sums(ys, |y| count_above(xsorted, y, ties) / m);
    (d, nd)
}

/// Threshold-indicator sums integrated against `W`.
fn integrated_components(
    roc: &StratumRoc,
    xs: &ClusterSample,
    ys: &ClusterSample,
    w: &WeightMeasure,
    opts: &CovarianceOptions,
) -> Result<(Components, Components)> {
    let ratio = DensityRatio::new(roc, opts.bandwidth)?;
    let surv = roc.nondiseased();
    let mut d_nodes = Vec::new();
    let mut nd_nodes = Vec::new();
    for (u, wt) in measure_nodes(w, opts.quadrature_nodes) {
        let t = surv.inverse_survival(u)?;
        d_nodes.push((t, wt));
        nd_nodes.push((t, wt * ratio.at_threshold(t, u)?));
    }
    let d_sum = ThresholdSum::new(d_nodes, opts.ties);
    let nd_sum = ThresholdSum::new(nd_nodes, opts.ties);
    Ok((
        cluster_sums(xs, |x| d_sum.eval(x)),
        cluster_sums(ys, |y| nd_sum.eval(y)),
    ))
}

/// `G/(G-1) · Σ_g (a_s(g) − c_s(g)·B_s)(a_t(g) − c_t(g)·B_t) / (total_s·total_t)`.
fn cluster_covariance(parts: &[Components], group: &'static str) -> Result<DMatrix<f64>> {
    let dim = parts.len();
    let g = parts[0].sums.len();
    if g < 2 {
        return Err(Error::TooFewSubjects(group));
    }
    let centred: Vec<Vec<f64>> = parts
        .iter()
        .map(|p| {
            let b = p.centre();
            p.sums
                .iter()
                .zip(&p.sizes)
                .map(|(s, c)| s - c * b)
                .collect()
        })
        .collect();
    let factor = g as f64 / (g as f64 - 1.0);
    let mut out = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in a..dim {
            let cross: f64 = centred[a].iter().zip(&centred[b]).map(|(x, y)| x * y).sum();
            let v = factor * cross / (parts[a].total * parts[b].total);
            out[(a, b)] = v;
            out[(b, a)] = v;
        }
    }
    Ok(out)
}

/// Symmetrizes `m` and clips eigenvalues below zero when the most negative
/// one is below `-PSD_TOLERANCE · max diagonal`. Returns whether it clipped.
pub fn repair_psd(m: &mut DMatrix<f64>) -> bool {
    let sym = (&*m + m.transpose()) * 0.5;
    *m = sym;
    let max_diag = (0..m.nrows()).map(|i| m[(i, i)]).fold(0.0, f64::max);
    let eig = m.clone().symmetric_eigen();
    let min = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min >= -PSD_TOLERANCE * max_diag {
        return false;
    }
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    let q = &eig.eigenvectors;
    let rebuilt = q * DMatrix::from_diagonal(&clipped) * q.transpose();
    *m = (&rebuilt + rebuilt.transpose()) * 0.5;
    true
}

/// Analytic covariance of the wAUC vector laid out by `design`.
pub fn sigma_matrix(
    dataset: &MarkerDataset,
    design: StudyDesign,
    w: &WeightMeasure,
) -> Result<CovarianceEstimate> {
    sigma_matrix_with(dataset, design, w, &CovarianceOptions::default())
}

pub fn sigma_matrix_with(
    dataset: &MarkerDataset,
    design: StudyDesign,
    w: &WeightMeasure,
    opts: &CovarianceOptions,
) -> Result<CovarianceEstimate> {
    design.check(dataset)?;
    w.check()?;
    let mut d_parts = Vec::with_capacity(design.len());
    let mut nd_parts = Vec::with_capacity(design.len());
    for stratum in design.strata() {
        let roc = StratumRoc::from_dataset(dataset, stratum)?;
        let xs = dataset.clusters(Status::Diseased, stratum);
        let ys = dataset.clusters(Status::NonDiseased, stratum);
        let (d, nd) = match w {
            WeightMeasure::FullAuc => auc_components(&roc, &xs, &ys, opts.ties),
            _ => integrated_components(&roc, &xs, &ys, w, opts)?,
        };
        d_parts.push(d);
        nd_parts.push(nd);
    }
    let mut sigma1 = cluster_covariance(&d_parts, "diseased")?;
    let mut sigma2 = cluster_covariance(&nd_parts, "non-diseased")?;
    let repaired1 = repair_psd(&mut sigma1);
    let repaired2 = repair_psd(&mut sigma2);
    Ok(CovarianceEstimate {
        sigma: &sigma1 + &sigma2,
        sigma1,
        sigma2,
        labels: design.labels(),
        psd_repaired: repaired1 || repaired2,
    })
}

/// `AᵀΣA`.
pub fn contrast_covariance(cov: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() != cov.nrows() || !cov.is_square() {
        return Err(Error::DimensionMismatch {
            expected: cov.nrows(),
            found: a.nrows(),
        });
    }
    let out = a.transpose() * cov * a;
    Ok((&out + out.transpose()) * 0.5)
}

/// `2P × P` matrix with `+1` at row `p` and `−1` at row `P + p` of column `p`.
pub fn paired_contrast(n_pairs: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(2 * n_pairs, n_pairs);
    for p in 0..n_pairs {
        a[(p, p)] = 1.0;
        a[(n_pairs + p, p)] = -1.0;
    }
    a
}

/// Empirical covariance of bootstrap wAUC vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapCovariance {
    pub sigma: DMatrix<f64>,
    pub labels: Vec<String>,
    pub replicates: usize,
    /// Resamples discarded because a stratum came out empty.
    pub redraws: usize,
}

/// Cap on discarded resamples per replicate.
const MAX_REDRAWS: usize = 1000;

/// wAUC vector of bootstrap replicate `index`, drawn from its own stream of
/// `seed`. Returns the vector and the number of discarded resamples.
pub fn bootstrap_replicate(
    dataset: &MarkerDataset,
    design: StudyDesign,
    w: &WeightMeasure,
    seed: u64,
    index: u64,
) -> Result<(Vec<f64>, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let (m, j) = (dataset.diseased().len(), dataset.nondiseased().len());
    let mut redraws = 0;
    loop {
        let di: Vec<usize> = (0..m).map(|_| rng.random_range(0..m)).collect();
        let ni: Vec<usize> = (0..j).map(|_| rng.random_range(0..j)).collect();
        let boot = dataset.resample(&di, &ni);
        match wauc_vector_with(&boot, design, w, Ties::Strict) {
            Ok(v) => return Ok((v.values, redraws)),
            Err(Error::EmptyStratum(_)) if redraws < MAX_REDRAWS => redraws += 1,
            Err(e) => return Err(e),
        }
    }
}

/// Covariance across replicate vectors, `B − 1` divisor.
pub fn bootstrap_from_replicates(
    replicates: &[Vec<f64>],
    labels: Vec<String>,
    redraws: usize,
) -> Result<BootstrapCovariance> {
    let b = replicates.len();
    if b < 2 {
        return Err(Error::InvalidArgument(
            "need at least two replicates".into(),
        ));
    }
    let dim = replicates[0].len();
    let mut mean = alloc::vec![0.0; dim];
    for r in replicates {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= b as f64;
    }
    let mut sigma = DMatrix::zeros(dim, dim);
    for r in replicates {
        for a in 0..dim {
            for c in a..dim {
                sigma[(a, c)] += (r[a] - mean[a]) * (r[c] - mean[c]);
            }
        }
    }
    for a in 0..dim {
        for c in a..dim {
            let v = sigma[(a, c)] / (b as f64 - 1.0);
            sigma[(a, c)] = v;
            sigma[(c, a)] = v;
        }
    }
    Ok(BootstrapCovariance {
        sigma,
        labels,
        replicates: b,
        redraws,
    })
}

/// Subject-level bootstrap covariance with `b` replicates. Replicate `r`
/// uses stream `r` of `seed`, so results do not depend on evaluation order.
pub fn bootstrap_covariance(
    dataset: &MarkerDataset,
    design: StudyDesign,
    w: &WeightMeasure,
    b: usize,
    seed: u64,
) -> Result<BootstrapCovariance> {
    check_bootstrap_args(dataset, design, w, b)?;
    let mut reps = Vec::with_capacity(b);
    let mut redraws = 0;
    for r in 0..b {
        let (v, k) = bootstrap_replicate(dataset, design, w, seed, r as u64)?;
        reps.push(v);
        redraws += k;
    }
    bootstrap_from_replicates(&reps, design.labels(), redraws)
}

pub fn check_bootstrap_args(
    dataset: &MarkerDataset,
    design: StudyDesign,
    w: &WeightMeasure,
    b: usize,
) -> Result<()> {
    if b < MIN_BOOTSTRAP_REPLICATES {
        return Err(Error::InvalidArgument(alloc::format!(
            "bootstrap needs at least {MIN_BOOTSTRAP_REPLICATES} replicates, got {b}"
        )));
    }
    design.check(dataset)?;
    w.check()
}
