use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng;

use crate::data::{MarkerDataset, StudyDesign, SubjectRecord, WeightMeasure};
use crate::error::{Error, Result};

use super::mvn::{compound_symmetry, Family, MvnSampler};
use super::truth::true_wauc;

/// Measurements per subject and per (marker, time) cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ClusterSizes {
    Constant(usize),
    /// `first` for subjects `0..count/2`, `second` for the rest.
    Halves {
        first: usize,
        second: usize,
    },
}

impl ClusterSizes {
    pub fn size(&self, subject: usize, count: usize) -> usize {
        match *self {
            ClusterSizes::Constant(c) => c,
            ClusterSizes::Halves { first, second } => {
                if subject < count / 2 {
                    first
                } else {
                    second
                }
            }
        }
    }

    fn distinct(&self) -> Vec<usize> {
        match *self {
            ClusterSizes::Constant(c) => alloc::vec![c],
            ClusterSizes::Halves { first, second } if first == second => alloc::vec![first],
            ClusterSizes::Halves { first, second } => alloc::vec![first, second],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CovBuilder {
    /// Exchangeable correlation `rho` among every measurement of a subject;
    /// measurements of base component `d` have variance `variances[d]`.
    CompoundSymmetry { rho: f64, variances: Vec<f64> },
    /// Row-major covariance of the base components; clusters of size one only.
    Explicit { values: Vec<f64> },
}

/// Generating distribution of one group. Base components are the
/// (marker, time) cells in marker-major order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupSpec {
    pub mean: Vec<f64>,
    pub covariance: CovBuilder,
    pub cluster_sizes: ClusterSizes,
}

impl GroupSpec {
    fn base_variance(&self, d: usize) -> f64 {
        match &self.covariance {
            CovBuilder::CompoundSymmetry { variances, .. } => variances[d],
            CovBuilder::Explicit { values } => values[d * self.mean.len() + d],
        }
    }

    /// Covariance of a cluster with `c` measurements per base component,
    /// ordered (component, replicate).
    pub fn cluster_covariance(&self, c: usize) -> Result<DMatrix<f64>> {
        let dim = self.mean.len();
        match &self.covariance {
            CovBuilder::CompoundSymmetry { rho, variances } => {
                if variances.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: variances.len(),
                    });
                }
                let expanded: Vec<f64> = variances
                    .iter()
                    .flat_map(|v| core::iter::repeat_n(*v, c))
                    .collect();
                Ok(compound_symmetry(*rho, &expanded))
            }
            CovBuilder::Explicit { values } => {
                if c != 1 {
                    return Err(Error::InvalidArgument(
                        "explicit covariance needs clusters of size one".into(),
                    ));
                }
                if values.len() != dim * dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim * dim,
                        found: values.len(),
                    });
                }
                Ok(DMatrix::from_row_slice(dim, dim, values))
            }
        }
    }
}

/// Estimators evaluated on each simulated dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SimMethod {
    /// Empirical wAUCs, equal weights, analytic variance.
    Equal,
    /// Empirical wAUCs, plug-in optimal weights, analytic variance.
    Optimal,
    /// Binormal plug-in AUCs with equal weights.
    Parametric,
    /// Logistic-score AUCs with equal weights.
    Semiparametric,
}

impl SimMethod {
    pub fn name(self) -> &'static str {
        match self {
            SimMethod::Equal => "equal",
            SimMethod::Optimal => "optimal",
            SimMethod::Parametric => "parametric",
            SimMethod::Semiparametric => "semiparametric",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScenarioSpec {
    pub name: String,
    pub family: Family,
    pub design: StudyDesign,
    pub diseased: GroupSpec,
    pub nondiseased: GroupSpec,
    pub n_diseased: usize,
    pub n_nondiseased: usize,
    pub n_reps: usize,
    pub seed: u64,
    pub weight_measure: WeightMeasure,
    pub methods: Vec<SimMethod>,
    pub alpha: f64,
}

/// Samplers for one group, one per distinct cluster size.
pub(crate) struct GroupSampler {
    sizes: ClusterSizes,
    samplers: Vec<(usize, MvnSampler)>,
}

impl GroupSampler {
    fn new(spec: &GroupSpec, family: Family) -> Result<Self> {
        let samplers = spec
            .cluster_sizes
            .distinct()
            .into_iter()
            .map(|c| {
                let mean: Vec<f64> = spec
                    .mean
                    .iter()
                    .flat_map(|m| core::iter::repeat_n(*m, c))
                    .collect();
                Ok((
                    c,
                    MvnSampler::new(&mean, spec.cluster_covariance(c)?, family)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GroupSampler {
            sizes: spec.cluster_sizes,
            samplers,
        })
    }

    fn subjects<R: Rng + ?Sized>(
        &self,
        prefix: &str,
        count: usize,
        n_times: usize,
        rng: &mut R,
    ) -> Vec<SubjectRecord> {
        (0..count)
            .map(|i| {
                let c = self.sizes.size(i, count);
                let sampler = &self.samplers.iter().find(|(s, _)| *s == c).expect("size").1;
                let draw = sampler.sample(rng);
                let mut rec = SubjectRecord::new(alloc::format!("{prefix}{}", i + 1));
                for (d, chunk) in draw.chunks(c).enumerate() {
                    for v in chunk {
                        rec.push(d / n_times, d % n_times, *v);
                    }
                }
                rec
            })
            .collect()
    }
}

/// Validated scenario with prepared samplers.
pub struct Generator {
    pub(crate) spec: ScenarioSpec,
    n_markers: usize,
    n_times: usize,
    diseased: GroupSampler,
    nondiseased: GroupSampler,
}

impl Generator {
    pub fn new(spec: ScenarioSpec) -> Result<Self> {
        let (n_markers, n_times) = design_dims(spec.design);
        spec.weight_measure.check()?;
        if spec.design.n_pairs().is_none() {
            return Err(Error::DesignMismatch(
                "simulation needs a paired design".into(),
            ));
        }
        if spec.n_diseased < 2 || spec.n_nondiseased < 2 {
            return Err(Error::TooFewSubjects("simulated"));
        }
        if spec.n_reps == 0 {
            return Err(Error::InvalidArgument("n_reps must be positive".into()));
        }
        if !(spec.alpha > 0.0 && spec.alpha < 1.0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "alpha must be in (0,1), got {}",
                spec.alpha
            )));
        }
        if spec.methods.is_empty() {
            return Err(Error::InvalidArgument("no methods requested".into()));
        }
        let baseline = spec
            .methods
            .iter()
            .any(|m| matches!(m, SimMethod::Parametric | SimMethod::Semiparametric));
        if baseline && spec.weight_measure != WeightMeasure::FullAuc {
            return Err(Error::InvalidArgument(
                "parametric and semiparametric baselines estimate the AUC only".into(),
            ));
        }
        for g in [&spec.diseased, &spec.nondiseased] {
            if g.mean.len() != n_markers * n_times {
                return Err(Error::DimensionMismatch {
                    expected: n_markers * n_times,
                    found: g.mean.len(),
                });
            }
            for c in g.cluster_sizes.distinct() {
                if c == 0 {
                    return Err(Error::InvalidArgument(
                        "cluster size must be positive".into(),
                    ));
                }
            }
        }
        Ok(Generator {
            diseased: GroupSampler::new(&spec.diseased, spec.family)?,
            nondiseased: GroupSampler::new(&spec.nondiseased, spec.family)?,
            spec,
            n_markers,
            n_times,
        })
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> MarkerDataset {
        let d = self
            .diseased
            .subjects("D", self.spec.n_diseased, self.n_times, rng);
        let n = self
            .nondiseased
            .subjects("N", self.spec.n_nondiseased, self.n_times, rng);
        MarkerDataset::new(self.n_markers, self.n_times, d, n)
    }

    /// Population wAUC of every design entry.
    pub fn true_vector(&self) -> Result<Vec<f64>> {
        let s = &self.spec;
        s.design
            .strata()
            .iter()
            .map(|st| {
                let d = match st.time {
                    Some(k) => st.marker * self.n_times + k,
                    None if self.n_times == 1 => st.marker,
                    None => {
                        return Err(Error::InvalidArgument(
                            "pooled strata over several times have no closed-form truth".into(),
                        ))
                    }
                };
                Ok(true_wauc(
                    s.family,
                    s.diseased.mean[d],
                    libm::sqrt(s.diseased.base_variance(d)),
                    s.nondiseased.mean[d],
                    libm::sqrt(s.nondiseased.base_variance(d)),
                    &s.weight_measure,
                ))
            })
            .collect()
    }
}

/// `(n_markers, n_times)` implied by a design.
pub fn design_dims(design: StudyDesign) -> (usize, usize) {
    match design {
        StudyDesign::Pooled { n_markers } => (n_markers, 1),
        StudyDesign::MultiReaderMultiTest { n_readers } => (2 * n_readers, 1),
        StudyDesign::Longitudinal { n_times } => (2, n_times),
    }
}

pub const REPLICATES: usize = 1000;
pub const ALPHA: f64 = 0.05;
pub const N_READERS: usize = 3;
pub const TABLE1_VARIANCES: [f64; 6] = [1.0, 1.5, 2.0, 1.0, 1.5, 2.0];
pub const TABLE1_MU_X: [f64; 6] = [1.0; 6];
pub const TABLE2_MU_X: [f64; 6] = [1.0, 1.0, 1.0, 1.5, 2.0, 2.5];
pub const TABLE3_VARIANCES: [f64; 6] = [1.0, 1.5, 2.0, 2.0, 3.0, 2.0];
pub const TABLE3_MU_X: [f64; 6] = [2.0, 1.0, 1.0, 1.0, 1.0, 1.0];
pub const TABLE4_TIMES: usize = 3;
pub const TABLE4_MU_X: [f64; 6] = [2.0, 2.0, 2.0, 1.0, 1.0, 1.0];
pub const TABLE4_DISEASED_SIZES: ClusterSizes = ClusterSizes::Halves {
    first: 2,
    second: 4,
};
pub const TABLE4_NONDISEASED_SIZES: ClusterSizes = ClusterSizes::Halves {
    first: 5,
    second: 3,
};
pub const TABLE4_RHO_DISEASED: f64 = 0.4;
pub const TABLE4_RHO_NONDISEASED: f64 = 0.3;
/// Upper FPR limit of the partial AUC cells.
pub const PAUC_UPPER: f64 = 0.6;
pub const TABLE1_RHOS: [f64; 3] = [-0.1, 0.2, 0.5];
pub const TABLE1_SIZES: [usize; 3] = [50, 100, 200];
pub const TABLE3_SIZES: [usize; 2] = [50, 100];

pub fn pauc_measure() -> WeightMeasure {
    WeightMeasure::PartialAuc {
        lower: 0.0,
        upper: PAUC_UPPER,
        normalized: false,
    }
}

fn reader_group(mean: &[f64], rho: f64, variances: &[f64]) -> GroupSpec {
    GroupSpec {
        mean: mean.to_vec(),
        covariance: CovBuilder::CompoundSymmetry {
            rho,
            variances: variances.to_vec(),
        },
        cluster_sizes: ClusterSizes::Constant(1),
    }
}

#[allow(clippy::too_many_arguments)]
fn reader_scenario(
    name: String,
    family: Family,
    rho: f64,
    n: usize,
    mu_x: &[f64],
    variances: &[f64],
    measure: WeightMeasure,
    methods: Vec<SimMethod>,
) -> ScenarioSpec {
    ScenarioSpec {
        name,
        family,
        design: StudyDesign::MultiReaderMultiTest {
            n_readers: N_READERS,
        },
        diseased: reader_group(mu_x, rho, variances),
        nondiseased: reader_group(&[0.0; 6], rho, variances),
        n_diseased: n,
        n_nondiseased: n,
        n_reps: REPLICATES,
        seed: 1,
        weight_measure: measure,
        methods,
        alpha: ALPHA,
    }
}

fn measure_name(w: &WeightMeasure) -> &'static str {
    match w {
        WeightMeasure::FullAuc => "auc",
        WeightMeasure::PartialAuc { .. } => "pauc",
        WeightMeasure::PointMass(_) => "sens",
        WeightMeasure::Steps(_) => "steps",
    }
}

/// Coverage of the equal-weight reader-averaged difference; the two
/// modalities have identical marginals, so the true difference is zero.
pub fn table1(family: Family, rho: f64, n: usize, measure: WeightMeasure) -> ScenarioSpec {
    reader_scenario(
        alloc::format!(
            "table1/{}/rho={rho}/n={n}/{}",
            family.name(),
            measure_name(&measure)
        ),
        family,
        rho,
        n,
        &TABLE1_MU_X,
        &TABLE1_VARIANCES,
        measure,
        alloc::vec![SimMethod::Equal],
    )
}

/// Empirical, parametric and logistic-score AUC differences.
pub fn table2(family: Family, rho: f64, n: usize) -> ScenarioSpec {
    reader_scenario(
        alloc::format!("table2/{}/rho={rho}/n={n}", family.name()),
        family,
        rho,
        n,
        &TABLE2_MU_X,
        &TABLE1_VARIANCES,
        WeightMeasure::FullAuc,
        alloc::vec![
            SimMethod::Equal,
            SimMethod::Parametric,
            SimMethod::Semiparametric
        ],
    )
}

/// Power of equal and optimal weights when reader 1 differs between modalities.
pub fn table3(rho: f64, n: usize, measure: WeightMeasure) -> ScenarioSpec {
    reader_scenario(
        alloc::format!("table3/normal/rho={rho}/n={n}/{}", measure_name(&measure)),
        Family::Normal,
        rho,
        n,
        &TABLE3_MU_X,
        &TABLE3_VARIANCES,
        measure,
        alloc::vec![SimMethod::Equal, SimMethod::Optimal],
    )
}

/// Longitudinal comparison of two markers over three time points with mixed
/// cluster sizes.
pub fn table4(family: Family, n: usize, measure: WeightMeasure) -> ScenarioSpec {
    let group = |mean: &[f64], rho: f64, sizes: ClusterSizes| GroupSpec {
        mean: mean.to_vec(),
        covariance: CovBuilder::CompoundSymmetry {
            rho,
            variances: alloc::vec![1.0; 2 * TABLE4_TIMES],
        },
        cluster_sizes: sizes,
    };
    ScenarioSpec {
        name: alloc::format!("table4/{}/n={n}/{}", family.name(), measure_name(&measure)),
        family,
        design: StudyDesign::Longitudinal {
            n_times: TABLE4_TIMES,
        },
        diseased: group(&TABLE4_MU_X, TABLE4_RHO_DISEASED, TABLE4_DISEASED_SIZES),
        nondiseased: group(&[0.0; 6], TABLE4_RHO_NONDISEASED, TABLE4_NONDISEASED_SIZES),
        n_diseased: n,
        n_nondiseased: n,
        n_reps: REPLICATES,
        seed: 1,
        weight_measure: measure,
        methods: alloc::vec![SimMethod::Equal],
        alpha: ALPHA,
    }
}

/// Identical modalities (the first study's setting) tested with both weightings.
pub fn null_scenario(rho: f64, n: usize, measure: WeightMeasure) -> ScenarioSpec {
    let mut s = table1(Family::Normal, rho, n, measure);
    s.name = alloc::format!("null/rho={rho}/n={n}");
    s.methods = alloc::vec![SimMethod::Equal, SimMethod::Optimal];
    s
}
