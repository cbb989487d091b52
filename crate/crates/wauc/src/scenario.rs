//! Plain-text scenario files and the named study presets.
//!
//! One `key = value` pair per line; `#` starts a comment line. A file either
//! starts from a preset and overrides fields, or spells out every field:
//!
//! ```text
//! preset = table3
//! rho = 0.2
//! n = 100
//! measure = pauc:0,0.6
//! seed = 7
//! ```
//!
//! ```text
//! name = shifted readers
//! family = normal
//! design = mrmt:2
//! n = 60
//! measure = auc
//! methods = equal,optimal
//! diseased.mean = 1,1,0.5,1
//! diseased.variances = 1,1,1,1
//! diseased.rho = 0.4
//! nondiseased.mean = 0,0,0,0
//! nondiseased.covariance = 1,0.2,0.2,0.2, 0.2,1,0.2,0.2, 0.2,0.2,1,0.2, 0.2,0.2,0.2,1
//! ```
//!
//! | key | meaning |
//! |-----|---------|
//! | `preset` | `table1`, `table2`, `table3`, `table4` or `null` |
//! | `rho`, `n` | preset parameters; without a preset, the default correlation and both sample sizes |
//! | `name`, `family`, `design`, `measure`, `methods`, `seed`, `reps`, `alpha` | scenario fields |
//! | `n_diseased`, `n_nondiseased` | sample sizes |
//! | `<group>.mean` | base-component means, marker-major |
//! | `<group>.variances`, `<group>.rho` | compound-symmetry covariance |
//! | `<group>.covariance` | explicit row-major covariance (singleton clusters) |
//! | `<group>.cluster_sizes` | `c`, or `c1/c2` for the first and second half of subjects |
//!
//! `<group>` is `diseased` or `nondiseased`.

use std::collections::BTreeMap;

use wauc_core::simulation::{
    null_scenario, table1, table2, table3, table4, ClusterSizes, CovBuilder, Family, GroupSpec,
    ScenarioSpec, SimMethod, ALPHA, REPLICATES,
};
use wauc_core::WeightMeasure;

use crate::selector::{format_design, format_measure, parse_design, parse_measure, DesignSpec};

pub const PRESETS: [&str; 5] = ["table1", "table2", "table3", "table4", "null"];

/// Parameters of a named preset; `None` means the preset default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PresetArgs {
    pub family: Option<Family>,
    pub rho: Option<f64>,
    pub n: Option<usize>,
    pub measure: Option<WeightMeasure>,
}

pub const DEFAULT_RHO: f64 = 0.5;
pub const DEFAULT_N: usize = 50;

pub fn preset(name: &str, args: &PresetArgs) -> Result<ScenarioSpec, String> {
    let family = args.family.unwrap_or(Family::Normal);
    let rho = args.rho.unwrap_or(DEFAULT_RHO);
    let n = args.n.unwrap_or(DEFAULT_N);
    let measure = args.measure.clone().unwrap_or(WeightMeasure::FullAuc);
    let no_rho = |what: &str| match args.rho {
        Some(_) => Err(format!("{what} has fixed correlations; rho does not apply")),
        None => Ok(()),
    };
    let normal_only = |what: &str| match args.family {
        Some(Family::Lognormal) => Err(format!("{what} is defined for normal data only")),
        _ => Ok(()),
    };
    match name {
        "table1" => Ok(table1(family, rho, n, measure)),
        "table2" => {
            if measure != WeightMeasure::FullAuc {
                return Err("table2 compares AUC estimators; measure must be auc".into());
            }
            Ok(table2(family, rho, n))
        }
        "table3" => {
            normal_only("table3")?;
            Ok(table3(rho, n, measure))
        }
        "table4" => {
            no_rho("table4")?;
            Ok(table4(family, n, measure))
        }
        "null" => {
            normal_only("null")?;
            Ok(null_scenario(rho, n, measure))
        }
        _ => Err(format!(
            "unknown preset {name:?} (expected one of {})",
            PRESETS.join(", ")
        )),
    }
}

pub fn parse_family(s: &str) -> Result<Family, String> {
    match s.trim() {
        "normal" => Ok(Family::Normal),
        "lognormal" => Ok(Family::Lognormal),
        other => Err(format!(
            "unknown family {other:?} (expected normal or lognormal)"
        )),
    }
}

fn parse_method(s: &str) -> Result<SimMethod, String> {
    match s.trim() {
        "equal" => Ok(SimMethod::Equal),
        "optimal" => Ok(SimMethod::Optimal),
        "parametric" => Ok(SimMethod::Parametric),
        "semiparametric" => Ok(SimMethod::Semiparametric),
        other => Err(format!(
            "unknown method {other:?} (expected equal, optimal, parametric or semiparametric)"
        )),
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("{v:?} is not a number"))
        })
        .collect()
}

fn parse_sizes(s: &str) -> Result<ClusterSizes, String> {
    let size = |v: &str| match v.trim().parse::<usize>() {
        Ok(c) if c > 0 => Ok(c),
        _ => Err(format!("cluster size {v:?} is not a positive integer")),
    };
    match s.split_once('/') {
        None => size(s).map(ClusterSizes::Constant),
        Some((a, b)) => Ok(ClusterSizes::Halves {
            first: size(a)?,
            second: size(b)?,
        }),
    }
}

const KEYS: [&str; 13] = [
    "preset",
    "name",
    "family",
    "design",
    "measure",
    "methods",
    "seed",
    "reps",
    "alpha",
    "rho",
    "n",
    "n_diseased",
    "n_nondiseased",
];
const GROUP_KEYS: [&str; 5] = ["mean", "variances", "rho", "covariance", "cluster_sizes"];

struct Entry {
    line: usize,
    value: String,
}

/// Key-value pairs with duplicate and unknown keys rejected by line.
fn entries(text: &str) -> Result<BTreeMap<String, Entry>, String> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| format!("line {line}: expected key = value"))?;
        let key = key.trim().to_string();
        let known = match key.split_once('.') {
            Some((g, k)) => ["diseased", "nondiseased"].contains(&g) && GROUP_KEYS.contains(&k),
            None => KEYS.contains(&key.as_str()),
        };
        if !known {
            return Err(format!("line {line}: unknown key {key:?}"));
        }
        let entry = Entry {
            line,
            value: value.trim().to_string(),
        };
        if let Some(prev) = map.insert(key.clone(), entry) {
            return Err(format!(
                "line {line}: {key:?} already set on line {}",
                prev.line
            ));
        }
    }
    Ok(map)
}

struct Fields(BTreeMap<String, Entry>);

impl Fields {
    fn get<T>(
        &mut self,
        key: &str,
        parse: impl FnOnce(&str) -> Result<T, String>,
    ) -> Result<Option<T>, String> {
        match self.0.remove(key) {
            None => Ok(None),
            Some(e) => parse(&e.value)
                .map(Some)
                .map_err(|msg| format!("line {}: {key}: {msg}", e.line)),
        }
    }

    fn required<T>(
        &mut self,
        key: &str,
        parse: impl FnOnce(&str) -> Result<T, String>,
    ) -> Result<T, String> {
        self.get(key, parse)?
            .ok_or_else(|| format!("missing {key:?} (no preset to take it from)"))
    }
}

fn integer<T: std::str::FromStr>(s: &str) -> Result<T, String> {
    s.parse()
        .map_err(|_| format!("{s:?} is not a non-negative integer"))
}

fn float(s: &str) -> Result<f64, String> {
    s.parse().map_err(|_| format!("{s:?} is not a number"))
}

fn group(
    fields: &mut Fields,
    prefix: &str,
    base: Option<&GroupSpec>,
    default_rho: Option<f64>,
) -> Result<GroupSpec, String> {
    let key = |k: &str| format!("{prefix}.{k}");
    let mean = match fields.get(&key("mean"), parse_list)? {
        Some(m) => m,
        None => base
            .map(|b| b.mean.clone())
            .ok_or_else(|| format!("missing {:?} (no preset to take it from)", key("mean")))?,
    };
    let explicit = fields.get(&key("covariance"), parse_list)?;
    let variances = fields.get(&key("variances"), parse_list)?;
    let rho = fields.get(&key("rho"), float)?;
    let covariance = match explicit {
        Some(values) => {
            if variances.is_some() || rho.is_some() {
                return Err(format!(
                    "{prefix}: give either covariance or variances/rho, not both"
                ));
            }
            CovBuilder::Explicit { values }
        }
        None => {
            let (base_rho, base_var) = match base.map(|b| &b.covariance) {
                Some(CovBuilder::CompoundSymmetry { rho, variances }) => {
                    (Some(*rho), Some(variances.clone()))
                }
                _ => (None, None),
            };
            CovBuilder::CompoundSymmetry {
                rho: rho
                    .or(default_rho)
                    .or(base_rho)
                    .ok_or_else(|| format!("missing {:?} or top-level rho", key("rho")))?,
                variances: variances.or(base_var).ok_or_else(|| {
                    format!("missing {:?} or {:?}", key("variances"), key("covariance"))
                })?,
            }
        }
    };
    let cluster_sizes = fields
        .get(&key("cluster_sizes"), parse_sizes)?
        .or(base.map(|b| b.cluster_sizes))
        .unwrap_or(ClusterSizes::Constant(1));
    Ok(GroupSpec {
        mean,
        covariance,
        cluster_sizes,
    })
}

pub fn parse_scenario(text: &str) -> Result<ScenarioSpec, String> {
    let mut f = Fields(entries(text)?);
    let family = f.get("family", parse_family)?;
    let measure = f.get("measure", parse_measure)?;
    let rho = f.get("rho", float)?;
    let n = f.get("n", integer::<usize>)?;
    let base = match f.0.get("preset").map(|e| e.line) {
        Some(line) => {
            let name = f.required("preset", |s| Ok(s.to_string()))?;
            let args = PresetArgs {
                family,
                rho,
                n,
                measure: measure.clone(),
            };
            Some(preset(&name, &args).map_err(|e| format!("line {line}: {e}"))?)
        }
        None => None,
    };
    let design = match f.get("design", parse_design)? {
        Some(DesignSpec::Fixed(d)) => Some(d),
        Some(DesignSpec::PooledAll) => {
            return Err("design: simulations need mrmt:R or longitudinal:K".into())
        }
        None => None,
    };
    let from_base = base.is_some();
    let default_rho = if from_base { None } else { rho };
    let diseased = group(
        &mut f,
        "diseased",
        base.as_ref().map(|b| &b.diseased),
        default_rho,
    )?;
    let nondiseased = group(
        &mut f,
        "nondiseased",
        base.as_ref().map(|b| &b.nondiseased),
        default_rho,
    )?;
    let size = |f: &mut Fields, key: &str, base: Option<usize>| -> Result<usize, String> {
        f.get(key, integer::<usize>)?
            .or(base)
            .or(n)
            .ok_or_else(|| format!("missing {key:?} or n"))
    };
    let n_diseased = size(&mut f, "n_diseased", base.as_ref().map(|b| b.n_diseased))?;
    let n_nondiseased = size(
        &mut f,
        "n_nondiseased",
        base.as_ref().map(|b| b.n_nondiseased),
    )?;
    let methods = f.get("methods", |s| s.split(',').map(parse_method).collect())?;
    let spec = ScenarioSpec {
        name: f
            .get("name", |s| Ok(s.to_string()))?
            .or(base.as_ref().map(|b| b.name.clone()))
            .unwrap_or_else(|| "custom".into()),
        family: match (family, &base) {
            (Some(fam), _) => fam,
            (None, Some(b)) => b.family,
            (None, None) => return Err("missing \"family\" (no preset to take it from)".into()),
        },
        design: design
            .or(base.as_ref().map(|b| b.design))
            .ok_or("missing \"design\" (no preset to take it from)")?,
        diseased,
        nondiseased,
        n_diseased,
        n_nondiseased,
        n_reps: f
            .get("reps", integer::<usize>)?
            .or(base.as_ref().map(|b| b.n_reps))
            .unwrap_or(REPLICATES),
        seed: f
            .get("seed", integer::<u64>)?
            .or(base.as_ref().map(|b| b.seed))
            .unwrap_or(1),
        weight_measure: measure
            .or(base.as_ref().map(|b| b.weight_measure.clone()))
            .unwrap_or(WeightMeasure::FullAuc),
        methods: methods
            .or(base.as_ref().map(|b| b.methods.clone()))
            .unwrap_or_else(|| vec![SimMethod::Equal]),
        alpha: f
            .get("alpha", float)?
            .or(base.as_ref().map(|b| b.alpha))
            .unwrap_or(ALPHA),
    };
    debug_assert!(f.0.is_empty());
    Ok(spec)
}

fn list(values: &[f64]) -> String {
    values
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// Full, preset-free form of a scenario; [`parse_scenario`] reads it back
/// to the same value.
pub fn render_scenario(spec: &ScenarioSpec) -> String {
    let mut out = String::new();
    let mut line = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    line("name", spec.name.clone());
    line("family", spec.family.name().into());
    line("design", format_design(spec.design));
    line("n_diseased", spec.n_diseased.to_string());
    line("n_nondiseased", spec.n_nondiseased.to_string());
    line("reps", spec.n_reps.to_string());
    line("seed", spec.seed.to_string());
    line("alpha", spec.alpha.to_string());
    line("measure", format_measure(&spec.weight_measure));
    line(
        "methods",
        spec.methods
            .iter()
            .map(|m| m.name())
            .collect::<Vec<_>>()
            .join(","),
    );
    for (prefix, g) in [
        ("diseased", &spec.diseased),
        ("nondiseased", &spec.nondiseased),
    ] {
        line(&format!("{prefix}.mean"), list(&g.mean));
        match &g.covariance {
            CovBuilder::CompoundSymmetry { rho, variances } => {
                line(&format!("{prefix}.rho"), rho.to_string());
                line(&format!("{prefix}.variances"), list(variances));
            }
            CovBuilder::Explicit { values } => line(&format!("{prefix}.covariance"), list(values)),
        }
        let sizes = match g.cluster_sizes {
            ClusterSizes::Constant(c) => c.to_string(),
            ClusterSizes::Halves { first, second } => format!("{first}/{second}"),
        };
        line(&format!("{prefix}.cluster_sizes"), sizes);
    }
    out
}
