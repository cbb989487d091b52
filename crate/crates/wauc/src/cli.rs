//! The `wauc` command line: argument definitions and subcommand drivers.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::ThreadPool;
use serde::Serialize;
use wauc_core::simulation::{Family, ScenarioSpec, StudyReport};
use wauc_core::{
    sigma_matrix_with, wauc_vector_with, z_test, CovarianceEstimate, CovarianceOptions,
    MarkerDataset, PairedAnalysis, Stratum, StratumRoc, Ties, WeightMeasure,
};

use crate::dataset::{read_dataset, Dims};
use crate::error::{Error, Result};
use crate::report::{
    sha256_hex, to_json, write_analysis_csv, write_roc_csv, write_study_csv, AnalysisReport,
    BootstrapReport, ComparisonReport, CovarianceReport, Provenance, SimulationReport,
};
use crate::runner::{bootstrap_covariance, run_study, thread_pool};
use crate::scenario::{parse_family, parse_scenario, preset, PresetArgs, PRESETS};
use crate::selector::{
    format_design, format_measure, format_weights, parse_design, parse_measure, parse_weights,
    DesignSpec,
};

pub const THREADS_ENV: &str = "WAUC_THREADS";
pub const DEFAULT_ROC_POINTS: usize = 512;

#[derive(Debug, Parser)]
#[command(
    name = "wauc",
    version,
    about = "Weighted AUC estimation and marker comparison for clustered ROC data"
)]
pub struct Cli {
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, global = true, env = THREADS_ENV, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-marker wAUCs, their covariance and, for paired designs, the weighted comparison.
    Analyze(AnalyzeArgs),
    /// Weighted comparison of two modalities or markers, from data or from an estimate and variance.
    Compare(CompareArgs),
    /// Monte Carlo study from a preset (table1..table4, null) or a scenario file.
    Simulate(SimulateArgs),
    /// Empirical ROC curves on a grid of false positive rates.
    Roc(RocArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TiesArg {
    Strict,
    Midrank,
}

impl From<TiesArg> for Ties {
    fn from(t: TiesArg) -> Ties {
        match t {
            TiesArg::Strict => Ties::Strict,
            TiesArg::Midrank => Ties::Midrank,
        }
    }
}

fn parse_alpha(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(a) if a > 0.0 && a < 1.0 => Ok(a),
        _ => Err(format!("alpha must be a number in (0,1), got {s:?}")),
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Long-format CSV: subject_id,status,marker,time,replicate,value.
    #[arg(short, long)]
    pub input: PathBuf,
    /// pooled, pooled:L, mrmt:R (readers x 2 modalities) or longitudinal:K.
    #[arg(long, default_value = "pooled", value_parser = parse_design)]
    pub design: DesignSpec,
    /// auc, pauc:u1,u2[:normalized], sens:u0 or steps:u1=m1,...
    #[arg(long, default_value = "auc", value_parser = parse_measure)]
    pub measure: WeightMeasure,
    #[arg(long, value_enum, default_value_t = TiesArg::Strict)]
    pub ties: TiesArg,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// equal, optimal or custom:w1,w2,...
    #[arg(long, default_value = "equal")]
    pub weights: String,
    /// Ridge added before inverting for optimal weights; default 1e-8 * trace / R.
    #[arg(long)]
    pub ridge: Option<f64>,
    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub test: TestArgs,
    /// Also estimate the covariance from this many subject-level bootstrap resamples.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Seed for the bootstrap.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Report file; `.csv` writes estimates and covariance, anything else JSON.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Print the JSON report instead of the summary.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Long-format CSV; omit to test a given --estimate and --variance.
    #[arg(
        short,
        long,
        required_unless_present = "estimate",
        conflicts_with = "estimate"
    )]
    pub input: Option<PathBuf>,
    /// mrmt:R or longitudinal:K.
    #[arg(long, value_parser = parse_design, required_unless_present = "estimate")]
    pub design: Option<DesignSpec>,
    #[arg(long, default_value = "auc", value_parser = parse_measure)]
    pub measure: WeightMeasure,
    #[arg(long, value_enum, default_value_t = TiesArg::Strict)]
    pub ties: TiesArg,
    #[command(flatten)]
    pub test: TestArgs,
    /// Weighted difference to test, instead of estimating it from data.
    #[arg(long, requires = "variance", allow_hyphen_values = true)]
    pub estimate: Option<f64>,
    #[arg(long, requires = "estimate")]
    pub variance: Option<f64>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Preset name (table1, table2, table3, table4, null) or scenario file.
    pub target: String,
    /// Within-subject correlation (presets only).
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    /// Subjects per group (presets only).
    #[arg(long)]
    pub n: Option<usize>,
    /// normal or lognormal (presets only).
    #[arg(long, value_parser = parse_family)]
    pub family: Option<Family>,
    /// Weight measure (presets only).
    #[arg(long, value_parser = parse_measure)]
    pub measure: Option<WeightMeasure>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_alpha)]
    pub alpha: Option<f64>,
    /// Write PREFIX.json and PREFIX.csv.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RocArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    /// 1-based marker; all markers when omitted.
    #[arg(long)]
    pub marker: Option<usize>,
    /// 1-based time point; pooled over time when omitted.
    #[arg(long)]
    pub time: Option<usize>,
    /// Grid size; the grid is i/(points+1) for i = 1..=points.
    #[arg(long, default_value_t = DEFAULT_ROC_POINTS)]
    pub points: usize,
    /// CSV file; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    let pool = thread_pool(cli.threads)?;
    match cli.command {
        Command::Analyze(a) => analyze(a, &pool),
        Command::Compare(c) => compare(c),
        Command::Simulate(s) => simulate(s, &pool),
        Command::Roc(r) => roc(r),
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn print(text: &str) -> Result<()> {
    std::io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

struct Loaded {
    dataset: MarkerDataset,
    sha256: String,
}

fn load(path: &Path, design: Option<DesignSpec>) -> Result<Loaded> {
    let bytes = read_file(path)?;
    let (n_markers, n_times) = design.map_or((None, None), DesignSpec::dims);
    let dataset = read_dataset(bytes.as_slice(), Dims { n_markers, n_times })
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    Ok(Loaded {
        dataset,
        sha256: sha256_hex(&bytes),
    })
}

#[derive(Serialize)]
struct AnalysisConfig<'a> {
    input: String,
    design: String,
    measure: String,
    ties: TiesArg,
    weights: Option<String>,
    ridge: Option<f64>,
    alpha: f64,
    bootstrap: Option<usize>,
    covariance: &'a CovarianceOptions,
}

fn covariance_options(ties: TiesArg) -> CovarianceOptions {
    CovarianceOptions {
        ties: ties.into(),
        ..CovarianceOptions::default()
    }
}

fn quadratic(rows: &[Vec<f64>], g: &[f64]) -> f64 {
    rows.iter()
        .zip(g)
        .map(|(row, gi)| gi * row.iter().zip(g).map(|(s, gj)| s * gj).sum::<f64>())
        .sum()
}

fn analyze(a: AnalyzeArgs, pool: &ThreadPool) -> Result<()> {
    let Loaded { dataset, sha256 } = load(&a.data.input, Some(a.data.design))?;
    let design = a.data.design.resolve(dataset.n_markers());
    let w = &a.data.measure;
    let opts = covariance_options(a.data.ties);
    let paired = design.n_pairs().is_some();
    let method = parse_weights(&a.test.weights, a.test.ridge).map_err(Error::Input)?;
    let config = AnalysisConfig {
        input: a.data.input.display().to_string(),
        design: format_design(design),
        measure: format_measure(w),
        ties: a.data.ties,
        weights: paired.then(|| format_weights(&method)),
        ridge: a.test.ridge,
        alpha: a.test.alpha,
        bootstrap: a.bootstrap,
        covariance: &opts,
    };
    let provenance = Provenance::new(
        "analyze",
        &config,
        a.bootstrap.map(|_| a.seed),
        Some(sha256),
    )?;

    let wauc = wauc_vector_with(&dataset, design, w, opts.ties)?;
    let mut notes = Vec::new();
    let covariance: Option<CovarianceEstimate> = match sigma_matrix_with(&dataset, design, w, &opts)
    {
        Ok(c) => Some(c),
        Err(e @ wauc_core::Error::TooFewSubjects(_)) if !paired => {
            notes.push(format!("covariance not estimated: {e}"));
            None
        }
        Err(e) => return Err(e.into()),
    };
    if covariance.as_ref().is_some_and(|c| c.psd_repaired) {
        notes.push("negative eigenvalues were clipped from the covariance estimate".into());
    }
    let analysis = match (&covariance, design.n_pairs()) {
        (Some(c), Some(p)) => Some(PairedAnalysis::from_parts(
            wauc.clone(),
            c.clone(),
            p,
            &method,
            a.test.alpha,
        )?),
        _ => None,
    };
    if analysis.as_ref().is_some_and(|x| x.weights.fallback) {
        notes.push("optimal weights had a non-positive entry; equal weights were used".into());
    }
    let bootstrap = match a.bootstrap {
        Some(b) => {
            let boot = bootstrap_covariance(&dataset, design, w, b, a.seed, pool)?;
            let sigma = CovarianceEstimate::rows(&boot.sigma);
            let estimate_variance = analysis
                .as_ref()
                .map(|x| quadratic(&sigma, &x.weights.paired_gradient()));
            Some(BootstrapReport {
                replicates: boot.replicates,
                redraws: boot.redraws,
                sigma,
                estimate_variance,
            })
        }
        None => None,
    };
    let report = AnalysisReport {
        provenance,
        wauc,
        covariance: covariance.as_ref().map(CovarianceReport::from),
        difference_covariance: analysis
            .as_ref()
            .map(|x| CovarianceEstimate::rows(&x.difference_covariance)),
        comparison: analysis.map(|x| x.result),
        bootstrap,
        notes,
    };
    if let Some(path) = &a.output {
        if path.extension().is_some_and(|e| e == "csv") {
            let mut buf = Vec::new();
            write_analysis_csv(&report, &mut buf)?;
            write_file(path, &buf)?;
        } else {
            write_file(path, to_json(&report)?.as_bytes())?;
        }
    }
    if a.json {
        print(&to_json(&report)?)
    } else {
        print(&analysis_summary(&report, &dataset))
    }
}

fn comparison_summary(out: &mut String, c: &wauc_core::ComparisonResult) {
    let _ = writeln!(out, "comparison ({} weights)", c.method.name());
    if !c.weights.is_empty() {
        let w: Vec<String> = c.weights.iter().map(|w| format!("{w:.6}")).collect();
        let _ = writeln!(out, "  weights   {}", w.join(" "));
    }
    let _ = writeln!(out, "  estimate  {:.6}", c.estimate);
    let _ = writeln!(out, "  variance  {:.6e}", c.variance);
    let _ = writeln!(out, "  z         {:.4}", c.z);
    let _ = writeln!(out, "  p         {:.4e}", c.p);
    let _ = writeln!(
        out,
        "  {:.0}% CI    [{:.6}, {:.6}]",
        100.0 * (1.0 - c.alpha),
        c.ci[0],
        c.ci[1]
    );
}

fn analysis_summary(r: &AnalysisReport, ds: &MarkerDataset) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "design {}, measure {}, {} diseased / {} non-diseased subjects",
        format_design(r.wauc.design),
        format_measure(&r.wauc.weight_measure),
        ds.diseased().len(),
        ds.nondiseased().len()
    );
    for (i, label) in r.wauc.labels.iter().enumerate() {
        let _ = write!(out, "{label:<24} wauc {:.6}", r.wauc.values[i]);
        if let Some(c) = &r.covariance {
            let _ = write!(out, "  se {:.6}", c.sigma[i][i].sqrt());
        }
        out.push('\n');
    }
    if let Some(c) = &r.comparison {
        comparison_summary(&mut out, c);
    }
    if let Some(b) = &r.bootstrap {
        let _ = write!(out, "bootstrap ({} replicates", b.replicates);
        if b.redraws > 0 {
            let _ = write!(out, ", {} redraws", b.redraws);
        }
        out.push(')');
        if let Some(v) = b.estimate_variance {
            let _ = write!(out, " variance of estimate {v:.6e}");
        }
        out.push('\n');
    }
    for n in &r.notes {
        let _ = writeln!(out, "note: {n}");
    }
    out
}

#[derive(Serialize)]
struct CompareConfig {
    input: Option<String>,
    design: Option<String>,
    measure: Option<String>,
    ties: Option<TiesArg>,
    weights: Option<String>,
    ridge: Option<f64>,
    alpha: f64,
    estimate: Option<f64>,
    variance: Option<f64>,
}

fn compare(c: CompareArgs) -> Result<()> {
    let (comparison, provenance) = match (c.estimate, c.variance, &c.input) {
        (Some(estimate), Some(variance), _) => {
            let config = CompareConfig {
                input: None,
                design: None,
                measure: None,
                ties: None,
                weights: None,
                ridge: None,
                alpha: c.test.alpha,
                estimate: Some(estimate),
                variance: Some(variance),
            };
            let result = z_test(estimate, variance, c.test.alpha)?;
            (result, Provenance::new("compare", &config, None, None)?)
        }
        (_, _, Some(input)) => {
            let design_spec = c
                .design
                .ok_or_else(|| Error::Input("--design is required with --input".into()))?;
            let Loaded { dataset, sha256 } = load(input, Some(design_spec))?;
            let design = design_spec.resolve(dataset.n_markers());
            if design.n_pairs().is_none() {
                return Err(Error::Input(
                    "compare needs a paired design (mrmt:R or longitudinal:K)".into(),
                ));
            }
            let method = parse_weights(&c.test.weights, c.test.ridge).map_err(Error::Input)?;
            let opts = covariance_options(c.ties);
            let config = CompareConfig {
                input: Some(input.display().to_string()),
                design: Some(format_design(design)),
                measure: Some(format_measure(&c.measure)),
                ties: Some(c.ties),
                weights: Some(format_weights(&method)),
                ridge: c.test.ridge,
                alpha: c.test.alpha,
                estimate: None,
                variance: None,
            };
            let analysis =
                PairedAnalysis::run(&dataset, design, &c.measure, &method, c.test.alpha, &opts)?;
            (
                analysis.result,
                Provenance::new("compare", &config, None, Some(sha256))?,
            )
        }
        _ => {
            return Err(Error::Input(
                "give --input or --estimate with --variance".into(),
            ))
        }
    };
    let report = ComparisonReport {
        provenance,
        comparison,
    };
    let json = to_json(&report)?;
    if let Some(path) = &c.output {
        write_file(path, json.as_bytes())?;
    }
    if c.json {
        print(&json)
    } else {
        let mut out = String::new();
        comparison_summary(&mut out, &report.comparison);
        print(&out)
    }
}

fn scenario_for(s: &SimulateArgs) -> Result<(ScenarioSpec, Option<String>)> {
    let mut spec;
    let mut sha = None;
    if PRESETS.contains(&s.target.as_str()) {
        let args = PresetArgs {
            family: s.family,
            rho: s.rho,
            n: s.n,
            measure: s.measure.clone(),
        };
        spec = preset(&s.target, &args).map_err(Error::Input)?;
    } else {
        let path = Path::new(&s.target);
        if !path.exists() {
            return Err(Error::Input(format!(
                "{:?} is neither a preset ({}) nor a scenario file",
                s.target,
                PRESETS.join(", ")
            )));
        }
        if s.rho.is_some() || s.n.is_some() || s.family.is_some() || s.measure.is_some() {
            return Err(Error::Input(
                "--rho, --n, --family and --measure apply to presets; set them in the scenario file"
                    .into(),
            ));
        }
        let bytes = read_file(path)?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| Error::Input(format!("{}: not UTF-8", path.display())))?;
        spec =
            parse_scenario(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        sha = Some(sha256_hex(&bytes));
    }
    if let Some(r) = s.reps {
        spec.n_reps = r;
    }
    if let Some(seed) = s.seed {
        spec.seed = seed;
    }
    if let Some(alpha) = s.alpha {
        spec.alpha = alpha;
    }
    Ok((spec, sha))
}

fn study_summary(r: &StudyReport) -> String {
    let mut out = format!(
        "{} ({} replicates, seed {})\n",
        r.scenario, r.n_reps, r.seed
    );
    let _ = writeln!(
        out,
        "{:<15} {:>10} {:>10} {:>9} {:>9} {:>7}",
        "method", "bias", "rmse", "coverage", "power", "failed"
    );
    let pct = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{:.2}%", 100.0 * x));
    for c in &r.cells {
        let _ = writeln!(
            out,
            "{:<15} {:>10.5} {:>10.5} {:>9} {:>9} {:>7}",
            c.method.name(),
            c.bias,
            c.rmse,
            pct(c.coverage),
            pct(c.power),
            c.n_failed
        );
        if let Some(f) = &c.first_failure {
            let _ = writeln!(out, "  first failure: {f}");
        }
    }
    out
}

fn simulate(s: SimulateArgs, pool: &ThreadPool) -> Result<()> {
    let (spec, sha) = scenario_for(&s)?;
    let study = run_study(&spec, pool)?;
    let report = SimulationReport {
        provenance: Provenance::new("simulate", &spec, Some(spec.seed), sha)?,
        report: study,
    };
    if let Some(prefix) = &s.out {
        let with_ext = |ext: &str| {
            let mut p = prefix.clone().into_os_string();
            p.push(ext);
            PathBuf::from(p)
        };
        write_file(&with_ext(".json"), to_json(&report)?.as_bytes())?;
        let mut buf = Vec::new();
        write_study_csv(&report, &mut buf)?;
        write_file(&with_ext(".csv"), &buf)?;
    }
    print(&study_summary(&report.report))
}

#[derive(Serialize)]
struct RocConfig {
    input: String,
    marker: Option<usize>,
    time: Option<usize>,
    points: usize,
}

fn roc(r: RocArgs) -> Result<()> {
    if r.points == 0 {
        return Err(Error::Input("--points must be positive".into()));
    }
    let Loaded { dataset, sha256 } = load(&r.input, None)?;
    let index = |v: usize, n: usize, what: &str| {
        if v == 0 || v > n {
            Err(Error::Input(format!("--{what} {v} out of range 1..={n}")))
        } else {
            Ok(v - 1)
        }
    };
    let markers: Vec<usize> = match r.marker {
        Some(m) => vec![index(m, dataset.n_markers(), "marker")?],
        None => (0..dataset.n_markers()).collect(),
    };
    let time = r
        .time
        .map(|t| index(t, dataset.n_times(), "time"))
        .transpose()?;
    let grid: Vec<f64> = (1..=r.points)
        .map(|i| i as f64 / (r.points + 1) as f64)
        .collect();
    let mut labels = Vec::new();
    let mut columns = Vec::new();
    for &m in &markers {
        let stratum = match time {
            Some(t) => Stratum::at_time(m, t),
            None => Stratum::pooled(m),
        };
        let curve = StratumRoc::from_dataset(&dataset, stratum)?;
        columns.push(
            grid.iter()
                .map(|&u| curve.roc(u))
                .collect::<wauc_core::Result<Vec<_>>>()?,
        );
        labels.push(match time {
            Some(t) => format!("marker{}/time{}", m + 1, t + 1),
            None => format!("marker{}", m + 1),
        });
    }
    let config = RocConfig {
        input: r.input.display().to_string(),
        marker: r.marker,
        time: r.time,
        points: r.points,
    };
    let provenance = Provenance::new("roc", &config, None, Some(sha256))?;
    let mut buf = Vec::new();
    write_roc_csv(&provenance, &labels, &grid, &columns, &mut buf)?;
    match &r.output {
        Some(path) => write_file(path, &buf),
        None => print(&String::from_utf8_lossy(&buf)),
    }
}
