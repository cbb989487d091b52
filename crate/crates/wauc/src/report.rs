//! JSON and CSV reports. Each one carries a [`Provenance`] block with the
//! tool version, the fully resolved configuration, the seed and the SHA-256
//! of the input, so a rerun can be checked against it.

use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wauc_core::simulation::{CellResult, StudyReport};
use wauc_core::{ComparisonResult, CovarianceEstimate, WaucVector};

use crate::error::{Error, Result};

pub const TOOL: &str = "wauc";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    /// Hex digest of the input file; absent for built-in presets.
    pub input_sha256: Option<String>,
}

impl Provenance {
    pub fn new(
        command: &str,
        config: &impl Serialize,
        seed: Option<u64>,
        input_sha256: Option<String>,
    ) -> Result<Self> {
        Ok(Provenance {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            config: serde_json::to_value(config)
                .map_err(|e| Error::Input(format!("serializing configuration: {e}")))?,
            seed,
            input_sha256,
        })
    }

    /// `# key: value` lines for the top of a CSV report.
    pub fn csv_preamble(&self) -> String {
        let mut out = format!(
            "# tool: {} {}\n# command: {}\n",
            self.tool, self.version, self.command
        );
        if let Some(seed) = self.seed {
            out.push_str(&format!("# seed: {seed}\n"));
        }
        if let Some(sha) = &self.input_sha256 {
            out.push_str(&format!("# input_sha256: {sha}\n"));
        }
        out.push_str(&format!("# config: {}\n", self.config));
        out
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub labels: Vec<String>,
    /// Row-major.
    pub sigma: Vec<Vec<f64>>,
    pub sigma_diseased: Vec<Vec<f64>>,
    pub sigma_nondiseased: Vec<Vec<f64>>,
    pub psd_repaired: bool,
}

impl From<&CovarianceEstimate> for CovarianceReport {
    fn from(c: &CovarianceEstimate) -> Self {
        CovarianceReport {
            labels: c.labels.clone(),
            sigma: CovarianceEstimate::rows(&c.sigma),
            sigma_diseased: CovarianceEstimate::rows(&c.sigma1),
            sigma_nondiseased: CovarianceEstimate::rows(&c.sigma2),
            psd_repaired: c.psd_repaired,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub replicates: usize,
    pub redraws: usize,
    pub sigma: Vec<Vec<f64>>,
    /// Bootstrap variance of the weighted difference, when one was tested.
    pub estimate_variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub provenance: Provenance,
    pub wauc: WaucVector,
    pub covariance: Option<CovarianceReport>,
    /// Covariance of the paired differences.
    pub difference_covariance: Option<Vec<Vec<f64>>>,
    pub comparison: Option<ComparisonResult>,
    pub bootstrap: Option<BootstrapReport>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub provenance: Provenance,
    pub comparison: ComparisonResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub provenance: Provenance,
    pub report: StudyReport,
}

pub fn to_json(value: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Input(format!("serializing report: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Input(format!("writing CSV: {e}"))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const STUDY_COLUMNS: [&str; 19] = [
    "scenario",
    "seed",
    "n_reps",
    "alpha",
    "method",
    "n_ok",
    "n_failed",
    "mean_truth",
    "mean_estimate",
    "bias",
    "bias_percent",
    "rmse",
    "mc_variance",
    "mean_variance",
    "coverage",
    "coverage_se",
    "power",
    "power_se",
    "weight_fallbacks",
];

fn study_row(r: &StudyReport, c: &CellResult) -> Vec<String> {
    vec![
        r.scenario.clone(),
        r.seed.to_string(),
        r.n_reps.to_string(),
        r.alpha.to_string(),
        c.method.name().into(),
        c.n_ok.to_string(),
        c.n_failed.to_string(),
        c.mean_truth.to_string(),
        c.mean_estimate.to_string(),
        c.bias.to_string(),
        c.bias_percent.to_string(),
        c.rmse.to_string(),
        c.mc_variance.to_string(),
        opt(c.mean_variance),
        opt(c.coverage),
        opt(c.coverage_se),
        opt(c.power),
        opt(c.power_se),
        c.weight_fallbacks.to_string(),
    ]
}

/// One row per method, after the provenance preamble.
pub fn write_study_csv(report: &SimulationReport, mut out: impl Write) -> Result<()> {
    out.write_all(report.provenance.csv_preamble().as_bytes())
        .map_err(|e| Error::Input(format!("writing CSV: {e}")))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STUDY_COLUMNS).map_err(csv_err)?;
    for c in &report.report.cells {
        w.write_record(study_row(&report.report, c))
            .map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::Input(format!("writing CSV: {e}")))
}

/// wAUC estimates and the covariance matrix, one row per design entry.
pub fn write_analysis_csv(report: &AnalysisReport, mut out: impl Write) -> Result<()> {
    out.write_all(report.provenance.csv_preamble().as_bytes())
        .map_err(|e| Error::Input(format!("writing CSV: {e}")))?;
    let mut w = csv::Writer::from_writer(out);
    let labels = &report.wauc.labels;
    let mut header = vec!["label".to_string(), "wauc".to_string()];
    if report.covariance.is_some() {
        header.extend(labels.iter().map(|l| format!("cov:{l}")));
    }
    w.write_record(&header).map_err(csv_err)?;
    for (i, label) in labels.iter().enumerate() {
        let mut row = vec![label.clone(), report.wauc.values[i].to_string()];
        if let Some(c) = &report.covariance {
            row.extend(c.sigma[i].iter().map(f64::to_string));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::Input(format!("writing CSV: {e}")))
}

/// `u` followed by one ROC column per label.
pub fn write_roc_csv(
    provenance: &Provenance,
    labels: &[String],
    grid: &[f64],
    columns: &[Vec<f64>],
    mut out: impl Write,
) -> Result<()> {
    out.write_all(provenance.csv_preamble().as_bytes())
        .map_err(|e| Error::Input(format!("writing CSV: {e}")))?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["u".to_string()];
    header.extend(labels.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for (i, u) in grid.iter().enumerate() {
        let mut row = vec![u.to_string()];
        row.extend(columns.iter().map(|c| c[i].to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::Input(format!("writing CSV: {e}")))
}
