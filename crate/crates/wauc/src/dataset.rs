//! Long-format CSV with one measurement per row:
//!
//! ```text
//! subject_id,status,marker,time,replicate,value
//! p01,D,1,1,1,0.82
//! p01,D,1,1,2,1.07
//! c07,ND,1,1,1,-0.31
//! ```
//!
//! `status` is `D` or `ND`; `marker`, `time` and `replicate` are 1-based.
//! Subjects keep their order of first appearance and replicates are ordered
//! by index within each cell, so writing a dataset and reading it back
//! yields the same [`MarkerDataset`].

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use wauc_core::{MarkerDataset, Status, SubjectRecord};

use crate::error::{Error, Result};

const SHOWN_VIOLATIONS: usize = 5;

pub const HEADER: [&str; 6] = [
    "subject_id",
    "status",
    "marker",
    "time",
    "replicate",
    "value",
];

/// Marker and time counts a study design expects; markers or times beyond
/// them are rejected, and missing ones show up as empty cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Dims {
    pub n_markers: Option<usize>,
    pub n_times: Option<usize>,
}

struct Pending {
    record: SubjectRecord,
    /// (marker, time) -> (replicate, value), both 0-based.
    cells: BTreeMap<(usize, usize), BTreeMap<usize, f64>>,
}

fn status_token(s: &str) -> Option<Status> {
    match s {
        "D" => Some(Status::Diseased),
        "ND" => Some(Status::NonDiseased),
        _ => None,
    }
}

fn token(status: Status) -> &'static str {
    match status {
        Status::Diseased => "D",
        Status::NonDiseased => "ND",
    }
}

fn index(field: &str, name: &str, line: u64, limit: Option<usize>) -> Result<usize> {
    let v: usize = field.parse().map_err(|_| {
        Error::Input(format!(
            "line {line}: {name} {field:?} is not a positive integer"
        ))
    })?;
    if v == 0 {
        return Err(Error::Input(format!(
            "line {line}: {name} indices start at 1"
        )));
    }
    if let Some(max) = limit.filter(|&max| v > max) {
        return Err(Error::Input(format!(
            "line {line}: {name} {v} out of range (design has {max})"
        )));
    }
    Ok(v - 1)
}

pub fn read_dataset(input: impl Read, dims: Dims) -> Result<MarkerDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let csv_error = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line());
        Error::Input(format!("line {line}: {e}"))
    };
    let header = reader.headers().map_err(csv_error)?.clone();
    if header.iter().ne(HEADER) {
        return Err(Error::Input(format!(
            "line 1: expected header {:?}, found {:?}",
            HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut groups: [Vec<Pending>; 2] = [Vec::new(), Vec::new()];
    let mut seen: HashMap<String, (Status, usize)> = HashMap::new();
    let (mut max_marker, mut max_time) = (0, 0);
    for row in reader.records() {
        let row = row.map_err(csv_error)?;
        let line = row.position().map_or(0, |p| p.line());
        let status = status_token(&row[1]).ok_or_else(|| {
            Error::Input(format!(
                "line {line}: unknown status token {:?} (expected D or ND)",
                &row[1]
            ))
        })?;
        let marker = index(&row[2], "marker", line, dims.n_markers)?;
        let time = index(&row[3], "time", line, dims.n_times)?;
        let replicate = index(&row[4], "replicate", line, None)?;
        let value: f64 = row[5].parse().map_err(|_| {
            Error::Input(format!("line {line}: value {:?} is not a number", &row[5]))
        })?;
        if !value.is_finite() {
            return Err(Error::Input(format!(
                "line {line}: non-finite value {:?}",
                &row[5]
            )));
        }
        let id = &row[0];
        if id.is_empty() {
            return Err(Error::Input(format!("line {line}: empty subject_id")));
        }
        let group = &mut groups[usize::from(status == Status::NonDiseased)];
        let slot = match seen.get(id) {
            Some(&(s, _)) if s != status => {
                return Err(Error::Input(format!(
                    "line {line}: subject {id:?} listed as both {} and {}",
                    token(s),
                    token(status)
                )))
            }
            Some(&(_, slot)) => slot,
            None => {
                seen.insert(id.to_string(), (status, group.len()));
                group.push(Pending {
                    record: SubjectRecord::new(id),
                    cells: BTreeMap::new(),
                });
                group.len() - 1
            }
        };
        let cell = group[slot].cells.entry((marker, time)).or_default();
        if cell.insert(replicate, value).is_some() {
            return Err(Error::Input(format!(
                "line {line}: duplicate replicate {} for subject {id:?} marker {} time {}",
                replicate + 1,
                marker + 1,
                time + 1
            )));
        }
        max_marker = max_marker.max(marker + 1);
        max_time = max_time.max(time + 1);
    }
    if seen.is_empty() {
        return Err(Error::Input("no measurements after the header".into()));
    }
    let [d, nd] = groups.map(|g| {
        g.into_iter()
            .map(|p| {
                p.cells.into_iter().fold(p.record, |rec, ((m, t), values)| {
                    rec.with_cell(m, t, values.into_values())
                })
            })
            .collect::<Vec<_>>()
    });
    let ds = MarkerDataset::new(
        dims.n_markers.unwrap_or(max_marker),
        dims.n_times.unwrap_or(max_time),
        d,
        nd,
    );
    let report = ds.validate();
    if !report.is_clean() {
        let v = &report.violations;
        let shown: Vec<String> = v
            .iter()
            .take(SHOWN_VIOLATIONS)
            .map(|x| x.to_string())
            .collect();
        let mut msg = format!("invalid dataset: {}", shown.join("; "));
        if v.len() > SHOWN_VIOLATIONS {
            msg.push_str(&format!(" (and {} more)", v.len() - SHOWN_VIOLATIONS));
        }
        return Err(Error::Input(msg));
    }
    Ok(ds)
}

/// Writes every measurement, diseased subjects first.
pub fn write_dataset(ds: &MarkerDataset, output: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(output);
    let to_input = |e: csv::Error| Error::Input(format!("writing CSV: {e}"));
    w.write_record(HEADER).map_err(to_input)?;
    for status in [Status::Diseased, Status::NonDiseased] {
        for s in ds.group(status) {
            for (key, values) in s.cells() {
                for (r, v) in values.iter().enumerate() {
                    w.write_record([
                        s.subject_id.as_str(),
                        token(status),
                        &(key.marker + 1).to_string(),
                        &(key.time + 1).to_string(),
                        &(r + 1).to_string(),
                        &v.to_string(),
                    ])
                    .map_err(to_input)?;
                }
            }
        }
    }
    w.flush()
        .map_err(|e| Error::Input(format!("writing CSV: {e}")))
}
