//! Textual forms of weight measures, designs and weighting methods.
//!
//! | kind    | grammar                                            |
//! |---------|----------------------------------------------------|
//! | measure | `auc`, `pauc:u1,u2[:normalized]`, `sens:u0`, `steps:u1=m1,u2=m2,...` |
//! | design  | `pooled`, `pooled:L`, `mrmt:R`, `longitudinal:K`  |
//! | weights | `equal`, `optimal`, `custom:w1,w2,...`            |
//!
//! Every `format_*` output parses back to the same value.

use wauc_core::{Atom, StudyDesign, WeightMeasure, WeightMethod};

fn number(s: &str, what: &str) -> Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| format!("{what}: {s:?} is not a number"))
}

fn count(s: &str, what: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("{what}: {s:?} is not a positive integer")),
    }
}

pub fn parse_measure(s: &str) -> Result<WeightMeasure, String> {
    let s = s.trim();
    let (kind, args) = s.split_once(':').unwrap_or((s, ""));
    let core = |e: wauc_core::Error| e.to_string();
    match kind {
        "auc" if args.is_empty() => Ok(WeightMeasure::FullAuc),
        "pauc" => {
            let (bounds, flag) = match args.split_once(':') {
                Some((b, "normalized")) => (b, true),
                Some((_, other)) => return Err(format!("pauc: unknown flag {other:?}")),
                None => (args, false),
            };
            let (u1, u2) = bounds
                .split_once(',')
                .ok_or_else(|| format!("pauc: expected u1,u2, found {bounds:?}"))?;
            let (u1, u2) = (number(u1, "pauc")?, number(u2, "pauc")?);
            if flag {
                WeightMeasure::partial_normalized(u1, u2).map_err(core)
            } else {
                WeightMeasure::partial(u1, u2).map_err(core)
            }
        }
        "sens" => WeightMeasure::point_mass(number(args, "sens")?).map_err(core),
        "steps" => {
            let atoms = args
                .split(',')
                .map(|atom| {
                    let (u, m) = atom
                        .split_once('=')
                        .ok_or_else(|| format!("steps: expected u=mass, found {atom:?}"))?;
                    Ok(Atom {
                        u: number(u, "steps")?,
                        mass: number(m, "steps")?,
                    })
                })
                .collect::<Result<Vec<_>, String>>()?;
            WeightMeasure::steps(atoms).map_err(core)
        }
        _ => Err(format!(
            "unknown weight measure {s:?} (expected auc, pauc:u1,u2[:normalized], sens:u0 or steps:u=m,...)"
        )),
    }
}

pub fn format_measure(w: &WeightMeasure) -> String {
    match w {
        WeightMeasure::FullAuc => "auc".into(),
        WeightMeasure::PartialAuc {
            lower,
            upper,
            normalized,
        } => {
            let flag = if *normalized { ":normalized" } else { "" };
            format!("pauc:{lower},{upper}{flag}")
        }
        WeightMeasure::PointMass(u) => format!("sens:{u}"),
        WeightMeasure::Steps(atoms) => {
            let body: Vec<String> = atoms
                .iter()
                .map(|a| format!("{}={}", a.u, a.mass))
                .collect();
            format!("steps:{}", body.join(","))
        }
    }
}

/// Parsed `--design`; a bare `pooled` takes its marker count from the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignSpec {
    PooledAll,
    Fixed(StudyDesign),
}

impl DesignSpec {
    pub fn resolve(self, n_markers: usize) -> StudyDesign {
        match self {
            DesignSpec::PooledAll => StudyDesign::Pooled { n_markers },
            DesignSpec::Fixed(d) => d,
        }
    }

    /// Marker and time counts implied by the design, if any.
    pub fn dims(self) -> (Option<usize>, Option<usize>) {
        match self {
            DesignSpec::PooledAll => (None, None),
            DesignSpec::Fixed(StudyDesign::Pooled { n_markers }) => (Some(n_markers), None),
            DesignSpec::Fixed(StudyDesign::MultiReaderMultiTest { n_readers }) => {
                (Some(2 * n_readers), Some(1))
            }
            DesignSpec::Fixed(StudyDesign::Longitudinal { n_times }) => (Some(2), Some(n_times)),
        }
    }
}

pub fn parse_design(s: &str) -> Result<DesignSpec, String> {
    let s = s.trim();
    match s.split_once(':') {
        None if s == "pooled" => Ok(DesignSpec::PooledAll),
        Some(("pooled", n)) => Ok(DesignSpec::Fixed(StudyDesign::Pooled {
            n_markers: count(n, "pooled")?,
        })),
        Some(("mrmt", r)) => Ok(DesignSpec::Fixed(StudyDesign::MultiReaderMultiTest {
            n_readers: count(r, "mrmt")?,
        })),
        Some(("longitudinal", k)) => Ok(DesignSpec::Fixed(StudyDesign::Longitudinal {
            n_times: count(k, "longitudinal")?,
        })),
        _ => Err(format!(
            "unknown design {s:?} (expected pooled, pooled:L, mrmt:R or longitudinal:K)"
        )),
    }
}

pub fn format_design(d: StudyDesign) -> String {
    match d {
        StudyDesign::Pooled { n_markers } => format!("pooled:{n_markers}"),
        StudyDesign::MultiReaderMultiTest { n_readers } => format!("mrmt:{n_readers}"),
        StudyDesign::Longitudinal { n_times } => format!("longitudinal:{n_times}"),
    }
}

/// Parses `--weights`; `ridge` applies to `optimal` only.
pub fn parse_weights(s: &str, ridge: Option<f64>) -> Result<WeightMethod, String> {
    let s = s.trim();
    match s.split_once(':') {
        None if s == "equal" => Ok(WeightMethod::Equal),
        None if s == "optimal" => Ok(WeightMethod::Optimal { ridge }),
        Some(("custom", list)) => list
            .split(',')
            .map(|w| number(w, "custom"))
            .collect::<Result<Vec<_>, _>>()
            .map(WeightMethod::Custom),
        _ => Err(format!(
            "unknown weights {s:?} (expected equal, optimal or custom:w1,w2,...)"
        )),
    }
}

pub fn format_weights(m: &WeightMethod) -> String {
    match m {
        WeightMethod::Equal => "equal".into(),
        WeightMethod::Optimal { .. } => "optimal".into(),
        WeightMethod::Custom(w) => {
            let body: Vec<String> = w.iter().map(f64::to_string).collect();
            format!("custom:{}", body.join(","))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measures_round_trip() {
        for text in [
            "auc",
            "pauc:0,0.6",
            "pauc:0.1,0.3:normalized",
            "sens:0.2",
            "steps:0.1=0.5,0.5=2",
        ] {
            let w = parse_measure(text).unwrap();
            assert_eq!(format_measure(&w), text);
            assert_eq!(parse_measure(&format_measure(&w)).unwrap(), w);
        }
        assert_eq!(
            parse_measure("pauc:0,0.6").unwrap(),
            WeightMeasure::PartialAuc {
                lower: 0.0,
                upper: 0.6,
                normalized: false
            }
        );
    }

    #[test]
    fn measure_errors() {
        for bad in [
            "",
            "AUC",
            "auc:1",
            "pauc:0.6",
            "pauc:0.6,0.2",
            "pauc:0,1:norm",
            "sens:1",
            "sens:x",
            "steps:",
            "steps:0.5",
            "steps:0.5=-1",
        ] {
            assert!(parse_measure(bad).is_err(), "{bad:?} accepted");
        }
    }

    #[test]
    fn designs_and_weights() {
        assert_eq!(parse_design("pooled").unwrap(), DesignSpec::PooledAll);
        for text in ["pooled:3", "mrmt:4", "longitudinal:3"] {
            let DesignSpec::Fixed(d) = parse_design(text).unwrap() else {
                panic!("{text}")
            };
            assert_eq!(format_design(d), text);
        }
        assert_eq!(parse_design("mrmt:2").unwrap().dims(), (Some(4), Some(1)));
        assert!(parse_design("mrmt:0").is_err());
        assert!(parse_design("readers").is_err());
        assert_eq!(
            parse_weights("optimal", Some(0.0)).unwrap(),
            WeightMethod::Optimal { ridge: Some(0.0) }
        );
        let custom = parse_weights("custom:1,2.5", None).unwrap();
        assert_eq!(custom, WeightMethod::Custom(vec![1.0, 2.5]));
        assert_eq!(format_weights(&custom), "custom:1,2.5");
        assert!(parse_weights("custom:", None).is_err());
        assert!(parse_weights("best", None).is_err());
    }
}
