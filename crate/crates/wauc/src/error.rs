use std::path::PathBuf;

/// Process exit status for input problems: unreadable files, parse and
/// validation failures, inconsistent arguments.
pub const EXIT_INPUT: u8 = 2;
/// Process exit status for numerical failures of a well-formed request.
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// Malformed input; the message names the offending line when there is one.
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] wauc_core::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        use wauc_core::Error as E;
        match self {
            Error::Io { .. } | Error::Input(_) => EXIT_INPUT,
            Error::Core(e) => match e {
                E::DegenerateDensity { .. }
                | E::DegenerateSample(_)
                | E::SingularMatrix
                | E::NotPositiveDefinite
                | E::NegativeVariance(_)
                | E::NonPositiveVariance(_)
                | E::NonFiniteContrast
                | E::GradientMismatch(_) => EXIT_NUMERICAL,
                _ => EXIT_INPUT,
            },
        }
    }
}
