use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    InvalidInput { field: &'static str, reason: String },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("observation {value} lies outside the grid span [{lo}, {hi}]")]
    OutsideGrid { value: f64, lo: f64, hi: f64 },

    #[error("density has {modes} mode(s), at least two are required")]
    NotBimodal { modes: usize },

    #[error("unsupported method: {0}")]
    UnsupportedMethod(String),

    #[error("bootstrap interval unreliable: {failures} of {resamples} replicates failed")]
    CiUnreliable { failures: usize, resamples: usize },

    #[error("solver did not verify a mode-count transition: {0}")]
    SolverFailure(String),

    #[error("test inconclusive: {0}")]
    Inconclusive(String),

    #[error("cannot access {path}: {reason}")]
    Read { path: String, reason: String },

    #[error("{}", match line { Some(l) => format!("parse error at line {l}: {reason}"), None => format!("parse error: {reason}") })]
    Parse { line: Option<usize>, reason: String },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by the data rather than by the solver or a test.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput { .. }
                | Error::DegenerateSample(_)
                | Error::OutsideGrid { .. }
                | Error::Read { .. }
                | Error::Parse { .. }
                | Error::NotBimodal { .. }
        )
    }
}
