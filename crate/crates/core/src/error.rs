use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch { context: &'static str, expected: usize, got: usize },
    #[error("unknown preset `{0}` (run `presets` for the list)")]
    UnknownPreset(String),
    #[error("malformed config: {0}")]
    Config(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("convergence is not monotone in Eb/N0 over the search window; boundary candidates (dB): {0:?}")]
    NonMonotone(Vec<f64>),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit status used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::DimensionMismatch { .. }
            | Error::UnknownPreset(_)
            | Error::Config(_) => 2,
            Error::Infeasible(_) | Error::NonMonotone(_) => 3,
            Error::Numerical(_) => 4,
            Error::Io(_) | Error::Csv(_) => 1,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
