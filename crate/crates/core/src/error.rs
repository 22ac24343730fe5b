use thiserror::Error;

/// Errors produced by the survival data model, fitters and CV machinery.
#[derive(Debug, Error)]
pub enum Error {
    /// A dataset invariant does not hold.
    #[error("invalid dataset: {0}")]
    InvalidData(String),

    /// A caller-supplied parameter is outside its valid range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A statistic is undefined on the given input (e.g. no comparable pairs).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// An optimizer or estimator produced a non-finite or unusable value.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Too many independent work units failed.
    #[error("aborted: {failed} of {total} units failed (limit {limit:.0}%)")]
    TooManyFailures { failed: usize, total: usize, limit: f64 },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Coarse category used by front ends to map errors onto exit codes.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidParameter(_) => ErrorCategory::Config,
            Error::InvalidData(_) | Error::Csv(_) | Error::Io(_) | Error::Degenerate(_) => {
                ErrorCategory::Data
            }
            Error::Numerical(_) | Error::TooManyFailures { .. } => ErrorCategory::Numerical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Numerical,
}

pub type Result<T> = std::result::Result<T, Error>;
