use thiserror::Error;

/// Errors raised by the library. Model invariant violations are *not* errors:
/// they are reported as data by [`crate::model::validate_model`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("LP solver failure: {0}")]
    SolverFailure(String),

    #[error("LP over epochs {t0}..{horizon} is {status}")]
    RelaxationStatus {
        t0: usize,
        horizon: usize,
        status: String,
    },

    #[error("matrix is rank deficient: rank {rank} < {rows} rows")]
    RankDeficient { rank: usize, rows: usize },

    #[error("unsupported model: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid preset `{0}`")]
    Preset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
