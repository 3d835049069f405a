use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("singular system: the normal-equation matrix is not positive definite")]
    Singular,

    #[error("degenerate weights: every kernel weight underflowed to zero (sigma = {sigma}) with no regularization")]
    DegenerateWeights { sigma: f64 },

    #[error("non-finite weight vector at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("linear solve residual {residual:e} exceeds bound {bound:e}")]
    ResidualCheck { residual: f64, bound: f64 },

    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("{0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical routines (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular
                | Error::DegenerateWeights { .. }
                | Error::NonFinite { .. }
                | Error::ResidualCheck { .. }
        )
    }

    /// True for failures caused by the input data or files.
    pub fn is_data(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Data(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
