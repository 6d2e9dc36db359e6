use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("qubit count mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("invalid pauli string {0:?}")]
    InvalidPauli(String),

    #[error("invalid bit string {0:?}")]
    InvalidBits(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parameter count mismatch: expected {expected}, got {actual}")]
    ParamMismatch { expected: usize, actual: usize },

    #[error("missing samples for term {0}")]
    MissingSamples(String),

    #[error("degenerate denominator: the reweighted norm estimate is zero")]
    DegenerateDenominator,

    #[error("eigensolver did not converge (residual {residual:.3e})")]
    NoConvergence { residual: f64 },

    #[error("{context}: {detail}")]
    Json { context: String, detail: serde_json::Error },

    #[error("{context}: {detail}")]
    Io { context: String, detail: std::io::Error },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { context: context.into(), detail: source }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json { context: context.into(), detail: source }
    }
}
