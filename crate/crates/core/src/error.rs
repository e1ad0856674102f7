use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("unknown measure `{0}`")]
    UnknownMeasure(String),

    #[error("cannot parse measure spec `{spec}`: {reason}")]
    MeasureSpec { spec: String, reason: String },

    #[error("matrix is rank deficient (rank {rank} < {required})")]
    RankDeficient { rank: usize, required: usize },

    #[error("vector is not in the subspace (residual {residual:e})")]
    NotInSubspace { residual: f64 },

    #[error("measurement vector is not in the range of the matrix (residual {residual:e})")]
    Infeasible { residual: f64 },

    #[error("search budget exhausted before any evaluation")]
    BudgetExhausted,

    #[error("support enumeration of C({n},{k}) exceeds the cap of {cap}")]
    TooManySupports { n: usize, k: usize, cap: u64 },

    #[error("operation `{op}` is not available for measure `{measure}`")]
    Unsupported { op: &'static str, measure: String },

    #[error("no violation witness: {0}")]
    NoWitness(String),

    #[error("matrix parse error at line {line}: {reason}")]
    MatrixParse { line: usize, reason: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name: name.to_string(), reason: reason.into() }
    }
}
