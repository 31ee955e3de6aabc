use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported anchor cardinality {p} for {method} anchors")]
    UnsupportedCardinality { p: usize, method: &'static str },

    #[error("anchors {0} and {1} coincide")]
    DegenerateSet(usize, usize),

    #[error("negative input {value} at row {row}, column {column}; normalize the data first")]
    NegativeInput { row: usize, column: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("at least two classes are required, found {0}")]
    SingleClass(usize),

    #[error("covariance scale must be positive, got {0}")]
    InvalidScale(f64),

    #[error("covariance matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("target generalized overlap {target} unreachable: {reason}")]
    TargetUnreachable { target: f64, reason: String },

    #[error("invalid simulation spec: {0}")]
    InvalidSpec(String),

    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse { row: usize, column: String, message: String },

    #[error("missing column '{0}'")]
    MissingColumn(String),

    #[error("need at least 3 numeric feature columns, found {0}")]
    TooFewFeatures(usize),

    #[error("HTML template not found: {0}")]
    TemplateMissing(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures in numerical work or calibration, as opposed to
    /// bad user input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NotPositiveDefinite | Error::TargetUnreachable { .. } | Error::DegenerateSet(..))
    }
}
