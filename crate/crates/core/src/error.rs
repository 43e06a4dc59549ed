use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid sampler configuration: {0}")]
    Config(String),

    #[error("non-finite gradient at state {state:?}")]
    NonFiniteGradient { state: Vec<f64> },

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("requested {requested} lags but the series has only {available} samples")]
    LagTooLarge { requested: usize, available: usize },

    #[error("series too short: need at least {required} samples, got {got}")]
    TooShort { required: usize, got: usize },

    #[error("degenerate series: {0}")]
    Degenerate(String),

    #[error("collinear basis (smallest covariance eigenvalue / trace = {condition:.3e}); dependent rows: {rows:?}")]
    CollinearBasis { rows: Vec<usize>, condition: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
