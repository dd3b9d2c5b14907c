use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("weights sum to {total}, not exactly 1")]
    NonUnitMass { total: String },
    #[error("distribution has no atom with positive weight")]
    EmptySupport,
    #[error("negative weight {0}")]
    NegativeWeight(String),
    #[error("count law charges the non-integer or negative point {0}")]
    NonIntegerCount(String),
    #[error("{z} is outside the interval [{x}, {y}]")]
    OutOfInterval { x: String, y: String, z: String },
    #[error("laws are not ordered in the increasing convex order")]
    NotIcxOrdered,
    #[error("laws are not ordered in the convex order")]
    NotCxOrdered,
    #[error("law charges the non-integer point {0}")]
    NonIntegerSupport(String),
    #[error("no admissible triple at step {step}: {detail}")]
    InternalOrderViolation { step: usize, detail: String },
    #[error("threshold construction produced an invalid law: {0}")]
    ConstructionFailed(String),
    #[error("jump law charges the negative point {0}")]
    NegativeJumpSupport(String),
    #[error("decomposition atom ({0}) is not a triple of nonnegative integers")]
    NonIntegerDecomposition(String),
    #[error("negative time {0}")]
    NegativeTime(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("value {0} is not in the support of the reference law")]
    ValueOutsideSupport(f64),
    #[error("sample is empty")]
    EmptySample,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
