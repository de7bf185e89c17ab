use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("cannot parse `{input}` as a probability: {reason}")]
    Parse { input: String, reason: String },

    #[error("service activated with an empty queue: state {state:?}")]
    ConstraintViolation { state: Vec<u64> },

    #[error("vector lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("excess state {0:?} is not canonical (minimum component must be 0)")]
    NonCanonical(Vec<i64>),

    #[error("difference coordinates are only defined for d in {{2, 3}}, got d = {0}")]
    UnsupportedDimension(usize),

    #[error("index k = {k} outside 0..={n}")]
    OutOfRange { k: usize, n: usize },

    #[error("input does not sum to one (sum = {0})")]
    NotNormalized(String),

    #[error("work limit exceeded: {what} needs about {required}, limit is {limit}")]
    WorkLimit {
        what: &'static str,
        required: u64,
        limit: u64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Validation failures are caller mistakes; everything else is a runtime
    /// or resource problem. The CLI maps the two groups to different exit codes.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_)
                | Error::Parse { .. }
                | Error::ConstraintViolation { .. }
                | Error::LengthMismatch { .. }
                | Error::NonCanonical(_)
                | Error::UnsupportedDimension(_)
                | Error::OutOfRange { .. }
                | Error::NotNormalized(_)
        )
    }
}
