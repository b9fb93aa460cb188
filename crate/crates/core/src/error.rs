use thiserror::Error;

/// Errors raised by the pipeline stages and the file readers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point index {index} out of range for a space of {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("malformed space: {0}")]
    MalformedSpace(String),

    #[error("metric validation failed: {0}")]
    Validation(String),

    #[error("resolution insufficient: R0 = {r0} does not exceed the sampling floor {r_floor}")]
    ResolutionInsufficient { r0: f64, r_floor: f64 },

    #[error("cover multiplicity {multiplicity} at witness point {point} exceeds the cap {cap}")]
    MultiplicityCap {
        point: usize,
        multiplicity: usize,
        cap: usize,
    },

    #[error("not downward closed: face {face:?} of simplex {simplex:?} is missing")]
    NotDownwardClosed { simplex: Vec<usize>, face: Vec<usize> },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("missing pipeline stage: {0}")]
    MissingStage(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
