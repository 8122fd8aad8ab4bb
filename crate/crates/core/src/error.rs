use thiserror::Error;

/// Errors produced across the identification pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A complex root has no conjugate partner within tolerance.
    #[error("conjugacy violated: {0}")]
    Conjugacy(String),

    /// Empty or all-zero polynomial where a nonzero one is required.
    #[error("degenerate polynomial: {0}")]
    Degenerate(String),

    /// A pole lies on or outside the unit circle.
    #[error("unstable system: pole magnitude {0} >= 1")]
    Instability(f64),

    /// The frequency response is singular at an evaluation point.
    #[error("singular frequency response at normalized frequency {0}")]
    SingularResponse(f64),

    #[error("filter design: {0}")]
    Design(String),

    /// The requested enumeration is too large for an exhaustive scan.
    #[error("capacity exceeded: {groups} groups (max {max}); use the genetic-algorithm search instead")]
    Capacity { groups: usize, max: usize },

    #[error("rational fit is rank deficient: {0}")]
    FitDegenerate(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

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
