use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The element lies in the radical of the algebra (`z1 + i z2 = 0`).
    #[error("element is not invertible (|z1 + i z2| = {modulus:e})")]
    NonInvertible { modulus: f64 },

    #[error("grid too small: need at least {required} points per axis, got {actual}")]
    GridTooSmall { required: usize, actual: usize },

    #[error("configuration error: {0}")]
    Config(String),

    /// A corner exponent pair violates the admissibility conditions on (alpha, beta).
    #[error("exponent out of range: {0}")]
    ExponentOutOfRange(String),

    /// The conformal map produced a vanishing difference quotient.
    #[error("map violation: {0}")]
    MapViolation(String),

    #[error("evaluation point {angle} coincides with a corner")]
    NodeOnCorner { angle: f64 },

    #[error("near-diagonal refinement did not stabilise (change {change:e}, tolerance {tolerance:e})")]
    SingularityUnresolved { change: f64, tolerance: f64 },

    #[error("linear system is numerically singular (condition estimate {condition:e})")]
    SingularSystem { condition: f64 },

    #[error("boundary data grows faster than the declared corner exponent near corner {corner}")]
    DataSingularAtCorner { corner: usize },

    #[error("integration path leaves the domain at {0}")]
    PathExitsDomain(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
