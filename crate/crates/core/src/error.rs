use thiserror::Error;

/// Errors raised by envelope algebra, sampling and verification.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("moment order p = {p} is outside the admissible domain ({reason})")]
    Domain { p: f64, reason: &'static str },

    #[error("non-finite argument: {0}")]
    NonFinite(&'static str),

    #[error("empty grid")]
    EmptyGrid,

    #[error("grid point p = {p} lies outside the envelope support (upper = {upper})")]
    GridOutsideSupport { p: f64, upper: f64 },

    #[error("moment of order {p} is infinite (moment boundary {boundary})")]
    InfiniteMoment { p: f64, boundary: f64 },

    #[error("moment integral diverges at p = {p}")]
    DivergentIntegral { p: f64 },

    #[error("combined exponent r = {r} must exceed 1 (1/r = sum of 1/r_m)")]
    CombinedExponent { r: f64 },

    #[error("invalid index tuple: {0}")]
    InvalidIndex(String),

    #[error("invalid coefficient tensor: {0}")]
    InvalidTensor(String),

    #[error("missing sigma for cell (i = {i}, m = {m})")]
    MissingSigma { i: usize, m: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported model: {0}")]
    Unsupported(String),

    #[error("state space of {states} outcomes exceeds the enumeration limit {limit}")]
    StateSpaceTooLarge { states: f64, limit: u64 },

    #[error("support exceeded: bound is infinite at p = {p} (support upper = {upper})")]
    SupportExceeded { p: f64, upper: f64 },

    #[error("too few replications: {got} < {min}")]
    TooFewReplications { got: usize, min: usize },

    #[error("input has zero or infinite variance (factor m = {m})")]
    DegenerateVariance { m: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
