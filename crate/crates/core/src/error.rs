use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong while building operators, states or measures.
///
/// The variants are grouped by [`ErrorClass`] so front ends can map them to
/// exit codes without matching on every case.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("q must be non-zero")]
    ZeroQ,

    #[error("weight w_{index} is not positive and finite ({value})")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("weight w_{index} requested beyond the materialized horizon {horizon}")]
    WeightBeyondHorizon { index: usize, horizon: usize },

    #[error("unknown {registry} '{name}' (known: {known})")]
    UnknownStrategy {
        registry: &'static str,
        name: String,
        known: String,
    },

    #[error("exponent overflow: input too large")]
    ExponentOverflow,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{series} diverges at |lambda| = {modulus}; lambda lies outside the phase space")]
    OutsidePhaseSpace { series: &'static str, modulus: f64 },

    #[error("tolerance {tol:e} unreachable within {max_terms} terms")]
    ToleranceUnreachable { tol: f64, max_terms: usize },

    #[error("truncation window of dimension {dim} too small; need at least {needed}")]
    WindowTooSmall { dim: usize, needed: usize },

    #[error("Hankel matrix of the moments is not positive definite at order {order}; no positive measure")]
    IndefiniteHankel { order: usize },

    #[error("quadrature order {requested} too high for double precision; largest achievable order is {achievable}")]
    OrderTooHigh { requested: usize, achievable: usize },

    #[error("quadrature too coarse: {what} needs {needed}, have {have}")]
    InsufficientQuadrature {
        what: &'static str,
        needed: usize,
        have: usize,
    },

    #[error("io error: {0}")]
    Io(String),
}

/// Coarse grouping used by the command line to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    OutOfDomain,
    Conditioning,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::OutsidePhaseSpace { .. } => ErrorClass::OutOfDomain,
            Error::ToleranceUnreachable { .. }
            | Error::IndefiniteHankel { .. }
            | Error::OrderTooHigh { .. }
            | Error::InsufficientQuadrature { .. } => ErrorClass::Conditioning,
            _ => ErrorClass::Config,
        }
    }
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
