use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid band [{a}, {b}]: need 0 < a < b")]
    InvalidBand { a: f64, b: f64 },

    #[error("sigma is singular at x = {x} (band edge)")]
    SingularArgument { x: f64 },

    #[error("argument {x} outside the domain [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("invalid quadrature configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid integration interval [{lo}, {hi}]")]
    BadInterval { lo: f64, hi: f64 },

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions: \
         estimate {value:e}, error {error:e} > tolerance {tolerance:e}"
    )]
    NonConvergence {
        value: f64,
        error: f64,
        tolerance: f64,
        subdivisions: usize,
    },

    #[error("integrand is not finite at t = {t}")]
    NonFinite { t: f64 },

    #[error("principal-value pole {pole} is not inside ({lo}, {hi})")]
    PoleOnBoundary { pole: f64, lo: f64, hi: f64 },

    #[error("tail integrand does not decay fast enough: {0}")]
    DecayViolation(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("density segment ({lo}, {hi}) overlaps the open band ({a}, {b})")]
    SupportOverlapsBand { lo: f64, hi: f64, a: f64, b: f64 },

    #[error("infeasible density: {0}")]
    Infeasible(String),

    #[error("extension limit at band edge {edge} is unresolved (unbounded density exponent)")]
    Unresolved { edge: f64 },

    #[error("epsilon {epsilon} must lie in (0, {limit})")]
    EpsilonTooLarge { epsilon: f64, limit: f64 },

    #[error("radius {radius} must exceed the upper band edge {b}")]
    InvalidRadius { radius: f64, b: f64 },

    #[error("density document could not be parsed: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
