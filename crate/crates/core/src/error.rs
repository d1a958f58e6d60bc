use thiserror::Error;

/// Errors produced by the solvers and diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {left} nodes vs {right} nodes")]
    GridMismatch { left: usize, right: usize },

    #[error("incompatible domains: length {left} vs {right}")]
    IncompatibleDomains { left: f64, right: f64 },

    #[error("non-finite value at node {index}")]
    NonFinite { index: usize },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("value {value} outside invertible range [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },

    #[error("integral diverges: {0}")]
    DivergentIntegral(String),

    #[error("CFL condition violated: lambda = {lambda} with theta = {theta}")]
    CflViolation { theta: f64, lambda: f64 },

    #[error("Newton iteration diverged at step {step}: residual {residual:e} after {iterations} iterations")]
    NewtonDivergence {
        step: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("state became non-finite at step {step}")]
    NonfiniteState { step: usize },

    #[error("coefficient evaluation left the representable range at v = {value}")]
    CoefficientBlowup { value: f64 },

    #[error("singular linear system (pivot {pivot:e} at row {row})")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("time {time} outside trajectory span [{start}, {end}]")]
    TimeOutOfRange { time: f64, start: f64, end: f64 },

    #[error("time mismatch: {left} vs {right}")]
    TimeMismatch { left: f64, right: f64 },

    #[error("grid node {index} (x = {x}) is a degenerate point")]
    DegenerateNode { index: usize, x: f64 },

    #[error("model has no {0} transform")]
    NoTransform(&'static str),

    #[error("configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
