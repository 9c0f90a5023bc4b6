use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("curve needs at least {min} nodes, got {got}")]
    TooFewNodes { min: usize, got: usize },

    #[error("curve is not simple: segments {0} and {1} intersect")]
    SelfIntersection(usize, usize),

    #[error("curve is clockwise or degenerate (signed area {0:e})")]
    NotCounterclockwise(f64),

    #[error("degenerate parameterization: metric {g:e} at node {node}")]
    DegenerateMetric { node: usize, g: f64 },

    #[error("coincident nodes {0} and {1}")]
    CoincidentNodes(usize, usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("curve is not arc-length parameterized (relative metric deviation {0:e})")]
    NotArcLength(f64),

    #[error("cumulative arc-length map is not monotone")]
    NonMonotoneArcLength,

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("size mismatch: {0}")]
    Mismatch(String),

    #[error("empty input")]
    Empty,

    #[error("quadrature did not reach tolerance {tol:e} (estimated error {err:e})")]
    QuadratureNotConverged { tol: f64, err: f64 },

    #[error("time step {dt:e} exceeds stability limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },

    #[error("consistency residual {residual:e} exceeds abort threshold {limit:e} at t = {time}")]
    ResidualBlowup { residual: f64, limit: f64, time: f64 },

    #[error("regression is underdetermined: {0}")]
    Underdetermined(String),

    #[error("{path}: {reason}")]
    Io { path: String, reason: String },

    #[error("test function support [{0}, {1}] is not inside the sampled window")]
    SupportOutsideWindow(f64, f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
