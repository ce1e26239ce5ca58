use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value {value} at node ({i}, {j}, {k})")]
    NonFinite { i: usize, j: usize, k: usize, value: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("radius {radius} out of range (0, {max}]")]
    RadiusOutOfRange { radius: f64, max: f64 },

    #[error("stencil needs at least {needed} nodes along axis {axis}, grid has {got}")]
    StencilTooThin { axis: usize, needed: usize, got: usize },

    #[error("chart is not a diffeomorphism: 1 - kappa*z = {margin} at y = ({y1}, {y2}), z = {z}")]
    Diffeomorphism { y1: f64, y2: f64, z: f64, margin: f64 },

    #[error("patch is not in principal-curvature coordinates: {0}")]
    NonOrthogonal(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    LinearSolver { iterations: usize, residual: f64 },

    #[error("invalid Hölder exponent {0}; need 0 < alpha < 1")]
    InvalidAlpha(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config line {line}: {key}: {message}")]
    Config { line: usize, key: String, message: String },

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
