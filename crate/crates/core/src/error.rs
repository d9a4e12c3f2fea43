use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} must be a power of two and at least 4")]
    GridSize(usize),

    #[error("truncation {n} exceeds the Nyquist limit of a {m}-node grid")]
    Nyquist { n: usize, m: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },

    #[error("non-finite coefficient at index {0}")]
    NonFiniteCoeff(usize),

    #[error("non-finite integrand value at node {node}")]
    NonFinite { node: usize },

    #[error("weighted norm overflowed")]
    Overflow,

    #[error("invalid parameter: {0}")]
    Invalid(String),

    #[error("radius is not positive at x = {x} (r = {r})")]
    NonPositiveRadius { x: f64, r: f64 },

    #[error("sheets too close: eps * max radius = {reach} but must stay below d - 1/2 = {limit}")]
    SheetsTouch { reach: f64, limit: f64 },

    #[error("the rescaled velocity is singular at eps = 0; use the residual functionals instead")]
    ZeroEps,

    #[error("singular block at mode {j} (det = {det:e})")]
    SingularBlock { j: usize, det: f64 },

    #[error("speed closure is degenerate (W coefficient {0:e})")]
    DegenerateClosure(f64),

    #[error("Newton did not converge in {iterations} iterations; residual history {history:?}")]
    NonConvergence { iterations: usize, history: Vec<f64> },

    #[error("singular Jacobian (condition estimate {0:e})")]
    SingularJacobian(f64),

    #[error("points {i} and {k} coincide")]
    Coincident { i: usize, k: usize },

    #[error("a point system needs at least two points, got {0}")]
    TooFewPoints(usize),

    #[error("non-finite position at t = {t}")]
    BlowUp { t: f64 },

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
