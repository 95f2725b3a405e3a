use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("two-valued set does not exist for a = {a}, b = {b}: need a + b >= 2*lambda = {threshold}")]
    BelowExistenceThreshold { a: f64, b: f64, threshold: f64 },

    #[error("sigma = {sigma} must lie in [0, {limit}) for this operation")]
    SigmaOutOfRange { sigma: f64, limit: f64 },

    #[error("coincident points at {0}: the Green's function is singular on the diagonal")]
    CoincidentPoints(String),

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error("lattice resolution n = {n} is below the minimum {min}")]
    ResolutionTooSmall { n: usize, min: usize },

    #[error("out of memory while building a lattice with {nodes} nodes")]
    Resource { nodes: usize },

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("circle of radius {eps} around ({x}, {y}) leaves the domain")]
    CircleOutsideDomain { x: f64, y: f64, eps: f64 },

    #[error("regularisation radius {eps} is below {min_mult} lattice spacings ({min})")]
    EpsTooSmall { eps: f64, min_mult: f64, min: f64 },

    #[error("node {0} is not part of the requested component")]
    NotInComponent(usize),

    #[error("point lies on the frontier of the extracted set")]
    OnFrontier,

    #[error("node subset is not connected ({0} pieces)")]
    Disconnected(usize),

    #[error("region is not contained in the admissible evaluation set: {0}")]
    RegionOutsideEvaluation(String),

    #[error("regions overlap or are closer than required: {0}")]
    OverlappingRegions(String),

    #[error("operation requires symmetric levels a = b (got a = {a}, b = {b})")]
    AsymmetricLevels { a: f64, b: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no component to work with: {0}")]
    Degenerate(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error("configuration error in `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
