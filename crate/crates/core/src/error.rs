use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown root system family `{0}`")]
    UnknownFamily(String),

    #[error("root system {family} has {expected} multiplicity orbit(s), got {got} value(s)")]
    MultiplicityCount {
        family: String,
        expected: usize,
        got: usize,
    },

    #[error("multiplicities must be nonnegative, got {0}")]
    NegativeMultiplicity(String),

    #[error("invalid rank {rank} for family {family}")]
    InvalidRank { family: String, rank: usize },

    #[error("could not parse `{0}` as a rational number")]
    ParseRational(String),

    #[error("group closure exceeded {max_order} elements; the root system is not finite")]
    GroupTooLarge { max_order: usize },

    #[error("point lies on the reflection hyperplane of root {root:?}")]
    SingularPoint { root: Vec<f64> },

    #[error("root system {0} has irrational roots; exact arithmetic is unavailable")]
    NonRationalRoot(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invariant breach: {0}")]
    InvariantBreach(String),

    #[error("unsupported sphere dimension {0}")]
    UnsupportedDimension(usize),

    #[error("integrand is not finite at node {node:?}")]
    NonFinite { node: Vec<f64> },

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("incompatible domain and root system: {0}")]
    IncompatibleDomain(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("gradient does not match finite differences at {point:?} (relative error {error:e})")]
    GradientMismatch { point: Vec<f64>, error: f64 },

    #[error("closed-form and quadrature quotients disagree at epsilon={epsilon}: {oracle} vs {quadrature}")]
    OracleMismatch {
        epsilon: f64,
        oracle: f64,
        quadrature: f64,
    },

    #[error("no closed form available: {0}")]
    NoClosedForm(String),

    #[error("unknown {kind} `{name}`")]
    UnknownStrategy { kind: &'static str, name: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
