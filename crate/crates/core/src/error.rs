use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("vertex index {index} out of range for {n} points")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("wrong input length: expected {expected}, found {found}")]
    WrongLength { expected: usize, found: usize },

    #[error("squared lengths are not realizable as a Euclidean point set")]
    NotRealizable,

    #[error("point set is degenerate: affine span has dimension below {dim}")]
    Degenerate { dim: usize },

    #[error("alignment anchors do not affinely span R^{dim}")]
    AnchorsDegenerate { dim: usize },

    #[error("alignment anchors are not congruent")]
    AnchorsNotCongruent,

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("dimension {0} not supported (need d >= 2)")]
    UnsupportedDimension(usize),

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("points {0} and {1} coincide")]
    CoincidentPoints(usize, usize),

    #[error("brute-force relation search needs {needed} table entries, budget is {budget}")]
    SearchBudgetExceeded { needed: u128, budget: u128 },

    #[error("lattice reduction failed: {0}")]
    ReductionFailed(String),

    #[error("distinct-values rank test requires the pings-and-triangles ensemble assumption")]
    AssumptionRequired,

    #[error("no candidate base found in data")]
    NoBaseFound,

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),
}
