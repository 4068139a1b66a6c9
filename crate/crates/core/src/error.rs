use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("zero matrix has no singular data")]
    ZeroMatrix,
    #[error("linear terms are infeasible: {0}")]
    InfeasibleLinearTerms(String),
    #[error("invalid algorithm spec: {0}")]
    InvalidSpec(String),
    #[error("splitting form undefined: {0}")]
    UndefinedSplitting(String),
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("history length {found} does not match step count {expected}")]
    HistoryLength { expected: usize, found: usize },
    #[error("polynomial degree {0} not supported by this test")]
    UnsupportedDegree(usize),
    #[error("leading coefficient must be nonzero")]
    DegenerateLeadingCoefficient,
    #[error("parameter grid is empty")]
    EmptyGrid,
    #[error("no stable point on the sampled box at radius {0}")]
    InitialRegionEmpty(f64),
    #[error("bisection bracket failure: {0}")]
    BracketingFailure(String),
    #[error("matrix parse error: {0}")]
    ParseMatrix(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
