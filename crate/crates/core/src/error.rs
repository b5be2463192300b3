use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("coefficient at position {pos} is not an integer; defining polynomials must lie in Z[x1..xn]")]
    NonIntegerCoefficient { pos: usize },
    #[error("variable count mismatch: expected {expected}, found {found}")]
    VarCountMismatch { expected: usize, found: usize },
    #[error("polynomial of degree {degree} exceeds bound {bound}")]
    DegreeTooHigh { degree: u32, bound: u32 },
    #[error("all generators are zero")]
    ZeroIdeal,
    #[error("input is not homogeneous of a common degree")]
    NotHomogeneous,
    #[error("vector must have at least one entry")]
    EmptyVector,
    #[error("projective point cannot have all coordinates zero")]
    ZeroProjective,
    #[error("polynomial P{0} has a non-integer coefficient; defining polynomials must lie in Z[x1..xn]")]
    NonIntegralSystem(usize),
    #[error("system is constant (degree 0)")]
    ConstantSystem,
    #[error("image of {0} under F* vanishes identically")]
    ImageVanishes(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate regression: need at least 3 levels, got {0}")]
    DegenerateRegression(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
