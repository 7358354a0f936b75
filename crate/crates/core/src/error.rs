use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is not square: expected {expected} columns, row {row} has {found}")]
    NotSquare {
        expected: usize,
        row: usize,
        found: usize,
    },
    #[error("matrix is empty")]
    EmptyMatrix,
    #[error("dilation matrix is singular")]
    SingularMatrix,
    #[error("dilation matrix is not expanding: eigenvalue of modulus {modulus}")]
    NotExpanding { modulus: f64 },
    #[error("integer overflow while {0}")]
    Overflow(&'static str),
    #[error("digit enumeration found {found} points, expected {expected}")]
    InternalCountMismatch { expected: usize, found: usize },
    #[error("eigenvalue moduli {a} and {b} are too close to cluster reliably")]
    AmbiguousClustering { a: f64, b: f64 },
    #[error("digit set is invalid: {0}")]
    InvalidDigits(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("support set computation produced an empty set")]
    EmptyResult,
    #[error("bounding ball would contain about {points} lattice points (cap {cap})")]
    BoundOverflow { points: f64, cap: usize },
    #[error("constraint data is not rational: {0}")]
    IrrationalConstraint(String),
    #[error("invalid zero constraint: {0}")]
    InvalidConstraint(String),
    #[error("mask is invalid: {0}")]
    InvalidMask(String),
    #[error("transition image leaves the support set at index {index:?}")]
    SupportEscape { index: Vec<i64> },
    #[error("subspace{} is not invariant: relative residual {residual:e}", label.as_ref().map(|l| format!(" '{l}'")).unwrap_or_default())]
    NotInvariant {
        residual: f64,
        label: Option<String>,
    },
    #[error("face has dimension zero")]
    EmptyFace,
    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("projected support size {projected} exceeds cap {cap}")]
    SupportCap { projected: usize, cap: usize },
    #[error("chosen nodes give a vanishing normalization; choose nodes of mixed parity")]
    ParityDegenerate,
    #[error("no integer point k satisfies (2v, k) = {target}")]
    NoDiophantineSolution { target: i64 },
    #[error("brute-force search too large: order {order}, box side {side}")]
    BoxTooLarge { order: usize, side: i64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
