use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what}: value {value} outside {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("trace {trace} differs from one")]
    NotNormalized { trace: f64 },

    #[error("operator is not a projector (deviation {deviation:e})")]
    NotProjector { deviation: f64 },

    #[error("Kraus operators are not trace preserving (residual {residual:e})")]
    Completeness { residual: f64 },

    #[error("matrix is not an isometry (residual {residual:e})")]
    NotIsometry { residual: f64 },

    #[error("empty family")]
    EmptyFamily,

    #[error("vector has zero norm")]
    ZeroVector,

    #[error("code dimension {requested} exceeds rank {rank} of the input state")]
    CodeTooLarge { requested: usize, rank: usize },

    #[error("degenerate code (seed {seed}): Gram operator rank {rank} < {requested}")]
    DegenerateCode {
        seed: u64,
        rank: usize,
        requested: usize,
    },

    #[error("moment generating function diverges: t*a/D = {ratio} >= 1")]
    Divergence { ratio: f64 },

    #[error("intractable size: {what} = {size} exceeds cap {cap}")]
    Intractable {
        what: &'static str,
        size: f64,
        cap: f64,
    },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
