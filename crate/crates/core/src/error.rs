use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("matrix data of length {len} is not square for dimension {dim}")]
    NotSquare { dim: usize, len: usize },

    #[error("matrix dimension {dim} exceeds the supported maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("trace {trace} differs from 1")]
    TraceViolation { trace: f64 },

    #[error("matrix has negative eigenvalue {min_eigenvalue:.3e}")]
    Negativity { min_eigenvalue: f64 },

    #[error("qubit count {0} outside the supported range 1..=12")]
    InvalidQubitCount(usize),

    #[error("qubit {} out of range for {n} qubits", .qubit + 1)]
    SubsetOutOfRange { qubit: usize, n: usize },

    #[error("empty qubit subset")]
    EmptySubset,

    #[error("qubit {} listed twice in one subset", .0 + 1)]
    DuplicateQubit(usize),

    #[error("support of {pauli} is not contained in the subset")]
    SupportNotContained { pauli: String },

    #[error("invalid Pauli string {0:?}")]
    InvalidPauli(String),

    #[error(
        "marginals {} and {} disagree on {pauli} by {deviation:.3e}",
        .first + 1,
        .second + 1
    )]
    OverlapMismatch {
        first: usize,
        second: usize,
        pauli: String,
        deviation: f64,
    },

    #[error("layout does not match the Pauli basis")]
    LayoutMismatch,

    #[error("term {} has spectrum [{min}, {max}] outside [0, 1]", .term + 1)]
    SpectrumOutOfRange { term: usize, min: f64, max: f64 },

    #[error("invalid thresholds: a = {a}, b = {b}")]
    InvalidThresholds { a: f64, b: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cut normal is zero")]
    ZeroNormal,

    #[error("empty point set")]
    EmptyPointSet,

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
