use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("no principal logarithm: {0}")]
    NoPrincipalLog(String),

    #[error("matrix is not nilpotent (norm of the p-th power {residual:.3e})")]
    NotNilpotent { residual: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },

    #[error("map is not unital and completely positive: {0}")]
    NotUncp(String),

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("support projection is not absorbed (min eigenvalue of tau(p) - p is {min_eig:.3e})")]
    SupportNotAbsorbed { min_eig: f64 },

    #[error("not a state root: {0}")]
    NotAStateRoot(String),

    #[error("state is not faithful (support rank {rank} < {dim})")]
    NotFaithful { rank: usize, dim: usize },

    #[error("order {n} outside the admissible range {range}")]
    OrderOutOfRange { n: usize, range: String },

    #[error("no admissible epsilon found on the dyadic grid")]
    EpsilonNotFound,

    #[error("construction failed: {0}")]
    ConstructionFailed(String),

    #[error("bad rank {r} for dimension {d}")]
    BadRank { d: usize, r: usize },

    #[error("bad shift indices: {0}")]
    BadIndices(String),

    #[error("no feasible order split: {0}")]
    CaseInfeasible(String),

    #[error("map is not idempotent (residual {residual:.3e})")]
    NotIdempotent { residual: f64 },

    #[error("bad grid size {0} (need m >= 2)")]
    BadGrid(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
