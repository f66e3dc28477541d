use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix too large to exponentiate (1-norm {0:e})")]
    MatrixTooLarge(f64),
    #[error("matrix is not Hermitian: ‖S − S†‖ = {residual:e} exceeds {bound:e}")]
    NotHermitian { residual: f64, bound: f64 },
    #[error("eigensolver did not converge")]
    NoConvergence,
    #[error("matrix is singular")]
    Singular,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("quadrature order must be at least 1")]
    EmptyQuadrature,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("cutoff {0} exceeds the supported maximum of {max}", max = crate::model::MAX_CUTOFF)]
    CutoffTooLarge(usize),
    #[error(
        "θ − λ = {offset} rad is not a multiple of π/2; choose θ = λ + kπ (integer branch) \
         or θ = λ + π/2 + kπ (half-integer branch)"
    )]
    BranchViolation { offset: f64 },
    #[error("metric lost positivity — increase N or decrease |z| (min eigenvalue {0:e})")]
    MetricNotPositive(f64),
    #[error("state has zero norm")]
    ZeroState,
    #[error("time {0} outside the supported range |t| < 1e4")]
    TimeOutOfRange(f64),
    #[error("variance {0:e} is negative beyond tolerance; truncation error dominates")]
    NegativeVariance(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
