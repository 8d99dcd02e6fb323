use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("eigensolver failed to converge")]
    NoConvergence,
    #[error("function undefined at eigenvalue {eigenvalue}")]
    DomainError { eigenvalue: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension {dim} exceeds configured limit {limit}")]
    SizeOverflow { dim: usize, limit: usize },
    #[error("operator is not Hermitian (relative residual {residual:e})")]
    NotHermitian { residual: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("state is not invariant under the dynamics: ||[H, rho]|| = {commutator_norm:e}")]
    NotInvariant { commutator_norm: f64 },
    #[error("operators expected to commute do not: residual {residual:e}")]
    NonCommuting { residual: f64 },
    #[error("perturbation does not commute with the Hamiltonian: ||[H, V]|| = {commutator_norm:e}")]
    NonCommutingPerturbation { commutator_norm: f64 },
    #[error("real subspace is not standard: smallest principal angle {min_angle:e}")]
    NotStandard { min_angle: f64 },
    #[error("positive spectral subspace of log Delta is empty while log Delta is nonzero")]
    DegenerateSpectrum,
    #[error("exponent {0} outside the open interval (0, 1/2)")]
    InvalidExponent(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
