use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("lattice too small: {0}")]
    LatticeTooSmall(String),

    #[error("invalid exponent p = {0} (need p >= 1 or p = inf)")]
    InvalidExponent(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("multiplier is not finite at {0:?}")]
    NonFinite(Vec<f64>),

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error("mesh too coarse: {0}")]
    MeshTooCoarse(String),

    #[error("infeasible wavelet system: {0}")]
    InfeasibleWavelet(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("zero-norm input pair at index {0}")]
    ZeroNormPair(usize),

    #[error("decay bound violated: {0}")]
    BoundViolation(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
