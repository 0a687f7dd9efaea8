//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, analysis, and simulation.
#[derive(Debug, Clone, Error)]
pub enum NiqsError {
    /// Operand shapes do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A composite dimension exceeds the configured maximum.
    #[error("model too large: composite dimension {dim} exceeds maximum {max}")]
    ModelTooLarge { dim: usize, max: usize },

    /// Matrix entries contain NaN or infinity.
    #[error("non-finite entries in {0}")]
    NonFinite(&'static str),

    /// A matrix required to be Hermitian is not, within tolerance.
    #[error("matrix not Hermitian: relative deviation {deviation:.3e} exceeds {tol:.3e}")]
    NotHermitian { deviation: f64, tol: f64 },

    /// An iterative eigenvalue/singular-value sweep failed to converge.
    #[error("Jacobi iteration did not converge after {0} sweeps")]
    NoConvergence(usize),

    /// Orthogonalization hit a vector that is linearly dependent on its
    /// predecessors.
    #[error("vector {0} is linearly dependent on its predecessors")]
    DependentVector(usize),

    /// The assembled operator is not a contraction (singular value above 1).
    #[error("operator is not a contraction: largest singular value {sigma} exceeds 1 + {tol:.3e}")]
    NotAContraction { sigma: f64, tol: f64 },

    /// A matrix required to be unitary is not, within tolerance.
    #[error("matrix not unitary: deviation {deviation:.3e} exceeds {tol:.3e}")]
    NotUnitary { deviation: f64, tol: f64 },

    /// Model description violates a structural invariant.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Probe amplitude budget broken or beta = 0.
    #[error("invalid probe: {0}")]
    InvalidProbe(String),

    /// The probe split alpha vanishes; the projector construction assumes
    /// alpha != 0.
    #[error("alpha is zero; the success projector construction requires a reference component")]
    AlphaZero,

    /// The witness vector chi has no usable component inside the
    /// complementary kernel space.
    #[error("chi lies outside the complement of the kernel space: {0}")]
    ChiOutsideKbar(String),

    /// Reconstruction through the kernel-space basis failed to reproduce the
    /// scattered state.
    #[error("kernel decomposition does not reproduce the scattered state: residual {0:.3e}")]
    DecompositionResidual(f64),

    /// Plan, probe, and model shapes disagree.
    #[error("plan/model mismatch: {0}")]
    PlanModelMismatch(String),

    /// Configuration rejected before running.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, NiqsError>;
