use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("matrix is not a rotation: orthogonality error {error:.3e}, det {det:.6}")]
    NotRotation { error: f64, det: f64 },

    #[error("bilinear form is degenerate for n = {0}")]
    DegenerateForm(usize),

    #[error("singular inertia operator: eigenvalue pair sum {pair_sum:.3e} is not positive")]
    SingularInertia { pair_sum: f64 },

    #[error("non-finite value encountered at step {step} (t = {time})")]
    Divergence { step: usize, time: f64 },

    #[error("ill-conditioned sampling system (condition number {0:.3e})")]
    IllConditioned(f64),

    #[error("shock forms at t = {breaking_time}; requested t = {time}")]
    Shock { time: f64, breaking_time: f64 },

    #[error("flow map is no longer a diffeomorphism at t = {time}: min phi_x = {min_phi_x:.3e}")]
    DiffeoLoss { time: f64, min_phi_x: f64 },

    #[error("unsupported metric order k = {0} (supported: 0..=3)")]
    UnsupportedOrder(usize),

    #[error("grid size mismatch: {0} vs {1}")]
    GridMismatch(usize, usize),

    #[error("invalid grid size {0}: must be a power of two >= 16")]
    InvalidGrid(usize),

    #[error("inconsistent flow state: |v - u o phi| = {0:.3e}")]
    InconsistentState(f64),

    #[error("geodesic does not reach t = 1: {0}")]
    OutOfDomain(Box<Error>),

    #[error("non-finite input")]
    NonFinite,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Attaches the step index to a [`Error::Divergence`]; other variants pass through.
    pub fn at_step(self, step: usize) -> Self {
        match self {
            Error::Divergence { time, .. } => Error::Divergence { step, time },
            other => other,
        }
    }
}
