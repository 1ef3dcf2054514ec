use thiserror::Error;

/// Failures raised by the simulation engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("expectation value has imaginary residue {imag:e}; operator is not Hermitian")]
    NonHermitianResidue { imag: f64 },

    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("Hermitian eigensolver did not converge (dimension {dim})")]
    ConvergenceFailure { dim: usize },

    #[error(
        "Fock state with {photons} photons does not fit in a ladder truncated at n_max = {n_max}"
    )]
    TruncationTooSmall { photons: usize, n_max: usize },

    #[error("coherent state tail beyond n_max is {tail:e}, exceeding the allowed 1e-8")]
    TailTooLarge { tail: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("diabatic tracking ambiguous at g = {g}: best overlap {overlap:.4} below floor; refine the grid")]
    TrackingAmbiguity { g: f64, overlap: f64 },

    #[error("ODE solver diverged at t = {t} (step {step:e})")]
    SolverDivergence { t: f64, step: f64 },

    #[error("density matrix lost positivity at t = {t}: min eigenvalue below {bound:e}")]
    PositivityBreach { t: f64, bound: f64 },

    #[error("energy series is flat; nothing was transferred")]
    FlatSeries,

    #[error("no jump in p_max exceeds the detection threshold")]
    NoJumpFound,
}

pub type Result<T> = std::result::Result<T, Error>;
