use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("size mismatch: expected {expected} values, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("fields live on different domains")]
    SpecMismatch,

    #[error("flattening map is not a diffeomorphism: min dz_rho = {min_dz_rho:.6e} <= margin {margin}")]
    DiffeoViolation { min_dz_rho: f64, margin: f64 },

    #[error("{solver} did not converge in {iterations} iterations (last step {last_step:.3e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        last_step: f64,
    },

    #[error("contraction failure after {iterations} iterations: step ratio {ratio:.3} > 1 three times in a row")]
    ContractionFailure { iterations: usize, ratio: f64 },

    #[error("zero mode must vanish: |value| = {value:.3e} > tol {tol:.1e}")]
    NonzeroMean { value: f64, tol: f64 },

    #[error("data violate the zero-mode compatibility condition: residual {residual:.3e} > tol {tol:.1e}")]
    CompatibilityViolation { residual: f64, tol: f64 },

    #[error("residual of {which} is {residual:.3e}, above tolerance {tol:.1e}")]
    ResidualExceedsTol {
        which: &'static str,
        residual: f64,
        tol: f64,
    },

    #[error("blow-up detected at t = {time}: norm {norm:.3e} exceeds {limit:.3e}")]
    BlowupDetected { time: f64, norm: f64, limit: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("unsupported file version {found} (expected {expected})")]
    VersionMismatch { found: u64, expected: u64 },

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for the failures that mean "the iteration left its contraction
    /// regime", as opposed to bad input.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::ContractionFailure { .. }
                | Error::BlowupDetected { .. }
                | Error::DiffeoViolation { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
