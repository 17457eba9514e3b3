use std::path::PathBuf;

/// Errors raised anywhere in the pipeline.
///
/// Variants map onto CLI exit codes: parameter and input problems are
/// "invalid input" (exit 2), numerical failures are run failures (exit 1).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: successive refinements differ by {diff:.3e} (tolerance {tol:.1e})")]
    QuadratureNonconvergence { diff: f64, tol: f64 },

    #[error("profile inversion failed at r = {radius}: {reason}")]
    InversionFailure { radius: f64, reason: String },

    #[error("integration ran past the maximum radius {max_radius} without an event (center value {center_value})")]
    IntegrationBlowup { center_value: f64, max_radius: f64 },

    #[error("integrator step size underflow at r = {at}")]
    StepSizeUnderflow { at: f64 },

    #[error("no flat-hat bracket: {0}")]
    NoBracket(String),

    #[error("domain certification failed: {0}")]
    Certification(String),

    #[error("meshing failed: {0}")]
    Meshing(String),

    #[error("Newton did not converge in stage {stage} (epsilon {epsilon:.3e}): scaled residual {residual:.3e}")]
    Nonconvergence {
        stage: usize,
        epsilon: f64,
        residual: f64,
    },

    #[error("Newton diverged in stage {stage} (epsilon {epsilon:.3e}): line search could not reduce the residual {residual:.3e}")]
    Divergence {
        stage: usize,
        epsilon: f64,
        residual: f64,
    },

    #[error("no nonzero solution among {0} candidates")]
    NoNonzeroSolution(usize),

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("missing input: {}", .0.display())]
    MissingInput(PathBuf),

    #[error("malformed input {path}: {reason}")]
    MalformedInput { path: String, reason: String },

    #[error("run directory {} is locked by another process", .0.display())]
    Locked(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    /// Whether the error stems from user input rather than a numerical failure.
    pub fn is_invalid_input(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::Domain(_)
                | Error::MissingInput(_)
                | Error::MalformedInput { .. }
                | Error::Config(_)
                | Error::Locked(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
