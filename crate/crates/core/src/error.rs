use thiserror::Error;

/// Errors raised by the model, the integrators and the orbit machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mass ratio {0} outside [0, 1/2]")]
    MassRatio(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singularity: {0}")]
    Singularity(String),
    #[error("outside admissible region: {0}")]
    Inadmissible(String),
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("step limit {steps} reached at t = {t}")]
    MaxSteps { steps: usize, t: f64 },
    #[error("no convergence after {iterations} iterations (residuals {history:?})")]
    NonConvergence { iterations: usize, history: Vec<f64> },
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
}

impl Error {
    /// True for failures of a numerical procedure rather than of its inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepUnderflow { .. }
                | Error::MaxSteps { .. }
                | Error::NonConvergence { .. }
                | Error::Inconsistent(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
