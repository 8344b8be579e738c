use thiserror::Error;

/// Failures raised by the dynamics, control and estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LvError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("integration diverged at step {step} (t = {time})")]
    IntegrationDiverged { step: usize, time: f64 },

    #[error("step size too large: q left [0, 1] by {excursion:e} at step {step}")]
    StepTooLarge { step: usize, excursion: f64 },

    #[error("bound not applicable: {0}")]
    BoundNotApplicable(String),
}

pub type Result<T> = std::result::Result<T, LvError>;
