use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Dynamics(#[from] lvbreak_core::LvError),

    #[error(transparent)]
    Recsys(#[from] lvbreak_recsys::RecsysError),

    #[error(transparent)]
    Predict(#[from] lvbreak_predict::PredictError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
