use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Data(String),

    #[error("replication {replication}, user {user}: {source}")]
    User {
        replication: usize,
        user: u32,
        #[source]
        source: Box<HarnessError>,
    },

    #[error("replication {replication}: {source}")]
    Replication {
        replication: usize,
        #[source]
        source: Box<HarnessError>,
    },

    #[error(transparent)]
    Dynamics(#[from] lvbreak_core::LvError),

    #[error(transparent)]
    Recsys(#[from] lvbreak_recsys::RecsysError),

    #[error(transparent)]
    Predict(#[from] lvbreak_predict::PredictError),

    #[error(transparent)]
    Sim(#[from] lvbreak_sim::SimError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Short category printed in front of CLI error lines.
    pub fn category(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Data(_) | Self::Recsys(_) => "data",
            Self::User { source, .. } | Self::Replication { source, .. } => source.category(),
            Self::Dynamics(_) | Self::Predict(_) | Self::Sim(_) => "model",
            Self::Io(_) => "io",
            Self::Json(_) => "format",
        }
    }

    pub fn in_replication(self, replication: usize) -> Self {
        Self::Replication { replication, source: Box::new(self) }
    }

    pub fn for_user(self, replication: usize, user: u32) -> Self {
        Self::User { replication, user, source: Box::new(self) }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
