use thiserror::Error;

#[derive(Debug, Error)]
pub enum RecsysError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate rating for user {user}, item {item}")]
    Duplicate { user: u32, item: u32 },

    #[error("no ratings left: {0}")]
    Empty(String),

    #[error("unknown user {0}")]
    UnknownUser(u32),

    #[error("unknown item {0}")]
    UnknownItem(u32),

    #[error("training diverged in epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported checkpoint version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, RecsysError>;
