use thiserror::Error;

/// Errors surfaced by the planning pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The sampling planner exhausted its budget without reaching the goal.
    /// Kept distinct from QP failures: the trajectory stage is never reached.
    #[error("planner failure: {0}")]
    PlannerFailure(String),

    #[error("qp solve failed: {0}")]
    QpFailure(String),

    #[error("scenario format: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
