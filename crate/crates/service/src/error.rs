use std::path::PathBuf;

use axum::http::StatusCode;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown model {0}")]
    UnknownModel(String),
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("invalid campaign definition: {0}")]
    InvalidCampaign(String),
    #[error("unknown campaign {0}")]
    UnknownCampaign(String),
    #[error("campaign {0} is closed")]
    CampaignClosed(String),
    #[error("user {0} was already contacted in this campaign")]
    AlreadyDispatched(String),
    #[error("user {0} is not a candidate of this campaign")]
    UnknownCandidate(String),
    #[error("message has {length} characters, the limit is {limit}")]
    MessageTooLong { length: usize, limit: usize },
    #[error("user {0} has not been contacted")]
    NotDispatched(String),
    #[error("a retweet by {0} was already recorded")]
    AlreadyObserved(String),
    #[error("retweet at {observed_at} precedes the dispatch at {dispatched_at}")]
    ObservationBeforeDispatch { observed_at: i64, dispatched_at: i64 },
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("event log {path}: {reason}")]
    CorruptLog { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] propagate_core::Error),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownModel(_) => "UnknownModel",
            ServiceError::InvalidTemplate(_) => "InvalidTemplate",
            ServiceError::InvalidCampaign(_) => "InvalidCampaign",
            ServiceError::UnknownCampaign(_) => "UnknownCampaign",
            ServiceError::CampaignClosed(_) => "CampaignClosed",
            ServiceError::AlreadyDispatched(_) => "AlreadyDispatched",
            ServiceError::UnknownCandidate(_) => "UnknownCandidate",
            ServiceError::MessageTooLong { .. } => "MessageTooLong",
            ServiceError::NotDispatched(_) => "NotDispatched",
            ServiceError::AlreadyObserved(_) => "AlreadyObserved",
            ServiceError::ObservationBeforeDispatch { .. } => "ObservationBeforeDispatch",
            ServiceError::BadRequest(_) => "BadRequest",
            ServiceError::CorruptLog { .. } => "CorruptLog",
            ServiceError::Io { .. } => "Io",
            ServiceError::Core(e) => e.code(),
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::UnknownModel(_) | ServiceError::UnknownCampaign(_) | ServiceError::UnknownCandidate(_) => {
                StatusCode::NOT_FOUND
            }
            ServiceError::CampaignClosed(_)
            | ServiceError::AlreadyDispatched(_)
            | ServiceError::AlreadyObserved(_)
            | ServiceError::NotDispatched(_) => StatusCode::CONFLICT,
            ServiceError::InvalidTemplate(_)
            | ServiceError::InvalidCampaign(_)
            | ServiceError::MessageTooLong { .. }
            | ServiceError::ObservationBeforeDispatch { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Core(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::CorruptLog { .. } | ServiceError::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

pub(crate) fn core<E: Into<propagate_core::Error>>(e: E) -> ServiceError {
    ServiceError::Core(e.into())
}
