use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use guidance_core::{AnalysisError, LogError, OutcomeError};
use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown community `{0}`")]
    UnknownCommunity(String),
    #[error("ruleset failed validation")]
    InvalidRuleset(Vec<String>),
    #[error("{0}")]
    BadRequest(String),
    #[error("{field} is {len} characters; the limit is {limit}")]
    TooLarge { field: &'static str, len: usize, limit: usize },
    #[error("the arm override is only available in demo mode")]
    OverrideDisabled,
    #[error("event #{index} rejected: {reason}")]
    RejectedEvent { index: usize, reason: String },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("event log is inconsistent: {0}")]
    Outcomes(#[from] OutcomeError),
    #[error("event log: {0}")]
    Log(#[from] LogError),
    #[error("{0}")]
    State(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Config(String),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::UnknownCommunity(_) => StatusCode::NOT_FOUND,
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::TooLarge { .. } => StatusCode::PAYLOAD_TOO_LARGE,
            ServiceError::OverrideDisabled => StatusCode::FORBIDDEN,
            ServiceError::InvalidRuleset(_) | ServiceError::RejectedEvent { .. } | ServiceError::Analysis(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ServiceError::Outcomes(_)
            | ServiceError::Log(_)
            | ServiceError::State(_)
            | ServiceError::Io(_)
            | ServiceError::Config(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownCommunity(_) => "unknown_community",
            ServiceError::InvalidRuleset(_) => "invalid_ruleset",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::TooLarge { .. } => "payload_too_large",
            ServiceError::OverrideDisabled => "override_disabled",
            ServiceError::RejectedEvent { .. } => "rejected_event",
            ServiceError::Analysis(AnalysisError::NotIdentifiable(_)) => "not_identifiable",
            ServiceError::Analysis(_) => "analysis_failed",
            ServiceError::Outcomes(_) | ServiceError::Log(_) | ServiceError::State(_) => "log_inconsistent",
            ServiceError::Io(_) => "io",
            ServiceError::Config(_) => "config",
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            tracing::error!("{self}");
        }
        let mut body = json!({ "error": self.code(), "message": self.to_string() });
        if let ServiceError::InvalidRuleset(problems) = &self {
            body["problems"] = json!(problems);
        }
        (status, Json(body)).into_response()
    }
}
