use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use ttmpp_core::io::{IoError, StoreError};
use ttmpp_core::ScenarioError;

/// The body of every error response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEnvelope {
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub details: Value,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub envelope: ErrorEnvelope,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            envelope: ErrorEnvelope {
                code: code.to_string(),
                message: message.into(),
                details: Value::Null,
            },
        }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.envelope.details = details;
        self
    }

    pub fn not_found(kind: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {kind} id {id:?}"))
            .with_details(serde_json::json!({ "kind": kind, "id": id }))
    }

    pub fn bad_json(e: &serde_json::Error) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "malformed_body", e.to_string())
            .with_details(serde_json::json!({ "line": e.line(), "column": e.column() }))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.envelope)).into_response()
    }
}

/// Errors from parsing a client-supplied document.
pub fn from_document(e: IoError) -> ApiError {
    match e {
        IoError::Invalid(report) => ApiError::new(StatusCode::BAD_REQUEST, "validation", "instance fails validation")
            .with_details(Value::from(
                report.violations.iter().map(|v| Value::from(v.to_string())).collect::<Vec<_>>(),
            )),
        IoError::Io { .. } => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "store", e.to_string()),
        other => ApiError::new(StatusCode::BAD_REQUEST, "malformed_body", other.to_string()),
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound { kind, id } => ApiError::not_found(kind, &id),
            StoreError::UnknownBase(id) => ApiError::not_found("instance", &id),
            StoreError::MissingBase => ApiError::new(StatusCode::BAD_REQUEST, "validation", e.to_string()),
            other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "store", other.to_string()),
        }
    }
}

impl From<ScenarioError> for ApiError {
    fn from(e: ScenarioError) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "validation", e.to_string())
    }
}
