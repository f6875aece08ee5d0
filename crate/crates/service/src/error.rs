use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;

use crate::types::ErrorBody;

/// Failures reported by a [`crate::Predictor`].
#[derive(Debug, thiserror::Error)]
pub enum PredictError {
    #[error("no content: lyrics are empty after cleaning")]
    NoContent,
    #[error("{0}")]
    Invalid(String),
    #[error("inference failed: {0}")]
    Internal(String),
}

impl From<lyricsense_model::Error> for PredictError {
    fn from(e: lyricsense_model::Error) -> Self {
        match e {
            lyricsense_model::Error::NoContent => PredictError::NoContent,
            lyricsense_model::Error::InvalidInput(m) => PredictError::Invalid(m),
            other => PredictError::Internal(other.to_string()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub missing: Vec<String>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            missing: Vec::new(),
        }
    }
}

impl From<PredictError> for ApiError {
    fn from(e: PredictError) -> Self {
        match e {
            PredictError::NoContent => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "no_content", e.to_string()),
            PredictError::Invalid(m) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_input", m),
            PredictError::Internal(m) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "inference_failed", m),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code.to_string(),
            message: self.message,
            missing: self.missing,
        };
        (self.status, Json(body)).into_response()
    }
}
