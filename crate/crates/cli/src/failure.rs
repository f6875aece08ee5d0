use serde::Serialize;

/// A failed step: machine-readable code plus message.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub code: String,
    pub message: String,
}

impl Failure {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.into(),
            message: message.into(),
        }
    }

    /// The one-line JSON document printed on stderr.
    pub fn to_line(&self, command: &str) -> String {
        serde_json::json!({ "error": { "command": command, "code": self.code, "message": self.message } }).to_string()
    }
}

impl From<lyricsense_core::Error> for Failure {
    fn from(e: lyricsense_core::Error) -> Self {
        Failure::new("core", e.to_string())
    }
}

impl From<lyricsense_model::Error> for Failure {
    fn from(e: lyricsense_model::Error) -> Self {
        let code = match &e {
            lyricsense_model::Error::NoContent => "no_content",
            lyricsense_model::Error::Checkpoint { .. } => "checkpoint",
            lyricsense_model::Error::Diverged { .. } => "diverged",
            lyricsense_model::Error::Mismatch(_) => "mismatch",
            _ => "model",
        };
        Failure::new(code, e.to_string())
    }
}

impl From<lyricsense_service::BootError> for Failure {
    fn from(e: lyricsense_service::BootError) -> Self {
        Failure::new("model_unavailable", e.to_string())
    }
}

impl From<lyricsense_service::ServeError> for Failure {
    fn from(e: lyricsense_service::ServeError) -> Self {
        Failure::new("serve", e.to_string())
    }
}

impl From<lyricsense_service::PredictError> for Failure {
    fn from(e: lyricsense_service::PredictError) -> Self {
        let code = match e {
            lyricsense_service::PredictError::NoContent => "no_content",
            _ => "predict",
        };
        Failure::new(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new("io", e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::new("json", e.to_string())
    }
}

impl From<reqwest::Error> for Failure {
    fn from(e: reqwest::Error) -> Self {
        Failure::new("http", e.to_string())
    }
}
