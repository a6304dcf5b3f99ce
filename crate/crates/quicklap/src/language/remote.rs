//! OpenAI-compatible chat-completions client (blocking, JSON response mode).

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::backends::LmRequest;
use super::{BackendConfig, LanguageError};

/// Environment variable holding the bearer token for remote calls.
pub const API_KEY_ENV: &str = "QUICKLAP_API_KEY";

pub struct RemoteBackend {
    client: reqwest::blocking::Client,
    base_url: String,
    api_key: String,
}

#[derive(Debug, Serialize)]
struct Message<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Debug, Deserialize)]
struct ResponseMessage {
    content: Option<String>,
}

impl RemoteBackend {
    pub fn new(config: &BackendConfig) -> Result<Self, LanguageError> {
        let api_key = std::env::var(API_KEY_ENV).map_err(|_| LanguageError::MissingApiKey)?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| LanguageError::Transport(e.to_string()))?;
        Ok(Self {
            client,
            base_url: config.base_url.trim_end_matches('/').to_string(),
            api_key,
        })
    }

    pub(super) fn complete(&self, req: &LmRequest<'_>) -> Result<String, LanguageError> {
        let body = json!({
            "model": req.model,
            "temperature": req.temperature,
            "response_format": {"type": "json_object"},
            "messages": [
                Message { role: "system", content: &req.prompt.system },
                Message { role: "user", content: &req.prompt.user },
            ],
        });
        let url = format!("{}/chat/completions", self.base_url);
        let response = self
            .client
            .post(&url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| LanguageError::Transport(e.to_string()))?;
        let status = response.status();
        let text = response
            .text()
            .map_err(|e| LanguageError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(LanguageError::Transport(format!(
                "{url} returned {status}: {text}"
            )));
        }
        let parsed: ChatResponse = serde_json::from_str(&text)
            .map_err(|e| LanguageError::Transport(format!("malformed completion payload: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| LanguageError::Transport("completion had no content".into()))
    }
}
