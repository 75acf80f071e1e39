//! Chat-completion backends: an OpenAI-compatible HTTP client and an
//! offline deterministic mock.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::prompt::prompt_field;
use crate::stats::FeatureDescriptor;

pub const API_KEY_ENV: &str = "LLMFS_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("backend unreachable: {0}")]
    BackendUnreachable(String),
    #[error("malformed response body: {0}")]
    MalformedResponseBody(String),
}

/// Something that answers a single-message chat completion.
pub trait Backend: Send + Sync {
    fn complete(&self, model: &str, prompt: &str, temperature: f64) -> Result<String, QueryError>;
}

#[derive(Debug, Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Debug, Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
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

/// JSON request body for one user message.
pub fn request_body(model: &str, prompt: &str, temperature: f64) -> String {
    let req = ChatRequest {
        model,
        messages: [ChatMessage {
            role: "user",
            content: prompt,
        }],
        temperature,
    };
    serde_json::to_string(&req).expect("request serializes")
}

/// `choices[0].message.content` of a chat-completion response body.
pub fn extract_content(body: &[u8]) -> Result<String, QueryError> {
    let parsed: ChatResponse =
        serde_json::from_slice(body).map_err(|e| QueryError::MalformedResponseBody(e.to_string()))?;
    parsed
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| QueryError::MalformedResponseBody("no choices[0].message.content".into()))
}

/// Blocking OpenAI-compatible client with exponential-backoff retries for
/// transport failures, 429 and 5xx responses.
pub struct HttpBackend {
    agent: ureq::Agent,
    endpoint_url: String,
    api_key: Option<String>,
    max_retries: u32,
    base_delay: Duration,
}

impl HttpBackend {
    pub fn new(endpoint_url: impl Into<String>, timeout: Duration, max_retries: u32) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        if api_key.is_none() {
            log::warn!("{API_KEY_ENV} is not set; sending requests without authorization");
        }
        Self {
            agent,
            endpoint_url: endpoint_url.into(),
            api_key,
            max_retries,
            base_delay: Duration::from_millis(250),
        }
    }

    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key;
        self
    }

    pub fn with_base_delay(mut self, delay: Duration) -> Self {
        self.base_delay = delay;
        self
    }

    fn attempt(&self, body: &str) -> Result<Vec<u8>, Attempt> {
        let mut req = self
            .agent
            .post(&self.endpoint_url)
            .header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send(body).map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status().as_u16();
        let bytes = resp
            .body_mut()
            .read_to_vec()
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        match status {
            200..=299 => Ok(bytes),
            429 | 500..=599 => Err(Attempt::Retry(format!("HTTP {status}"))),
            _ => Err(Attempt::Fatal(format!(
                "HTTP {status}: {}",
                String::from_utf8_lossy(&bytes).chars().take(200).collect::<String>()
            ))),
        }
    }
}

enum Attempt {
    Retry(String),
    Fatal(String),
}

impl Backend for HttpBackend {
    fn complete(&self, model: &str, prompt: &str, temperature: f64) -> Result<String, QueryError> {
        let body = request_body(model, prompt, temperature);
        let mut tries = 0;
        loop {
            match self.attempt(&body) {
                Ok(bytes) => return extract_content(&bytes),
                Err(Attempt::Fatal(msg)) => return Err(QueryError::BackendUnreachable(msg)),
                Err(Attempt::Retry(msg)) => {
                    if tries >= self.max_retries {
                        return Err(QueryError::BackendUnreachable(format!(
                            "{msg} (after {} attempts)",
                            tries + 1
                        )));
                    }
                    let delay = self.base_delay.saturating_mul(1 << tries.min(5));
                    log::debug!("retrying in {delay:?}: {msg}");
                    thread::sleep(delay);
                    tries += 1;
                }
            }
        }
    }
}

/// `|dmu| / (sigma_pos + sigma_neg + |dmu| + 1e-9)`: a monotone function of
/// class separation in [0, 1).
pub fn mock_score_values(delta_mu: f64, sigma_pos: f64, sigma_neg: f64) -> f64 {
    let sep = delta_mu.abs();
    sep / (sigma_pos + sigma_neg + sep + 1e-9)
}

pub fn mock_score(desc: &FeatureDescriptor) -> f64 {
    mock_score_values(desc.delta_mu, desc.sigma_pos, desc.sigma_neg)
}

/// Offline backend: reads the class-conditional fields back out of the
/// prompt and answers [`mock_score_values`] with six decimals. Prompts
/// without those fields get a prose reply.
#[derive(Debug, Default, Clone, Copy)]
pub struct MockBackend;

impl Backend for MockBackend {
    fn complete(&self, _model: &str, prompt: &str, _temperature: f64) -> Result<String, QueryError> {
        let fields = (
            prompt_field(prompt, "mean_difference"),
            prompt_field(prompt, "malware_std"),
            prompt_field(prompt, "benign_std"),
        );
        Ok(match fields {
            (Some(dmu), Some(sp), Some(sn)) => format!("{:.6}", mock_score_values(dmu, sp, sn)),
            _ => "cannot assess this feature".to_string(),
        })
    }
}

/// Backend that always fails, for exercising the fallback path.
#[derive(Debug, Default, Clone, Copy)]
pub struct UnreachableBackend;

impl Backend for UnreachableBackend {
    fn complete(&self, _: &str, _: &str, _: f64) -> Result<String, QueryError> {
        Err(QueryError::BackendUnreachable("backend disabled".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_shape() {
        let v: serde_json::Value = serde_json::from_str(&request_body("gpt", "hi \"x\"", 0.0)).unwrap();
        assert_eq!(v["model"], "gpt");
        assert_eq!(v["temperature"], 0.0);
        assert_eq!(v["messages"][0]["role"], "user");
        assert_eq!(v["messages"][0]["content"], "hi \"x\"");
        assert_eq!(v["messages"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn content_extraction() {
        let body = br#"{"id":"x","choices":[{"index":0,"message":{"role":"assistant","content":"0.42"}}]}"#;
        assert_eq!(extract_content(body).unwrap(), "0.42");
        assert!(matches!(extract_content(b"{}"), Err(QueryError::MalformedResponseBody(_))));
        assert!(matches!(
            extract_content(br#"{"choices":[]}"#),
            Err(QueryError::MalformedResponseBody(_))
        ));
        assert!(matches!(
            extract_content(br#"{"choices":[{"message":{"content":null}}]}"#),
            Err(QueryError::MalformedResponseBody(_))
        ));
        assert!(extract_content(b"\xff").is_err());
    }

    #[test]
    fn mock_score_examples() {
        assert_eq!(mock_score_values(0.0, 1.0, 2.0), 0.0);
        assert!((mock_score_values(1.0, 0.0, 0.0) - 1.0).abs() < 1e-6);
        assert!((mock_score_values(2.0, 0.5, 0.5) - 2.0 / 3.0).abs() < 1e-9);
        assert_eq!(mock_score_values(-2.0, 0.5, 0.5), mock_score_values(2.0, 0.5, 0.5));
    }

    #[test]
    fn mock_backend_reads_prompt() {
        let prompt = "x malware_std=0.500000, benign_std=0.500000, mean_difference=2.00000\n";
        assert_eq!(MockBackend.complete("m", prompt, 0.0).unwrap(), "0.666667");
        assert_eq!(MockBackend.complete("m", "hello", 0.0).unwrap(), "cannot assess this feature");
    }
}
