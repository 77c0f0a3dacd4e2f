use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::CardText;

pub const POLISH_PROMPT: &str = include_str!("../../prompts/polish.txt");
pub const MERGE_PROMPT: &str = include_str!("../../prompts/merge.txt");

#[derive(Debug, Error, PartialEq)]
pub enum RefineError {
    #[error("refiner transport failed: {0}")]
    Transport(String),
    #[error("refiner answered with status {0}")]
    Status(u16),
    #[error("refiner response not understood: {0}")]
    BadResponse(String),
    #[error("refiner returned empty text")]
    Empty,
}

/// A text-completion backend.
pub trait Refiner: Send + Sync {
    fn complete(&self, prompt: &str, max_tokens: u32) -> Result<String, RefineError>;
}

/// Refiner backed by a closure, for tests and offline use.
pub struct StubRefiner<F>(pub F);

impl<F> Refiner for StubRefiner<F>
where
    F: Fn(&str) -> Result<String, RefineError> + Send + Sync,
{
    fn complete(&self, prompt: &str, _max_tokens: u32) -> Result<String, RefineError> {
        (self.0)(prompt)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RefinerConfig {
    pub endpoint: String,
    #[serde(default, skip_serializing)]
    pub api_key: Option<String>,
    pub timeout_ms: u64,
    pub max_tokens: u32,
}

impl RefinerConfig {
    pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;
    pub const DEFAULT_MAX_TOKENS: u32 = 256;

    pub fn new(endpoint: impl Into<String>) -> RefinerConfig {
        RefinerConfig {
            endpoint: endpoint.into(),
            api_key: None,
            timeout_ms: Self::DEFAULT_TIMEOUT_MS,
            max_tokens: Self::DEFAULT_MAX_TOKENS,
        }
    }

    /// Reads `SKETCHDOC_REFINER_URL`, `SKETCHDOC_REFINER_KEY` and
    /// `SKETCHDOC_REFINER_TIMEOUT_MS`. `None` without an endpoint.
    pub fn from_env() -> Option<RefinerConfig> {
        let endpoint = std::env::var("SKETCHDOC_REFINER_URL").ok().filter(|s| !s.is_empty())?;
        let mut cfg = RefinerConfig::new(endpoint);
        cfg.api_key = std::env::var("SKETCHDOC_REFINER_KEY").ok().filter(|s| !s.is_empty());
        if let Some(ms) = std::env::var("SKETCHDOC_REFINER_TIMEOUT_MS")
            .ok()
            .and_then(|v| v.parse().ok())
        {
            cfg.timeout_ms = ms;
        }
        Some(cfg)
    }
}

/// Posts `{prompt, maxTokens}` as JSON and reads the completion from
/// `text`, `choices[0].text` or `choices[0].message.content`.
pub struct HttpRefiner {
    client: reqwest::blocking::Client,
    config: RefinerConfig,
}

impl HttpRefiner {
    pub fn new(config: RefinerConfig) -> Result<HttpRefiner, RefineError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| RefineError::Transport(e.to_string()))?;
        Ok(HttpRefiner { client, config })
    }
}

fn completion_text(body: &Value) -> Option<&str> {
    body.get("text")
        .and_then(Value::as_str)
        .or_else(|| body.pointer("/choices/0/text").and_then(Value::as_str))
        .or_else(|| body.pointer("/choices/0/message/content").and_then(Value::as_str))
}

impl Refiner for HttpRefiner {
    fn complete(&self, prompt: &str, max_tokens: u32) -> Result<String, RefineError> {
        let mut request = self
            .client
            .post(&self.config.endpoint)
            .json(&json!({"prompt": prompt, "maxTokens": max_tokens}));
        if let Some(key) = &self.config.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| RefineError::Transport(e.to_string()))?;
        if !response.status().is_success() {
            return Err(RefineError::Status(response.status().as_u16()));
        }
        let body: Value = response.json().map_err(|e| RefineError::BadResponse(e.to_string()))?;
        completion_text(&body)
            .map(str::to_string)
            .ok_or_else(|| RefineError::BadResponse("no completion text".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PromptKind {
    Polish,
    Merge,
}

/// Prompt for one card: polish a single sentence, merge several.
pub fn build_prompt(card: &CardText, sentences: usize) -> (PromptKind, String) {
    let (kind, template) = if sentences > 1 {
        (PromptKind::Merge, MERGE_PROMPT)
    } else {
        (PromptKind::Polish, POLISH_PROMPT)
    };
    let terms: Vec<String> = card.key_messages.iter().map(|m| format!("\"{}\"", m.text)).collect();
    let prompt = template
        .replace("{{key_messages}}", &terms.join(", "))
        .replace("{{findings}}", &card.text);
    (kind, prompt)
}

/// Sends one card through the refiner. Any failure keeps the original text
/// and returns a warning instead.
pub fn refine_card(
    card: &CardText,
    sentences: usize,
    refiner: &dyn Refiner,
    max_tokens: u32,
) -> (CardText, Option<String>) {
    let (_, prompt) = build_prompt(card, sentences);
    match refiner.complete(&prompt, max_tokens) {
        Ok(text) if !text.trim().is_empty() => (card.with_text(text.trim().to_string()), None),
        Ok(_) => {
            log::warn!("refinement skipped: {}", RefineError::Empty);
            (card.clone(), Some(RefineError::Empty.to_string()))
        }
        Err(e) => {
            log::warn!("refinement skipped: {e}");
            (card.clone(), Some(e.to_string()))
        }
    }
}
