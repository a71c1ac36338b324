//! Blocking client for chat-completion style endpoints.
//!
//! Speaks the OpenAI-compatible `POST {base}/chat/completions` contract, which
//! Ollama, vLLM and llama.cpp servers all expose. Ollama's native `/api/chat`
//! response shape is accepted as well.

use std::env;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::prompt::PromptBundle;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    /// `None` leaves the temperature to the server.
    pub temperature: Option<f64>,
    pub timeout_secs: f64,
    /// Extra attempts after the first one.
    pub retries: u32,
    pub backoff_ms: u64,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "http://localhost:11434/v1".into(),
            model: String::new(),
            temperature: None,
            timeout_secs: 120.0,
            retries: 2,
            backoff_ms: 500,
            api_key: None,
        }
    }
}

impl EndpointConfig {
    /// Applies `GROUPREC_*` environment overrides.
    pub fn with_env(mut self) -> Result<Self> {
        self.apply_vars(|k| env::var(k).ok())?;
        Ok(self)
    }

    fn apply_vars(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<()> {
        fn num<T: std::str::FromStr>(name: &str, v: &str) -> Result<T> {
            v.trim().parse().map_err(|_| Error::Config(format!("{name}={v:?} is not a valid number")))
        }
        if let Some(v) = get("GROUPREC_BASE_URL") {
            self.base_url = v;
        }
        if let Some(v) = get("GROUPREC_MODEL") {
            self.model = v;
        }
        if let Some(v) = get("GROUPREC_TEMPERATURE") {
            self.temperature = Some(num("GROUPREC_TEMPERATURE", &v)?);
        }
        if let Some(v) = get("GROUPREC_TIMEOUT_SECS") {
            self.timeout_secs = num("GROUPREC_TIMEOUT_SECS", &v)?;
        }
        if let Some(v) = get("GROUPREC_RETRIES") {
            self.retries = num("GROUPREC_RETRIES", &v)?;
        }
        if let Some(v) = get("GROUPREC_API_KEY") {
            self.api_key = Some(v);
        }
        Ok(())
    }

    pub fn url(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") || base.ends_with("/api/chat") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }

    fn body(&self, prompt: &PromptBundle) -> Value {
        let mut body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt.full_text}],
            "stream": false,
        });
        if let Some(t) = self.temperature {
            body["temperature"] = json!(t);
        }
        body
    }
}

fn retryable_status(status: u16) -> bool {
    matches!(status, 408 | 429) || (500..600).contains(&status)
}

fn extract_content(v: &Value) -> Option<String> {
    v.pointer("/choices/0/message/content")
        .or_else(|| v.pointer("/message/content"))
        .or_else(|| v.get("response"))
        .and_then(Value::as_str)
        .map(str::to_string)
}

enum Attempt {
    Done(String),
    Retry(Option<u16>, String),
    Fatal(Option<u16>, String),
}

fn attempt_once(agent: &ureq::Agent, config: &EndpointConfig, body: &Value) -> Attempt {
    let mut req = agent.post(config.url()).header("Content-Type", "application/json");
    if let Some(key) = &config.api_key {
        req = req.header("Authorization", format!("Bearer {key}"));
    }
    let mut resp = match req.send_json(body) {
        Ok(r) => r,
        Err(e) => return Attempt::Retry(None, e.to_string()),
    };
    let status = resp.status().as_u16();
    if !(200..300).contains(&status) {
        let text = resp.body_mut().read_to_string().unwrap_or_default();
        let msg = format!("HTTP {status}: {}", text.chars().take(200).collect::<String>());
        return if retryable_status(status) { Attempt::Retry(Some(status), msg) } else { Attempt::Fatal(Some(status), msg) };
    }
    match resp.body_mut().read_json::<Value>() {
        Ok(v) => match extract_content(&v) {
            Some(text) => Attempt::Done(text),
            None => Attempt::Fatal(Some(status), "response has no message content".into()),
        },
        Err(e) => Attempt::Retry(Some(status), format!("unreadable response body: {e}")),
    }
}

/// Sends `prompt` and returns the model's text, retrying transport failures
/// and retryable statuses up to `config.retries` extra times with
/// exponential backoff.
pub fn query_endpoint(config: &EndpointConfig, prompt: &PromptBundle) -> Result<String> {
    if config.model.trim().is_empty() {
        return Err(Error::Config("endpoint model name is empty".into()));
    }
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs.max(0.001))))
        .http_status_as_error(false)
        .build()
        .into();
    let body = config.body(prompt);
    let budget = config.retries + 1;
    let mut last = (None, String::new());
    for attempt in 0..budget {
        if attempt > 0 {
            let wait = config.backoff_ms.saturating_mul(1 << (attempt - 1).min(10));
            thread::sleep(Duration::from_millis(wait));
        }
        let started = Instant::now();
        match attempt_once(&agent, config, &body) {
            Attempt::Done(text) => {
                log::info!("{} answered in {:.2}s (attempt {})", config.model, started.elapsed().as_secs_f64(), attempt + 1);
                return Ok(text);
            }
            Attempt::Retry(status, message) => {
                log::warn!("{} attempt {} failed: {message}", config.model, attempt + 1);
                last = (status, message);
            }
            Attempt::Fatal(status, message) => return Err(Error::Transport { attempts: attempt + 1, status, message }),
        }
    }
    Err(Error::Transport { attempts: budget, status: last.0, message: last.1 })
}
