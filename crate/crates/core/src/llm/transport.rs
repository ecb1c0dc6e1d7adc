//! Chat-completion transport with retry and a digest-keyed response cache.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Message, ModelProfile};

pub const API_KEY_VAR: &str = "EPIX_API_KEY";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportMode {
    Live,
    Record,
    #[default]
    Replay,
}

impl FromStr for TransportMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "live" => Ok(TransportMode::Live),
            "record" => Ok(TransportMode::Record),
            "replay" => Ok(TransportMode::Replay),
            other => Err(format!("unknown transport mode `{other}` (expected live, record or replay)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { temperature: 0.0, max_tokens: super::ANSWER_RESERVE_TOKENS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Delay after the first failure; doubled after each further one.
    pub backoff_base: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 3, backoff_base: Duration::from_millis(500) }
    }
}

impl RetryPolicy {
    /// Delay before attempt `failed + 1`, given `failed` failures so far.
    pub fn delay(&self, failed: u32) -> Duration {
        self.backoff_base.saturating_mul(1u32.checked_shl(failed.saturating_sub(1)).unwrap_or(u32::MAX))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("no cached response for model `{model}` (request {digest})")]
    CacheMiss { model: String, digest: String },
    #[error("credential rejected or missing for `{model}`: {detail}")]
    Auth { model: String, detail: String },
    #[error("request to `{model}` failed after {attempts} attempts: {last}")]
    Exhausted { model: String, attempts: u32, last: String },
    #[error("request to `{model}` failed: {detail}")]
    Request { model: String, detail: String },
    #[error("malformed completion response: {0}")]
    BadResponse(String),
    #[error("cache {path}: {source}")]
    Cache { path: String, source: std::io::Error },
}

/// Wire request body. Field order is fixed so serialization is canonical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ChatRequest {
    pub fn new(model: &ModelProfile, messages: &[Message], sampling: Sampling) -> Self {
        ChatRequest {
            model: model.name.clone(),
            messages: messages.to_vec(),
            temperature: sampling.temperature,
            max_tokens: sampling.max_tokens,
        }
    }

    /// Hex SHA-256 of the compact JSON encoding.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("request serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub request: ChatRequest,
    pub response: serde_json::Value,
}

/// Pulls `choices[0].message.content` out of a completion response.
pub fn response_text(response: &serde_json::Value) -> Result<String, TransportError> {
    response
        .pointer("/choices/0/message/content")
        .and_then(|v| v.as_str())
        .map(str::to_string)
        .ok_or_else(|| TransportError::BadResponse("missing choices[0].message.content".into()))
}

enum Attempt {
    Done(serde_json::Value),
    Retry(String),
    Fatal(TransportError),
}

pub struct Transport {
    mode: TransportMode,
    cache_dir: PathBuf,
    retry: RetryPolicy,
    api_key: Option<String>,
    agent: ureq::Agent,
    network_calls: AtomicUsize,
    cache_lock: Mutex<()>,
}

impl std::fmt::Debug for Transport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transport")
            .field("mode", &self.mode)
            .field("cache_dir", &self.cache_dir)
            .field("retry", &self.retry)
            .field("network_calls", &self.network_calls())
            .finish_non_exhaustive()
    }
}

impl Transport {
    /// The credential is read from `EPIX_API_KEY` when set.
    pub fn new(mode: TransportMode, cache_dir: impl Into<PathBuf>) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(300)))
            .build()
            .into();
        Transport {
            mode,
            cache_dir: cache_dir.into(),
            retry: RetryPolicy::default(),
            api_key: std::env::var(API_KEY_VAR).ok().filter(|k| !k.is_empty()),
            agent,
            network_calls: AtomicUsize::new(0),
            cache_lock: Mutex::new(()),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key;
        self
    }

    pub fn mode(&self) -> TransportMode {
        self.mode
    }

    pub fn cache_dir(&self) -> &Path {
        &self.cache_dir
    }

    /// HTTP requests sent so far, retries included.
    pub fn network_calls(&self) -> usize {
        self.network_calls.load(Ordering::SeqCst)
    }

    pub fn cache_path(&self, digest: &str) -> PathBuf {
        self.cache_dir.join(format!("{digest}.json"))
    }

    pub fn is_cached(&self, request: &ChatRequest) -> bool {
        self.cache_path(&request.digest()).is_file()
    }

    /// Sends `messages` to `model` and returns the answer text.
    ///
    /// REPLAY answers only from the cache. RECORD answers from the cache
    /// when it can, otherwise calls the endpoint and stores the exchange.
    /// LIVE always calls the endpoint and never touches the cache.
    pub fn complete(&self, model: &ModelProfile, messages: &[Message], sampling: Sampling) -> Result<String, TransportError> {
        let request = ChatRequest::new(model, messages, sampling);
        let digest = request.digest();
        match self.mode {
            TransportMode::Replay => match self.read_cache(&digest)? {
                Some(entry) => response_text(&entry.response),
                None => Err(TransportError::CacheMiss { model: model.name.clone(), digest }),
            },
            TransportMode::Record => {
                if let Some(entry) = self.read_cache(&digest)? {
                    return response_text(&entry.response);
                }
                let response = self.send(model, &request)?;
                let text = response_text(&response)?;
                self.write_cache(&digest, &CacheEntry { request, response })?;
                Ok(text)
            }
            TransportMode::Live => response_text(&self.send(model, &request)?),
        }
    }

    fn read_cache(&self, digest: &str) -> Result<Option<CacheEntry>, TransportError> {
        let path = self.cache_path(digest);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(source) => return Err(TransportError::Cache { path: path.display().to_string(), source }),
        };
        serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|e| TransportError::BadResponse(format!("{}: {e}", path.display())))
    }

    fn write_cache(&self, digest: &str, entry: &CacheEntry) -> Result<(), TransportError> {
        let _guard = self.cache_lock.lock().unwrap_or_else(|p| p.into_inner());
        let path = self.cache_path(digest);
        let io_err = |source| TransportError::Cache { path: path.display().to_string(), source };
        fs::create_dir_all(&self.cache_dir).map_err(io_err)?;
        let mut text = serde_json::to_string_pretty(entry).expect("cache entry serializes");
        text.push('\n');
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, text).map_err(io_err)?;
        fs::rename(&tmp, &path).map_err(io_err)
    }

    fn send(&self, model: &ModelProfile, request: &ChatRequest) -> Result<serde_json::Value, TransportError> {
        let Some(key) = self.api_key.as_deref() else {
            return Err(TransportError::Auth { model: model.name.clone(), detail: format!("{API_KEY_VAR} is not set") });
        };
        let body = serde_json::to_string(request).expect("request serializes");
        let attempts = self.retry.max_attempts.max(1);
        let mut last = String::new();
        for attempt in 1..=attempts {
            if attempt > 1 {
                std::thread::sleep(self.retry.delay(attempt - 1));
            }
            match self.attempt(model, key, &body) {
                Attempt::Done(v) => return Ok(v),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(reason) => {
                    log::warn!("{}: attempt {attempt}/{attempts} failed: {reason}", model.name);
                    last = reason;
                }
            }
        }
        Err(TransportError::Exhausted { model: model.name.clone(), attempts, last })
    }

    fn attempt(&self, model: &ModelProfile, key: &str, body: &str) -> Attempt {
        self.network_calls.fetch_add(1, Ordering::SeqCst);
        let result = self
            .agent
            .post(&model.endpoint)
            .header("Authorization", &format!("Bearer {key}"))
            .header("Content-Type", "application/json")
            .send(body);
        let mut response = match result {
            Ok(r) => r,
            Err(e @ (ureq::Error::Io(_) | ureq::Error::Timeout(_) | ureq::Error::ConnectionFailed)) => {
                return Attempt::Retry(e.to_string())
            }
            Err(e) => return Attempt::Fatal(TransportError::Request { model: model.name.clone(), detail: e.to_string() }),
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(format!("reading body: {e}")),
        };
        match status {
            200..=299 => match serde_json::from_str(&text) {
                Ok(v) => Attempt::Done(v),
                Err(e) => Attempt::Fatal(TransportError::BadResponse(e.to_string())),
            },
            401 | 403 => Attempt::Fatal(TransportError::Auth { model: model.name.clone(), detail: format!("HTTP {status}") }),
            429 | 500..=599 => Attempt::Retry(format!("HTTP {status}")),
            _ => Attempt::Fatal(TransportError::Request { model: model.name.clone(), detail: format!("HTTP {status}: {text}") }),
        }
    }
}
