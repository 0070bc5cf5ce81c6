use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{BackendError, DecodingOptions, GenerationResult, PlannerBackend};

pub const ENV_BASE_URL: &str = "PLANGUARD_BASE_URL";
pub const ENV_API_KEY: &str = "PLANGUARD_API_KEY";
pub const ENV_MODEL: &str = "PLANGUARD_MODEL";

/// Chat-completion endpoint settings. The API key is read from the
/// environment variable named by `api_key_env` at request time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    pub api_key_env: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub temperature: f64,
    pub request_logprobs: bool,
    /// First retry delay; doubles on each further attempt.
    pub backoff_ms: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o".into(),
            api_key_env: ENV_API_KEY.into(),
            timeout_secs: 60.0,
            max_retries: 3,
            temperature: 0.0,
            request_logprobs: true,
            backoff_ms: 500,
        }
    }
}

impl EndpointConfig {
    /// Defaults overridden by the base-URL and model environment variables.
    pub fn from_env() -> Self {
        let mut cfg = Self::default();
        if let Ok(url) = std::env::var(ENV_BASE_URL) {
            cfg.base_url = url;
        }
        if let Ok(model) = std::env::var(ENV_MODEL) {
            cfg.model = model;
        }
        cfg
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.timeout_secs.is_nan() || self.timeout_secs <= 0.0 {
            return Err("timeout must be positive".into());
        }
        if self.base_url.is_empty() || self.model.is_empty() {
            return Err("base URL and model are required".into());
        }
        Ok(())
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }

    fn request_body(&self, prompt: &str, options: &DecodingOptions) -> Value {
        let mut body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": options.temperature.unwrap_or(self.temperature),
        });
        if let Some(n) = options.max_tokens {
            body["max_tokens"] = json!(n);
        }
        if self.request_logprobs {
            body["logprobs"] = json!(true);
        }
        body
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportFailure {
    Timeout,
    Io(String),
}

/// Minimal JSON-over-HTTP POST used by the client; swapped out in tests.
pub trait HttpTransport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        headers: &[(String, String)],
        body: &Value,
        timeout: Duration,
    ) -> Result<HttpResponse, TransportFailure>;
}

pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new() -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(ReqwestTransport { client })
    }
}

impl HttpTransport for ReqwestTransport {
    fn post_json(
        &self,
        url: &str,
        headers: &[(String, String)],
        body: &Value,
        timeout: Duration,
    ) -> Result<HttpResponse, TransportFailure> {
        let mut req = self.client.post(url).timeout(timeout).json(body);
        for (k, v) in headers {
            req = req.header(k, v);
        }
        let resp = req.send().map_err(classify)?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(classify)?;
        Ok(HttpResponse { status, body })
    }
}

fn classify(e: reqwest::Error) -> TransportFailure {
    if e.is_timeout() {
        TransportFailure::Timeout
    } else {
        TransportFailure::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TranscriptRecord {
    request: Value,
    response: HttpResponse,
}

/// Replays recorded request/response pairs (newline-delimited JSON records
/// `{"request": ..., "response": {"status": ..., "body": ...}}`). Each record
/// answers at most once, matched by exact request body.
pub struct FixtureTransport {
    records: Mutex<Vec<Option<TranscriptRecord>>>,
}

impl FixtureTransport {
    pub fn parse(text: &str) -> Result<Self, String> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| serde_json::from_str(l).map(Some).map_err(|e| format!("record {}: {e}", i + 1)))
            .collect::<Result<_, _>>()?;
        Ok(FixtureTransport { records: Mutex::new(records) })
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        Self::parse(&std::fs::read_to_string(path).map_err(|e| e.to_string())?)
    }
}

impl HttpTransport for FixtureTransport {
    fn post_json(
        &self,
        _url: &str,
        _headers: &[(String, String)],
        body: &Value,
        _timeout: Duration,
    ) -> Result<HttpResponse, TransportFailure> {
        let mut records = self.records.lock().unwrap();
        let slot = records
            .iter_mut()
            .find(|r| r.as_ref().is_some_and(|r| &r.request == body))
            .ok_or_else(|| TransportFailure::Io("no recorded response for this request".into()))?;
        Ok(slot.take().unwrap().response)
    }
}

/// Forwards to another transport and appends each exchange to a transcript file.
pub struct RecordingTransport<T> {
    inner: T,
    file: Mutex<std::fs::File>,
}

impl<T: HttpTransport> RecordingTransport<T> {
    pub fn new(inner: T, path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(RecordingTransport { inner, file: Mutex::new(file) })
    }
}

impl<T: HttpTransport> HttpTransport for RecordingTransport<T> {
    fn post_json(
        &self,
        url: &str,
        headers: &[(String, String)],
        body: &Value,
        timeout: Duration,
    ) -> Result<HttpResponse, TransportFailure> {
        let response = self.inner.post_json(url, headers, body, timeout)?;
        let record = TranscriptRecord { request: body.clone(), response: response.clone() };
        let line = serde_json::to_string(&record).expect("record serializes");
        let mut f = self.file.lock().unwrap();
        writeln!(f, "{line}").map_err(|e| TransportFailure::Io(e.to_string()))?;
        Ok(response)
    }
}

/// One chat-completion request with retries on transient failures.
pub fn llm_generate(
    cfg: &EndpointConfig,
    transport: &dyn HttpTransport,
    prompt: &str,
    options: &DecodingOptions,
) -> Result<GenerationResult, BackendError> {
    cfg.validate().map_err(BackendError::Transport)?;
    let body = cfg.request_body(prompt, options);
    let mut headers = vec![("Content-Type".to_string(), "application/json".to_string())];
    if let Ok(key) = std::env::var(&cfg.api_key_env) {
        headers.push(("Authorization".into(), format!("Bearer {key}")));
    }
    let timeout = Duration::from_secs_f64(cfg.timeout_secs);

    let mut attempt = 0;
    loop {
        let last_error = match transport.post_json(&cfg.url(), &headers, &body, timeout) {
            Ok(resp) if resp.status == 401 || resp.status == 403 => return Err(BackendError::Auth(resp.status)),
            Ok(resp) if (200..300).contains(&resp.status) => return parse_completion(cfg, &resp.body),
            Ok(resp) if resp.status == 429 || resp.status >= 500 => {
                BackendError::Transport(format!("HTTP {}", resp.status))
            }
            Ok(resp) => {
                return Err(BackendError::Transport(format!("HTTP {}: {}", resp.status, resp.body)));
            }
            Err(TransportFailure::Timeout) => BackendError::Timeout,
            Err(TransportFailure::Io(e)) => BackendError::Transport(e),
        };
        if attempt >= cfg.max_retries {
            return Err(last_error);
        }
        let delay = cfg.backoff_ms.saturating_mul(1 << attempt.min(16));
        debug!("attempt {} failed ({last_error}); retrying in {delay} ms", attempt + 1);
        std::thread::sleep(Duration::from_millis(delay));
        attempt += 1;
    }
}

fn parse_completion(cfg: &EndpointConfig, body: &str) -> Result<GenerationResult, BackendError> {
    let v: Value = serde_json::from_str(body).map_err(|e| BackendError::MalformedResponse(e.to_string()))?;
    let choice = v
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| BackendError::MalformedResponse("no choices".into()))?;
    let text = choice
        .pointer("/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| BackendError::MalformedResponse("no message content".into()))?
        .to_string();
    let token_probs = match choice.pointer("/logprobs/content").and_then(Value::as_array) {
        Some(tokens) => Some(
            tokens
                .iter()
                .map(|t| {
                    t.get("logprob")
                        .and_then(Value::as_f64)
                        .map(f64::exp)
                        .ok_or_else(|| BackendError::MalformedResponse("token without logprob".into()))
                })
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => {
            if cfg.request_logprobs {
                warn!("endpoint returned no token log-probabilities");
            }
            None
        }
    };
    Ok(GenerationResult { text, token_probs, backend_id: format!("llm:{}", cfg.model) })
}

/// Live chat-completion backend.
pub struct LlmBackend {
    cfg: EndpointConfig,
    transport: Box<dyn HttpTransport>,
    id: String,
}

impl LlmBackend {
    pub fn new(cfg: EndpointConfig, transport: Box<dyn HttpTransport>) -> Self {
        let id = format!("llm:{}", cfg.model);
        LlmBackend { cfg, transport, id }
    }

    pub fn from_env() -> Result<Self, BackendError> {
        Ok(Self::new(EndpointConfig::from_env(), Box::new(ReqwestTransport::new()?)))
    }
}

impl PlannerBackend for LlmBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn generate(&self, prompt: &str, options: &DecodingOptions) -> Result<GenerationResult, BackendError> {
        llm_generate(&self.cfg, self.transport.as_ref(), prompt, options)
    }
}
