use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::prompt::{build_prompt, parse_verdict, VerdictValue, PROMPT_VERSION, SYSTEM_MESSAGE};
use super::{Judge, JudgeError, Verdict};
use crate::datamodel::GenerationRecord;

/// Connection and pacing settings for a chat-completion judge. The API key itself is
/// never part of the config; only the name of the environment variable holding it is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JudgeConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub api_key_env_var: String,
    pub max_concurrency: usize,
    pub retries: u32,
    #[serde(with = "secs")]
    pub timeout: Duration,
    #[serde(with = "secs")]
    pub retry_backoff: Duration,
    pub cache_dir: PathBuf,
    pub temperature: f64,
    /// Token-bucket refill rate; `None` disables rate limiting.
    pub requests_per_second: Option<f64>,
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

impl Default for JudgeConfig {
    fn default() -> Self {
        Self {
            endpoint_url: "http://localhost:8000/v1/chat/completions".into(),
            model_name: "gpt-4o-mini".into(),
            api_key_env_var: "JUDGE_API_KEY".into(),
            max_concurrency: 4,
            retries: 2,
            timeout: Duration::from_secs(60),
            retry_backoff: Duration::from_millis(500),
            cache_dir: PathBuf::from(".judge-cache"),
            temperature: 0.0,
            requests_per_second: None,
        }
    }
}

impl JudgeConfig {
    pub fn check(&self) -> Result<(), JudgeError> {
        let bad = |m: &str| Err(JudgeError::Config(m.to_owned()));
        if self.endpoint_url.trim().is_empty() {
            return bad("endpoint_url is empty");
        }
        if self.model_name.trim().is_empty() {
            return bad("model_name is empty");
        }
        if self.max_concurrency == 0 {
            return bad("max_concurrency must be at least 1");
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return bad("temperature must be a non-negative number");
        }
        if let Some(r) = self.requests_per_second {
            if !(r.is_finite() && r > 0.0) {
                return bad("requests_per_second must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

impl ChatRequest {
    pub fn new(model: &str, prompt: &str, temperature: f64) -> Self {
        let msg = |role: &str, content: &str| ChatMessage {
            role: role.into(),
            content: content.into(),
        };
        Self {
            model: model.into(),
            messages: vec![msg("system", SYSTEM_MESSAGE), msg("user", prompt)],
            temperature,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct TransportError(pub String);

/// Sends one chat request and returns the reply text.
pub trait ChatTransport: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError>;
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
    url: String,
    api_key: Option<String>,
}

impl HttpTransport {
    pub fn new(config: &JudgeConfig) -> Result<Self, JudgeError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| JudgeError::Config(format!("cannot build HTTP client: {e}")))?;
        let api_key = std::env::var(&config.api_key_env_var).ok().filter(|k| !k.is_empty());
        if api_key.is_none() {
            log::warn!("{} is not set; sending judge requests without authorization", config.api_key_env_var);
        }
        Ok(Self {
            client,
            url: config.endpoint_url.clone(),
            api_key,
        })
    }
}

/// Pulls the reply out of a chat-completion response, falling back to a top-level
/// `text` / `content` / `output_text` string.
pub(crate) fn extract_text(body: &serde_json::Value) -> Option<String> {
    let choice = body.pointer("/choices/0");
    choice
        .and_then(|c| c.pointer("/message/content").or_else(|| c.get("text")))
        .or_else(|| ["text", "content", "output_text"].iter().find_map(|k| body.get(*k)))
        .and_then(|v| v.as_str())
        .map(str::to_owned)
}

impl ChatTransport for HttpTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let mut req = self.client.post(&self.url).json(request);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| TransportError(format!("request failed: {}", e.without_url())))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(TransportError(format!("endpoint returned HTTP {status}")));
        }
        let body: serde_json::Value = resp
            .json()
            .map_err(|e| TransportError(format!("response is not JSON: {}", e.without_url())))?;
        extract_text(&body).ok_or_else(|| TransportError("response has no text field".into()))
    }
}

/// One JSON file per `sha256(model, prompt)`. Writes go through a temporary file and a
/// rename, so concurrent writers of the same key leave one complete file behind.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    model: String,
    prompt_version: String,
    response: String,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(prompt: &str, model: &str) -> String {
        let mut h = Sha256::new();
        h.update(model.as_bytes());
        h.update([0]);
        h.update(prompt.as_bytes());
        hex::encode(h.finalize())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let text = std::fs::read_to_string(self.path(key)).ok()?;
        match serde_json::from_str::<CacheEntry>(&text) {
            Ok(entry) => Some(entry.response),
            Err(e) => {
                log::warn!("ignoring unreadable cache entry {key}: {e}");
                None
            }
        }
    }

    pub fn put(&self, key: &str, model: &str, response: &str) -> std::io::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let entry = CacheEntry {
            model: model.into(),
            prompt_version: PROMPT_VERSION.into(),
            response: response.into(),
        };
        let n = TMP_COUNTER.fetch_add(1, Ordering::Relaxed);
        let tmp = self.dir.join(format!(".{key}.{}.{n}.tmp", std::process::id()));
        std::fs::write(&tmp, serde_json::to_vec_pretty(&entry)?)?;
        std::fs::rename(&tmp, self.path(key))
    }
}

struct TokenBucket {
    rate: f64,
    capacity: f64,
    tokens: f64,
    last: Instant,
}

impl TokenBucket {
    fn new(rate: f64) -> Self {
        let capacity = rate.max(1.0);
        Self {
            rate,
            capacity,
            tokens: capacity,
            last: Instant::now(),
        }
    }

    /// Takes a token, or returns how long to wait before one is available.
    fn try_take(&mut self) -> Result<(), Duration> {
        let now = Instant::now();
        self.tokens = (self.tokens + now.duration_since(self.last).as_secs_f64() * self.rate).min(self.capacity);
        self.last = now;
        if self.tokens >= 1.0 {
            self.tokens -= 1.0;
            Ok(())
        } else {
            Err(Duration::from_secs_f64((1.0 - self.tokens) / self.rate))
        }
    }
}

/// Judge backed by a chat-completion transport, with response caching, retries and
/// optional rate limiting.
pub struct LlmJudge<C> {
    config: JudgeConfig,
    transport: C,
    cache: Option<ResponseCache>,
    bucket: Option<Mutex<TokenBucket>>,
}

impl<C: ChatTransport> LlmJudge<C> {
    pub fn new(config: JudgeConfig, transport: C) -> Result<Self, JudgeError> {
        config.check()?;
        let bucket = config.requests_per_second.map(|r| Mutex::new(TokenBucket::new(r)));
        let cache = Some(ResponseCache::new(config.cache_dir.clone()));
        Ok(Self {
            config,
            transport,
            cache,
            bucket,
        })
    }

    pub fn without_cache(mut self) -> Self {
        self.cache = None;
        self
    }

    pub fn config(&self) -> &JudgeConfig {
        &self.config
    }

    pub fn transport(&self) -> &C {
        &self.transport
    }

    fn wait_for_token(&self) {
        let Some(bucket) = &self.bucket else { return };
        loop {
            let wait = bucket.lock().unwrap().try_take();
            match wait {
                Ok(()) => return,
                Err(d) => std::thread::sleep(d),
            }
        }
    }

    /// Rules on one (output, reference) pair, consulting the cache first.
    pub fn judge_texts(&self, output: &str, reference: &str) -> Verdict {
        let prompt = build_prompt(output, reference);
        let key = ResponseCache::key(&prompt, &self.config.model_name);
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&key)) {
            return Verdict::from_response(hit, true);
        }
        let request = ChatRequest::new(&self.config.model_name, &prompt, self.config.temperature);
        let mut last_text = None;
        let mut last_error = None;
        for attempt in 0..=self.config.retries {
            if attempt > 0 && !self.config.retry_backoff.is_zero() {
                std::thread::sleep(self.config.retry_backoff * 2u32.saturating_pow(attempt - 1));
            }
            self.wait_for_token();
            match self.transport.complete(&request) {
                Ok(text) => {
                    let parsed = parse_verdict(&text) != VerdictValue::Ambiguous;
                    last_text = Some(text);
                    if parsed {
                        break;
                    }
                }
                Err(e) => {
                    log::debug!("judge attempt {} failed: {e}", attempt + 1);
                    last_error = Some(e);
                }
            }
        }
        match last_text {
            Some(text) => {
                if let Some(cache) = &self.cache {
                    if let Err(e) = cache.put(&key, &self.config.model_name, &text) {
                        log::warn!("cannot write judge cache entry {key}: {e}");
                    }
                }
                Verdict::from_response(text, false)
            }
            None => Verdict::failed(last_error.map_or_else(|| "no attempt made".into(), |e| e.0)),
        }
    }
}

impl<C: ChatTransport> Judge for LlmJudge<C> {
    fn verdict(&self, record: &GenerationRecord) -> Result<Verdict, JudgeError> {
        Ok(self.judge_texts(&record.output, &record.reference))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn extracts_reply_text() {
        let chat = json!({"choices": [{"message": {"role": "assistant", "content": "[YES]"}}]});
        assert_eq!(extract_text(&chat).as_deref(), Some("[YES]"));
        let legacy = json!({"choices": [{"text": "[NO]"}]});
        assert_eq!(extract_text(&legacy).as_deref(), Some("[NO]"));
        assert_eq!(extract_text(&json!({"text": "yes"})).as_deref(), Some("yes"));
        assert_eq!(extract_text(&json!({"choices": []})), None);
    }

    #[test]
    fn bucket_paces_after_burst() {
        let mut b = TokenBucket::new(2.0);
        assert!(b.try_take().is_ok());
        assert!(b.try_take().is_ok());
        assert!(b.try_take().is_err());
    }

    #[test]
    fn config_checks() {
        assert!(JudgeConfig::default().check().is_ok());
        let zero = JudgeConfig { max_concurrency: 0, ..Default::default() };
        assert!(zero.check().is_err());
        let text = serde_json::to_string(&JudgeConfig::default()).unwrap();
        assert!(!text.to_lowercase().contains("bearer"));
        assert_eq!(serde_json::from_str::<JudgeConfig>(&text).unwrap(), JudgeConfig::default());
    }
}
