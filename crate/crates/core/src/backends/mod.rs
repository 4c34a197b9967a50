//! Embedding, completion and regard backends.
//!
//! Providers (HTTP adapters or deterministic mocks) are wrapped in clients
//! that add the on-disk response cache, bounded retries with exponential
//! backoff, a bounded number of in-flight requests, input-length checks and,
//! for embeddings, a dimension-consistency check.

pub mod cache;
pub mod http;
pub mod mock;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::corpus::NamePools;
use crate::textmetrics::RegardScores;

pub use cache::{CacheKey, ResponseCache};
pub use mock::MockMode;

pub const DEFAULT_PARALLELISM: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("backend config: {0}")]
    Config(String),
    #[error("environment variable {0} holding the credential is not set")]
    MissingCredential(String),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("transport: {0}")]
    Transport(String),
    #[error("undecodable response: {0}")]
    Decode(String),
    #[error("input of {len} characters exceeds the limit of {max}")]
    InputTooLong { len: usize, max: usize },
    #[error("embedding dimension {got} differs from earlier responses ({expected})")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("embedding contains non-finite values")]
    NonFinite,
    #[error("response cache: {0}")]
    Cache(String),
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: Box<BackendError> },
}

impl BackendError {
    fn is_retryable(&self) -> bool {
        match self {
            BackendError::Transport(_) => true,
            BackendError::Http { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Embedding,
    Completion,
    Regard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "openai-compatible")]
    OpenAi,
    #[serde(rename = "cohere-compatible")]
    Cohere,
    #[serde(rename = "mistral-compatible")]
    Mistral,
    #[serde(rename = "json-scoring")]
    JsonScoring,
    #[serde(rename = "mock")]
    Mock,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::OpenAi => "openai-compatible",
            Protocol::Cohere => "cohere-compatible",
            Protocol::Mistral => "mistral-compatible",
            Protocol::JsonScoring => "json-scoring",
            Protocol::Mock => "mock",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetryPolicy {
    pub max: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max: 3, base_delay_ms: 500 }
    }
}

impl RetryPolicy {
    /// Delay before retry `attempt` (1-based): `base * 2^(attempt-1)`.
    pub fn delay(&self, attempt: u32) -> Duration {
        Duration::from_millis(self.base_delay_ms.saturating_mul(1u64 << (attempt - 1).min(20)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub id: String,
    pub kind: BackendKind,
    pub protocol: Protocol,
    #[serde(default)]
    pub endpoint: Option<String>,
    pub model_name: String,
    #[serde(default)]
    pub credential_env: Option<String>,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default)]
    pub max_input_chars: Option<usize>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub mock: Option<MockMode>,
}

fn default_parallelism() -> usize {
    DEFAULT_PARALLELISM
}

fn default_timeout() -> u64 {
    60
}

impl BackendConfig {
    /// Offline mock backend with default settings.
    pub fn mock(id: &str, kind: BackendKind, mock: MockMode) -> Self {
        Self {
            id: id.into(),
            kind,
            protocol: Protocol::Mock,
            endpoint: None,
            model_name: id.into(),
            credential_env: None,
            parallelism: DEFAULT_PARALLELISM,
            retry: RetryPolicy::default(),
            max_input_chars: None,
            timeout_secs: default_timeout(),
            mock: Some(mock),
        }
    }

    /// Reads the credential; a configured but unset variable is an error.
    pub fn credential(&self) -> Result<Option<String>, BackendError> {
        match &self.credential_env {
            None => Ok(None),
            Some(var) => match std::env::var(var) {
                Ok(v) if !v.is_empty() => Ok(Some(v)),
                _ => Err(BackendError::MissingCredential(var.clone())),
            },
        }
    }

    /// Static checks that need no network.
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.parallelism == 0 {
            return Err(BackendError::Config(format!("{}: parallelism must be positive", self.id)));
        }
        match (self.protocol, &self.mock, self.kind) {
            (Protocol::Mock, None, _) => {
                Err(BackendError::Config(format!("{}: mock protocol needs a [mock] block", self.id)))
            }
            (Protocol::Mock, Some(m), kind) => {
                if m.serves(kind) {
                    Ok(())
                } else {
                    Err(BackendError::Config(format!("{}: mock mode does not fit kind {kind:?}", self.id)))
                }
            }
            (_, _, kind) => {
                if self.endpoint.is_none() {
                    return Err(BackendError::Config(format!("{}: endpoint is required", self.id)));
                }
                let ok = match kind {
                    BackendKind::Regard => self.protocol == Protocol::JsonScoring,
                    _ => self.protocol != Protocol::JsonScoring,
                };
                if ok {
                    Ok(())
                } else {
                    Err(BackendError::Config(format!("{}: protocol {} cannot serve {kind:?}", self.id, self.protocol)))
                }
            }
        }
    }

    fn http(&self) -> Result<http::HttpProvider, BackendError> {
        http::HttpProvider::new(
            self.protocol,
            self.endpoint.clone().unwrap_or_default(),
            self.model_name.clone(),
            self.credential()?,
            Duration::from_secs(self.timeout_secs),
        )
    }
}

pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_words_hint: u32,
    pub run_index: u32,
}

pub trait CompletionProvider: Send + Sync {
    fn complete(&self, req: &CompletionRequest) -> Result<String, BackendError>;
}

pub trait RegardProvider: Send + Sync {
    fn score(&self, text: &str) -> Result<RegardScores, BackendError>;
}

/// Fixed-length embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn dimension(&self) -> usize {
        self.values.len()
    }
}

/// Cache and request counters.
#[derive(Debug, Default)]
pub struct CallStats {
    hits: AtomicU64,
    misses: AtomicU64,
}

impl CallStats {
    /// Requests answered from the cache (or from an identical request in the same batch).
    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    /// Requests sent to the provider.
    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }
}

struct Common {
    backend_id: String,
    model_name: String,
    cache: Option<ResponseCache>,
    retry: RetryPolicy,
    parallelism: usize,
    max_input_chars: Option<usize>,
    stats: CallStats,
}

impl Common {
    fn new(cfg: &BackendConfig, cache: Option<ResponseCache>) -> Self {
        Self {
            backend_id: cfg.id.clone(),
            model_name: cfg.model_name.clone(),
            cache,
            retry: cfg.retry,
            parallelism: cfg.parallelism.max(1),
            max_input_chars: cfg.max_input_chars,
            stats: CallStats::default(),
        }
    }

    fn check_len(&self, text: &str) -> Result<(), BackendError> {
        match self.max_input_chars {
            Some(max) => {
                let len = text.chars().count();
                if len > max {
                    Err(BackendError::InputTooLong { len, max })
                } else {
                    Ok(())
                }
            }
            None => Ok(()),
        }
    }

    fn with_retry<T>(&self, f: impl Fn() -> Result<T, BackendError>) -> Result<T, BackendError> {
        let mut attempt = 0;
        loop {
            match f() {
                Ok(v) => return Ok(v),
                Err(e) if e.is_retryable() && attempt < self.retry.max => {
                    attempt += 1;
                    log::warn!("{}: {e}; retry {attempt}/{}", self.backend_id, self.retry.max);
                    std::thread::sleep(self.retry.delay(attempt));
                }
                Err(e) if attempt > 0 => {
                    return Err(BackendError::RetriesExhausted { attempts: attempt + 1, last: Box::new(e) })
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// Serves from cache or calls the provider, writing the result through.
    fn cached<T: Serialize + DeserializeOwned>(
        &self,
        payload: &Value,
        check: impl Fn(&T) -> Result<(), BackendError>,
        call: impl Fn() -> Result<T, BackendError>,
    ) -> Result<T, BackendError> {
        let key = CacheKey::new(&self.backend_id, &self.model_name, payload);
        if let Some(cache) = &self.cache {
            if let Some(v) = cache.get::<T>(&key)? {
                check(&v)?;
                self.stats.hits.fetch_add(1, Ordering::Relaxed);
                return Ok(v);
            }
        }
        self.stats.misses.fetch_add(1, Ordering::Relaxed);
        let v = self.with_retry(&call)?;
        check(&v)?;
        if let Some(cache) = &self.cache {
            cache.put(&key, &v)?;
        }
        Ok(v)
    }

    /// Runs `f` over distinct inputs with at most `parallelism` in flight and
    /// returns results in input order.
    fn batch<R: Clone + Send>(
        &self,
        inputs: &[&str],
        f: impl Fn(&str) -> Result<R, BackendError> + Sync,
    ) -> Result<Vec<R>, BackendError> {
        let mut distinct: Vec<&str> = Vec::new();
        let mut slot: HashMap<&str, usize> = HashMap::new();
        let index: Vec<usize> = inputs
            .iter()
            .map(|t| {
                *slot.entry(t).or_insert_with(|| {
                    distinct.push(t);
                    distinct.len() - 1
                })
            })
            .collect();
        let dupes = (inputs.len() - distinct.len()) as u64;
        self.stats.hits.fetch_add(dupes, Ordering::Relaxed);
        let results = fan_out(&distinct, self.parallelism, |t| f(t));
        let results: Vec<R> = results.into_iter().collect::<Result<_, _>>()?;
        Ok(index.into_iter().map(|i| results[i].clone()).collect())
    }
}

/// Applies `f` to every item with at most `parallelism` worker threads;
/// output order matches input order.
pub fn fan_out<T: Sync, R: Send>(items: &[T], parallelism: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = parallelism.max(1).min(items.len());
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let out: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                out.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    out.into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|r| r.expect("every index processed"))
        .collect()
}

pub struct EmbeddingClient {
    common: Common,
    provider: Box<dyn EmbeddingProvider>,
    dimension: Mutex<Option<usize>>,
}

impl EmbeddingClient {
    pub fn new(cfg: &BackendConfig, provider: Box<dyn EmbeddingProvider>, cache: Option<ResponseCache>) -> Self {
        Self { common: Common::new(cfg, cache), provider, dimension: Mutex::new(None) }
    }

    pub fn from_config(cfg: &BackendConfig, pools: &NamePools, cache: Option<ResponseCache>) -> Result<Self, BackendError> {
        cfg.validate()?;
        if cfg.kind != BackendKind::Embedding {
            return Err(BackendError::Config(format!("{} is not an embedding backend", cfg.id)));
        }
        let provider: Box<dyn EmbeddingProvider> = match &cfg.mock {
            Some(m) if cfg.protocol == Protocol::Mock => Box::new(mock::MockEmbedder::new(m.clone(), pools.clone())),
            _ => Box::new(cfg.http()?),
        };
        Ok(Self::new(cfg, provider, cache))
    }

    pub fn backend_id(&self) -> &str {
        &self.common.backend_id
    }

    pub fn model_name(&self) -> &str {
        &self.common.model_name
    }

    pub fn stats(&self) -> &CallStats {
        &self.common.stats
    }

    fn check(&self, v: &Vec<f64>) -> Result<(), BackendError> {
        if v.is_empty() {
            return Err(BackendError::Decode("empty embedding".into()));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(BackendError::NonFinite);
        }
        let mut dim = self.dimension.lock().expect("dimension lock");
        match *dim {
            Some(d) if d != v.len() => Err(BackendError::DimensionMismatch { expected: d, got: v.len() }),
            Some(_) => Ok(()),
            None => {
                *dim = Some(v.len());
                Ok(())
            }
        }
    }

    pub fn embed(&self, text: &str) -> Result<EmbeddingVector, BackendError> {
        self.common.check_len(text)?;
        let values = self.common.cached(&json!({"text": text}), |v| self.check(v), || self.provider.embed(text))?;
        Ok(EmbeddingVector { values })
    }

    /// Order-preserving batch embedding.
    pub fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, BackendError> {
        for t in texts {
            self.common.check_len(t)?;
        }
        self.common.batch(texts, |t| self.embed(t))
    }
}

pub struct CompletionClient {
    common: Common,
    provider: Box<dyn CompletionProvider>,
}

impl CompletionClient {
    pub fn new(cfg: &BackendConfig, provider: Box<dyn CompletionProvider>, cache: Option<ResponseCache>) -> Self {
        Self { common: Common::new(cfg, cache), provider }
    }

    pub fn from_config(cfg: &BackendConfig, cache: Option<ResponseCache>) -> Result<Self, BackendError> {
        cfg.validate()?;
        if cfg.kind != BackendKind::Completion {
            return Err(BackendError::Config(format!("{} is not a completion backend", cfg.id)));
        }
        let provider: Box<dyn CompletionProvider> = match &cfg.mock {
            Some(m) if cfg.protocol == Protocol::Mock => Box::new(mock::MockCompleter::new(m.clone())),
            _ => Box::new(cfg.http()?),
        };
        Ok(Self::new(cfg, provider, cache))
    }

    pub fn backend_id(&self) -> &str {
        &self.common.backend_id
    }

    pub fn model_name(&self) -> &str {
        &self.common.model_name
    }

    pub fn stats(&self) -> &CallStats {
        &self.common.stats
    }

    pub fn parallelism(&self) -> usize {
        self.common.parallelism
    }

    /// Cached per (prompt, temperature, length hint, run index).
    pub fn complete(&self, req: &CompletionRequest) -> Result<String, BackendError> {
        self.common.check_len(&req.prompt)?;
        let payload = serde_json::to_value(req).map_err(|e| BackendError::Decode(e.to_string()))?;
        self.common.cached(&payload, |_: &String| Ok(()), || self.provider.complete(req))
    }

    /// Order-preserving batch completion within the parallelism bound.
    pub fn complete_batch(&self, reqs: &[CompletionRequest]) -> Vec<Result<String, BackendError>> {
        fan_out(reqs, self.common.parallelism, |r| self.complete(r))
    }
}

pub struct RegardClient {
    common: Common,
    provider: Box<dyn RegardProvider>,
}

impl RegardClient {
    pub fn new(cfg: &BackendConfig, provider: Box<dyn RegardProvider>, cache: Option<ResponseCache>) -> Self {
        Self { common: Common::new(cfg, cache), provider }
    }

    pub fn from_config(cfg: &BackendConfig, cache: Option<ResponseCache>) -> Result<Self, BackendError> {
        cfg.validate()?;
        if cfg.kind != BackendKind::Regard {
            return Err(BackendError::Config(format!("{} is not a regard backend", cfg.id)));
        }
        let provider: Box<dyn RegardProvider> = match &cfg.mock {
            Some(m) if cfg.protocol == Protocol::Mock => Box::new(mock::MockRegardScorer::new(m.clone())),
            _ => Box::new(cfg.http()?),
        };
        Ok(Self::new(cfg, provider, cache))
    }

    pub fn backend_id(&self) -> &str {
        &self.common.backend_id
    }

    pub fn stats(&self) -> &CallStats {
        &self.common.stats
    }

    /// Scores that pass the normalization gate; anything else is an error.
    pub fn score(&self, text: &str) -> Result<RegardScores, BackendError> {
        self.common.check_len(text)?;
        self.common.cached(
            &json!({"text": text}),
            |s: &RegardScores| s.validated().map(|_| ()).map_err(|e| BackendError::Decode(e.to_string())),
            || self.provider.score(text),
        )
    }

    /// Per-text scores; failures become `None` so the other measures survive.
    pub fn score_batch(&self, texts: &[&str]) -> Vec<Option<RegardScores>> {
        fan_out(texts, self.common.parallelism, |t| match self.score(t) {
            Ok(s) => Some(s),
            Err(e) => {
                log::warn!("regard unavailable: {e}");
                None
            }
        })
    }
}

/// Opens the response cache under `dir`, if one is configured.
pub fn open_cache(dir: Option<&Path>) -> Result<Option<ResponseCache>, BackendError> {
    dir.map(ResponseCache::open).transpose()
}

#[cfg(test)]
mod tests;
