//! Thin HTTP adapters for hosted providers.
//!
//! | protocol | embedding | completion | regard |
//! |---|---|---|---|
//! | `openai-compatible` | `{model, input:[text]}` → `data[0].embedding` | chat `{model, messages, temperature, max_tokens}` → `choices[0].message.content` | - |
//! | `mistral-compatible` | as openai | as openai | - |
//! | `cohere-compatible` | `{model, texts:[text], input_type, embedding_types:["float"]}` → `embeddings.float[0]` | chat v2 `{model, messages, temperature, max_tokens}` → `message.content[0].text` | - |
//! | `json-scoring` | - | - | `{text}` → `{positive, negative, neutral, other}` |
//!
//! `endpoint` is the full request URL. The credential, when configured, is
//! sent as a bearer token.

use std::time::Duration;

use serde_json::{json, Value};

use crate::textmetrics::RegardScores;

use super::{BackendError, CompletionProvider, CompletionRequest, EmbeddingProvider, Protocol, RegardProvider};

pub struct HttpProvider {
    protocol: Protocol,
    endpoint: String,
    model_name: String,
    credential: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(
        protocol: Protocol,
        endpoint: String,
        model_name: String,
        credential: Option<String>,
        timeout: Duration,
    ) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Config(format!("http client: {e}")))?;
        Ok(Self { protocol, endpoint, model_name, credential, client })
    }

    fn post(&self, body: &Value) -> Result<Value, BackendError> {
        let mut req = self.client.post(&self.endpoint).json(body);
        if let Some(key) = &self.credential {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| BackendError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(BackendError::Http { status: status.as_u16(), body: truncate(&text, 500) });
        }
        serde_json::from_str(&text).map_err(|e| BackendError::Decode(format!("{e}: {}", truncate(&text, 200))))
    }
}

fn truncate(s: &str, max: usize) -> String {
    s.chars().take(max).collect()
}

fn at<'a>(v: &'a Value, path: &[&str]) -> Result<&'a Value, BackendError> {
    let mut cur = v;
    for p in path {
        cur = match p.parse::<usize>() {
            Ok(i) => cur.get(i),
            Err(_) => cur.get(*p),
        }
        .ok_or_else(|| BackendError::Decode(format!("response lacks field {}", path.join("."))))?;
    }
    Ok(cur)
}

fn floats(v: &Value) -> Result<Vec<f64>, BackendError> {
    v.as_array()
        .ok_or_else(|| BackendError::Decode("embedding is not an array".into()))?
        .iter()
        .map(|x| x.as_f64().ok_or_else(|| BackendError::Decode("embedding value is not a number".into())))
        .collect()
}

fn string(v: &Value) -> Result<String, BackendError> {
    v.as_str().map(str::to_string).ok_or_else(|| BackendError::Decode("completion is not a string".into()))
}

impl EmbeddingProvider for HttpProvider {
    fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        match self.protocol {
            Protocol::OpenAi | Protocol::Mistral => {
                let v = self.post(&json!({"model": self.model_name, "input": [text]}))?;
                floats(at(&v, &["data", "0", "embedding"])?)
            }
            Protocol::Cohere => {
                let v = self.post(&json!({
                    "model": self.model_name,
                    "texts": [text],
                    "input_type": "search_document",
                    "embedding_types": ["float"],
                }))?;
                floats(at(&v, &["embeddings", "float", "0"])?)
            }
            p => Err(BackendError::Config(format!("protocol {p} cannot serve embeddings"))),
        }
    }
}

impl CompletionProvider for HttpProvider {
    fn complete(&self, req: &CompletionRequest) -> Result<String, BackendError> {
        let mut body = json!({
            "model": self.model_name,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": req.temperature,
        });
        if req.max_words_hint > 0 {
            body["max_tokens"] = json!(req.max_words_hint * 2);
        }
        match self.protocol {
            Protocol::OpenAi | Protocol::Mistral => string(at(&self.post(&body)?, &["choices", "0", "message", "content"])?),
            Protocol::Cohere => string(at(&self.post(&body)?, &["message", "content", "0", "text"])?),
            p => Err(BackendError::Config(format!("protocol {p} cannot serve completions"))),
        }
    }
}

impl RegardProvider for HttpProvider {
    fn score(&self, text: &str) -> Result<RegardScores, BackendError> {
        match self.protocol {
            Protocol::JsonScoring => {
                let v = self.post(&json!({"text": text}))?;
                serde_json::from_value(v).map_err(|e| BackendError::Decode(e.to_string()))
            }
            p => Err(BackendError::Config(format!("protocol {p} cannot serve regard scores"))),
        }
    }
}
