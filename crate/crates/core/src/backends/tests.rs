use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};

use serde_json::{json, Value};

use super::mock::{bucket, mock_embedding};
use super::*;

/// Minimal HTTP server answering from a script; the last entry repeats.
struct MockServer {
    url: String,
    requests: Arc<Mutex<Vec<(String, Value)>>>,
}

impl MockServer {
    fn start(script: Vec<(u16, Value)>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/endpoint", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&requests);
        std::thread::spawn(move || {
            for (i, stream) in listener.incoming().enumerate() {
                let Ok(mut stream) = stream else { break };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                let mut auth = String::new();
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    let l = line.trim_end().to_ascii_lowercase();
                    if l.is_empty() {
                        break;
                    }
                    if let Some(v) = l.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if l.starts_with("authorization:") {
                        auth = line.trim_end()["authorization:".len()..].trim().to_string();
                    }
                }
                let mut body = vec![0; len];
                reader.read_exact(&mut body).unwrap();
                log.lock().unwrap().push((auth, serde_json::from_slice(&body).unwrap_or(Value::Null)));
                let (status, reply) = &script[i.min(script.len() - 1)];
                let reply = reply.to_string();
                let _ = write!(
                    stream,
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{reply}",
                    reply.len()
                );
            }
        });
        Self { url, requests }
    }

    fn count(&self) -> usize {
        self.requests.lock().unwrap().len()
    }
}

fn http_config(id: &str, kind: BackendKind, protocol: Protocol, url: &str) -> BackendConfig {
    BackendConfig {
        id: id.into(),
        kind,
        protocol,
        endpoint: Some(url.into()),
        model_name: "m".into(),
        credential_env: None,
        parallelism: 2,
        retry: RetryPolicy { max: 2, base_delay_ms: 1 },
        max_input_chars: None,
        timeout_secs: 5,
        mock: None,
    }
}

fn pools() -> NamePools {
    NamePools::bundled().unwrap()
}

#[test]
fn empty_batch_is_empty() {
    let cfg = BackendConfig::mock("e", BackendKind::Embedding, MockMode::Hashed);
    let c = EmbeddingClient::from_config(&cfg, &pools(), None).unwrap();
    assert!(c.embed_batch(&[]).unwrap().is_empty());
}

#[test]
fn mock_vector_for_abc() {
    let v = mock_embedding("abc");
    // FNV-1a of "abc" is 0xe71fa2190541574b; 0x4b = 75.
    assert_eq!(bucket("abc"), 75);
    for (i, x) in v.iter().enumerate() {
        assert_eq!(*x, if i == 75 { 1.0 } else { 0.0 });
    }
}

#[test]
fn mock_vector_for_x_y() {
    // FNV-1a: "x" = 0xaf63f54c86021707 (0x07 = 7), "y" = 0xaf63f44c86021554 (0x54 = 84).
    assert_eq!((bucket("x"), bucket("y")), (7, 84));
    let v = mock_embedding("x y");
    let h = 1.0 / 2f64.sqrt();
    assert_eq!(v[7], h);
    assert_eq!(v[84], h);
    assert_eq!(v.iter().filter(|x| **x != 0.0).count(), 2);
}

#[test]
fn repeated_text_served_from_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BackendConfig::mock("e", BackendKind::Embedding, MockMode::Hashed);
    let c = EmbeddingClient::from_config(&cfg, &pools(), open_cache(Some(dir.path())).unwrap()).unwrap();
    let a = c.embed("hello world").unwrap();
    assert_eq!((c.stats().hits(), c.stats().misses()), (0, 1));
    let b = c.embed("hello world").unwrap();
    assert_eq!(a, b);
    assert_eq!((c.stats().hits(), c.stats().misses()), (1, 1));

    let batch = c.embed_batch(&["p", "q", "p", "hello world"]).unwrap();
    assert_eq!(batch[0], batch[2]);
    assert_eq!(batch[3], a);
    assert_eq!(c.stats().misses(), 3);

    let fresh = EmbeddingClient::from_config(&cfg, &pools(), open_cache(Some(dir.path())).unwrap()).unwrap();
    assert_eq!(fresh.embed("hello world").unwrap(), a);
    assert_eq!(fresh.stats().misses(), 0);
}

#[test]
fn batch_preserves_order() {
    let cfg = BackendConfig::mock("e", BackendKind::Embedding, MockMode::Hashed);
    let c = EmbeddingClient::from_config(&cfg, &pools(), None).unwrap();
    let texts: Vec<String> = (0..50).map(|i| format!("token{i} other")).collect();
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let out = c.embed_batch(&refs).unwrap();
    for (t, v) in refs.iter().zip(&out) {
        assert_eq!(v.values, mock_embedding(t));
    }
}

#[test]
fn completion_cache_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BackendConfig::mock("c", BackendKind::Completion, MockMode::Extractive);
    let c = CompletionClient::from_config(&cfg, open_cache(Some(dir.path())).unwrap()).unwrap();
    let req = CompletionRequest { prompt: "a b c d e f".into(), temperature: 0.3, max_words_hint: 10, run_index: 2 };
    let first = c.complete(&req).unwrap();
    let second = c.complete(&req).unwrap();
    assert_eq!(first, second);
    assert_eq!(c.stats().hits(), 1);
    let other = CompletionRequest { run_index: 3, ..req };
    c.complete(&other).unwrap();
    assert_eq!(c.stats().misses(), 2);
}

#[test]
fn openai_embedding_over_http_with_retry() {
    let server = MockServer::start(vec![
        (503, json!({"error": "busy"})),
        (200, json!({"data": [{"embedding": [0.6, 0.8]}]})),
    ]);
    std::env::set_var("FAIRSCREEN_TEST_KEY_A", "sekret");
    let mut cfg = http_config("oa", BackendKind::Embedding, Protocol::OpenAi, &server.url);
    cfg.credential_env = Some("FAIRSCREEN_TEST_KEY_A".into());
    let dir = tempfile::tempdir().unwrap();
    let c = EmbeddingClient::from_config(&cfg, &pools(), open_cache(Some(dir.path())).unwrap()).unwrap();
    assert_eq!(c.embed("hi").unwrap().values, vec![0.6, 0.8]);
    assert_eq!(server.count(), 2);
    let reqs = server.requests.lock().unwrap().clone();
    assert_eq!(reqs[1].0, "Bearer sekret");
    assert_eq!(reqs[1].1, json!({"model": "m", "input": ["hi"]}));
    c.embed("hi").unwrap();
    assert_eq!(server.count(), 2);
    assert_eq!(open_cache(Some(dir.path())).unwrap().unwrap().len(), 1);
}

#[test]
fn retries_are_bounded() {
    let server = MockServer::start(vec![(500, json!({}))]);
    let cfg = http_config("oa", BackendKind::Embedding, Protocol::OpenAi, &server.url);
    let c = EmbeddingClient::from_config(&cfg, &pools(), None).unwrap();
    let err = c.embed("hi").unwrap_err();
    assert!(matches!(err, BackendError::RetriesExhausted { attempts: 3, .. }), "{err}");
    assert_eq!(server.count(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let server = MockServer::start(vec![(400, json!({"error": "bad"}))]);
    let cfg = http_config("oa", BackendKind::Embedding, Protocol::OpenAi, &server.url);
    let c = EmbeddingClient::from_config(&cfg, &pools(), None).unwrap();
    assert!(matches!(c.embed("hi"), Err(BackendError::Http { status: 400, .. })));
    assert_eq!(server.count(), 1);
}

#[test]
fn dimension_mismatch_detected() {
    let server = MockServer::start(vec![
        (200, json!({"embeddings": {"float": [[1.0, 0.0]]}})),
        (200, json!({"embeddings": {"float": [[1.0, 0.0, 0.0]]}})),
    ]);
    let cfg = http_config("co", BackendKind::Embedding, Protocol::Cohere, &server.url);
    let c = EmbeddingClient::from_config(&cfg, &pools(), None).unwrap();
    c.embed("a").unwrap();
    assert_eq!(c.embed("b"), Err(BackendError::DimensionMismatch { expected: 2, got: 3 }));
}

#[test]
fn completion_protocols() {
    let server = MockServer::start(vec![(200, json!({"choices": [{"message": {"content": "summary"}}]}))]);
    let cfg = http_config("mi", BackendKind::Completion, Protocol::Mistral, &server.url);
    let c = CompletionClient::from_config(&cfg, None).unwrap();
    let req = CompletionRequest { prompt: "p".into(), temperature: 0.0, max_words_hint: 100, run_index: 1 };
    assert_eq!(c.complete(&req).unwrap(), "summary");
    let body = &server.requests.lock().unwrap()[0].1;
    assert_eq!(body["temperature"], json!(0.0));
    assert_eq!(body["messages"][0]["content"], json!("p"));

    let server = MockServer::start(vec![(200, json!({"message": {"content": [{"type": "text", "text": "hi"}]}}))]);
    let cfg = http_config("co", BackendKind::Completion, Protocol::Cohere, &server.url);
    assert_eq!(CompletionClient::from_config(&cfg, None).unwrap().complete(&req).unwrap(), "hi");
}

#[test]
fn regard_endpoint_and_gate() {
    let server = MockServer::start(vec![
        (200, json!({"positive": 0.7, "negative": 0.1, "neutral": 0.1, "other": 0.1})),
        (200, json!({"positive": 0.7, "negative": 0.7, "neutral": 0.1, "other": 0.1})),
        (500, json!({})),
    ]);
    let mut cfg = http_config("rg", BackendKind::Regard, Protocol::JsonScoring, &server.url);
    cfg.parallelism = 1;
    cfg.retry.max = 0;
    let c = RegardClient::from_config(&cfg, None).unwrap();
    let out = c.score_batch(&["a", "b", "c"]);
    assert_eq!(out[0].unwrap().positive, 0.7);
    assert_eq!(out[1], None);
    assert_eq!(out[2], None);
}

#[test]
fn missing_credential_fails_before_network() {
    let cfg = BackendConfig {
        credential_env: Some("FAIRSCREEN_TEST_UNSET_VAR".into()),
        ..http_config("oa", BackendKind::Embedding, Protocol::OpenAi, "http://127.0.0.1:9/")
    };
    assert_eq!(
        EmbeddingClient::from_config(&cfg, &pools(), None).err(),
        Some(BackendError::MissingCredential("FAIRSCREEN_TEST_UNSET_VAR".into()))
    );
}

#[test]
fn over_long_input_refused() {
    let mut cfg = BackendConfig::mock("e", BackendKind::Embedding, MockMode::Hashed);
    cfg.max_input_chars = Some(5);
    let c = EmbeddingClient::from_config(&cfg, &pools(), None).unwrap();
    assert_eq!(c.embed("abcdef"), Err(BackendError::InputTooLong { len: 6, max: 5 }));
    assert!(c.embed("abcde").is_ok());
}

#[test]
fn config_validation() {
    let toml_src = r#"
        id = "bias"
        kind = "embedding"
        protocol = "mock"
        model_name = "mock-biased"
        mock = { mode = "biased", bias = 3.0, penalized = ["FB", "MB"] }
    "#;
    let cfg: BackendConfig = toml::from_str(toml_src).unwrap();
    cfg.validate().unwrap();
    assert_eq!(cfg.parallelism, DEFAULT_PARALLELISM);
    assert_eq!(cfg.mock, Some(MockMode::Biased { bias: 3.0, penalized: vec![crate::DemographicGroup::FB, crate::DemographicGroup::MB] }));
    let bad = BackendConfig::mock("x", BackendKind::Completion, MockMode::Hashed);
    assert!(bad.validate().is_err());
    let no_endpoint = BackendConfig { endpoint: None, ..http_config("a", BackendKind::Embedding, Protocol::OpenAi, "") };
    assert!(no_endpoint.validate().is_err());
    let regard_unavail = BackendConfig::mock("r", BackendKind::Regard, MockMode::Unavailable);
    regard_unavail.validate().unwrap();
}

#[test]
fn backoff_doubles() {
    let p = RetryPolicy { max: 5, base_delay_ms: 100 };
    assert_eq!(p.delay(1).as_millis(), 100);
    assert_eq!(p.delay(2).as_millis(), 200);
    assert_eq!(p.delay(4).as_millis(), 800);
}

#[test]
fn fan_out_orders_results() {
    let items: Vec<usize> = (0..100).collect();
    assert_eq!(fan_out(&items, 8, |x| x * 2), items.iter().map(|x| x * 2).collect::<Vec<_>>());
    assert!(fan_out(&[] as &[usize], 8, |x| *x).is_empty());
}

#[test]
fn cached_floats_round_trip_exactly() {
    use rand::{Rng, SeedableRng};
    let dir = tempfile::tempdir().unwrap();
    let cache = ResponseCache::open(dir.path()).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let values: Vec<f64> = (0..2000).map(|_| rng.gen::<f64>() * 10f64.powi(rng.gen_range(-12..12))).collect();
    let key = CacheKey::new("b", "m", &json!({"t": "floats"}));
    cache.put(&key, &values).unwrap();
    let back: Vec<f64> = cache.get(&key).unwrap().unwrap();
    assert!(values.iter().zip(&back).all(|(a, b)| a.to_bits() == b.to_bits()));
}
