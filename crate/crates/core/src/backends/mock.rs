//! Deterministic offline backends used by tests and demo runs.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{DemographicGroup, NamePools};
use crate::textmetrics::{sentiment, RegardScores};

use super::{BackendError, BackendKind, CompletionProvider, CompletionRequest, EmbeddingProvider, RegardProvider};

/// Dimension of [`mock_embedding`].
pub const MOCK_DIM: usize = 256;
/// Bias level at which [`mock_biased_embedding`] reliably separates groups.
pub const HIGH_BIAS: f64 = 3.0;
/// Bias level that leaves scores unchanged.
pub const ZERO_BIAS: f64 = 0.0;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0100_0000_01b3;

/// 64-bit FNV-1a over the token's UTF-8 bytes.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// Bucket of a whitespace token: `fnv1a(token) mod 256`.
pub fn bucket(token: &str) -> usize {
    (fnv1a(token.as_bytes()) % MOCK_DIM as u64) as usize
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

fn bag<'a>(tokens: impl Iterator<Item = &'a str>) -> Vec<f64> {
    let mut v = vec![0.0; MOCK_DIM];
    for t in tokens {
        v[bucket(t)] += 1.0;
    }
    v
}

/// Hashed bag of words: whitespace tokens counted into 256 FNV-1a buckets,
/// then L2-normalized. Text without tokens maps to the zero vector.
pub fn mock_embedding(text: &str) -> Vec<f64> {
    normalize(bag(text.split_whitespace()))
}

fn name_of(token: &str) -> &str {
    token.trim_matches(|c: char| !c.is_alphanumeric())
}

/// [`mock_embedding`] with every first name from the pools removed, so
/// name perturbations cannot move scores.
pub fn mock_blind_embedding(text: &str, pools: &NamePools) -> Vec<f64> {
    normalize(bag(text.split_whitespace().filter(|t| !pools.contains_name(name_of(t)))))
}

/// Whether the text contains a first name listed only in a penalized pool.
pub fn has_group_tag(text: &str, pools: &NamePools, penalized: &[DemographicGroup]) -> bool {
    text.split_whitespace().map(name_of).any(|t| {
        let groups = pools.groups_of(t);
        groups.len() == 1 && penalized.contains(&groups[0])
    })
}

/// [`mock_embedding`] extended by one coordinate that is `bias` when the
/// text carries a penalized group's name and 0 otherwise, then normalized.
///
/// Job posts carry no names, so a tagged resume's cosine with any job is
/// scaled by `1 / sqrt(1 + bias^2)` and untagged scores are unchanged.
pub fn mock_biased_embedding(text: &str, pools: &NamePools, penalized: &[DemographicGroup], bias: f64) -> Vec<f64> {
    let mut v = mock_embedding(text);
    let b = if has_group_tag(text, pools, penalized) { bias } else { 0.0 };
    if b == 0.0 {
        v.push(0.0);
        return v;
    }
    let empty = v.iter().all(|&x| x == 0.0);
    let scale = if empty { 0.0 } else { 1.0 / (1.0 + b * b).sqrt() };
    v.iter_mut().for_each(|x| *x *= scale);
    v.push(if empty { b.signum() } else { b * scale });
    v
}

/// Behaviour of a mock backend, selected by `mode`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum MockMode {
    /// Embedding: [`mock_embedding`].
    Hashed,
    /// Embedding: [`mock_blind_embedding`].
    Blind,
    /// Embedding: [`mock_biased_embedding`].
    Biased {
        bias: f64,
        #[serde(default = "default_penalized")]
        penalized: Vec<DemographicGroup>,
    },
    /// Completion: the last non-empty line of the prompt.
    Echo,
    /// Completion: a constant text.
    Fixed { text: String },
    /// Completion: the first rule whose `contains` occurs in the prompt, else `default`.
    Keyed { rules: Vec<KeyedResponse>, default: String },
    /// Completion: sentences stitched from the prompt's words, seeded by
    /// prompt, run and temperature. At temperature 0 every run agrees.
    Extractive,
    /// Regard: constant scores.
    FixedRegard { scores: RegardScores },
    /// Regard: positive = max(p, 0), negative = max(-p, 0), neutral = 1 - |p|
    /// for lexicon polarity p.
    LexiconRegard,
    /// Completion or regard: always fails.
    Unavailable,
}

impl MockMode {
    pub fn serves(&self, kind: BackendKind) -> bool {
        use MockMode::*;
        match self {
            Hashed | Blind | Biased { .. } => kind == BackendKind::Embedding,
            Echo | Fixed { .. } | Keyed { .. } | Extractive => kind == BackendKind::Completion,
            FixedRegard { .. } | LexiconRegard => kind == BackendKind::Regard,
            Unavailable => kind != BackendKind::Embedding,
        }
    }
}

fn default_penalized() -> Vec<DemographicGroup> {
    vec![DemographicGroup::FB]
}

pub struct MockEmbedder {
    mode: MockMode,
    pools: NamePools,
}

impl MockEmbedder {
    pub fn new(mode: MockMode, pools: NamePools) -> Self {
        Self { mode, pools }
    }
}

impl EmbeddingProvider for MockEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        Ok(match &self.mode {
            MockMode::Hashed => mock_embedding(text),
            MockMode::Blind => mock_blind_embedding(text, &self.pools),
            MockMode::Biased { bias, penalized } => mock_biased_embedding(text, &self.pools, penalized, *bias),
            m => return Err(BackendError::Config(format!("mock mode {m:?} cannot embed"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyedResponse {
    pub contains: String,
    pub response: String,
}

pub struct MockCompleter {
    mode: MockMode,
}

impl MockCompleter {
    pub fn new(mode: MockMode) -> Self {
        Self { mode }
    }
}

fn extractive(req: &CompletionRequest) -> String {
    let words: Vec<&str> = req
        .prompt
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|w| !w.is_empty())
        .collect();
    if words.is_empty() {
        return String::new();
    }
    let run = if req.temperature == 0.0 { 0 } else { req.run_index };
    let mut h = Sha256::new();
    h.update(req.prompt.as_bytes());
    h.update(run.to_le_bytes());
    h.update(req.temperature.to_bits().to_le_bytes());
    let mut state = u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"));
    let mut next = || {
        state = state.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
        (state >> 33) as usize
    };
    let target = if req.max_words_hint > 0 { req.max_words_hint as usize } else { 50 };
    let mut out = String::new();
    let mut written = 0;
    while written < target {
        let len = (8 + next() % 8).min(target - written).max(1);
        let start = next() % words.len();
        let sentence: Vec<&str> = (0..len).map(|i| words[(start + i) % words.len()]).collect();
        let mut s = sentence.join(" ");
        if let Some(first) = s.get(..1) {
            s = first.to_uppercase() + &s[1..];
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&s);
        out.push('.');
        written += len;
    }
    out
}

impl CompletionProvider for MockCompleter {
    fn complete(&self, req: &CompletionRequest) -> Result<String, BackendError> {
        match &self.mode {
            MockMode::Echo => Ok(req
                .prompt
                .lines()
                .rev()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("")
                .trim()
                .to_string()),
            MockMode::Fixed { text } => Ok(text.clone()),
            MockMode::Keyed { rules, default } => Ok(rules
                .iter()
                .find(|r| req.prompt.contains(&r.contains))
                .map_or_else(|| default.clone(), |r| r.response.clone())),
            MockMode::Extractive => Ok(extractive(req)),
            MockMode::Unavailable => Err(BackendError::Unavailable("mock completion backend is down".into())),
            m => Err(BackendError::Config(format!("mock mode {m:?} cannot complete"))),
        }
    }
}

pub struct MockRegardScorer {
    mode: MockMode,
}

impl MockRegardScorer {
    pub fn new(mode: MockMode) -> Self {
        Self { mode }
    }
}

impl RegardProvider for MockRegardScorer {
    fn score(&self, text: &str) -> Result<RegardScores, BackendError> {
        match &self.mode {
            MockMode::FixedRegard { scores } => Ok(*scores),
            MockMode::LexiconRegard => {
                let p = sentiment(text).0;
                Ok(RegardScores { positive: p.max(0.0), negative: (-p).max(0.0), neutral: 1.0 - p.abs(), other: 0.0 })
            }
            MockMode::Unavailable => Err(BackendError::Unavailable("mock regard endpoint is down".into())),
            m => Err(BackendError::Config(format!("mock mode {m:?} cannot score regard"))),
        }
    }
}
