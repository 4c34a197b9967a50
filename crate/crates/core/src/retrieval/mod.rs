//! Similarity scoring, competition ranking, and the two retrieval fairness
//! metrics: exclusion and non-uniformity.
//!
//! Ranks follow `rank(s_i) = 1 + |{j : s_j > s_i}|`, so tied scores share a
//! rank and the next rank skips. Top-n membership is `rank <= n` and may hold
//! more than `n` resumes when a tie straddles the boundary.

mod exclusion;
mod nonuniformity;
mod scores;

use std::collections::HashSet;

use thiserror::Error;

use crate::stats::StatsError;

pub use exclusion::{
    directional_exclusion, exclusion, exclusion_counts, Direction, DirectionalRow, ExclusionResult, SwapExclusion,
};
pub use nonuniformity::{
    non_uniformity, non_uniformity_grouped, top_k_size, top_x_counts, JobPool, NonUniformityMode, NonUniformityResult,
    MIN_POWERED_K,
};
pub use scores::{read_scores, score_table, write_scores, ScoreRow, ScoreTable, SCORE_SCHEMA_VERSION};

#[derive(Debug, Error, PartialEq)]
pub enum RetrievalError {
    #[error("cosine of a zero vector")]
    ZeroVector,
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("non-finite score or vector value")]
    NonFinite,
    #[error("resume {0} scored twice for one job")]
    DuplicateResume(String),
    #[error("top-n set is empty")]
    EmptyTopN,
    #[error("no perturbed score for resume {0}")]
    MissingPerturbed(String),
    #[error("percentage {0} outside (0, 100]")]
    InvalidPercent(f64),
    #[error("n must be positive")]
    InvalidN,
    #[error("pool is empty")]
    EmptyPool,
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("score table: {0}")]
    Io(String),
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, RetrievalError> {
    if u.len() != v.len() {
        return Err(RetrievalError::DimensionMismatch(u.len(), v.len()));
    }
    let (mut dot, mut uu, mut vv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        uu += a * a;
        vv += b * b;
    }
    if !(dot.is_finite() && uu.is_finite() && vv.is_finite()) {
        return Err(RetrievalError::NonFinite);
    }
    if uu == 0.0 || vv == 0.0 {
        return Err(RetrievalError::ZeroVector);
    }
    Ok((dot / (uu.sqrt() * vv.sqrt())).clamp(-1.0, 1.0))
}

/// Competition ranks of `scores`, in input order.
pub fn competition_ranks(scores: &[f64]) -> Vec<usize> {
    let mut sorted: Vec<f64> = scores.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    scores.iter().map(|s| 1 + count_greater(&sorted, *s)).collect()
}

/// Number of entries strictly greater than `s` in a descending slice.
pub(crate) fn count_greater(desc: &[f64], s: f64) -> usize {
    desc.partition_point(|x| *x > s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    pub resume_id: String,
    pub score: f64,
    pub rank: usize,
}

/// One job's resumes, by nonincreasing score (ties by resume id).
#[derive(Debug, Clone, PartialEq)]
pub struct RankedSet {
    pub job_id: String,
    pub entries: Vec<RankedEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopNSet {
    pub job_id: String,
    pub n: usize,
    pub members: Vec<String>,
}

/// Ranks one job's `(resume_id, score)` records.
pub fn rank_resumes(job_id: &str, records: &[(String, f64)]) -> Result<RankedSet, RetrievalError> {
    let mut seen = HashSet::new();
    for (id, s) in records {
        if !seen.insert(id.as_str()) {
            return Err(RetrievalError::DuplicateResume(id.clone()));
        }
        if !s.is_finite() {
            return Err(RetrievalError::NonFinite);
        }
    }
    let mut order: Vec<&(String, f64)> = records.iter().collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut entries: Vec<RankedEntry> = Vec::with_capacity(order.len());
    for (i, (id, s)) in order.into_iter().enumerate() {
        let rank = match entries.last() {
            Some(prev) if prev.score == *s => prev.rank,
            _ => i + 1,
        };
        entries.push(RankedEntry { resume_id: id.clone(), score: *s, rank });
    }
    Ok(RankedSet { job_id: job_id.to_string(), entries })
}

impl RankedSet {
    pub fn top_n(&self, n: usize) -> TopNSet {
        TopNSet {
            job_id: self.job_id.clone(),
            n,
            members: self.entries.iter().take_while(|e| e.rank <= n).map(|e| e.resume_id.clone()).collect(),
        }
    }

    pub fn rank_of(&self, resume_id: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.resume_id == resume_id).map(|e| e.rank)
    }

    pub fn scores(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.score).collect()
    }
}

#[cfg(test)]
mod tests;
