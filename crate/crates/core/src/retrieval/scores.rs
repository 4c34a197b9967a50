//! Score tables: cosine similarity of every (job, resume variant) pair,
//! persisted so metrics can be recomputed without re-embedding.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::base_id;
use crate::par::{self, Execution};

use super::{cosine, RetrievalError};

pub const SCORE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub schema_version: u32,
    pub job_id: String,
    pub resume_id: String,
    pub variant_id: String,
    pub score: f64,
}

/// Scores keyed by job id, then variant id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    scores: BTreeMap<String, BTreeMap<String, f64>>,
}

impl ScoreTable {
    pub fn insert(&mut self, job_id: &str, variant_id: &str, score: f64) {
        self.scores.entry(job_id.to_string()).or_default().insert(variant_id.to_string(), score);
    }

    pub fn get(&self, job_id: &str, variant_id: &str) -> Option<f64> {
        self.scores.get(job_id)?.get(variant_id).copied()
    }

    pub fn jobs(&self) -> impl Iterator<Item = &str> {
        self.scores.keys().map(String::as_str)
    }

    pub fn job(&self, job_id: &str) -> Option<&BTreeMap<String, f64>> {
        self.scores.get(job_id)
    }

    pub fn len(&self) -> usize {
        self.scores.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rows(&self) -> Vec<ScoreRow> {
        self.scores
            .iter()
            .flat_map(|(job, m)| {
                m.iter().map(move |(variant, score)| ScoreRow {
                    schema_version: SCORE_SCHEMA_VERSION,
                    job_id: job.clone(),
                    resume_id: base_id(variant).to_string(),
                    variant_id: variant.clone(),
                    score: *score,
                })
            })
            .collect()
    }
}

/// Cosine of every job against every resume variant.
pub fn score_table(
    jobs: &[(String, Vec<f64>)],
    resumes: &[(String, Vec<f64>)],
    exec: Execution,
) -> Result<ScoreTable, RetrievalError> {
    let per_job = par::try_map(exec, jobs, |(_, jv)| {
        resumes.iter().map(|(_, rv)| cosine(jv, rv)).collect::<Result<Vec<f64>, _>>()
    })?;
    let mut table = ScoreTable::default();
    for ((job, _), scores) in jobs.iter().zip(per_job) {
        for ((variant, _), s) in resumes.iter().zip(scores) {
            table.insert(job, variant, s);
        }
    }
    Ok(table)
}

pub fn write_scores<W: Write>(w: W, table: &ScoreTable) -> Result<(), RetrievalError> {
    let io = |e: csv::Error| RetrievalError::Io(e.to_string());
    let mut out = csv::Writer::from_writer(w);
    for row in table.rows() {
        out.serialize(row).map_err(io)?;
    }
    out.flush().map_err(|e| RetrievalError::Io(e.to_string()))
}

pub fn read_scores<R: Read>(r: R) -> Result<ScoreTable, RetrievalError> {
    let mut table = ScoreTable::default();
    for row in csv::Reader::from_reader(r).deserialize::<ScoreRow>() {
        let row = row.map_err(|e| RetrievalError::Io(e.to_string()))?;
        if row.schema_version != SCORE_SCHEMA_VERSION {
            return Err(RetrievalError::Io(format!("unsupported schema version {}", row.schema_version)));
        }
        if !row.score.is_finite() {
            return Err(RetrievalError::NonFinite);
        }
        if table.get(&row.job_id, &row.variant_id).is_some() {
            return Err(RetrievalError::DuplicateResume(row.variant_id));
        }
        table.insert(&row.job_id, &row.variant_id, row.score);
    }
    Ok(table)
}
