//! Exclusion under one-at-a-time substitution.
//!
//! For each original top-n resume `d`, the perturbed `d'` is re-ranked
//! against the other original resumes: `rank(d') = 1 + |{j != d : s_j > s'_d}|`.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{DemographicGroup, Gender, Race};

use super::{count_greater, RankedSet, RetrievalError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExclusionResult {
    pub excluded: usize,
    pub members: usize,
    pub value: f64,
}

/// Exclusion over aligned score slices: `original[i]` and `perturbed[i]`
/// belong to the same resume.
pub fn exclusion_counts(original: &[f64], perturbed: &[f64], n: usize) -> Result<ExclusionResult, RetrievalError> {
    if n == 0 {
        return Err(RetrievalError::InvalidN);
    }
    if original.len() != perturbed.len() {
        return Err(RetrievalError::DimensionMismatch(original.len(), perturbed.len()));
    }
    if original.iter().chain(perturbed).any(|s| !s.is_finite()) {
        return Err(RetrievalError::NonFinite);
    }
    let mut desc = original.to_vec();
    desc.sort_by(|a, b| b.total_cmp(a));
    let mut members = 0;
    let mut excluded = 0;
    for (&s, &p) in original.iter().zip(perturbed) {
        if 1 + count_greater(&desc, s) > n {
            continue;
        }
        members += 1;
        let self_above = usize::from(s > p);
        let rank = 1 + count_greater(&desc, p) - self_above;
        if rank > n {
            excluded += 1;
        }
    }
    if members == 0 {
        return Err(RetrievalError::EmptyTopN);
    }
    Ok(ExclusionResult { excluded, members, value: excluded as f64 / members as f64 })
}

/// Exclusion at `n` for a ranked job, given each original resume's
/// perturbed score.
pub fn exclusion(original: &RankedSet, perturbed: &HashMap<String, f64>, n: usize) -> Result<ExclusionResult, RetrievalError> {
    let orig = original.scores();
    let mut pert = Vec::with_capacity(orig.len());
    for e in &original.entries {
        match perturbed.get(&e.resume_id) {
            Some(p) => pert.push(*p),
            None if e.rank > n => pert.push(e.score),
            None => return Err(RetrievalError::MissingPerturbed(e.resume_id.clone())),
        }
    }
    exclusion_counts(&orig, &pert, n)
}

/// Direction of a between-group swap along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "M→F")]
    MaleToFemale,
    #[serde(rename = "F→M")]
    FemaleToMale,
    #[serde(rename = "W→B")]
    WhiteToBlack,
    #[serde(rename = "B→W")]
    BlackToWhite,
}

impl Direction {
    pub const ALL: [Direction; 4] =
        [Direction::MaleToFemale, Direction::FemaleToMale, Direction::WhiteToBlack, Direction::BlackToWhite];

    /// Direction of a swap that changes exactly one of gender and race.
    pub fn of(from: DemographicGroup, to: DemographicGroup) -> Option<Direction> {
        match (from.gender == to.gender, from.race == to.race) {
            (false, true) => Some(if from.gender == Gender::Male {
                Direction::MaleToFemale
            } else {
                Direction::FemaleToMale
            }),
            (true, false) => Some(if from.race == Race::White {
                Direction::WhiteToBlack
            } else {
                Direction::BlackToWhite
            }),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::MaleToFemale => "M→F",
            Direction::FemaleToMale => "F→M",
            Direction::WhiteToBlack => "W→B",
            Direction::BlackToWhite => "B→W",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One job's exclusion for one between-group swap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapExclusion {
    pub job_id: String,
    pub from: DemographicGroup,
    pub to: DemographicGroup,
    pub n: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalRow {
    pub direction: Direction,
    pub n: usize,
    pub mean: f64,
    pub count: usize,
}

/// Mean exclusion per (direction, n). Swaps changing both gender and race
/// have no direction and are skipped; directions without data are omitted.
pub fn directional_exclusion(results: &[SwapExclusion]) -> Vec<DirectionalRow> {
    let mut acc: std::collections::BTreeMap<(Direction, usize), (f64, usize)> = Default::default();
    for r in results {
        if let Some(d) = Direction::of(r.from, r.to) {
            let e = acc.entry((d, r.n)).or_default();
            e.0 += r.value;
            e.1 += 1;
        }
    }
    acc.into_iter()
        .map(|((direction, n), (sum, count))| DirectionalRow { direction, n, mean: sum / count as f64, count })
        .collect()
}
