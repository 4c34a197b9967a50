//! Group mix of the top-x% of a pooled four-group resume set, tested
//! against the uniform distribution.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::DemographicGroup;
use crate::par::{self, Execution};
use crate::stats::chi_squared_gof;

use super::{count_greater, RetrievalError};

/// Smallest top-k for which the test is not reported as underpowered.
pub const MIN_POWERED_K: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NonUniformityMode {
    /// One test per job post.
    Separated,
    /// Counts summed over an occupation's job posts, one test per occupation.
    Pooled,
}

impl fmt::Display for NonUniformityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NonUniformityMode::Separated => "separated",
            NonUniformityMode::Pooled => "pooled",
        })
    }
}

impl FromStr for NonUniformityMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sep" | "separated" => Ok(NonUniformityMode::Separated),
            "pool" | "pooled" => Ok(NonUniformityMode::Pooled),
            _ => Err(format!("unknown mode '{s}' (expected sep or pool)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonUniformityResult {
    /// Job id (separated) or occupation (pooled).
    pub unit: String,
    pub mode: NonUniformityMode,
    pub x: f64,
    pub k: usize,
    pub pool_size: usize,
    /// Top-k members per group, in FB, FW, MB, MW order.
    pub counts: [u64; 4],
    pub chi2: f64,
    pub p: f64,
    pub flag: bool,
    pub underpowered: bool,
}

/// `k = max(1, ceil(x% of pool_size))`.
pub fn top_k_size(x: f64, pool_size: usize) -> Result<usize, RetrievalError> {
    if !(x > 0.0 && x <= 100.0) {
        return Err(RetrievalError::InvalidPercent(x));
    }
    let raw = x * pool_size as f64 / 100.0;
    Ok(((raw - 1e-9).ceil() as usize).clamp(1, pool_size.max(1)))
}

/// Group counts among resumes ranked within the top `k` of the pool.
pub fn top_x_counts(pool: &[(DemographicGroup, f64)], x: f64) -> Result<([u64; 4], usize), RetrievalError> {
    if pool.is_empty() {
        return Err(RetrievalError::EmptyPool);
    }
    if pool.iter().any(|(_, s)| !s.is_finite()) {
        return Err(RetrievalError::NonFinite);
    }
    let k = top_k_size(x, pool.len())?;
    let mut desc: Vec<f64> = pool.iter().map(|(_, s)| *s).collect();
    desc.sort_by(|a, b| b.total_cmp(a));
    let mut counts = [0u64; 4];
    for (g, s) in pool {
        if 1 + count_greater(&desc, *s) <= k {
            counts[g.index()] += 1;
        }
    }
    Ok((counts, k))
}

fn test_counts(
    unit: String,
    mode: NonUniformityMode,
    x: f64,
    k: usize,
    pool_size: usize,
    counts: [u64; 4],
    alpha: f64,
) -> Result<NonUniformityResult, RetrievalError> {
    let total: u64 = counts.iter().sum();
    let observed: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let expected = vec![total as f64 / 4.0; 4];
    let t = chi_squared_gof(&observed, &expected)?;
    let underpowered = (total as usize) < MIN_POWERED_K;
    if underpowered {
        log::info!("non-uniformity for {unit}: only {total} resumes in the top {x}%, test underpowered");
    }
    Ok(NonUniformityResult { unit, mode, x, k, pool_size, counts, chi2: t.statistic, p: t.p, flag: t.p < alpha, underpowered })
}

/// Separated-mode test for a single job's pool.
pub fn non_uniformity(
    job_id: &str,
    pool: &[(DemographicGroup, f64)],
    x: f64,
    alpha: f64,
) -> Result<NonUniformityResult, RetrievalError> {
    let (counts, k) = top_x_counts(pool, x)?;
    test_counts(job_id.to_string(), NonUniformityMode::Separated, x, k, pool.len(), counts, alpha)
}

/// One job's pool, tagged with its occupation.
pub struct JobPool<'a> {
    pub job_id: &'a str,
    pub occupation: &'a str,
    pub pool: &'a [(DemographicGroup, f64)],
}

/// Tests every job (separated) or every occupation (pooled). Results are
/// ordered by job or occupation id.
pub fn non_uniformity_grouped(
    jobs: &[JobPool<'_>],
    x: f64,
    mode: NonUniformityMode,
    alpha: f64,
    exec: Execution,
) -> Result<Vec<NonUniformityResult>, RetrievalError> {
    let counted = par::try_map(exec, jobs, |j| top_x_counts(j.pool, x).map(|(c, k)| (c, k, j.pool.len())))?;
    let mut out = Vec::new();
    match mode {
        NonUniformityMode::Separated => {
            for (j, (counts, k, size)) in jobs.iter().zip(counted) {
                out.push(test_counts(j.job_id.to_string(), mode, x, k, size, counts, alpha)?);
            }
            out.sort_by(|a, b| a.unit.cmp(&b.unit));
        }
        NonUniformityMode::Pooled => {
            let mut acc: BTreeMap<&str, ([u64; 4], usize, usize)> = BTreeMap::new();
            for (j, (counts, k, size)) in jobs.iter().zip(counted) {
                let e = acc.entry(j.occupation).or_default();
                for g in 0..4 {
                    e.0[g] += counts[g];
                }
                e.1 += k;
                e.2 += size;
            }
            for (occ, (counts, k, size)) in acc {
                out.push(test_counts(occ.to_string(), mode, x, k, size, counts, alpha)?);
            }
        }
    }
    Ok(out)
}
