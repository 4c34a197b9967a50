//! Retrieval stage: embedding, score tables, exclusion and non-uniformity.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::backends::EmbeddingClient;
use crate::corpus::{base_id, pair_jobs, AliasTable, DemographicGroup, JobPost, Resume, UNMATCHED};
use crate::par::Execution;
use crate::perturb::{Operation, PerturbationPlan};
use crate::report::{LedgerEntry, Metric};
use crate::retrieval::{
    exclusion_counts, non_uniformity_grouped, score_table, Direction, JobPool, NonUniformityMode, ScoreTable,
};

use super::{Grid, PipelineError, Stage};

/// An original set and the set derived from it by one perturbation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contrast {
    pub from: String,
    pub to: String,
    pub perturbation: &'static str,
    pub direction: String,
}

/// Every spec with an input, paired with that input.
pub fn contrasts(plan: &PerturbationPlan) -> Vec<Contrast> {
    plan.specs
        .iter()
        .filter_map(|s| {
            let from = s.input.clone()?;
            let (perturbation, direction) = match &s.op {
                Operation::AssignName { .. } => return None,
                Operation::BetweenGroupName { source, target, .. } => (
                    "between_group_name",
                    Direction::of(*source, *target)
                        .map_or_else(|| format!("{}→{}", source.code(), target.code()), |d| d.as_str().to_string()),
                ),
                Operation::WithinGroupName => ("within_group_name", String::new()),
                Operation::Typo { .. } => ("typo", String::new()),
                Operation::Spacing { .. } => ("spacing", String::new()),
                Operation::Extracurricular { .. } => ("extracurricular", String::new()),
            };
            Some(Contrast { from, to: s.id.clone(), perturbation, direction })
        })
        .collect()
}

/// Sets whose union forms the four-group pool for non-uniformity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Family {
    pub name: &'static str,
    pub specs: Vec<String>,
}

/// `names` (all assignment specs) and `extracurricular` (all augmentation
/// specs), when present.
pub fn families(plan: &PerturbationPlan) -> Vec<Family> {
    let pick = |f: fn(&Operation) -> bool| -> Vec<String> {
        plan.specs.iter().filter(|s| f(&s.op)).map(|s| s.id.clone()).collect()
    };
    [
        ("names", pick(|o| matches!(o, Operation::AssignName { .. }))),
        ("extracurricular", pick(|o| matches!(o, Operation::Extracurricular { .. }))),
    ]
    .into_iter()
    .filter(|(_, specs)| !specs.is_empty())
    .map(|(name, specs)| Family { name, specs })
    .collect()
}

/// Regroups perturbed resumes by the spec id in their variant suffix.
pub fn sets_from_variants(resumes: &[Resume]) -> BTreeMap<String, Vec<Resume>> {
    let mut out: BTreeMap<String, Vec<Resume>> = BTreeMap::new();
    for r in resumes {
        if let Some((_, spec)) = r.id.split_once(crate::corpus::VARIANT_SEPARATOR) {
            out.entry(spec.to_string()).or_default().push(r.clone());
        }
    }
    out
}

/// A job with its occupation and the base ids of the resumes it ranks.
#[derive(Debug, Clone)]
pub struct JobScope {
    pub job: JobPost,
    pub occupation: String,
    pub members: BTreeSet<String>,
}

/// Each job ranks the resumes whose profession maps to its occupation.
/// Resumes without a matching job are left out.
pub fn job_scopes(originals: &[Resume], jobs: &[JobPost], aliases: &AliasTable) -> Vec<JobScope> {
    let groups = pair_jobs(originals, jobs, aliases);
    let mut out = Vec::new();
    for (occupation, g) in groups {
        if occupation == UNMATCHED {
            if !g.resumes.is_empty() {
                log::warn!("{} resumes match no job occupation and are not ranked", g.resumes.len());
            }
            continue;
        }
        let members: BTreeSet<String> = g.resumes.iter().map(|r| r.base_id().to_string()).collect();
        for job in g.jobs {
            out.push(JobScope { job, occupation: occupation.clone(), members: members.clone() });
        }
    }
    out.sort_by(|a, b| a.job.id.cmp(&b.job.id));
    out
}

/// Embeds jobs and resumes and scores every pair.
pub fn score_resumes(
    client: &EmbeddingClient,
    jobs: &[JobPost],
    resumes: &[&Resume],
    exec: Execution,
) -> Result<ScoreTable, PipelineError> {
    let backend = |source| PipelineError::Backend { stage: Stage::Embed, source };
    let job_texts: Vec<&str> = jobs.iter().map(|j| j.body.as_str()).collect();
    let resume_texts: Vec<&str> = resumes.iter().map(|r| r.body.as_str()).collect();
    let job_vecs = client.embed_batch(&job_texts).map_err(backend)?;
    let resume_vecs = client.embed_batch(&resume_texts).map_err(backend)?;
    let jobs: Vec<(String, Vec<f64>)> = jobs.iter().zip(job_vecs).map(|(j, v)| (j.id.clone(), v.values)).collect();
    let resumes: Vec<(String, Vec<f64>)> =
        resumes.iter().zip(resume_vecs).map(|(r, v)| (r.id.clone(), v.values)).collect();
    score_table(&jobs, &resumes, exec).map_err(|e| PipelineError::data(Stage::Embed, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionRow {
    pub model: String,
    pub draw: u32,
    pub job_id: String,
    pub from: String,
    pub to: String,
    pub perturbation: String,
    pub direction: String,
    pub n: usize,
    pub excluded: usize,
    pub members: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonUniformityRow {
    pub model: String,
    pub draw: u32,
    pub family: String,
    pub unit: String,
    pub mode: NonUniformityMode,
    pub x: f64,
    pub k: usize,
    pub pool_size: usize,
    pub count_fb: u64,
    pub count_fw: u64,
    pub count_mb: u64,
    pub count_mw: u64,
    pub chi2: f64,
    pub p: f64,
    pub flag: bool,
    pub underpowered: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RetrievalAudit {
    pub exclusion: Vec<ExclusionRow>,
    pub nonuniformity: Vec<NonUniformityRow>,
    pub ledger: Vec<LedgerEntry>,
}

/// Everything the retrieval audit reads besides the scores.
pub struct RetrievalScope<'a> {
    pub plan: &'a PerturbationPlan,
    pub sets: &'a BTreeMap<String, Vec<Resume>>,
    pub jobs: &'a [JobScope],
}

fn format_x(x: f64) -> String {
    format!("{x}")
}

/// Exclusion for every contrast, job and n. The pool of a contrast is the
/// job's resumes present in both sets.
pub fn audit_exclusion(
    model: &str,
    scores: &ScoreTable,
    scope: &RetrievalScope<'_>,
    grid: &Grid,
    run_id: &str,
    draw: u32,
) -> Result<RetrievalAudit, PipelineError> {
    let mut out = RetrievalAudit::default();
    let by_base = |spec: &str| -> HashMap<&str, &str> {
        scope.sets.get(spec).map_or_else(HashMap::new, |rs| rs.iter().map(|r| (r.base_id(), r.id.as_str())).collect())
    };
    for c in contrasts(scope.plan) {
        let from = by_base(&c.from);
        let to = by_base(&c.to);
        for js in scope.jobs {
            let Some(job_scores) = scores.job(&js.job.id) else { continue };
            let mut orig = Vec::new();
            let mut pert = Vec::new();
            for base in &js.members {
                let (Some(f), Some(t)) = (from.get(base.as_str()), to.get(base.as_str())) else { continue };
                let (Some(sf), Some(st)) = (job_scores.get(*f), job_scores.get(*t)) else {
                    return Err(PipelineError::data(
                        Stage::Retrieval,
                        format!("score table for {model} lacks {f} or {t} under job {}", js.job.id),
                    ));
                };
                orig.push(*sf);
                pert.push(*st);
            }
            if orig.is_empty() {
                continue;
            }
            for &n in &grid.n {
                let r = exclusion_counts(&orig, &pert, n).map_err(|e| PipelineError::data(Stage::Retrieval, e))?;
                let unit = format!("{}/{}", js.job.id, c.to);
                out.ledger.push(LedgerEntry::new(
                    run_id,
                    Metric::Exclusion,
                    model,
                    c.perturbation,
                    &c.direction,
                    &n.to_string(),
                    "",
                    &unit,
                    draw,
                    r.value,
                ));
                out.exclusion.push(ExclusionRow {
                    model: model.into(),
                    draw,
                    job_id: js.job.id.clone(),
                    from: c.from.clone(),
                    to: c.to.clone(),
                    perturbation: c.perturbation.into(),
                    direction: c.direction.clone(),
                    n,
                    excluded: r.excluded,
                    members: r.members,
                    value: r.value,
                });
            }
        }
    }
    Ok(out)
}

/// Non-uniformity for every family, x and mode.
pub fn audit_nonuniformity(
    model: &str,
    scores: &ScoreTable,
    scope: &RetrievalScope<'_>,
    grid: &Grid,
    alpha: f64,
    run_id: &str,
    draw: u32,
    exec: Execution,
) -> Result<RetrievalAudit, PipelineError> {
    let mut out = RetrievalAudit::default();
    for fam in families(scope.plan) {
        let mut pools: Vec<Vec<(DemographicGroup, f64)>> = Vec::new();
        for js in scope.jobs {
            let Some(job_scores) = scores.job(&js.job.id) else {
                pools.push(Vec::new());
                continue;
            };
            let mut pool = Vec::new();
            for spec in &fam.specs {
                for r in scope.sets.get(spec).into_iter().flatten() {
                    if !js.members.contains(base_id(&r.id)) {
                        continue;
                    }
                    let (Some(g), Some(s)) = (r.group, job_scores.get(&r.id)) else {
                        return Err(PipelineError::data(
                            Stage::Retrieval,
                            format!("resume {} lacks a group or a score under job {}", r.id, js.job.id),
                        ));
                    };
                    pool.push((g, *s));
                }
            }
            pools.push(pool);
        }
        let job_pools: Vec<JobPool<'_>> = scope
            .jobs
            .iter()
            .zip(&pools)
            .filter(|(_, p)| !p.is_empty())
            .map(|(js, p)| JobPool { job_id: &js.job.id, occupation: &js.occupation, pool: p })
            .collect();
        if job_pools.is_empty() {
            continue;
        }
        for &x in &grid.x {
            for &mode in &grid.modes {
                let results = non_uniformity_grouped(&job_pools, x, mode, alpha, exec)
                    .map_err(|e| PipelineError::data(Stage::Retrieval, e))?;
                for r in results {
                    out.ledger.push(LedgerEntry::new(
                        run_id,
                        Metric::Nonuniformity,
                        model,
                        fam.name,
                        "",
                        &format_x(x),
                        &mode.to_string(),
                        &r.unit,
                        draw,
                        if r.flag { 1.0 } else { 0.0 },
                    ));
                    out.nonuniformity.push(NonUniformityRow {
                        model: model.into(),
                        draw,
                        family: fam.name.into(),
                        unit: r.unit,
                        mode,
                        x,
                        k: r.k,
                        pool_size: r.pool_size,
                        count_fb: r.counts[0],
                        count_fw: r.counts[1],
                        count_mb: r.counts[2],
                        count_mw: r.counts[3],
                        chi2: r.chi2,
                        p: r.p,
                        flag: r.flag,
                        underpowered: r.underpowered,
                    });
                }
            }
        }
    }
    Ok(out)
}
