//! Perturbation plans: ordered specs applied to a corpus.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::backends::{fan_out, CompletionClient};
use crate::corpus::{DemographicGroup, NamePools, Resume, Source};
use crate::par::{self, Execution};
use crate::seed;

use super::{
    add_extracurriculars, assign_name, between_group_swap, spacing_perturb, typo_perturb, within_group_swap,
    AugmentationRecord, Matching, NameAssignment, PerturbError, SpacingMode,
};

pub const DEFAULT_TYPO_COUNT: usize = 10;

fn default_typo_count() -> usize {
    DEFAULT_TYPO_COUNT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Operation {
    AssignName {
        group: DemographicGroup,
    },
    BetweenGroupName {
        source: DemographicGroup,
        target: DemographicGroup,
        #[serde(default)]
        matching: Matching,
    },
    WithinGroupName,
    Typo {
        #[serde(default = "default_typo_count")]
        count: usize,
    },
    Spacing {
        #[serde(default)]
        mode: SpacingMode,
    },
    Extracurricular {
        /// Also augment resumes not produced by the generator.
        #[serde(default)]
        all_sources: bool,
        #[serde(default)]
        temperature: f64,
    },
}

/// One step of a plan. `input` names an earlier spec whose outputs are
/// perturbed; without it the unperturbed corpus is the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(with = "crate::seed::serde_seed")]
    pub seed: u64,
    #[serde(flatten)]
    pub op: Operation,
}

impl PerturbationSpec {
    pub fn new(id: &str, input: Option<&str>, seed: u64, op: Operation) -> Self {
        Self { id: id.into(), input: input.map(str::to_string), seed, op }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PerturbationPlan {
    #[serde(rename = "perturbation", default)]
    pub specs: Vec<PerturbationSpec>,
}

fn code(g: DemographicGroup) -> String {
    g.code().to_ascii_lowercase()
}

impl PerturbationPlan {
    /// Name assignment for all four groups, the twelve between-group swaps,
    /// within-group swaps, typos and newline removal per group, and
    /// optionally extracurricular augmentation per group. Spec seeds are
    /// derived from `seed` and the spec id.
    pub fn standard(seed: u64, extracurricular: bool) -> Self {
        let mut specs = Vec::new();
        let mut add = |id: String, input: Option<String>, op: Operation| {
            let s = seed::derive(seed, &[&id]);
            specs.push(PerturbationSpec { id, input, seed: s, op });
        };
        for g in DemographicGroup::ALL {
            add(format!("assign_{}", code(g)), None, Operation::AssignName { group: g });
        }
        for source in DemographicGroup::ALL {
            for target in DemographicGroup::ALL.into_iter().filter(|t| *t != source) {
                add(
                    format!("swap_{}_{}", code(source), code(target)),
                    Some(format!("assign_{}", code(source))),
                    Operation::BetweenGroupName { source, target, matching: Matching::Random },
                );
            }
        }
        for g in DemographicGroup::ALL {
            let input = Some(format!("assign_{}", code(g)));
            add(format!("within_{}", code(g)), input.clone(), Operation::WithinGroupName);
            add(format!("typo_{}", code(g)), input.clone(), Operation::Typo { count: DEFAULT_TYPO_COUNT });
            add(format!("spacing_{}", code(g)), input.clone(), Operation::Spacing { mode: SpacingMode::Collapse });
            if extracurricular {
                add(
                    format!("extra_{}", code(g)),
                    input,
                    Operation::Extracurricular { all_sources: false, temperature: 0.0 },
                );
            }
        }
        Self { specs }
    }

    pub fn get(&self, id: &str) -> Option<&PerturbationSpec> {
        self.specs.iter().find(|s| s.id == id)
    }

    /// Unique, well-formed ids; inputs refer to earlier specs; operations
    /// are consistent with their inputs.
    pub fn validate(&self) -> Result<(), PerturbError> {
        let mut seen: HashSet<&str> = HashSet::new();
        for s in &self.specs {
            let bad = |m: String| Err(PerturbError::Plan(format!("spec {:?}: {m}", s.id)));
            if s.id.is_empty() || s.id.contains(['/', '#', ';', '=', ',']) || s.id.chars().any(char::is_whitespace) {
                return bad("id must be non-empty without '/', '#', ';', '=', ',' or whitespace".into());
            }
            if !seen.insert(&s.id) {
                return bad("duplicate id".into());
            }
            if let Some(i) = &s.input {
                if !seen.contains(i.as_str()) || i == &s.id {
                    return bad(format!("input {i:?} is not an earlier spec"));
                }
            }
            match (&s.op, &s.input) {
                (Operation::AssignName { .. }, Some(_)) => return bad("assign_name takes the unperturbed corpus".into()),
                (Operation::AssignName { .. }, None) => {}
                (_, None) if !matches!(s.op, Operation::Typo { .. } | Operation::Spacing { .. }) => {
                    return bad("needs a named input set".into())
                }
                _ => {}
            }
            if let Operation::BetweenGroupName { source, target, .. } = s.op {
                if source == target {
                    return bad("source and target groups are equal".into());
                }
            }
        }
        Ok(())
    }
}

pub fn read_plan(text: &str) -> Result<PerturbationPlan, PerturbError> {
    let plan: PerturbationPlan = toml::from_str(text).map_err(|e| PerturbError::Plan(e.to_string()))?;
    plan.validate()?;
    Ok(plan)
}

pub fn write_plan(plan: &PerturbationPlan) -> Result<String, PerturbError> {
    toml::to_string(plan).map_err(|e| PerturbError::Plan(e.to_string()))
}

/// Everything a plan produced.
#[derive(Debug, Clone, Default)]
pub struct PlanOutput {
    /// Outputs of each spec, keyed by spec id, in input order.
    pub sets: BTreeMap<String, Vec<Resume>>,
    pub assignments: Vec<NameAssignment>,
    pub augmentations: Vec<AugmentationRecord>,
    /// `(spec id, resume id)` pairs left out by the augmentation source filter.
    pub skipped: Vec<(String, String)>,
    order: Vec<String>,
}

impl PlanOutput {
    pub fn set(&self, spec_id: &str) -> &[Resume] {
        self.sets.get(spec_id).map_or(&[], Vec::as_slice)
    }

    /// All perturbed resumes in plan order.
    pub fn variants(&self) -> impl Iterator<Item = &Resume> {
        self.order.iter().flat_map(|id| self.sets[id].iter())
    }
}

/// Applies each spec in order.
pub fn apply_plan(
    originals: &[Resume],
    plan: &PerturbationPlan,
    pools: &NamePools,
    completion: Option<&CompletionClient>,
    exec: Execution,
) -> Result<PlanOutput, PerturbError> {
    plan.validate()?;
    let mut out = PlanOutput::default();
    for spec in &plan.specs {
        let input: &[Resume] = match &spec.input {
            None => originals,
            Some(i) => out.set(i),
        };
        let id = spec.id.as_str();
        let mut assignments = Vec::new();
        let mut augmentations = Vec::new();
        let mut skipped_ids = Vec::new();
        let produced: Vec<Resume> = match &spec.op {
            Operation::AssignName { group } => {
                let pairs = par::try_map(exec, input, |r| assign_name(r, id, *group, pools, spec.seed))?;
                let (rs, assigned): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
                assignments = assigned;
                rs
            }
            Operation::BetweenGroupName { source, target, matching } => par::try_map(exec, input, |r| {
                if r.group != Some(*source) {
                    return Err(PerturbError::GroupMismatch { id: r.id.clone(), expected: *source, found: r.group });
                }
                between_group_swap(r, id, *target, *matching, pools, spec.seed)
            })?,
            Operation::WithinGroupName => par::try_map(exec, input, |r| within_group_swap(r, id, pools, spec.seed))?,
            Operation::Typo { count } => par::try_map(exec, input, |r| typo_perturb(r, id, *count, spec.seed))?,
            Operation::Spacing { mode } => par::map(exec, input, |r| spacing_perturb(r, id, *mode)),
            Operation::Extracurricular { all_sources, temperature } => {
                let client = completion.ok_or_else(|| {
                    PerturbError::Plan(format!("spec {id:?} needs a completion backend"))
                })?;
                let (eligible, skipped): (Vec<&Resume>, Vec<&Resume>) =
                    input.iter().partition(|r| *all_sources || r.source == Source::Generated);
                skipped_ids.extend(skipped.iter().map(|r| (id.to_string(), r.id.clone())));
                let results = fan_out(&eligible, client.parallelism(), |r| {
                    add_extracurriculars(r, id, client, *temperature)
                });
                let mut rs = Vec::with_capacity(results.len());
                for res in results {
                    let (r, rec) = res?;
                    rs.push(r);
                    augmentations.push(rec);
                }
                rs
            }
        };
        out.assignments.extend(assignments);
        out.augmentations.extend(augmentations);
        out.skipped.extend(skipped_ids);
        out.sets.insert(spec.id.clone(), produced);
        out.order.push(spec.id.clone());
    }
    Ok(out)
}
