//! Resume perturbations: name assignment, between- and within-group name
//! swaps, typos, newline removal, and extracurricular augmentation.
//!
//! Every operation is a deterministic function of its input, parameters and
//! seed. Each output records one lineage entry of the form
//! `spec_id#key=value;key=value`, which names the transformation and keeps
//! enough detail (such as the replaced first name) to undo a swap.

mod augment;
mod names;
mod plan;
mod text;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::backends::BackendError;
use crate::corpus::{DemographicGroup, Resume};

pub use augment::{add_extracurriculars, extracurricular_prompt, AugmentationRecord};
pub use names::{
    assign_name, between_group_swap, current_first_name, invert_name_swap, within_group_swap, Matching, NameAssignment,
    NAME_PLACEHOLDER,
};
pub use plan::{
    apply_plan, read_plan, write_plan, Operation, PerturbationPlan, PerturbationSpec, PlanOutput, DEFAULT_TYPO_COUNT,
};
pub use text::{qwerty_neighbors, spacing_perturb, typo_perturb, typo_with_choices, SpacingMode};

#[derive(Debug, Error)]
pub enum PerturbError {
    #[error("resume {0} already carries a name")]
    AlreadyNamed(String),
    #[error("resume {0} has no assigned name")]
    Unnamed(String),
    #[error("resume {id} already belongs to target group {group}")]
    SameGroup { id: String, group: DemographicGroup },
    #[error("resume {id} is in group {found:?}, spec expects {expected}")]
    GroupMismatch { id: String, expected: DemographicGroup, found: Option<DemographicGroup> },
    #[error("no replacement name available for resume {0}")]
    NoCandidates(String),
    #[error("resume {id} has {available} typo-eligible letters, {needed} requested")]
    InsufficientPositions { id: String, needed: usize, available: usize },
    #[error("empty completion for resume {0}")]
    EmptyCompletion(String),
    #[error("lineage of resume {0} does not end in a name swap")]
    NotASwap(String),
    #[error("malformed lineage entry {0:?}")]
    Lineage(String),
    #[error("plan: {0}")]
    Plan(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// One lineage record: the spec id and its `key=value` details.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineageEntry {
    pub spec_id: String,
    pub fields: Vec<(String, String)>,
}

impl LineageEntry {
    pub fn new(spec_id: &str) -> Self {
        Self { spec_id: spec_id.to_string(), fields: Vec::new() }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.fields.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

impl fmt::Display for LineageEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec_id)?;
        for (i, (k, v)) in self.fields.iter().enumerate() {
            write!(f, "{}{k}={v}", if i == 0 { '#' } else { ';' })?;
        }
        Ok(())
    }
}

impl FromStr for LineageEntry {
    type Err = PerturbError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (spec_id, rest) = s.split_once('#').unwrap_or((s, ""));
        if spec_id.is_empty() {
            return Err(PerturbError::Lineage(s.to_string()));
        }
        let fields = rest
            .split(';')
            .filter(|p| !p.is_empty())
            .map(|p| {
                p.split_once('=')
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .ok_or_else(|| PerturbError::Lineage(s.to_string()))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { spec_id: spec_id.to_string(), fields })
    }
}

/// Copy of `parent` with a new id and one more lineage entry.
pub(crate) fn derive_resume(parent: &Resume, spec_id: &str, body: String, entry: LineageEntry) -> Resume {
    let mut r = parent.clone();
    r.id = format!("{}{}{spec_id}", parent.base_id(), crate::corpus::VARIANT_SEPARATOR);
    r.body = body;
    r.lineage.push(entry.to_string());
    r
}
