//! First-name assignment and swaps. Last names are always "Williams".

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{word_tokens, DemographicGroup, NamePools, Resume, LAST_NAME};
use crate::seed;

use super::{derive_resume, LineageEntry, PerturbError};

/// Marker replaced by the full name when present in a resume body.
pub const NAME_PLACEHOLDER: &str = "{{NAME}}";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameAssignment {
    pub resume_id: String,
    pub first_name: String,
    pub last_name: String,
}

/// How a swap chooses the replacement name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Matching {
    #[default]
    Random,
    /// Same frequency quartile as the current name, else the nearest
    /// non-empty quartile.
    FrequencyBinned,
}

fn contains_word(body: &str, word: &str) -> bool {
    word_tokens(body).iter().any(|(_, t)| *t == word)
}

fn replace_word(body: &str, old: &str, new: &str) -> String {
    let mut out = String::with_capacity(body.len());
    let mut last = 0;
    for (at, t) in word_tokens(body) {
        if t == old {
            out.push_str(&body[last..at]);
            out.push_str(new);
            last = at + t.len();
        }
    }
    out.push_str(&body[last..]);
    out
}

/// First name most recently assigned or swapped in, from the lineage.
pub fn current_first_name(resume: &Resume) -> Option<String> {
    resume.lineage.iter().rev().find_map(|e| {
        let e: LineageEntry = e.parse().ok()?;
        e.get("to").or_else(|| e.get("name")).map(str::to_string)
    })
}

fn has_full_name(body: &str, pools: &NamePools) -> bool {
    let tokens = word_tokens(body);
    tokens.windows(2).any(|w| w[1].1 == LAST_NAME && pools.contains_name(w[0].1))
}

/// Adds "<First> Williams" with the first name drawn uniformly from the
/// group's pool: in place of [`NAME_PLACEHOLDER`] if present, otherwise as
/// a new first line.
pub fn assign_name(
    resume: &Resume,
    spec_id: &str,
    group: DemographicGroup,
    pools: &NamePools,
    seed: u64,
) -> Result<(Resume, NameAssignment), PerturbError> {
    if resume.group.is_some() || current_first_name(resume).is_some() || has_full_name(&resume.body, pools) {
        return Err(PerturbError::AlreadyNamed(resume.id.clone()));
    }
    let names = pools.pool(group).names();
    let mut rng = seed::rng_for(seed, &[resume.base_id()]);
    let first = &names[rng.gen_range(0..names.len())];
    let full = format!("{first} {LAST_NAME}");
    let body = if resume.body.contains(NAME_PLACEHOLDER) {
        resume.body.replace(NAME_PLACEHOLDER, &full)
    } else {
        format!("{full}\n{}", resume.body)
    };
    let entry = LineageEntry::new(spec_id).with("name", first).with("group", group);
    let mut out = derive_resume(resume, spec_id, body, entry);
    out.group = Some(group);
    let assignment = NameAssignment { resume_id: out.id.clone(), first_name: first.clone(), last_name: LAST_NAME.into() };
    Ok((out, assignment))
}

struct Pick {
    name: String,
    bin: Option<usize>,
    fallback: bool,
}

fn pick_name(
    resume: &Resume,
    current: &str,
    source: DemographicGroup,
    target: DemographicGroup,
    matching: Matching,
    pools: &NamePools,
    seed: u64,
) -> Result<Pick, PerturbError> {
    let pool = pools.pool(target);
    let eligible = |n: &&str| *n != current && !pools.is_ambiguous(n) && !contains_word(&resume.body, n);
    let wanted = match matching {
        Matching::FrequencyBinned => pools.pool(source).bin_of(current),
        Matching::Random => None,
    };
    let (candidates, bin, fallback): (Vec<&str>, Option<usize>, bool) = match wanted {
        None => (pool.names().iter().map(String::as_str).filter(eligible).collect(), None, false),
        Some(b0) => {
            let bins = pool.bins();
            let order = (0..4usize).flat_map(|d| [b0.checked_sub(d), Some(b0 + d).filter(|b| *b < 4 && d > 0)]);
            order
                .flatten()
                .map(|b| (bins[b].iter().copied().filter(eligible).collect::<Vec<_>>(), Some(b), b != b0))
                .find(|(c, _, _)| !c.is_empty())
                .unwrap_or_default()
        }
    };
    if candidates.is_empty() {
        return Err(PerturbError::NoCandidates(resume.id.clone()));
    }
    let mut rng = seed::rng_for(seed, &[resume.base_id()]);
    let name = candidates[rng.gen_range(0..candidates.len())].to_string();
    Ok(Pick { name, bin, fallback })
}

fn swap(
    resume: &Resume,
    spec_id: &str,
    target: DemographicGroup,
    matching: Matching,
    pools: &NamePools,
    seed: u64,
) -> Result<Resume, PerturbError> {
    let source = resume.group.ok_or_else(|| PerturbError::Unnamed(resume.id.clone()))?;
    let current = current_first_name(resume).ok_or_else(|| PerturbError::Unnamed(resume.id.clone()))?;
    let pick = pick_name(resume, &current, source, target, matching, pools, seed)?;
    let body = replace_word(&resume.body, &current, &pick.name);
    let mut entry = LineageEntry::new(spec_id)
        .with("from", &current)
        .with("to", &pick.name)
        .with("from_group", source)
        .with("to_group", target)
        .with("parent", &resume.id);
    if let Some(b) = pick.bin {
        entry = entry.with(if pick.fallback { "fallback_bin" } else { "bin" }, b);
    }
    let mut out = derive_resume(resume, spec_id, body, entry);
    out.group = Some(target);
    Ok(out)
}

/// Replaces every occurrence of the current first name with a name from
/// `target`'s pool. Names listed in several pools are never chosen, nor
/// names already present in the body.
pub fn between_group_swap(
    resume: &Resume,
    spec_id: &str,
    target: DemographicGroup,
    matching: Matching,
    pools: &NamePools,
    seed: u64,
) -> Result<Resume, PerturbError> {
    if resume.group == Some(target) {
        return Err(PerturbError::SameGroup { id: resume.id.clone(), group: target });
    }
    swap(resume, spec_id, target, matching, pools, seed)
}

/// Replaces the first name with a different name of the same group and
/// frequency quartile, falling back to the nearest quartile.
pub fn within_group_swap(resume: &Resume, spec_id: &str, pools: &NamePools, seed: u64) -> Result<Resume, PerturbError> {
    let group = resume.group.ok_or_else(|| PerturbError::Unnamed(resume.id.clone()))?;
    swap(resume, spec_id, group, Matching::FrequencyBinned, pools, seed)
}

/// Undoes the most recent swap using the mapping recorded in the lineage.
pub fn invert_name_swap(resume: &Resume) -> Result<Resume, PerturbError> {
    let last = resume.lineage.last().ok_or_else(|| PerturbError::NotASwap(resume.id.clone()))?;
    let entry: LineageEntry = last.parse()?;
    let (Some(from), Some(to), Some(group), Some(parent)) =
        (entry.get("from"), entry.get("to"), entry.get("from_group"), entry.get("parent"))
    else {
        return Err(PerturbError::NotASwap(resume.id.clone()));
    };
    let group: DemographicGroup = group.parse().map_err(|_| PerturbError::Lineage(last.clone()))?;
    let mut out = resume.clone();
    out.body = replace_word(&resume.body, to, from);
    out.group = Some(group);
    out.id = parent.to_string();
    out.lineage.pop();
    Ok(out)
}
