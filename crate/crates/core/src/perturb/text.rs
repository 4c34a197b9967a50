//! Keyboard typos and newline removal.

use std::sync::OnceLock;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Resume;
use crate::seed;

use super::{derive_resume, LineageEntry, PerturbError};

const QWERTY_ROWS: &str = include_str!("../../assets/qwerty_rows.txt");

/// Horizontal neighbours of a lower-case letter on its QWERTY row, left first.
pub fn qwerty_neighbors(c: char) -> &'static [char] {
    static TABLE: OnceLock<Vec<(char, Vec<char>)>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = Vec::new();
        for row in QWERTY_ROWS.lines() {
            let keys: Vec<char> = row.trim().chars().collect();
            for (i, &k) in keys.iter().enumerate() {
                let mut n = Vec::new();
                if i > 0 {
                    n.push(keys[i - 1]);
                }
                if i + 1 < keys.len() {
                    n.push(keys[i + 1]);
                }
                t.push((k, n));
            }
        }
        t
    });
    table.iter().find(|(k, _)| *k == c).map_or(&[], |(_, n)| n.as_slice())
}

fn eligible_positions(body: &str) -> Vec<usize> {
    body.char_indices()
        .filter(|(_, c)| c.is_ascii_alphabetic() && !qwerty_neighbors(c.to_ascii_lowercase()).is_empty())
        .map(|(i, _)| i)
        .collect()
}

/// Applies typos given explicit choices: each `(k, j)` replaces the k-th
/// eligible letter with its j-th keyboard neighbour, preserving case.
pub fn typo_with_choices(body: &str, choices: &[(usize, usize)]) -> String {
    let positions = eligible_positions(body);
    let mut bytes = body.as_bytes().to_vec();
    for &(k, j) in choices {
        let at = positions[k];
        let c = bytes[at] as char;
        let n = qwerty_neighbors(c.to_ascii_lowercase());
        let r = n[j % n.len()];
        bytes[at] = if c.is_ascii_uppercase() { r.to_ascii_uppercase() } else { r } as u8;
    }
    String::from_utf8(bytes).expect("ASCII letters replaced by ASCII letters")
}

/// Replaces exactly `count` distinct letters, chosen uniformly, by a
/// uniformly chosen horizontal keyboard neighbour.
pub fn typo_perturb(resume: &Resume, spec_id: &str, count: usize, seed: u64) -> Result<Resume, PerturbError> {
    let available = eligible_positions(&resume.body).len();
    if available < count {
        return Err(PerturbError::InsufficientPositions { id: resume.id.clone(), needed: count, available });
    }
    let positions = eligible_positions(&resume.body);
    let mut rng = seed::rng_for(seed, &[resume.base_id()]);
    let mut picks = index::sample(&mut rng, available, count).into_vec();
    picks.sort_unstable();
    let choices: Vec<(usize, usize)> = picks
        .into_iter()
        .map(|k| {
            let c = (resume.body.as_bytes()[positions[k]] as char).to_ascii_lowercase();
            (k, rng.gen_range(0..qwerty_neighbors(c).len()))
        })
        .collect();
    let body = typo_with_choices(&resume.body, &choices);
    Ok(derive_resume(resume, spec_id, body, LineageEntry::new(spec_id).with("count", count)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacingMode {
    /// Each maximal run of line breaks becomes one space.
    #[default]
    Collapse,
    /// Each line break (CRLF counts once) becomes one space.
    PerNewline,
}

fn remove_newlines(body: &str, mode: SpacingMode) -> String {
    let mut out = String::with_capacity(body.len());
    let mut chars = body.chars().peekable();
    let mut in_run = false;
    while let Some(c) = chars.next() {
        if c == '\n' || c == '\r' {
            if c == '\r' && chars.peek() == Some(&'\n') {
                chars.next();
            }
            match mode {
                SpacingMode::Collapse if in_run => {}
                _ => out.push(' '),
            }
            in_run = true;
        } else {
            out.push(c);
            in_run = false;
        }
    }
    out
}

pub fn spacing_perturb(resume: &Resume, spec_id: &str, mode: SpacingMode) -> Resume {
    let body = remove_newlines(&resume.body, mode);
    let label = match mode {
        SpacingMode::Collapse => "collapse",
        SpacingMode::PerNewline => "per_newline",
    };
    derive_resume(resume, spec_id, body, LineageEntry::new(spec_id).with("mode", label))
}
