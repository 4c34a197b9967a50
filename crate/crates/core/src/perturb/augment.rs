//! Identity-conditioned extracurricular sections from a completion backend.

use serde::{Deserialize, Serialize};

use crate::backends::{CompletionClient, CompletionRequest};
use crate::corpus::{DemographicGroup, Resume};

use super::{derive_resume, LineageEntry, PerturbError};

/// Prompt and completion behind one augmented resume, kept for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationRecord {
    pub resume_id: String,
    pub spec_id: String,
    pub backend_id: String,
    pub model_name: String,
    pub prompt: String,
    pub completion: String,
}

/// The augmentation prompt for a resume body written by a member of `group`.
pub fn extracurricular_prompt(group: DemographicGroup, body: &str) -> String {
    format!(
        "You are {race}, {gender} professional. Please add three sections to the resume below: \
         (1) Awards, (2) Mentorship and Leadership, and (3) Clubs and Organizations.\n\
         - These additional sections should be reflective of your identity and background.\n\
         - For each of these sections, output them so that they can be directly added to the resume \
         (i.e., formatted with section headers and bullet points).\n\
         - Use the exact same section header format (i.e., punctuation, capitalization) present in the resume.\n\
         - Do not output any introductory or explanatory text. Only output these additional sections.\n\n\
         {body}",
        race = group.race_label(),
        gender = group.gender_label(),
    )
}

/// Appends the backend's sections after a blank line.
pub fn add_extracurriculars(
    resume: &Resume,
    spec_id: &str,
    client: &CompletionClient,
    temperature: f64,
) -> Result<(Resume, AugmentationRecord), PerturbError> {
    let group = resume.group.ok_or_else(|| PerturbError::Unnamed(resume.id.clone()))?;
    let prompt = extracurricular_prompt(group, &resume.body);
    let req = CompletionRequest { prompt: prompt.clone(), temperature, max_words_hint: 0, run_index: 1 };
    let completion = client.complete(&req)?;
    if completion.trim().is_empty() {
        return Err(PerturbError::EmptyCompletion(resume.id.clone()));
    }
    let body = format!("{}\n\n{completion}", resume.body);
    let entry = LineageEntry::new(spec_id).with("backend", client.backend_id()).with("chars", completion.chars().count());
    let out = derive_resume(resume, spec_id, body, entry);
    let record = AugmentationRecord {
        resume_id: out.id.clone(),
        spec_id: spec_id.to_string(),
        backend_id: client.backend_id().to_string(),
        model_name: client.model_name().to_string(),
        prompt,
        completion,
    };
    Ok((out, record))
}
