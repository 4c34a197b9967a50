//! Known profession / occupation labels and the alias table that maps resume
//! professions onto job-post occupations.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub const GENERATED_PROFESSIONS: [&str; 22] = [
    "Account Executive",
    "Accountant",
    "Administrative Assistant",
    "Back-End Developer",
    "Data Analyst",
    "Data Engineer",
    "Data Scientist",
    "Firmware Engineer",
    "Front-End Developer",
    "Graphic Designer",
    "Hardware Engineer",
    "Legal Counsel",
    "Marketing Manager",
    "Mobile Developer",
    "PR Specialist",
    "Product Manager",
    "Quality Assurance Engineer",
    "Recruiter",
    "Research Scientist",
    "Supply Chain Manager",
    "Technical Writer",
    "UX Designer",
];

pub const KAGGLE_PROFESSIONS: [&str; 24] = [
    "Accountant",
    "Advocate",
    "Agriculture",
    "Apparel",
    "Arts",
    "Automobile",
    "Aviation",
    "Banking",
    "BPO",
    "Business Development",
    "Chef",
    "Construction",
    "Consultant",
    "Designer",
    "Digital Media",
    "Engineering",
    "Finance",
    "Fitness",
    "Healthcare",
    "HR",
    "Information Technology",
    "Public Relations",
    "Sales",
    "Teacher",
];

/// Occupations that have job posts (11 generated + 11 Kaggle).
pub const JOB_OCCUPATIONS: [&str; 22] = [
    "Account Executive",
    "Data Analyst",
    "Data Scientist",
    "Firmware Engineer",
    "Graphic Designer",
    "Marketing Manager",
    "Product Manager",
    "Research Scientist",
    "Supply Chain Manager",
    "Technical Writer",
    "UX Designer",
    "Apparel",
    "Aviation",
    "Banking",
    "Chef",
    "Construction",
    "Consultant",
    "Finance",
    "Fitness",
    "Healthcare",
    "IT",
    "Teacher",
];

pub(crate) fn known_labels() -> BTreeSet<&'static str> {
    GENERATED_PROFESSIONS
        .iter()
        .chain(&KAGGLE_PROFESSIONS)
        .chain(&JOB_OCCUPATIONS)
        .copied()
        .collect()
}

/// Profession -> occupation renames. Professions without an entry map to themselves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AliasTable(BTreeMap<String, String>);

impl Default for AliasTable {
    fn default() -> Self {
        AliasTable(BTreeMap::from([("Information Technology".to_string(), "IT".to_string())]))
    }
}

impl AliasTable {
    pub fn empty() -> Self {
        AliasTable(BTreeMap::new())
    }

    /// Adds or replaces entries on top of the current table.
    pub fn extend<I: IntoIterator<Item = (String, String)>>(&mut self, entries: I) {
        self.0.extend(entries);
    }

    pub fn resolve<'a>(&'a self, profession: &'a str) -> &'a str {
        self.0.get(profession).map(String::as_str).unwrap_or(profession)
    }
}
