//! Resumes, job posts, demographic groups, and the line-delimited corpus format.
//!
//! A corpus file holds one JSON record per line. Resume records carry
//! `{schema_version, kind: "resume", id, profession, source, group?, lineage, body}`,
//! job records `{schema_version, kind: "job", id, occupation, body}`. Bodies keep
//! their newlines JSON-escaped so every record stays on one line.

mod names;
mod professions;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use names::{NamePool, NamePoolError, NamePools, BUNDLED_NAME_POOLS_SHA256, LAST_NAME};
pub use professions::{AliasTable, GENERATED_PROFESSIONS, JOB_OCCUPATIONS, KAGGLE_PROFESSIONS};
pub(crate) use names::word_tokens;

pub const CORPUS_SCHEMA_VERSION: u32 = 1;

/// Reserved `pair_jobs` key for resumes whose profession has no job post.
pub const UNMATCHED: &str = "unmatched";

/// Separator between a base resume id and the perturbation that produced a variant.
pub const VARIANT_SEPARATOR: char = '/';

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: unsupported schema_version {version} (expected {CORPUS_SCHEMA_VERSION})")]
    UnsupportedSchema { line: usize, version: u32 },
    #[error("line {line}: duplicate id '{id}'")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: {message}")]
    Invariant { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Race {
    Black,
    White,
}

/// One of the four intersectional groups FB, FW, MB, MW.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DemographicGroup {
    pub gender: Gender,
    pub race: Race,
}

impl DemographicGroup {
    pub const FB: Self = Self { gender: Gender::Female, race: Race::Black };
    pub const FW: Self = Self { gender: Gender::Female, race: Race::White };
    pub const MB: Self = Self { gender: Gender::Male, race: Race::Black };
    pub const MW: Self = Self { gender: Gender::Male, race: Race::White };

    /// Canonical order, also the column order of group-count vectors.
    pub const ALL: [Self; 4] = [Self::FB, Self::FW, Self::MB, Self::MW];

    pub fn code(self) -> &'static str {
        match (self.gender, self.race) {
            (Gender::Female, Race::Black) => "FB",
            (Gender::Female, Race::White) => "FW",
            (Gender::Male, Race::Black) => "MB",
            (Gender::Male, Race::White) => "MW",
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|g| *g == self).expect("all four groups listed")
    }

    pub fn race_label(self) -> &'static str {
        match self.race {
            Race::Black => "Black",
            Race::White => "White",
        }
    }

    pub fn gender_label(self) -> &'static str {
        match self.gender {
            Gender::Female => "female",
            Gender::Male => "male",
        }
    }
}

impl fmt::Display for DemographicGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for DemographicGroup {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|g| g.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown demographic group '{s}' (expected FB, FW, MB or MW)"))
    }
}

impl Serialize for DemographicGroup {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for DemographicGroup {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Generated,
    Kaggle,
    User,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resume {
    pub id: String,
    pub profession: String,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<DemographicGroup>,
    #[serde(default)]
    pub lineage: Vec<String>,
    pub body: String,
}

impl Resume {
    pub fn new(id: impl Into<String>, profession: impl Into<String>, body: impl Into<String>) -> Self {
        Resume {
            id: id.into(),
            profession: profession.into(),
            source: Source::Generated,
            group: None,
            lineage: Vec::new(),
            body: body.into(),
        }
    }

    /// Id of the unperturbed resume this one descends from.
    pub fn base_id(&self) -> &str {
        base_id(&self.id)
    }
}

/// Strips every variant suffix from a resume id.
pub fn base_id(id: &str) -> &str {
    id.split(VARIANT_SEPARATOR).next().unwrap_or(id)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobPost {
    pub id: String,
    pub occupation: String,
    pub body: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub resumes: Vec<Resume>,
    pub jobs: Vec<JobPost>,
}

/// A loaded corpus plus the non-fatal findings produced while validating it.
#[derive(Debug, Clone, Default)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub warnings: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Record {
    Resume(ResumeRecord),
    Job(JobRecord),
}

#[derive(Serialize, Deserialize)]
struct ResumeRecord {
    schema_version: u32,
    #[serde(flatten)]
    resume: Resume,
}

#[derive(Serialize, Deserialize)]
struct JobRecord {
    schema_version: u32,
    #[serde(flatten)]
    job: JobPost,
}

/// Loads a corpus file. See [`parse_corpus`] for the validation rules.
pub fn load_corpus(path: impl AsRef<Path>, pools: &NamePools) -> Result<LoadedCorpus, CorpusError> {
    let path = path.as_ref();
    let io_err = |source| CorpusError::Io { path: path.to_path_buf(), source };
    let file = File::open(path).map_err(io_err)?;
    parse_corpus(BufReader::new(file), pools).map_err(|e| match e {
        CorpusError::Io { source, .. } => io_err(source),
        other => other,
    })
}

/// Parses line-delimited records, preserving input order.
///
/// Errors: malformed JSON, wrong schema version, duplicate ids, a group label
/// on a resume with empty lineage, an original id containing the variant
/// separator, a resume already carrying a `<First> Williams` name with empty
/// lineage, or a job with an empty occupation. Unknown profession labels and
/// bare first-name tokens in unperturbed resumes are reported as warnings.
pub fn parse_corpus<R: BufRead>(reader: R, pools: &NamePools) -> Result<LoadedCorpus, CorpusError> {
    let mut out = LoadedCorpus::default();
    let mut resume_ids = HashSet::new();
    let mut job_ids = HashSet::new();
    let known = professions::known_labels();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| CorpusError::Io { path: PathBuf::new(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line)
            .map_err(|e| CorpusError::Malformed { line: line_no, message: e.to_string() })?;
        match record {
            Record::Resume(ResumeRecord { schema_version, resume }) => {
                check_version(line_no, schema_version)?;
                if !resume_ids.insert(resume.id.clone()) {
                    return Err(CorpusError::DuplicateId { line: line_no, id: resume.id });
                }
                validate_resume(line_no, &resume, pools, &mut out.warnings)?;
                if !known.contains(resume.profession.as_str()) {
                    let msg = format!(
                        "line {line_no}: resume '{}' has unknown profession '{}'",
                        resume.id, resume.profession
                    );
                    log::warn!("{msg}");
                    out.warnings.push(msg);
                }
                out.corpus.resumes.push(resume);
            }
            Record::Job(JobRecord { schema_version, job }) => {
                check_version(line_no, schema_version)?;
                if !job_ids.insert(job.id.clone()) {
                    return Err(CorpusError::DuplicateId { line: line_no, id: job.id });
                }
                if job.occupation.trim().is_empty() {
                    return Err(CorpusError::Invariant {
                        line: line_no,
                        message: format!("job '{}' has an empty occupation", job.id),
                    });
                }
                out.corpus.jobs.push(job);
            }
        }
    }
    Ok(out)
}

fn check_version(line: usize, version: u32) -> Result<(), CorpusError> {
    if version != CORPUS_SCHEMA_VERSION {
        return Err(CorpusError::UnsupportedSchema { line, version });
    }
    Ok(())
}

fn validate_resume(
    line: usize,
    resume: &Resume,
    pools: &NamePools,
    warnings: &mut Vec<String>,
) -> Result<(), CorpusError> {
    if resume.id.is_empty() {
        return Err(CorpusError::Invariant { line, message: "empty resume id".into() });
    }
    if !resume.lineage.is_empty() {
        return Ok(());
    }
    let fail = |message: String| Err(CorpusError::Invariant { line, message });
    if resume.group.is_some() {
        return fail(format!("resume '{}' has a group label but empty lineage", resume.id));
    }
    if resume.id.contains(VARIANT_SEPARATOR) {
        return fail(format!(
            "original resume id '{}' must not contain '{VARIANT_SEPARATOR}'",
            resume.id
        ));
    }
    let tokens = names::word_tokens(&resume.body);
    for pair in tokens.windows(2) {
        if pair[1].1 == LAST_NAME && pools.contains_name(pair[0].1) {
            return fail(format!(
                "resume '{}' is already named ('{} {LAST_NAME}') but has empty lineage",
                resume.id, pair[0].1
            ));
        }
    }
    if let Some((_, name)) = tokens.iter().find(|(_, t)| pools.contains_name(t)) {
        warnings.push(format!(
            "line {line}: unperturbed resume '{}' contains the pool first-name token '{name}'",
            resume.id
        ));
    }
    Ok(())
}

/// Writes a corpus in the line-delimited format (resumes first, then jobs).
pub fn save_corpus(path: impl AsRef<Path>, corpus: &Corpus) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let io_err = |source| CorpusError::Io { path: path.to_path_buf(), source };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    write_corpus(&mut w, corpus).map_err(io_err)?;
    w.flush().map_err(io_err)
}

pub fn write_corpus<W: Write>(w: &mut W, corpus: &Corpus) -> std::io::Result<()> {
    for r in &corpus.resumes {
        let rec = Record::Resume(ResumeRecord {
            schema_version: CORPUS_SCHEMA_VERSION,
            resume: r.clone(),
        });
        serde_json::to_writer(&mut *w, &rec)?;
        w.write_all(b"\n")?;
    }
    for j in &corpus.jobs {
        let rec = Record::Job(JobRecord { schema_version: CORPUS_SCHEMA_VERSION, job: j.clone() });
        serde_json::to_writer(&mut *w, &rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Resumes and job posts sharing one occupation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OccupationGroup {
    pub resumes: Vec<Resume>,
    pub jobs: Vec<JobPost>,
}

/// Groups resumes under the occupation of the job posts their profession maps
/// to. Resumes with no matching job occupation go under [`UNMATCHED`].
pub fn pair_jobs(
    resumes: &[Resume],
    jobs: &[JobPost],
    aliases: &AliasTable,
) -> BTreeMap<String, OccupationGroup> {
    let mut out: BTreeMap<String, OccupationGroup> = BTreeMap::new();
    for j in jobs {
        out.entry(j.occupation.clone()).or_default().jobs.push(j.clone());
    }
    for r in resumes {
        let occupation = aliases.resolve(&r.profession);
        let key = if out.get(occupation).is_some_and(|g| !g.jobs.is_empty()) {
            occupation.to_string()
        } else {
            UNMATCHED.to_string()
        };
        out.entry(key).or_default().resumes.push(r.clone());
    }
    out
}
