//! End-to-end audit runs.
//!
//! [`run_audit`] loads the corpus, applies the perturbation plan once per name
//! draw, scores every variant with each embedding backend, summarizes the
//! name-assigned resumes with each completion backend, runs the retrieval and
//! summarization audits, and aggregates everything into a report.
//!
//! Output layout under `output_dir`:
//!
//! ```text
//! manifest.json  ledger.csv  report.csv  report.json  plot_<metric>.csv
//! draw-<d>/plan.toml  perturbed.jsonl  assignments.csv  augmentations.jsonl
//! draw-<d>/scores/<model>.csv  exclusion.csv  nonuniformity.csv
//! draw-<d>/summaries/<model>.jsonl  measures/<model>.csv  tests.csv  violation_rates.csv
//! cache/  (backend responses, unless disabled)
//! ```
//!
//! Nothing written depends on wall-clock time, thread count or cache state,
//! so reruns are byte-identical.

mod config;
mod retrieval;
mod summarize;

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::backends::{open_cache, BackendError, CompletionClient, EmbeddingClient, RegardClient, ResponseCache};
use crate::corpus::{load_corpus, save_corpus, AliasTable, Corpus, NamePools, Resume, BUNDLED_NAME_POOLS_SHA256};
use crate::par::Execution;
use crate::perturb::{apply_plan, read_plan, write_plan, PerturbError, PerturbationPlan, PlanOutput};
use crate::report::{aggregate, emit, sha256_hex, write_ledger, Format, LedgerEntry, Manifest, ManifestEntry, MetricReport};
use crate::retrieval::write_scores;
use crate::seed;
use crate::stats::write_test_ledger;
use crate::textmetrics::write_measures;

pub use config::{
    CorpusConfig, Grid, ModelsConfig, PlanConfig, Preset, RunConfig, StatsConfig, CONFIG_SCHEMA_VERSION,
    PAPER_ALPHA, PAPER_LENGTHS, PAPER_POVS, PAPER_RUNS, PAPER_TEMPERATURES,
};
pub use retrieval::{
    audit_exclusion, audit_nonuniformity, contrasts, families, job_scopes, score_resumes, sets_from_variants,
    Contrast, ExclusionRow, Family, JobScope, NonUniformityRow, RetrievalAudit, RetrievalScope,
};
pub use summarize::{audit_summaries, measure_summaries, paired_samples, summarize, summary_prompt, SummaryAudit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Corpus,
    Perturb,
    Embed,
    Retrieval,
    Summarize,
    Measure,
    Statistics,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Corpus => "corpus",
            Stage::Perturb => "perturb",
            Stage::Embed => "embed",
            Stage::Retrieval => "retrieval",
            Stage::Summarize => "summarize",
            Stage::Measure => "measure",
            Stage::Statistics => "statistics",
            Stage::Report => "report",
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{stage}: backend: {source}")]
    Backend {
        stage: Stage,
        #[source]
        source: BackendError,
    },
    #[error("{stage}: {message}")]
    Data { stage: Stage, message: String },
}

impl PipelineError {
    pub fn data(stage: Stage, e: impl fmt::Display) -> Self {
        PipelineError::Data { stage, message: e.to_string() }
    }

    /// 2 for configuration, 3 for backend, 4 for data errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Backend { .. } => 3,
            PipelineError::Data { .. } => 4,
        }
    }

    fn perturb(e: PerturbError) -> Self {
        match e {
            PerturbError::Backend(source) => PipelineError::Backend { stage: Stage::Perturb, source },
            PerturbError::Plan(m) => PipelineError::Config(format!("plan: {m}")),
            other => PipelineError::data(Stage::Perturb, other),
        }
    }
}

fn write_err(path: &Path, e: impl fmt::Display) -> PipelineError {
    PipelineError::data(Stage::Report, format!("{}: {e}", path.display()))
}

fn create_file(path: &Path) -> Result<BufWriter<fs::File>, PipelineError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| write_err(dir, e))?;
    }
    fs::File::create(path).map(BufWriter::new).map_err(|e| write_err(path, e))
}

/// Writes one JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), PipelineError> {
    let mut w = create_file(path)?;
    for r in rows {
        serde_json::to_writer(&mut w, r).map_err(|e| write_err(path, e))?;
        w.write_all(b"\n").map_err(|e| write_err(path, e))?;
    }
    w.flush().map_err(|e| write_err(path, e))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(create_file(path)?);
    for r in rows {
        w.serialize(r).map_err(|e| write_err(path, e))?;
    }
    w.flush().map_err(|e| write_err(path, e))
}

fn read_input(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
}

/// Loaded corpus, name pools, aliases and plan, plus their manifest.
pub struct Inputs {
    pub pools: NamePools,
    pub corpus: Corpus,
    pub aliases: AliasTable,
    pub plan: PerturbationPlan,
    pub manifest: Manifest,
}

/// Name pools from the config: bundled or from file, with optional frequencies.
pub fn load_pools(cfg: &CorpusConfig) -> Result<(NamePools, Vec<ManifestEntry>), PipelineError> {
    let mut entries = Vec::new();
    let mut pools = match &cfg.name_pools {
        None => {
            entries.push(ManifestEntry { name: "name_pools".into(), sha256: BUNDLED_NAME_POOLS_SHA256.into() });
            NamePools::bundled().map_err(|e| PipelineError::data(Stage::Corpus, e))?
        }
        Some(p) => {
            let text = read_input(p)?;
            entries.push(ManifestEntry { name: "name_pools".into(), sha256: sha256_hex(text.as_bytes()) });
            NamePools::from_tsv(&text, None, false).map_err(|e| PipelineError::data(Stage::Corpus, e))?
        }
    };
    if let Some(p) = &cfg.name_frequencies {
        let text = read_input(p)?;
        entries.push(ManifestEntry { name: "name_frequencies".into(), sha256: sha256_hex(text.as_bytes()) });
        for unknown in pools.apply_frequencies(&text).map_err(|e| PipelineError::data(Stage::Corpus, e))? {
            log::warn!("frequency table names {unknown}, which is not in the pools");
        }
    }
    Ok((pools, entries))
}

/// The configuration as recorded in the manifest: locations that do not
/// affect results are dropped and input paths reduced to file names.
fn manifest_config(cfg: &RunConfig) -> serde_json::Value {
    let mut c = cfg.clone();
    let name = |p: &Path| PathBuf::from(p.file_name().unwrap_or_default());
    c.output_dir = PathBuf::new();
    c.cache_dir = None;
    c.no_cache = false;
    c.parallel = true;
    c.svg = false;
    c.corpus.path = name(&c.corpus.path);
    for p in [&mut c.corpus.name_pools, &mut c.corpus.name_frequencies, &mut c.plan.path].into_iter().flatten() {
        *p = name(p);
    }
    serde_json::to_value(&c).expect("config serializes")
}

/// Validates the config and loads every input.
pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs, PipelineError> {
    cfg.validate()?;
    let (pools, mut entries) = load_pools(&cfg.corpus)?;
    let corpus_bytes = fs::read(&cfg.corpus.path)
        .map_err(|e| PipelineError::data(Stage::Corpus, format!("{}: {e}", cfg.corpus.path.display())))?;
    entries.insert(0, ManifestEntry { name: "corpus".into(), sha256: sha256_hex(&corpus_bytes) });
    let loaded = load_corpus(&cfg.corpus.path, &pools).map_err(|e| PipelineError::data(Stage::Corpus, e))?;
    for w in &loaded.warnings {
        log::warn!("{w}");
    }
    let mut aliases = AliasTable::default();
    aliases.extend(cfg.corpus.aliases.clone());
    let plan = match &cfg.plan.path {
        Some(p) => read_plan(&read_input(p)?).map_err(PipelineError::perturb)?,
        None => PerturbationPlan::standard(seed::derive(cfg.seed, &["plan"]), cfg.plan.extracurricular),
    };
    plan.validate().map_err(PipelineError::perturb)?;
    let plan_text = write_plan(&plan).map_err(PipelineError::perturb)?;
    entries.push(ManifestEntry { name: "plan".into(), sha256: sha256_hex(plan_text.as_bytes()) });
    let backends = cfg.used_backends().iter().map(|b| format!("{}:{}", b.id, b.model_name)).collect();
    let manifest = Manifest::new(entries, cfg.seed, backends, manifest_config(cfg));
    Ok(Inputs { pools, corpus: loaded.corpus, aliases, plan, manifest })
}

/// Draw 1 uses the plan's seeds; later draws derive fresh seeds per spec.
pub fn plan_for_draw(plan: &PerturbationPlan, draw: u32) -> PerturbationPlan {
    let mut p = plan.clone();
    if draw > 1 {
        for s in &mut p.specs {
            s.seed = seed::derive(s.seed, &["draw", &draw.to_string()]);
        }
    }
    p
}

/// Cache traffic of one backend over the run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BackendUsage {
    pub backend_id: String,
    pub hits: u64,
    pub misses: u64,
}

#[derive(Debug, Clone)]
pub struct AuditOutcome {
    pub manifest: Manifest,
    pub report: MetricReport,
    pub files: Vec<PathBuf>,
    pub usage: Vec<BackendUsage>,
}

struct Clients {
    embedders: Vec<EmbeddingClient>,
    summarizers: Vec<CompletionClient>,
    augmenter: Option<CompletionClient>,
    regard: Option<RegardClient>,
}

fn open_clients(cfg: &RunConfig, pools: &NamePools, cache: Option<ResponseCache>) -> Result<Clients, PipelineError> {
    let cfg_err = |e: BackendError| PipelineError::Config(e.to_string());
    Ok(Clients {
        embedders: cfg
            .embedders()
            .into_iter()
            .map(|b| EmbeddingClient::from_config(b, pools, cache.clone()))
            .collect::<Result<_, _>>()
            .map_err(cfg_err)?,
        summarizers: cfg
            .summarizers()
            .into_iter()
            .map(|b| CompletionClient::from_config(b, cache.clone()))
            .collect::<Result<_, _>>()
            .map_err(cfg_err)?,
        augmenter: cfg.augmenter().map(|b| CompletionClient::from_config(b, cache.clone())).transpose().map_err(cfg_err)?,
        regard: cfg.regard().map(|b| RegardClient::from_config(b, cache.clone())).transpose().map_err(cfg_err)?,
    })
}

/// Resumes summarized by the audit: the four name-assigned sets.
fn assigned_resumes(plan: &PerturbationPlan, out: &PlanOutput) -> Vec<Resume> {
    families(plan)
        .into_iter()
        .filter(|f| f.name == "names")
        .flat_map(|f| f.specs)
        .flat_map(|s| out.set(&s).to_vec())
        .collect()
}

/// Runs every stage and writes all artifacts under `cfg.output_dir`.
pub fn run_audit(cfg: &RunConfig) -> Result<AuditOutcome, PipelineError> {
    let inputs = load_inputs(cfg)?;
    let exec = if cfg.parallel { Execution::Parallel } else { Execution::Sequential };
    let cache = open_cache(cfg.cache_dir().as_deref()).map_err(|e| PipelineError::Config(e.to_string()))?;
    let clients = open_clients(cfg, &inputs.pools, cache)?;
    let run_id = inputs.manifest.run_id();
    let out_dir = &cfg.output_dir;
    let mut files = Vec::new();
    let mut ledger: Vec<LedgerEntry> = Vec::new();
    let scopes = job_scopes(&inputs.corpus.resumes, &inputs.corpus.jobs, &inputs.aliases);

    for draw in 1..=cfg.grid.draws {
        let dir = out_dir.join(format!("draw-{draw}"));
        let plan = plan_for_draw(&inputs.plan, draw);
        log::info!("draw {draw}: applying {} perturbation specs", plan.specs.len());
        let output = apply_plan(&inputs.corpus.resumes, &plan, &inputs.pools, clients.augmenter.as_ref(), exec)
            .map_err(PipelineError::perturb)?;
        let plan_path = dir.join("plan.toml");
        let mut w = create_file(&plan_path)?;
        w.write_all(write_plan(&plan).map_err(PipelineError::perturb)?.as_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| write_err(&plan_path, e))?;
        let perturbed = Corpus { resumes: output.variants().cloned().collect(), jobs: inputs.corpus.jobs.clone() };
        let perturbed_path = dir.join("perturbed.jsonl");
        save_corpus(&perturbed_path, &perturbed).map_err(|e| write_err(&perturbed_path, e))?;
        write_csv(&dir.join("assignments.csv"), &output.assignments)?;
        write_jsonl(&dir.join("augmentations.jsonl"), &output.augmentations)?;
        files.extend([plan_path, perturbed_path, dir.join("assignments.csv"), dir.join("augmentations.jsonl")]);

        let scope = RetrievalScope { plan: &plan, sets: &output.sets, jobs: &scopes };
        let variants: Vec<&Resume> = output.variants().collect();
        let mut exclusion = Vec::new();
        let mut nonuniformity = Vec::new();
        for client in &clients.embedders {
            let model = client.backend_id();
            log::info!("draw {draw}: embedding {} variants with {model}", variants.len());
            let scores = score_resumes(client, &inputs.corpus.jobs, &variants, exec)?;
            let path = dir.join("scores").join(format!("{model}.csv"));
            write_scores(create_file(&path)?, &scores).map_err(|e| write_err(&path, e))?;
            files.push(path);
            let ex = audit_exclusion(model, &scores, &scope, &cfg.grid, &run_id, draw)?;
            let nu = audit_nonuniformity(model, &scores, &scope, &cfg.grid, cfg.stats.alpha, &run_id, draw, exec)?;
            exclusion.extend(ex.exclusion);
            nonuniformity.extend(nu.nonuniformity);
            ledger.extend(ex.ledger);
            ledger.extend(nu.ledger);
        }
        write_csv(&dir.join("exclusion.csv"), &exclusion)?;
        write_csv(&dir.join("nonuniformity.csv"), &nonuniformity)?;
        files.extend([dir.join("exclusion.csv"), dir.join("nonuniformity.csv")]);

        let assigned = assigned_resumes(&plan, &output);
        let assigned_refs: Vec<&Resume> = assigned.iter().collect();
        let mut measured = Vec::new();
        for client in &clients.summarizers {
            let model = client.backend_id();
            log::info!("draw {draw}: summarizing {} resumes with {model}", assigned.len());
            let records = summarize(client, &assigned_refs, &cfg.grid)?;
            let path = dir.join("summaries").join(format!("{model}.jsonl"));
            write_jsonl(&path, &records)?;
            files.push(path);
            let rows = measure_summaries(records, clients.regard.as_ref(), cfg.models.reading_micros_per_char, exec);
            let path = dir.join("measures").join(format!("{model}.csv"));
            write_measures(create_file(&path)?, &rows).map_err(|e| write_err(&path, e))?;
            files.push(path);
            measured.extend(rows);
        }
        let audit = audit_summaries(&measured, &cfg.stats, &run_id, draw)?;
        let path = dir.join("tests.csv");
        write_test_ledger(create_file(&path)?, &audit.tests).map_err(|e| write_err(&path, e))?;
        write_csv(&dir.join("violation_rates.csv"), &audit.rates)?;
        files.extend([path, dir.join("violation_rates.csv")]);
        ledger.extend(audit.ledger);
    }

    let ledger_path = out_dir.join("ledger.csv");
    write_ledger(create_file(&ledger_path)?, &ledger).map_err(|e| write_err(&ledger_path, e))?;
    files.push(ledger_path);
    let manifest_path = out_dir.join("manifest.json");
    let mut w = create_file(&manifest_path)?;
    serde_json::to_writer_pretty(&mut w, &inputs.manifest)
        .map_err(|e| write_err(&manifest_path, e))
        .and_then(|_| w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| write_err(&manifest_path, e)))?;
    files.push(manifest_path);
    let report = aggregate(&inputs.manifest, &[ledger]).map_err(|e| PipelineError::data(Stage::Report, e))?;
    let mut formats = vec![Format::Csv, Format::Json, Format::PlotData];
    if cfg.svg {
        formats.push(Format::Svg);
    }
    files.extend(emit(&report, out_dir, &formats).map_err(|e| PipelineError::data(Stage::Report, e))?);

    let mut usage = Vec::new();
    let mut note = |id: &str, hits: u64, misses: u64| usage.push(BackendUsage { backend_id: id.into(), hits, misses });
    for c in &clients.embedders {
        note(c.backend_id(), c.stats().hits(), c.stats().misses());
    }
    for c in clients.summarizers.iter().chain(&clients.augmenter) {
        note(c.backend_id(), c.stats().hits(), c.stats().misses());
    }
    if let Some(c) = &clients.regard {
        note(c.backend_id(), c.stats().hits(), c.stats().misses());
    }
    Ok(AuditOutcome { manifest: inputs.manifest, report, files, usage })
}

#[cfg(test)]
mod tests;
