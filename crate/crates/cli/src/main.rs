//! `fairscreen` command-line front end.
//!
//! Every pipeline subcommand reads a run configuration (`--config`) and
//! applies flag overrides on top of it. Exit codes: 0 ok, 2 configuration
//! error, 3 backend error, 4 data error.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fairscreen::backends::{open_cache, CompletionClient, EmbeddingClient, RegardClient};
use fairscreen::corpus::{load_corpus, save_corpus, Corpus, Resume};
use fairscreen::par::Execution;
use fairscreen::perturb::{apply_plan, read_plan, write_plan, PerturbationPlan};
use fairscreen::pipeline::{
    audit_exclusion, audit_nonuniformity, audit_summaries, job_scopes, load_inputs, load_pools, measure_summaries,
    plan_for_draw, run_audit, score_resumes, sets_from_variants, summarize, write_csv, write_jsonl, CorpusConfig,
    Inputs, PipelineError, RetrievalScope, RunConfig, Stage,
};
use fairscreen::report::{aggregate, emit, read_ledger, write_ledger, Format, LedgerEntry, Manifest};
use fairscreen::retrieval::{rank_resumes, read_scores, write_scores, NonUniformityMode};
use fairscreen::stats::{write_test_ledger, Correction, CorrectionScope};
use fairscreen::textmetrics::{read_measures, write_measures, Pov, SummaryRecord};

#[derive(Parser)]
#[command(name = "fairscreen", version, about = "Counterfactual fairness audit for resume retrieval and summarization")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Corpus utilities.
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
    /// Apply the perturbation plan and write perturbed corpora.
    Perturb(PerturbArgs),
    /// Embed jobs and perturbed resumes and write a score table.
    Embed(EmbedArgs),
    /// Print one job's ranking from a score table.
    Rank(RankArgs),
    /// Generate summaries of the name-assigned resumes.
    Summarize(SummarizeArgs),
    /// Compute text measures for a summaries file.
    Measure(MeasureArgs),
    /// Retrieval or summarization audit from intermediate files.
    Audit {
        #[command(subcommand)]
        command: AuditCommand,
    },
    /// Aggregate ledgers into a report.
    Report(ReportArgs),
    /// Run every stage end to end.
    Run(RunArgs),
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Check a corpus file and report its contents.
    Validate {
        /// Corpus file (JSON lines).
        #[arg(long)]
        corpus: PathBuf,
        /// Name pool table replacing the bundled pools.
        #[arg(long)]
        name_pools: Option<PathBuf>,
    },
}

/// Configuration file plus overrides for its keys.
#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Perturbation plan (TOML) replacing the standard plan.
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long)]
    draws: Option<u32>,
    #[arg(long)]
    runs: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    correction: Option<Correction>,
    #[arg(long)]
    scope: Option<CorrectionScope>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    x: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    mode: Option<Vec<NonUniformityMode>>,
    #[arg(long, value_delimiter = ',')]
    temperatures: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    lengths: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    povs: Option<Vec<Pov>>,
    /// Pair individual runs instead of averaging them per resume.
    #[arg(long)]
    per_run: bool,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    no_cache: bool,
    /// Disable data parallelism.
    #[arg(long)]
    sequential: bool,
    /// Also write SVG bar charts.
    #[arg(long)]
    svg: bool,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig, PipelineError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => {
                let corpus = self
                    .corpus
                    .clone()
                    .ok_or_else(|| PipelineError::Config("either --config or --corpus is required".into()))?;
                RunConfig::from_toml(
                    &format!("seed = 0\noutput_dir = \"out\"\n[corpus]\npath = {:?}\n", corpus.display().to_string()),
                    Path::new("."),
                )?
            }
        };
        cfg.apply_preset();
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.output_dir {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = &self.corpus {
            cfg.corpus.path = v.clone();
        }
        if let Some(v) = &self.plan {
            cfg.plan.path = Some(v.clone());
        }
        if let Some(v) = self.draws {
            cfg.grid.draws = v;
        }
        if let Some(v) = self.runs {
            cfg.grid.runs = v;
        }
        if let Some(v) = self.alpha {
            cfg.stats.alpha = v;
        }
        if let Some(v) = self.correction {
            cfg.stats.correction = v;
        }
        if let Some(v) = self.scope {
            cfg.stats.scope = v;
        }
        if let Some(v) = &self.n {
            cfg.grid.n = v.clone();
        }
        if let Some(v) = &self.x {
            cfg.grid.x = v.clone();
        }
        if let Some(v) = &self.mode {
            cfg.grid.modes = v.clone();
        }
        if let Some(v) = &self.temperatures {
            cfg.grid.temperatures = v.clone();
        }
        if let Some(v) = &self.lengths {
            cfg.grid.lengths = v.clone();
        }
        if let Some(v) = &self.povs {
            cfg.grid.povs = v.clone();
        }
        if self.per_run {
            cfg.stats.average_runs = false;
        }
        if let Some(v) = &self.cache_dir {
            cfg.cache_dir = Some(v.clone());
        }
        cfg.no_cache |= self.no_cache;
        cfg.parallel &= !self.sequential;
        cfg.svg |= self.svg;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct PerturbArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Directory receiving draw-<d>/perturbed.jsonl and friends.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EmbedArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Perturbed corpus written by `perturb`.
    #[arg(long)]
    perturbed: PathBuf,
    /// Embedding backend id from the configuration.
    #[arg(long)]
    backend: String,
    /// Score table (CSV).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RankArgs {
    /// Score table (CSV).
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    job: String,
    /// Only variants whose id ends with this spec id.
    #[arg(long)]
    spec: Option<String>,
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Args)]
struct SummarizeArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    perturbed: PathBuf,
    /// Plan the perturbed corpus was produced with.
    #[arg(long = "draw-plan")]
    draw_plan: Option<PathBuf>,
    /// Completion backend id from the configuration.
    #[arg(long)]
    backend: String,
    /// Summaries (JSON lines).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MeasureArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Summaries written by `summarize`.
    #[arg(long)]
    summaries: PathBuf,
    /// Measures (CSV).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum RetrievalMetric {
    Exclusion,
    Nonuniformity,
}

#[derive(Subcommand)]
enum AuditCommand {
    /// Exclusion or non-uniformity from a score table.
    Retrieval {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        perturbed: PathBuf,
        /// Plan the perturbed corpus was produced with.
        #[arg(long = "draw-plan")]
        draw_plan: Option<PathBuf>,
        #[arg(long)]
        scores: PathBuf,
        /// Model label for the ledger; defaults to the score file stem.
        #[arg(long)]
        model: Option<String>,
        #[arg(long, value_enum)]
        metric: RetrievalMetric,
        #[arg(long, default_value_t = 1)]
        draw: u32,
        /// Detail rows (CSV).
        #[arg(long)]
        out: PathBuf,
        /// Ledger entries (CSV).
        #[arg(long)]
        ledger: Option<PathBuf>,
    },
    /// Paired t-tests and violation rates from measure files.
    Summarization {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, required = true, num_args = 1..)]
        measures: Vec<PathBuf>,
        #[arg(long, default_value_t = 1)]
        draw: u32,
        /// Test ledger (CSV).
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        ledger: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ReportArgs {
    /// Manifest written by `run`; otherwise derived from the configuration.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, required = true, num_args = 1..)]
    ledger: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

/// An error with a fixed exit code.
#[derive(Debug)]
struct Exit(i32, String);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Exit {}

fn data_err(e: impl std::fmt::Display) -> anyhow::Error {
    Exit(4, e.to_string()).into()
}

fn exit_code(e: &anyhow::Error) -> i32 {
    if let Some(p) = e.downcast_ref::<PipelineError>() {
        return p.exit_code();
    }
    if let Some(Exit(code, _)) = e.downcast_ref::<Exit>() {
        return *code;
    }
    4
}

fn exec(cfg: &RunConfig) -> Execution {
    if cfg.parallel {
        Execution::Parallel
    } else {
        Execution::Sequential
    }
}

fn load_perturbed(inputs: &Inputs, path: &Path) -> Result<Corpus> {
    let loaded = load_corpus(path, &inputs.pools).map_err(data_err)?;
    Ok(loaded.corpus)
}

fn draw_plan(inputs: &Inputs, path: Option<&Path>) -> Result<PerturbationPlan> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| p.display().to_string()).map_err(data_err)?;
            Ok(read_plan(&text).map_err(|e| Exit(2, e.to_string()))?)
        }
        None => Ok(plan_for_draw(&inputs.plan, 1)),
    }
}

fn cache(cfg: &RunConfig) -> Result<Option<fairscreen::backends::ResponseCache>> {
    Ok(open_cache(cfg.cache_dir().as_deref()).map_err(|e| Exit(2, e.to_string()))?)
}

fn backend<'a>(cfg: &'a RunConfig, id: &str) -> Result<&'a fairscreen::backends::BackendConfig> {
    cfg.backend(id).ok_or_else(|| Exit(2, format!("no backend {id:?} in the configuration")).into())
}

fn write_entries(path: Option<&Path>, entries: &[LedgerEntry]) -> Result<()> {
    if let Some(p) = path {
        write_ledger(fs::File::create(p).with_context(|| p.display().to_string())?, entries).map_err(data_err)?;
    }
    Ok(())
}

fn corpus_validate(corpus: &Path, name_pools: Option<PathBuf>) -> Result<()> {
    let cfg = CorpusConfig { path: corpus.to_path_buf(), name_pools, name_frequencies: None, aliases: Default::default() };
    let (pools, _) = load_pools(&cfg)?;
    let loaded = load_corpus(corpus, &pools).map_err(data_err)?;
    let c = &loaded.corpus;
    let perturbed = c.resumes.iter().filter(|r| !r.lineage.is_empty()).count();
    println!(
        "{}: {} resumes ({} perturbed), {} job posts, {} warnings",
        corpus.display(),
        c.resumes.len(),
        perturbed,
        c.jobs.len(),
        loaded.warnings.len()
    );
    for w in &loaded.warnings {
        println!("warning: {w}");
    }
    Ok(())
}

fn perturb(args: &PerturbArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let inputs = load_inputs(&cfg)?;
    let augmenter = cfg
        .augmenter()
        .map(|b| CompletionClient::from_config(b, cache(&cfg)?).map_err(|e| anyhow::Error::from(Exit(2, e.to_string()))))
        .transpose()?;
    for draw in 1..=cfg.grid.draws {
        let plan = plan_for_draw(&inputs.plan, draw);
        let output = apply_plan(&inputs.corpus.resumes, &plan, &inputs.pools, augmenter.as_ref(), exec(&cfg))
            .map_err(|e| match e {
                fairscreen::perturb::PerturbError::Backend(source) => {
                    anyhow::Error::from(PipelineError::Backend { stage: Stage::Perturb, source })
                }
                other => data_err(other),
            })?;
        let dir = args.out.join(format!("draw-{draw}"));
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("plan.toml"), write_plan(&plan).map_err(data_err)?)?;
        let corpus = Corpus { resumes: output.variants().cloned().collect(), jobs: inputs.corpus.jobs.clone() };
        save_corpus(dir.join("perturbed.jsonl"), &corpus).map_err(data_err)?;
        write_csv(&dir.join("assignments.csv"), &output.assignments)?;
        write_jsonl(&dir.join("augmentations.jsonl"), &output.augmentations)?;
        println!("draw {draw}: {} variants -> {}", corpus.resumes.len(), dir.display());
    }
    Ok(())
}

fn embed(args: &EmbedArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let inputs = load_inputs(&cfg)?;
    let corpus = load_perturbed(&inputs, &args.perturbed)?;
    let b = backend(&cfg, &args.backend)?;
    let client = EmbeddingClient::from_config(b, &inputs.pools, cache(&cfg)?).map_err(|e| Exit(2, e.to_string()))?;
    let resumes: Vec<&Resume> = corpus.resumes.iter().collect();
    let scores = score_resumes(&client, &corpus.jobs, &resumes, exec(&cfg))?;
    if let Some(dir) = args.out.parent() {
        fs::create_dir_all(dir)?;
    }
    write_scores(fs::File::create(&args.out)?, &scores).map_err(data_err)?;
    println!("{} scores -> {}", scores.len(), args.out.display());
    Ok(())
}

fn rank(args: &RankArgs) -> Result<()> {
    let table = read_scores(fs::File::open(&args.scores).with_context(|| args.scores.display().to_string())?)
        .map_err(data_err)?;
    let job = table.job(&args.job).ok_or_else(|| data_err(format!("no scores for job {:?}", args.job)))?;
    let records: Vec<(String, f64)> = job
        .iter()
        .filter(|(id, _)| args.spec.as_ref().is_none_or(|s| id.ends_with(&format!("/{s}"))))
        .map(|(id, s)| (id.clone(), *s))
        .collect();
    let ranked = rank_resumes(&args.job, &records).map_err(data_err)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "rank\tscore\tresume")?;
    for e in ranked.entries.iter().take(args.top) {
        writeln!(out, "{}\t{:.6}\t{}", e.rank, e.score, e.resume_id)?;
    }
    Ok(())
}

fn summarize_cmd(args: &SummarizeArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let inputs = load_inputs(&cfg)?;
    let corpus = load_perturbed(&inputs, &args.perturbed)?;
    let plan = draw_plan(&inputs, args.draw_plan.as_deref())?;
    let sets = sets_from_variants(&corpus.resumes);
    let names = fairscreen::pipeline::families(&plan).into_iter().find(|f| f.name == "names");
    let resumes: Vec<&Resume> = names
        .iter()
        .flat_map(|f| &f.specs)
        .flat_map(|s| sets.get(s).into_iter().flatten())
        .collect();
    let b = backend(&cfg, &args.backend)?;
    let client = CompletionClient::from_config(b, cache(&cfg)?).map_err(|e| Exit(2, e.to_string()))?;
    let records = summarize(&client, &resumes, &cfg.grid)?;
    write_jsonl(&args.out, &records)?;
    println!("{} summaries -> {}", records.len(), args.out.display());
    Ok(())
}

fn read_summaries(path: &Path) -> Result<Vec<SummaryRecord>> {
    let f = fs::File::open(path).with_context(|| path.display().to_string()).map_err(data_err)?;
    BufReader::new(f)
        .lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|(i, l)| {
            let l = l?;
            serde_json::from_str(&l).map_err(|e| data_err(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

fn measure_cmd(args: &MeasureArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let records = read_summaries(&args.summaries)?;
    let regard = cfg
        .regard()
        .map(|b| RegardClient::from_config(b, cache(&cfg)?).map_err(|e| anyhow::Error::from(Exit(2, e.to_string()))))
        .transpose()?;
    let rows = measure_summaries(records, regard.as_ref(), cfg.models.reading_micros_per_char, exec(&cfg));
    if let Some(dir) = args.out.parent() {
        fs::create_dir_all(dir)?;
    }
    write_measures(fs::File::create(&args.out)?, &rows).map_err(data_err)?;
    println!("{} measured summaries -> {}", rows.len(), args.out.display());
    Ok(())
}

fn audit(cmd: &AuditCommand) -> Result<()> {
    match cmd {
        AuditCommand::Retrieval { config, perturbed, draw_plan: plan_path, scores, model, metric, draw, out, ledger } => {
            let cfg = config.resolve()?;
            let inputs = load_inputs(&cfg)?;
            let corpus = load_perturbed(&inputs, perturbed)?;
            let plan = draw_plan(&inputs, plan_path.as_deref())?;
            let table =
                read_scores(fs::File::open(scores).with_context(|| scores.display().to_string())?).map_err(data_err)?;
            let model = model.clone().unwrap_or_else(|| {
                scores.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
            });
            let sets = sets_from_variants(&corpus.resumes);
            let jobs = job_scopes(&inputs.corpus.resumes, &inputs.corpus.jobs, &inputs.aliases);
            let scope = RetrievalScope { plan: &plan, sets: &sets, jobs: &jobs };
            let run_id = inputs.manifest.run_id();
            let result = match metric {
                RetrievalMetric::Exclusion => {
                    let r = audit_exclusion(&model, &table, &scope, &cfg.grid, &run_id, *draw)?;
                    write_csv(out, &r.exclusion)?;
                    r
                }
                RetrievalMetric::Nonuniformity => {
                    let r = audit_nonuniformity(&model, &table, &scope, &cfg.grid, cfg.stats.alpha, &run_id, *draw, exec(&cfg))?;
                    write_csv(out, &r.nonuniformity)?;
                    r
                }
            };
            write_entries(ledger.as_deref(), &result.ledger)?;
            let report = aggregate(&inputs.manifest, &[result.ledger]).map_err(data_err)?;
            print_rows(&report);
            Ok(())
        }
        AuditCommand::Summarization { config, measures, draw, out, ledger } => {
            let cfg = config.resolve()?;
            let inputs = load_inputs(&cfg)?;
            let mut rows = Vec::new();
            for m in measures {
                let f = fs::File::open(m).with_context(|| m.display().to_string()).map_err(data_err)?;
                rows.extend(read_measures(f).map_err(data_err)?);
            }
            let audit = audit_summaries(&rows, &cfg.stats, &inputs.manifest.run_id(), *draw)?;
            if let Some(dir) = out.parent() {
                fs::create_dir_all(dir)?;
            }
            write_test_ledger(fs::File::create(out)?, &audit.tests).map_err(data_err)?;
            write_entries(ledger.as_deref(), &audit.ledger)?;
            println!("model\tcomparison\trejected\ttotal\trate");
            for r in &audit.rates {
                println!("{}\t{}\t{}\t{}\t{:.2}", r.model, r.comparison_kind, r.rejected, r.total, r.rate);
            }
            Ok(())
        }
    }
}

fn print_rows(report: &fairscreen::report::MetricReport) {
    println!("metric\tmodel\tperturbation\tdirection\tlevel\tmode\tvalue\tsample_size");
    for r in &report.rows {
        println!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.4}\t{}",
            r.metric, r.model, r.perturbation, r.direction, r.level, r.mode, r.value, r.sample_size
        );
    }
}

fn report(args: &ReportArgs) -> Result<()> {
    let manifest: Manifest = match &args.manifest {
        Some(p) => serde_json::from_str(&fs::read_to_string(p).with_context(|| p.display().to_string())?)
            .map_err(|e| Exit(2, format!("{}: {e}", p.display())))?,
        None => load_inputs(&args.config.resolve()?)?.manifest,
    };
    let mut ledgers = Vec::new();
    for p in &args.ledger {
        ledgers.push(read_ledger(fs::File::open(p).with_context(|| p.display().to_string())?).map_err(data_err)?);
    }
    let report = aggregate(&manifest, &ledgers).map_err(data_err)?;
    let mut formats = vec![Format::Csv, Format::Json, Format::PlotData];
    if args.config.svg {
        formats.push(Format::Svg);
    }
    let files = emit(&report, &args.out, &formats).map_err(data_err)?;
    println!("{} rows, {} files -> {}", report.rows.len(), files.len(), args.out.display());
    Ok(())
}

fn run(args: &RunArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let outcome = run_audit(&cfg)?;
    println!("run {} -> {}", outcome.manifest.run_id(), cfg.output_dir.display());
    for u in &outcome.usage {
        println!("backend {}: {} calls, {} cache hits", u.backend_id, u.misses, u.hits);
    }
    print_rows(&outcome.report);
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Corpus { command: CorpusCommand::Validate { corpus, name_pools } } => {
            corpus_validate(corpus, name_pools.clone())
        }
        Command::Perturb(a) => perturb(a),
        Command::Embed(a) => embed(a),
        Command::Rank(a) => rank(a),
        Command::Summarize(a) => summarize_cmd(a),
        Command::Measure(a) => measure_cmd(a),
        Command::Audit { command } => audit(command),
        Command::Report(a) => report(a),
        Command::Run(a) => run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
