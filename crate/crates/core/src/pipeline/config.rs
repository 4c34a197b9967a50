//! Run configuration, the paper-replication preset, and validation.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backends::{BackendConfig, BackendKind};
use crate::retrieval::NonUniformityMode;
use crate::stats::{Correction, CorrectionScope};
use crate::textmetrics::{Pov, RegardCategory, DEFAULT_MICROS_PER_CHAR};

use super::PipelineError;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

pub const PAPER_TEMPERATURES: [f64; 2] = [0.0, 0.3];
pub const PAPER_LENGTHS: [u32; 2] = [100, 200];
pub const PAPER_POVS: [Pov; 2] = [Pov::First, Pov::Third];
pub const PAPER_RUNS: u32 = 5;
pub const PAPER_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Summarization grid and alpha pinned to the published setup.
    Paper,
    #[default]
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub path: PathBuf,
    /// `group<TAB>name<TAB>frequency` table replacing the bundled pools.
    #[serde(default)]
    pub name_pools: Option<PathBuf>,
    /// Frequency table applied on top of the pools.
    #[serde(default)]
    pub name_frequencies: Option<PathBuf>,
    /// Extra profession to job-occupation renames.
    #[serde(default)]
    pub aliases: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    /// TOML plan file. Without it the standard plan is derived from the
    /// master seed.
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Adds extracurricular augmentation to the standard plan.
    #[serde(default)]
    pub extracurricular: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grid {
    pub n: Vec<usize>,
    pub x: Vec<f64>,
    pub modes: Vec<NonUniformityMode>,
    pub temperatures: Vec<f64>,
    pub lengths: Vec<u32>,
    pub povs: Vec<Pov>,
    pub runs: u32,
    pub draws: u32,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            n: vec![5, 10, 100],
            x: vec![5.0, 10.0],
            modes: vec![NonUniformityMode::Separated, NonUniformityMode::Pooled],
            temperatures: PAPER_TEMPERATURES.to_vec(),
            lengths: PAPER_LENGTHS.to_vec(),
            povs: PAPER_POVS.to_vec(),
            runs: PAPER_RUNS,
            draws: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatsConfig {
    pub correction: Correction,
    pub alpha: f64,
    pub scope: CorrectionScope,
    pub regard_category: RegardCategory,
    /// Average the runs of each resume before pairing; otherwise each run
    /// is its own pair.
    pub average_runs: bool,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            correction: Correction::Bh,
            alpha: PAPER_ALPHA,
            scope: CorrectionScope::Group,
            regard_category: RegardCategory::Positive,
            average_runs: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelsConfig {
    /// Embedding backends to audit; empty means every embedding backend.
    pub embedders: Vec<String>,
    /// Completion backends to audit; empty means every completion backend
    /// other than the augmenter.
    pub summarizers: Vec<String>,
    /// Completion backend that writes extracurricular sections.
    pub augmenter: Option<String>,
    /// Regard backend; without one the regard measure is skipped.
    pub regard: Option<String>,
    pub reading_micros_per_char: u64,
}

impl Default for ModelsConfig {
    fn default() -> Self {
        Self {
            embedders: Vec::new(),
            summarizers: Vec::new(),
            augmenter: None,
            regard: None,
            reading_micros_per_char: DEFAULT_MICROS_PER_CHAR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub preset: Preset,
    #[serde(with = "crate::seed::serde_seed")]
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Response cache; defaults to `<output_dir>/cache`.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    /// Skip the response cache entirely.
    #[serde(default)]
    pub no_cache: bool,
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub plan: PlanConfig,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub stats: StatsConfig,
    #[serde(default)]
    pub models: ModelsConfig,
    #[serde(default = "yes")]
    pub parallel: bool,
    /// Also write SVG bar charts.
    #[serde(default)]
    pub svg: bool,
    #[serde(default, rename = "backend")]
    pub backends: Vec<BackendConfig>,
}

fn schema_version() -> u32 {
    CONFIG_SCHEMA_VERSION
}

fn yes() -> bool {
    true
}

fn config_err(msg: impl Into<String>) -> PipelineError {
    PipelineError::Config(msg.into())
}

impl RunConfig {
    /// Parses TOML. Relative paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        fix(&mut self.corpus.path);
        for p in [&mut self.cache_dir, &mut self.corpus.name_pools, &mut self.corpus.name_frequencies, &mut self.plan.path]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }

    pub fn cache_dir(&self) -> Option<PathBuf> {
        if self.no_cache {
            return None;
        }
        Some(self.cache_dir.clone().unwrap_or_else(|| self.output_dir.join("cache")))
    }

    pub fn backend(&self, id: &str) -> Option<&BackendConfig> {
        self.backends.iter().find(|b| b.id == id)
    }

    fn of_kind(&self, kind: BackendKind) -> impl Iterator<Item = &BackendConfig> {
        self.backends.iter().filter(move |b| b.kind == kind)
    }

    pub fn embedders(&self) -> Vec<&BackendConfig> {
        if self.models.embedders.is_empty() {
            self.of_kind(BackendKind::Embedding).collect()
        } else {
            self.models.embedders.iter().filter_map(|id| self.backend(id)).collect()
        }
    }

    pub fn summarizers(&self) -> Vec<&BackendConfig> {
        if self.models.summarizers.is_empty() {
            self.of_kind(BackendKind::Completion)
                .filter(|b| Some(&b.id) != self.models.augmenter.as_ref())
                .collect()
        } else {
            self.models.summarizers.iter().filter_map(|id| self.backend(id)).collect()
        }
    }

    pub fn augmenter(&self) -> Option<&BackendConfig> {
        self.models.augmenter.as_deref().and_then(|id| self.backend(id))
    }

    pub fn regard(&self) -> Option<&BackendConfig> {
        self.models.regard.as_deref().and_then(|id| self.backend(id))
    }

    /// Backends the run will call.
    pub fn used_backends(&self) -> Vec<&BackendConfig> {
        let mut out: Vec<&BackendConfig> = self.embedders();
        out.extend(self.summarizers());
        out.extend(self.augmenter());
        out.extend(self.regard());
        let mut seen = BTreeSet::new();
        out.retain(|b| seen.insert(b.id.clone()));
        out
    }

    /// Static checks plus credential presence for every used backend.
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(config_err(format!("unsupported schema_version {}", self.schema_version)));
        }
        let g = &self.grid;
        if g.n.is_empty() || g.n.contains(&0) {
            return Err(config_err("grid.n must be non-empty and positive"));
        }
        if g.x.is_empty() || g.x.iter().any(|x| !(*x > 0.0 && *x <= 100.0)) {
            return Err(config_err("grid.x values must lie in (0, 100]"));
        }
        if g.modes.is_empty() {
            return Err(config_err("grid.modes must be non-empty"));
        }
        if g.temperatures.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(config_err("grid.temperatures must be finite and non-negative"));
        }
        if g.lengths.contains(&0) {
            return Err(config_err("grid.lengths must be positive"));
        }
        if g.runs == 0 || g.draws == 0 {
            return Err(config_err("grid.runs and grid.draws must be positive"));
        }
        if !(self.stats.alpha > 0.0 && self.stats.alpha < 1.0) {
            return Err(config_err("stats.alpha must lie in (0, 1)"));
        }
        if self.preset == Preset::Paper {
            let pinned = g.temperatures == PAPER_TEMPERATURES
                && g.lengths == PAPER_LENGTHS
                && g.povs == PAPER_POVS
                && g.runs == PAPER_RUNS
                && self.stats.alpha == PAPER_ALPHA;
            if !pinned {
                return Err(config_err(
                    "the paper preset pins temperatures [0.0, 0.3], lengths [100, 200], povs [first, third], \
                     runs 5 and alpha 0.05",
                ));
            }
        }
        let mut ids = BTreeSet::new();
        for b in &self.backends {
            let safe = !b.id.is_empty() && b.id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
            if !safe {
                return Err(config_err(format!("backend id {:?} must use only letters, digits, '-', '_' and '.'", b.id)));
            }
            if !ids.insert(&b.id) {
                return Err(config_err(format!("duplicate backend id {:?}", b.id)));
            }
        }
        let check = |ids: &[String], kind: BackendKind, role: &str| -> Result<(), PipelineError> {
            for id in ids {
                match self.backend(id) {
                    Some(b) if b.kind == kind => {}
                    Some(_) => return Err(config_err(format!("{role} backend {id:?} has the wrong kind"))),
                    None => return Err(config_err(format!("unknown {role} backend {id:?}"))),
                }
            }
            Ok(())
        };
        check(&self.models.embedders, BackendKind::Embedding, "embedding")?;
        check(&self.models.summarizers, BackendKind::Completion, "completion")?;
        check(self.models.augmenter.as_slice(), BackendKind::Completion, "augmenter")?;
        check(self.models.regard.as_slice(), BackendKind::Regard, "regard")?;
        if self.plan.extracurricular && self.models.augmenter.is_none() {
            return Err(config_err("plan.extracurricular needs models.augmenter"));
        }
        for b in self.used_backends() {
            b.validate().map_err(|e| config_err(e.to_string()))?;
            b.credential().map_err(|e| config_err(format!("{}: {e}", b.id)))?;
        }
        Ok(())
    }

    /// Pins the paper's summarization grid and alpha.
    pub fn apply_preset(&mut self) {
        if self.preset == Preset::Paper {
            self.grid.temperatures = PAPER_TEMPERATURES.to_vec();
            self.grid.lengths = PAPER_LENGTHS.to_vec();
            self.grid.povs = PAPER_POVS.to_vec();
            self.grid.runs = PAPER_RUNS;
            self.stats.alpha = PAPER_ALPHA;
        }
    }
}
