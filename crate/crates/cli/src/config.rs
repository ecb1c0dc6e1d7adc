//! The run configuration file (TOML).
//!
//! Relative paths are resolved against the directory holding the file.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use epix_core::annotator::{Gazetteer, RuleBasedExtractor};
use epix_core::ensemble::{EnsembleConfig, TieBreak, VotePolicy};
use epix_core::eval::{CountAttributeFilter, EvalSettings, MatchMode};
use epix_core::llm::{self, LlmExtractor, ModelProfile, PromptTemplate, RetryPolicy, TransportMode};
use epix_core::normalize::CountryTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractorKind {
    RuleBased,
    Llm,
    Ensemble,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractorConfig {
    pub id: String,
    pub kind: ExtractorKind,
    pub model: Option<String>,
    pub template: Option<String>,
    pub shots: Option<usize>,
    pub members: Option<Vec<String>>,
    pub min_agreement: Option<usize>,
    pub tie_break: Option<TieBreak>,
    pub priority: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportConfig {
    #[serde(default)]
    pub mode: TransportMode,
    #[serde(default = "default_cache_dir")]
    pub cache_dir: PathBuf,
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
}

fn default_cache_dir() -> PathBuf {
    PathBuf::from("cache")
}

fn default_attempts() -> u32 {
    RetryPolicy::default().max_attempts
}

fn default_backoff_ms() -> u64 {
    RetryPolicy::default().backoff_base.as_millis() as u64
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig {
            mode: TransportMode::default(),
            cache_dir: default_cache_dir(),
            max_attempts: default_attempts(),
            backoff_ms: default_backoff_ms(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub corpus: PathBuf,
    pub gold: Option<PathBuf>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub match_mode: MatchMode,
    #[serde(default)]
    pub count_attribute: CountAttributeFilter,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    pub gazetteer: Option<PathBuf>,
    #[serde(default)]
    pub transport: TransportConfig,
    #[serde(default)]
    pub models: Vec<ModelProfile>,
    #[serde(default)]
    pub extractors: Vec<ExtractorConfig>,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_concurrency() -> usize {
    llm::DEFAULT_CONCURRENCY
}

/// A configured extractor, ready to run.
#[derive(Debug, Clone)]
pub enum Extractor {
    RuleBased(RuleBasedExtractor),
    Llm(LlmExtractor),
    Ensemble(EnsembleConfig),
}

impl Extractor {
    pub fn id(&self) -> &str {
        match self {
            Extractor::RuleBased(e) => &e.id,
            Extractor::Llm(e) => &e.id,
            Extractor::Ensemble(e) => &e.id,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub path: PathBuf,
    pub corpus: PathBuf,
    pub gold: Option<PathBuf>,
    /// The gold path as written in the file, for report metadata.
    pub gold_label: Option<String>,
    pub output: PathBuf,
    pub eval: EvalSettings,
    pub concurrency: usize,
    pub gazetteer: Arc<Gazetteer>,
    pub transport_mode: TransportMode,
    pub cache_dir: PathBuf,
    pub retry: RetryPolicy,
    /// In declaration order.
    pub extractors: Vec<Extractor>,
}

/// Command-line settings that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub mode: Option<TransportMode>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && !id.starts_with('.') && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn require<T: Clone>(value: &Option<T>, id: &str, key: &str, kind: &str) -> Result<T> {
    value.clone().ok_or_else(|| anyhow!("extractor `{id}`: `{key}` is required for kind {kind}"))
}

fn forbid<T>(value: &Option<T>, id: &str, key: &str, kind: &str) -> Result<()> {
    if value.is_some() {
        bail!("extractor `{id}`: `{key}` does not apply to kind {kind}");
    }
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let file: ConfigFile = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_file(file, path, base, overrides)
    }

    pub fn from_file(file: ConfigFile, path: &Path, base: &Path, overrides: &Overrides) -> Result<Self> {
        if file.concurrency == 0 {
            bail!("concurrency must be at least 1");
        }
        if file.transport.max_attempts == 0 {
            bail!("transport.max_attempts must be at least 1");
        }

        let gazetteer = match &file.gazetteer {
            Some(p) => {
                let p = resolve(base, p);
                let mut g = Gazetteer::load(&p).with_context(|| format!("loading gazetteer {}", p.display()))?;
                g.add_countries(&CountryTable::bundled())?;
                Arc::new(g)
            }
            None => Gazetteer::bundled(),
        };

        let mut models = llm::registry();
        for custom in &file.models {
            custom.validate()?;
            match models.iter_mut().find(|m| m.name == custom.name) {
                Some(existing) => *existing = custom.clone(),
                None => models.push(custom.clone()),
            }
        }

        let mut seen = HashSet::new();
        for e in &file.extractors {
            if !valid_id(&e.id) {
                bail!("extractor id `{}` must be non-empty and use only letters, digits, `-`, `_` and `.`", e.id);
            }
            if !seen.insert(e.id.as_str()) {
                bail!("extractor id `{}` is declared twice", e.id);
            }
        }

        let mut built = Vec::new();
        for e in &file.extractors {
            let id = e.id.as_str();
            let extractor = match e.kind {
                ExtractorKind::RuleBased => {
                    let kind = "rule_based";
                    forbid(&e.model, id, "model", kind)?;
                    forbid(&e.template, id, "template", kind)?;
                    forbid(&e.shots, id, "shots", kind)?;
                    forbid(&e.members, id, "members", kind)?;
                    forbid(&e.min_agreement, id, "min_agreement", kind)?;
                    forbid(&e.tie_break, id, "tie_break", kind)?;
                    forbid(&e.priority, id, "priority", kind)?;
                    Extractor::RuleBased(RuleBasedExtractor::new(id, gazetteer.clone()))
                }
                ExtractorKind::Llm => {
                    let kind = "llm";
                    let model_name = require(&e.model, id, "model", kind)?;
                    forbid(&e.members, id, "members", kind)?;
                    forbid(&e.min_agreement, id, "min_agreement", kind)?;
                    forbid(&e.tie_break, id, "tie_break", kind)?;
                    forbid(&e.priority, id, "priority", kind)?;
                    let model = models
                        .iter()
                        .find(|m| m.name.eq_ignore_ascii_case(&model_name))
                        .cloned()
                        .ok_or_else(|| anyhow!("extractor `{id}`: unknown model `{model_name}`"))?;
                    let template_name = e.template.clone().unwrap_or_else(|| llm::BUNDLED_TEMPLATE.to_string());
                    let template = PromptTemplate::named(&template_name, e.shots.unwrap_or(0))
                        .with_context(|| format!("extractor `{id}`"))?;
                    Extractor::Llm(LlmExtractor::new(id, model, template))
                }
                ExtractorKind::Ensemble => {
                    let kind = "ensemble";
                    forbid(&e.model, id, "model", kind)?;
                    forbid(&e.template, id, "template", kind)?;
                    forbid(&e.shots, id, "shots", kind)?;
                    let members = require(&e.members, id, "members", kind)?;
                    for m in &members {
                        if m == id {
                            bail!("ensemble `{id}` lists itself as a member");
                        }
                        if !file.extractors.iter().any(|x| &x.id == m) {
                            bail!("ensemble `{id}`: member `{m}` is not a declared extractor");
                        }
                    }
                    let defaults = VotePolicy::default();
                    let policy = VotePolicy {
                        min_agreement: e.min_agreement.unwrap_or(defaults.min_agreement),
                        tie_break: e.tie_break.unwrap_or(defaults.tie_break),
                        priority: e.priority.clone().unwrap_or_default(),
                    };
                    Extractor::Ensemble(EnsembleConfig::new(id, members, policy).with_context(|| format!("ensemble `{id}`"))?)
                }
            };
            built.push(extractor);
        }

        Ok(RunConfig {
            path: path.to_path_buf(),
            corpus: resolve(base, &file.corpus),
            gold: file.gold.as_ref().map(|g| resolve(base, g)),
            gold_label: file.gold.as_ref().map(|g| g.display().to_string()),
            output: overrides.output.clone().unwrap_or_else(|| resolve(base, &file.output)),
            eval: EvalSettings { mode: file.match_mode, count_attribute: file.count_attribute },
            concurrency: file.concurrency,
            gazetteer,
            transport_mode: overrides.mode.unwrap_or(file.transport.mode),
            cache_dir: resolve(base, &file.transport.cache_dir),
            retry: RetryPolicy {
                max_attempts: file.transport.max_attempts,
                backoff_base: Duration::from_millis(file.transport.backoff_ms),
            },
            extractors: {
                dependency_order(&built)?;
                built
            },
        })
    }

    pub fn predictions_dir(&self) -> PathBuf {
        self.output.join("predictions")
    }

    pub fn predictions_path(&self, extractor_id: &str) -> PathBuf {
        self.predictions_dir().join(format!("{extractor_id}.jsonl"))
    }

    pub fn extractor(&self, id: &str) -> Option<&Extractor> {
        self.extractors.iter().find(|e| e.id() == id)
    }

    /// Extractors ordered so every ensemble follows its members.
    pub fn run_order(&self) -> Vec<&Extractor> {
        dependency_order(&self.extractors).expect("validated at load")
    }
}

/// Orders extractors so ensembles follow their members, keeping declaration
/// order otherwise. Fails on cycles between ensembles.
fn dependency_order(extractors: &[Extractor]) -> Result<Vec<&Extractor>> {
    let mut pending: Vec<&Extractor> = extractors.iter().collect();
    let mut ordered: Vec<&Extractor> = Vec::with_capacity(pending.len());
    while !pending.is_empty() {
        let ready = pending.iter().position(|e| match e {
            Extractor::Ensemble(cfg) => cfg.members.iter().all(|m| ordered.iter().any(|o| o.id() == m)),
            _ => true,
        });
        match ready {
            Some(i) => ordered.push(pending.remove(i)),
            None => {
                let ids: Vec<&str> = pending.iter().map(|e| e.id()).collect();
                bail!("ensembles depend on each other in a cycle: {}", ids.join(", "));
            }
        }
    }
    Ok(ordered)
}
