use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use indexmap::IndexMap;

use epix_core::corpus::{self, corpus_digest, load_corpus, load_gold, parse_don_article, parse_promed_post, SourceHint};
use epix_core::ensemble::ExtractionRecord;
use epix_core::eval::{evaluate, normalize_gold, render_report, EvalError, EvaluationReport, ReportFormat};
use epix_core::jsonl;
use epix_core::llm::{map_bounded, LlmError, Transport};
use epix_core::normalize::CountryTable;
use epix_core::Document;

use crate::config::{Extractor, Overrides, RunConfig};
use crate::{Cli, Command, ExitCodeExt, Failure, SourceArg, DEFAULT_CONFIG, EXIT_EVALUATION, EXIT_INPUT, EXIT_TRANSPORT};

type CmdResult = Result<(), Failure>;

pub fn dispatch(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Ingest { source, input, corpus, append } => {
            let target = match corpus {
                Some(p) => p.clone(),
                None => load_config(cli)?.corpus,
            };
            ingest(*source, input, &target, *append)
        }
        Command::Extract { only } => extract(&load_config(cli)?, only),
        Command::Evaluate { only } => evaluate_cmd(&load_config(cli)?, only),
        Command::Report { report, format, out } => report_cmd(report, format, out.as_deref()),
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let path = cli.config.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_CONFIG));
    let overrides = Overrides { output: cli.output.clone(), mode: cli.mode.map(Into::into) };
    RunConfig::load(&path, &overrides).code(EXIT_INPUT)
}

/// Writes through a temporary sibling so readers never see half a file.
fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))
}

fn write_records(path: &Path, records: &[&ExtractionRecord]) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let tmp = path.with_extension("tmp");
    jsonl::write(&tmp, records.iter().copied())?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))
}

fn input_files(input: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let meta = fs::metadata(input).with_context(|| format!("reading {}", input.display()))?;
    if meta.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(input).with_context(|| format!("reading {}", input.display()))? {
        let path = entry?.path();
        let hidden = path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with('.'));
        if path.is_file() && !hidden {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn ingest(source: SourceArg, input: &Path, corpus_path: &Path, append: bool) -> CmdResult {
    let files = input_files(input).code(EXIT_INPUT)?;
    let mut docs: Vec<Document> = if append && corpus_path.exists() {
        load_corpus(corpus_path).code(EXIT_INPUT)?
    } else {
        Vec::new()
    };
    let existing = docs.len();
    if files.is_empty() {
        log::warn!("no input files in {}", input.display());
        eprintln!("warning: no input files in {}", input.display());
    }
    for path in &files {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display())).code(EXIT_INPUT)?;
        let raw = String::from_utf8_lossy(&bytes);
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let parsed = match source {
            SourceArg::Promed => {
                let hint = SourceHint { id: Some(stem.clone()), ..Default::default() };
                parse_promed_post(&raw, Some(&hint))
            }
            SourceArg::Don => parse_don_article(&raw, None),
        };
        let mut parsed = match parsed {
            Ok(p) => p,
            Err(corpus::CorpusError::EmptyInput) => {
                eprintln!("warning: {} is empty, skipped", path.display());
                continue;
            }
            Err(e) => return Err(e).code(EXIT_INPUT),
        };
        if parsed.malformed_markup {
            eprintln!("warning: {} has malformed markup; text extracted best-effort", path.display());
        }
        parsed.document.id = stem;
        if docs.iter().any(|d| d.id == parsed.document.id) {
            return Err(anyhow!("document id `{}` from {} already in the corpus", parsed.document.id, path.display()))
                .code(EXIT_INPUT);
        }
        docs.push(parsed.document);
    }
    if let Some(parent) = corpus_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).code(EXIT_INPUT)?;
    }
    corpus::save_corpus(&docs, corpus_path).code(EXIT_INPUT)?;
    println!("ingested {} documents into {} ({} total)", docs.len() - existing, corpus_path.display(), docs.len());
    Ok(())
}

fn selected<'a>(cfg: &'a RunConfig, only: &[String]) -> Result<Vec<&'a Extractor>, Failure> {
    for id in only {
        if cfg.extractor(id).is_none() {
            return Err(Failure::new(EXIT_INPUT, anyhow!("no extractor `{id}` in {}", cfg.path.display())));
        }
    }
    Ok(cfg.run_order().into_iter().filter(|e| only.is_empty() || only.iter().any(|id| id == e.id())).collect())
}

/// Predictions already on disk for `id`, keyed by document.
fn load_predictions(cfg: &RunConfig, id: &str) -> Result<HashMap<String, ExtractionRecord>, Failure> {
    let path = cfg.predictions_path(id);
    if !path.exists() {
        return Ok(HashMap::new());
    }
    let records: Vec<ExtractionRecord> = jsonl::read(&path).code(EXIT_INPUT)?;
    Ok(records.into_iter().filter(|r| r.extractor_id == id).map(|r| (r.document_id.clone(), r)).collect())
}

pub fn extract(cfg: &RunConfig, only: &[String]) -> CmdResult {
    let docs = load_corpus(&cfg.corpus).code(EXIT_INPUT)?;
    let transport = Transport::new(cfg.transport_mode, &cfg.cache_dir).with_retry(cfg.retry);
    let mut done: HashMap<String, HashMap<String, ExtractionRecord>> = HashMap::new();

    for extractor in selected(cfg, only)? {
        let id = extractor.id();
        let mut have = load_predictions(cfg, id)?;
        let todo: Vec<&Document> = docs.iter().filter(|d| !have.contains_key(&d.id)).collect();
        let mut failure = None;

        match extractor {
            Extractor::RuleBased(rb) => {
                for doc in &todo {
                    have.insert(doc.id.clone(), rb.extract(doc));
                }
            }
            Extractor::Llm(llm) => {
                let results = map_bounded(&todo, cfg.concurrency, |doc| llm.extract(doc, &transport, &cfg.gazetteer));
                for result in results {
                    match result {
                        Ok(record) => {
                            have.insert(record.document_id.clone(), record);
                        }
                        Err(e) if failure.is_none() => {
                            let code = match e {
                                LlmError::Transport { .. } => EXIT_TRANSPORT,
                                LlmError::Prompt { .. } => EXIT_INPUT,
                            };
                            failure = Some(Failure::new(code, anyhow!(e).context(format!("extractor `{id}`"))));
                        }
                        Err(e) => log::warn!("{id}: {e}"),
                    }
                }
            }
            Extractor::Ensemble(ens) => {
                for m in &ens.members {
                    if !done.contains_key(m) {
                        let loaded = load_predictions(cfg, m)?;
                        done.insert(m.clone(), loaded);
                    }
                }
                for doc in &todo {
                    let mut member_records = Vec::with_capacity(ens.members.len());
                    for m in &ens.members {
                        match done[m].get(&doc.id) {
                            Some(r) => member_records.push(r.clone()),
                            None => {
                                failure.get_or_insert_with(|| {
                                    Failure::new(
                                        EXIT_INPUT,
                                        anyhow!("ensemble `{id}`: member `{m}` has no prediction for document `{}`", doc.id),
                                    )
                                });
                                break;
                            }
                        }
                    }
                    if member_records.len() == ens.members.len() {
                        have.insert(doc.id.clone(), ens.combine(&member_records).code(EXIT_INPUT)?);
                    }
                }
            }
        }

        let ordered: Vec<&ExtractionRecord> = docs.iter().filter_map(|d| have.get(&d.id)).collect();
        write_records(&cfg.predictions_path(id), &ordered).code(EXIT_INPUT)?;
        let kept = docs.len() - todo.len();
        println!("{id}: {} of {} documents ({} new)", ordered.len(), docs.len(), ordered.len() - kept);
        if let Some(f) = failure {
            return Err(f);
        }
        done.insert(id.to_string(), have);
    }
    log::info!("network requests: {}", transport.network_calls());
    Ok(())
}

pub fn evaluate_cmd(cfg: &RunConfig, only: &[String]) -> CmdResult {
    let gold_path = cfg.gold.as_ref().ok_or_else(|| Failure::new(EXIT_INPUT, anyhow!("no gold file configured")))?;
    let gold = load_gold(gold_path).code(EXIT_INPUT)?;
    let golds = normalize_gold(&gold, &cfg.gazetteer, &CountryTable::bundled()).code(EXIT_INPUT)?;

    let mut records = IndexMap::new();
    for extractor in cfg.extractors.iter().filter(|e| only.is_empty() || only.iter().any(|id| id == e.id())) {
        let path = cfg.predictions_path(extractor.id());
        if !path.exists() {
            return Err(Failure::new(
                EXIT_EVALUATION,
                anyhow!("no predictions for extractor `{}` (expected {}); run `epix extract` first", extractor.id(), path.display()),
            ));
        }
        let preds: Vec<ExtractionRecord> = jsonl::read(&path).code(EXIT_INPUT)?;
        records.insert(extractor.id().to_string(), preds);
    }
    let mut report = evaluate(&records, &golds, &cfg.eval).map_err(|e| {
        let code = match e {
            EvalError::GoldValue { .. } | EvalError::DuplicateGold(_) => EXIT_INPUT,
            _ => EXIT_EVALUATION,
        };
        Failure::new(code, e.into())
    })?;
    report.metadata.gold_path = cfg.gold_label.clone();
    report.metadata.corpus_digest = corpus_digest(&cfg.corpus).ok();
    report.metadata.timestamp = Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));

    for format in ReportFormat::ALL {
        let bytes = render_report(&report, format).code(EXIT_EVALUATION)?;
        write_atomic(&cfg.output.join(format.file_name()), &bytes).code(EXIT_INPUT)?;
    }
    let table = render_report(&report, ReportFormat::Text).code(EXIT_EVALUATION)?;
    print!("{}", String::from_utf8_lossy(&table));
    Ok(())
}

pub fn report_cmd(report_path: &Path, format: &str, out: Option<&Path>) -> CmdResult {
    let format: ReportFormat = format.parse().map_err(|e: String| Failure::new(EXIT_INPUT, anyhow!(e)))?;
    let text = fs::read(report_path).with_context(|| format!("reading {}", report_path.display())).code(EXIT_INPUT)?;
    let report: EvaluationReport = serde_json::from_slice(&text)
        .with_context(|| format!("{} is not a saved report", report_path.display()))
        .code(EXIT_INPUT)?;
    let bytes = render_report(&report, format).code(EXIT_EVALUATION)?;
    match out {
        Some(path) => write_atomic(path, &bytes).code(EXIT_INPUT)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes).code(EXIT_INPUT)?;
        }
    }
    Ok(())
}
