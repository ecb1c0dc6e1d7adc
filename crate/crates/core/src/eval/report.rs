use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{ConfusionCounts, CountAttributeFilter, EvalError, MatchMode, MetricTriple};
use crate::normalize::Field;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub mode: MatchMode,
    #[serde(default)]
    pub count_attribute: CountAttributeFilter,
    pub gold_documents: usize,
    #[serde(default)]
    pub gold_path: Option<String>,
    /// SHA-256 of the corpus file the predictions were made on.
    #[serde(default)]
    pub corpus_digest: Option<String>,
    #[serde(default)]
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub extractor: String,
    pub field: Field,
    pub counts: ConfusionCounts,
    pub metrics: MetricTriple,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub metadata: ReportMetadata,
    pub rows: Vec<ReportRow>,
}

impl EvaluationReport {
    pub fn row(&self, extractor: &str, field: Field) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.extractor == extractor && r.field == field)
    }

    /// Extractor ids in row order, without repeats.
    pub fn extractors(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.extractor.as_str()) {
                out.push(&r.extractor);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    /// Aligned plain-text table.
    Text,
    /// `extractor,field,tp,fp,fn,tn,precision,recall,f1`
    Csv,
    /// One JSON object per row, same keys as the CSV.
    Jsonl,
    /// Long-form series for plotting: `extractor,field,metric,value`.
    Plot,
    /// The full report including metadata, at full precision.
    Json,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 5] =
        [ReportFormat::Text, ReportFormat::Csv, ReportFormat::Jsonl, ReportFormat::Plot, ReportFormat::Json];

    pub fn file_name(self) -> &'static str {
        match self {
            ReportFormat::Text => "report.txt",
            ReportFormat::Csv => "report.csv",
            ReportFormat::Jsonl => "report.jsonl",
            ReportFormat::Plot => "plot.csv",
            ReportFormat::Json => "report.json",
        }
    }
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "text" | "txt" | "table" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "jsonl" | "ndjson" => Ok(ReportFormat::Jsonl),
            "plot" => Ok(ReportFormat::Plot),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

/// Three decimals, as in published score tables.
fn round3(x: f64) -> String {
    format!("{x:.3}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_text(report: &EvaluationReport) -> String {
    let width = report.rows.iter().map(|r| r.extractor.chars().count()).max().unwrap_or(0).max("extractor".len());
    let mut out = String::new();
    let _ = writeln!(out, "match mode: {}", report.metadata.mode.as_str());
    let _ = writeln!(
        out,
        "{:<width$}  {:<7}  {:>5}  {:>5}  {:>5}  {:>5}  {:>9}  {:>6}  {:>5}",
        "extractor", "field", "tp", "fp", "fn", "tn", "precision", "recall", "f1"
    );
    for r in &report.rows {
        let c = &r.counts;
        let _ = writeln!(
            out,
            "{:<width$}  {:<7}  {:>5}  {:>5}  {:>5}  {:>5}  {:>9}  {:>6}  {:>5}",
            r.extractor,
            r.field.as_str(),
            c.tp,
            c.fp,
            c.fn_,
            c.tn,
            round3(r.metrics.precision),
            round3(r.metrics.recall),
            round3(r.metrics.f1)
        );
    }
    out
}

fn render_csv(report: &EvaluationReport) -> String {
    let mut out = String::from("extractor,field,tp,fp,fn,tn,precision,recall,f1\n");
    for r in &report.rows {
        let c = &r.counts;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            csv_field(&r.extractor),
            r.field,
            c.tp,
            c.fp,
            c.fn_,
            c.tn,
            round3(r.metrics.precision),
            round3(r.metrics.recall),
            round3(r.metrics.f1)
        );
    }
    out
}

fn render_jsonl(report: &EvaluationReport) -> String {
    let num = |x: f64| -> serde_json::Value {
        let rounded: f64 = round3(x).parse().expect("formatted float parses");
        serde_json::json!(rounded)
    };
    let mut out = String::new();
    for r in &report.rows {
        let line = serde_json::json!({
            "extractor": r.extractor,
            "field": r.field,
            "tp": r.counts.tp,
            "fp": r.counts.fp,
            "fn": r.counts.fn_,
            "tn": r.counts.tn,
            "precision": num(r.metrics.precision),
            "recall": num(r.metrics.recall),
            "f1": num(r.metrics.f1),
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

fn render_plot(report: &EvaluationReport) -> String {
    let mut out = String::from("extractor,field,metric,value\n");
    for r in &report.rows {
        for (metric, value) in [("precision", r.metrics.precision), ("recall", r.metrics.recall), ("f1", r.metrics.f1)] {
            let _ = writeln!(out, "{},{},{},{}", csv_field(&r.extractor), r.field, metric, round3(value));
        }
    }
    out
}

/// Renders `report` in `format`. Every format except [`ReportFormat::Json`]
/// omits the run timestamp, so repeated runs render identical bytes.
pub fn render_report(report: &EvaluationReport, format: ReportFormat) -> Result<Vec<u8>, EvalError> {
    if report.rows.is_empty() {
        return Err(EvalError::EmptyReport);
    }
    let text = match format {
        ReportFormat::Text => render_text(report),
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Jsonl => render_jsonl(report),
        ReportFormat::Plot => render_plot(report),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
    };
    Ok(text.into_bytes())
}
