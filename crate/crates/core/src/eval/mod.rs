//! Field-wise scoring of extraction records against gold annotations.
//!
//! Each (document, field) pair is one binary classification sample: the
//! negative class is "no value". Confusion counts per extractor and field
//! yield Precision = TP/(TP+FP), Recall = TP/(TP+FN) and their harmonic mean.

mod metrics;
mod report;

use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

pub use metrics::{classify_pair, f1, precision, recall, ConfusionCounts, MatchMode, MetricTriple, Outcome};
pub use report::{render_report, EvaluationReport, ReportFormat, ReportMetadata, ReportRow};

use crate::annotator::Gazetteer;
use crate::corpus::GoldAnnotation;
use crate::ensemble::ExtractionRecord;
use crate::normalize::{normalize_disease, CaseCount, CountAttribute, CountryTable, Field, FieldValue};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("gold annotations list document `{0}` twice")]
    DuplicateGold(String),
    #[error("gold {field} `{raw}` for document `{document_id}` does not normalize")]
    GoldValue { document_id: String, field: Field, raw: String },
    #[error("extractor `{extractor}` has two predictions for document `{document_id}`")]
    DuplicatePrediction { extractor: String, document_id: String },
    #[error("extractor `{extractor}` has no prediction for gold document `{document_id}`")]
    MissingPrediction { extractor: String, document_id: String },
    #[error("no extractors to report")]
    EmptyReport,
}

/// Which predicted counts are eligible to match gold counts.
///
/// Gold files carry bare integers, and whether they denote cases or deaths
/// depends on how the gold set was annotated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountAttributeFilter {
    /// Every predicted count is scored.
    #[default]
    Any,
    /// Counts explicitly attributed to deaths are treated as absent.
    Cases,
    /// Counts explicitly attributed to cases are treated as absent.
    Deaths,
}

impl CountAttributeFilter {
    fn admits(self, attribute: CountAttribute) -> bool {
        match self {
            CountAttributeFilter::Any => true,
            CountAttributeFilter::Cases => attribute != CountAttribute::Death,
            CountAttributeFilter::Deaths => attribute != CountAttribute::Case,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalSettings {
    pub mode: MatchMode,
    pub count_attribute: CountAttributeFilter,
}

/// A gold annotation with every present field normalized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldValues {
    pub document_id: String,
    pub disease: Option<FieldValue>,
    pub country: Option<FieldValue>,
    pub date: Option<FieldValue>,
    pub count: Option<FieldValue>,
}

impl GoldValues {
    pub fn get(&self, field: Field) -> Option<&FieldValue> {
        match field {
            Field::Disease => self.disease.as_ref(),
            Field::Country => self.country.as_ref(),
            Field::Date => self.date.as_ref(),
            Field::Count => self.count.as_ref(),
        }
    }

    /// Normalizes disease names through `gazetteer` and countries through
    /// `countries`. A present value that does not normalize is an error: gold
    /// must be canonical.
    pub fn from_annotation(
        gold: &GoldAnnotation,
        gazetteer: &Gazetteer,
        countries: &CountryTable,
    ) -> Result<Self, EvalError> {
        let bad = |field: Field, raw: &str| EvalError::GoldValue {
            document_id: gold.document_id.clone(),
            field,
            raw: raw.to_string(),
        };
        let disease = match &gold.disease {
            Some(raw) => Some(FieldValue::Disease(normalize_disease(raw, gazetteer).ok_or_else(|| bad(Field::Disease, raw))?)),
            None => None,
        };
        let country = match &gold.country {
            Some(raw) => Some(FieldValue::Country(countries.lookup(raw).cloned().ok_or_else(|| bad(Field::Country, raw))?)),
            None => None,
        };
        Ok(GoldValues {
            document_id: gold.document_id.clone(),
            disease,
            country,
            date: gold.date.map(FieldValue::Date),
            count: gold.count.map(|n| FieldValue::Count(CaseCount::new(n))),
        })
    }
}

/// Normalizes a whole gold file, rejecting duplicate document ids.
pub fn normalize_gold(
    golds: &[GoldAnnotation],
    gazetteer: &Gazetteer,
    countries: &CountryTable,
) -> Result<Vec<GoldValues>, EvalError> {
    let mut seen = HashSet::new();
    golds
        .iter()
        .map(|g| {
            if !seen.insert(g.document_id.as_str()) {
                return Err(EvalError::DuplicateGold(g.document_id.clone()));
            }
            GoldValues::from_annotation(g, gazetteer, countries)
        })
        .collect()
}

/// Predictions of one extractor keyed by document id. Predictions for
/// documents outside the gold set are ignored; every gold document must have
/// exactly one.
fn align<'a>(
    extractor: &str,
    golds: &[GoldValues],
    preds: &'a [ExtractionRecord],
) -> Result<HashMap<&'a str, &'a ExtractionRecord>, EvalError> {
    let mut by_doc = HashMap::with_capacity(preds.len());
    for p in preds {
        if by_doc.insert(p.document_id.as_str(), p).is_some() {
            return Err(EvalError::DuplicatePrediction {
                extractor: extractor.to_string(),
                document_id: p.document_id.clone(),
            });
        }
    }
    if let Some(g) = golds.iter().find(|g| !by_doc.contains_key(g.document_id.as_str())) {
        return Err(EvalError::MissingPrediction { extractor: extractor.to_string(), document_id: g.document_id.clone() });
    }
    Ok(by_doc)
}

fn predicted(record: &ExtractionRecord, field: Field, settings: &EvalSettings) -> Option<FieldValue> {
    match record.value(field) {
        Some(FieldValue::Count(c)) if !settings.count_attribute.admits(c.attribute) => None,
        other => other,
    }
}

fn accumulate(
    extractor: &str,
    golds: &[GoldValues],
    preds: &[ExtractionRecord],
    fields: &[Field],
    settings: &EvalSettings,
) -> Result<Vec<ConfusionCounts>, EvalError> {
    let by_doc = align(extractor, golds, preds)?;
    Ok(fields
        .iter()
        .map(|&field| {
            golds
                .iter()
                .map(|g| {
                    let pred = predicted(by_doc[g.document_id.as_str()], field, settings);
                    classify_pair(g.get(field), pred.as_ref(), field, settings.mode)
                })
                .collect()
        })
        .collect())
}

/// Confusion counts of one field over the gold set.
pub fn accumulate_confusion(
    golds: &[GoldValues],
    preds: &[ExtractionRecord],
    field: Field,
    mode: MatchMode,
) -> Result<ConfusionCounts, EvalError> {
    let extractor = preds.first().map_or("", |p| p.extractor_id.as_str());
    let settings = EvalSettings { mode, ..Default::default() };
    Ok(accumulate(extractor, golds, preds, &[field], &settings)?[0])
}

/// Scores every extractor on every field. Rows follow the extractor order of
/// `records`, then field order disease, country, date, count.
pub fn evaluate(
    records: &IndexMap<String, Vec<ExtractionRecord>>,
    golds: &[GoldValues],
    settings: &EvalSettings,
) -> Result<EvaluationReport, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyReport);
    }
    let mut rows = Vec::with_capacity(records.len() * Field::ALL.len());
    for (extractor, preds) in records {
        let cells = accumulate(extractor, golds, preds, &Field::ALL, settings)?;
        for (field, counts) in Field::ALL.into_iter().zip(cells) {
            rows.push(ReportRow { extractor: extractor.clone(), field, counts, metrics: MetricTriple::from_counts(&counts) });
        }
    }
    Ok(EvaluationReport {
        metadata: ReportMetadata {
            mode: settings.mode,
            count_attribute: settings.count_attribute,
            gold_documents: golds.len(),
            ..Default::default()
        },
        rows,
    })
}
