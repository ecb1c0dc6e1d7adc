use indexmap::IndexMap;

use super::ABSENT_MARKER;
use crate::annotator::Gazetteer;
use crate::ensemble::{ExtractionRecord, FieldWarning};
use crate::normalize::{normalize_country, normalize_date, normalize_disease, parse_count_expression, Field, FieldValue};

fn field_for_key(key: &str) -> Option<Field> {
    match key {
        "virus" | "disease" => Some(Field::Disease),
        "country" => Some(Field::Country),
        "date" => Some(Field::Date),
        "cases" | "count" => Some(Field::Count),
        _ => None,
    }
}

/// Tries the whole answer, then each comma- or slash-separated part
/// ("Kerala, India").
fn first_resolving<T>(raw: &str, resolve: impl Fn(&str) -> Option<T>) -> Option<T> {
    resolve(raw).or_else(|| raw.split([',', '/', ';']).map(str::trim).filter(|p| !p.is_empty()).find_map(resolve))
}

fn normalize_value(field: Field, raw: &str, gazetteer: &Gazetteer) -> Option<FieldValue> {
    match field {
        Field::Disease => first_resolving(raw, |s| normalize_disease(s, gazetteer)).map(FieldValue::Disease),
        Field::Country => first_resolving(raw, normalize_country).map(FieldValue::Country),
        Field::Date => normalize_date(raw).map(FieldValue::Date),
        Field::Count => parse_count_expression(raw).map(FieldValue::Count),
    }
}

/// Maps a model answer onto a record. `virus`/`disease`, `country`, `date`
/// and `cases`/`count` are recognized; other keys are ignored. A missing key
/// or the absent marker leaves the field empty, and a value that does not
/// normalize is dropped with a warning.
pub fn parse_fields(
    map: &IndexMap<String, String>,
    document_id: &str,
    extractor_id: &str,
    gazetteer: &Gazetteer,
) -> ExtractionRecord {
    let mut record = ExtractionRecord::empty(document_id, extractor_id);
    for (key, raw) in map {
        let Some(field) = field_for_key(&key.to_lowercase()) else { continue };
        let raw = raw.trim();
        if raw.is_empty() || raw.eq_ignore_ascii_case(ABSENT_MARKER) || record.value(field).is_some() {
            continue;
        }
        match normalize_value(field, raw, gazetteer) {
            Some(value) => record.set(field, Some((raw.to_string(), value))),
            None => record.warnings.push(FieldWarning { field, raw: raw.to_string() }),
        }
    }
    record
}
