use serde::{Deserialize, Serialize};

use crate::normalize::{CanonicalDisease, CaseCount, CountryCode, Field, FieldValue, IsoDate};

/// A normalized value together with the text it was produced from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extracted<T> {
    pub raw: String,
    pub value: T,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordFlags {
    /// The model answer contained no parseable object.
    #[serde(default)]
    pub parse_failure: bool,
    /// The document body was cut to fit the model context.
    #[serde(default)]
    pub truncated_input: bool,
}

/// A value the extractor produced that could not be normalized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldWarning {
    pub field: Field,
    pub raw: String,
}

/// The four facts one extractor produced for one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionRecord {
    pub document_id: String,
    pub extractor_id: String,
    pub disease: Option<Extracted<CanonicalDisease>>,
    pub country: Option<Extracted<CountryCode>>,
    pub date: Option<Extracted<IsoDate>>,
    pub count: Option<Extracted<CaseCount>>,
    #[serde(default)]
    pub flags: RecordFlags,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<FieldWarning>,
}

impl ExtractionRecord {
    /// A record with every field absent.
    pub fn empty(document_id: impl Into<String>, extractor_id: impl Into<String>) -> Self {
        ExtractionRecord {
            document_id: document_id.into(),
            extractor_id: extractor_id.into(),
            disease: None,
            country: None,
            date: None,
            count: None,
            flags: RecordFlags::default(),
            warnings: Vec::new(),
        }
    }

    pub fn value(&self, field: Field) -> Option<FieldValue> {
        match field {
            Field::Disease => self.disease.as_ref().map(|e| FieldValue::Disease(e.value.clone())),
            Field::Country => self.country.as_ref().map(|e| FieldValue::Country(e.value.clone())),
            Field::Date => self.date.as_ref().map(|e| FieldValue::Date(e.value)),
            Field::Count => self.count.as_ref().map(|e| FieldValue::Count(e.value)),
        }
    }

    pub fn raw(&self, field: Field) -> Option<&str> {
        match field {
            Field::Disease => self.disease.as_ref().map(|e| e.raw.as_str()),
            Field::Country => self.country.as_ref().map(|e| e.raw.as_str()),
            Field::Date => self.date.as_ref().map(|e| e.raw.as_str()),
            Field::Count => self.count.as_ref().map(|e| e.raw.as_str()),
        }
    }

    /// Stores `value` under its own field. `None` clears the field.
    pub fn set(&mut self, field: Field, extracted: Option<(String, FieldValue)>) {
        match (field, extracted) {
            (Field::Disease, Some((raw, FieldValue::Disease(value)))) => self.disease = Some(Extracted { raw, value }),
            (Field::Country, Some((raw, FieldValue::Country(value)))) => self.country = Some(Extracted { raw, value }),
            (Field::Date, Some((raw, FieldValue::Date(value)))) => self.date = Some(Extracted { raw, value }),
            (Field::Count, Some((raw, FieldValue::Count(value)))) => self.count = Some(Extracted { raw, value }),
            (Field::Disease, None) => self.disease = None,
            (Field::Country, None) => self.country = None,
            (Field::Date, None) => self.date = None,
            (Field::Count, None) => self.count = None,
            (field, Some((_, v))) => panic!("{} value stored in the {field} field", v.field()),
        }
    }

    pub fn is_empty(&self) -> bool {
        Field::ALL.iter().all(|&f| self.value(f).is_none())
    }
}
