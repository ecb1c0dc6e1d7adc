//! Canonical forms for the four extracted fields.
//!
//! Everything that compares values (the annotator's frequency filter, the
//! ensemble vote, the evaluator) goes through these types so that surface
//! variants such as "EVD" and "Ebola virus disease" compare equal.

mod count;
mod country;
mod date;
mod disease;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use count::{find_count_expressions, parse_count_expression, CaseCount, CountAttribute, CountMention};
pub use country::{normalize_country, CountryCode, CountryTable, CountryTableError};
pub use date::{find_dates, normalize_date, normalize_date_with_year, DateMention, IsoDate};
pub use disease::{normalize_disease, CanonicalDisease};

/// One of the four extracted facts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Disease,
    Country,
    Date,
    Count,
}

impl Field {
    pub const ALL: [Field; 4] = [Field::Disease, Field::Country, Field::Date, Field::Count];

    pub fn as_str(self) -> &'static str {
        match self {
            Field::Disease => "disease",
            Field::Country => "country",
            Field::Date => "date",
            Field::Count => "count",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Field {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "disease" => Ok(Field::Disease),
            "country" => Ok(Field::Country),
            "date" => Ok(Field::Date),
            "count" => Ok(Field::Count),
            other => Err(format!("unknown field `{other}`")),
        }
    }
}

/// A normalized value of any field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldValue {
    Disease(CanonicalDisease),
    Country(CountryCode),
    Date(IsoDate),
    Count(CaseCount),
}

impl FieldValue {
    pub fn field(&self) -> Field {
        match self {
            FieldValue::Disease(_) => Field::Disease,
            FieldValue::Country(_) => Field::Country,
            FieldValue::Date(_) => Field::Date,
            FieldValue::Count(_) => Field::Count,
        }
    }
}

impl fmt::Display for FieldValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldValue::Disease(d) => f.write_str(d.display_name()),
            FieldValue::Country(c) => f.write_str(c.alpha3()),
            FieldValue::Date(d) => write!(f, "{d}"),
            FieldValue::Count(c) => write!(f, "{}", c.value),
        }
    }
}

/// Field-aware equality between two normalized values.
///
/// Disease compares canonical ids, country compares alpha-3 codes, date is
/// exact, and count compares the integer only (the approximate flag and the
/// attribute are ignored). Values of a different field never match.
pub fn values_match(field: Field, a: &FieldValue, b: &FieldValue) -> bool {
    match (field, a, b) {
        (Field::Disease, FieldValue::Disease(x), FieldValue::Disease(y)) => x.canonical_id() == y.canonical_id(),
        (Field::Country, FieldValue::Country(x), FieldValue::Country(y)) => x.alpha3() == y.alpha3(),
        (Field::Date, FieldValue::Date(x), FieldValue::Date(y)) => x == y,
        (Field::Count, FieldValue::Count(x), FieldValue::Count(y)) => x.value == y.value,
        _ => false,
    }
}

/// Word tokens of `text` with their byte ranges. A token is a maximal run of
/// alphanumeric characters.
pub(crate) fn word_tokens(text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            out.push((s, i));
        }
    }
    if let Some(s) = start {
        out.push((s, text.len()));
    }
    out
}

/// Case and punctuation folding used for every surface-form lookup.
///
/// `"NIPAH  Virus!"` and `"nipah virus"` fold to the same key.
pub fn fold(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for (s, e) in word_tokens(text) {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(text[s..e].chars().flat_map(char::to_lowercase));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_ignores_case_and_punctuation() {
        assert_eq!(fold("NIPAH  Virus!"), "nipah virus");
        assert_eq!(fold("Hand, foot and mouth disease"), "hand foot and mouth disease");
        assert_eq!(fold("MERS-CoV"), "mers cov");
        assert_eq!(fold("  "), "");
    }

    #[test]
    fn cross_field_values_never_match() {
        let d = FieldValue::Date(IsoDate::from_ymd(2018, 5, 31).unwrap());
        let c = FieldValue::Count(CaseCount::new(15));
        assert!(!values_match(Field::Date, &d, &c));
        assert!(!values_match(Field::Count, &d, &d));
    }

    #[test]
    fn field_parses_from_str() {
        assert_eq!("Country".parse::<Field>().unwrap(), Field::Country);
        assert!("cases".parse::<Field>().is_err());
    }
}
