use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};

use super::fold;

const BUNDLED_COUNTRIES: &str = include_str!("../../resources/countries.tsv");

/// An ISO-3166 country identified by its alpha-3 code.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CountryCode {
    alpha3: String,
    #[serde(rename = "name")]
    display_name: String,
}

impl CountryCode {
    pub fn alpha3(&self) -> &str {
        &self.alpha3
    }

    pub fn display_name(&self) -> &str {
        &self.display_name
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.alpha3)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CountryTableError {
    #[error("line {line}: expected 3 tab-separated columns (alpha3, display_name, alias)")]
    Columns { line: usize },
    #[error("line {line}: `{code}` is not a 3-letter uppercase code")]
    BadCode { line: usize, code: String },
    #[error("line {line}: `{code}` has display name `{found}`, previously `{expected}`")]
    NameConflict { line: usize, code: String, expected: String, found: String },
    #[error("line {line}: alias `{alias}` maps to both {first} and {second}")]
    AliasConflict { line: usize, alias: String, first: String, second: String },
}

/// ISO-3166 names plus aliases, keyed by folded surface form.
#[derive(Debug, Clone)]
pub struct CountryTable {
    by_code: HashMap<String, CountryCode>,
    by_alias: HashMap<String, String>,
    // (alpha3, display_name, alias) in file order, for the gazetteer
    rows: Vec<(String, String, String)>,
}

static BUNDLED: Lazy<Arc<CountryTable>> =
    Lazy::new(|| Arc::new(CountryTable::parse(BUNDLED_COUNTRIES).expect("bundled country table is valid")));

impl CountryTable {
    /// The table shipped with the crate.
    pub fn bundled() -> Arc<CountryTable> {
        BUNDLED.clone()
    }

    /// Parses the tab-separated `alpha3, display_name, alias` format. Blank
    /// lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self, CountryTableError> {
        let mut table = CountryTable { by_code: HashMap::new(), by_alias: HashMap::new(), rows: Vec::new() };
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(CountryTableError::Columns { line: line_no });
            }
            let (code, name, alias) = (cols[0].trim(), cols[1].trim(), cols[2].trim());
            if code.len() != 3 || !code.bytes().all(|b| b.is_ascii_uppercase()) {
                return Err(CountryTableError::BadCode { line: line_no, code: code.to_string() });
            }
            let entry = table.by_code.entry(code.to_string()).or_insert_with(|| CountryCode {
                alpha3: code.to_string(),
                display_name: name.to_string(),
            });
            if entry.display_name != name {
                return Err(CountryTableError::NameConflict {
                    line: line_no,
                    code: code.to_string(),
                    expected: entry.display_name.clone(),
                    found: name.to_string(),
                });
            }
            for surface in [name, alias, code] {
                let key = fold(surface);
                if key.is_empty() {
                    continue;
                }
                match table.by_alias.get(&key) {
                    Some(existing) if existing != code => {
                        return Err(CountryTableError::AliasConflict {
                            line: line_no,
                            alias: surface.to_string(),
                            first: existing.clone(),
                            second: code.to_string(),
                        })
                    }
                    Some(_) => {}
                    None => {
                        table.by_alias.insert(key, code.to_string());
                    }
                }
            }
            table.rows.push((code.to_string(), name.to_string(), alias.to_string()));
        }
        Ok(table)
    }

    pub fn get(&self, alpha3: &str) -> Option<&CountryCode> {
        self.by_code.get(alpha3)
    }

    /// Case- and punctuation-insensitive lookup of a name, alias or alpha-3
    /// code. A leading "the" is ignored.
    pub fn lookup(&self, raw: &str) -> Option<&CountryCode> {
        let key = fold(raw);
        let key = key.strip_prefix("the ").unwrap_or(&key);
        self.by_alias.get(key).and_then(|code| self.by_code.get(code))
    }

    pub fn len(&self) -> usize {
        self.by_code.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_code.is_empty()
    }

    /// `(alpha3, display_name, alias)` rows in file order.
    pub fn rows(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.rows.iter().map(|(c, n, a)| (c.as_str(), n.as_str(), a.as_str()))
    }
}

/// Looks `raw` up in the bundled country table.
pub fn normalize_country(raw: &str) -> Option<CountryCode> {
    BUNDLED.lookup(raw).cloned()
}
