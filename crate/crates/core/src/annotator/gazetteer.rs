use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};

use crate::normalize::{fold, CountryTable};

const BUNDLED_DISEASES: &str = include_str!("../../resources/gazetteer.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntityClass {
    Disease,
    Country,
}

impl fmt::Display for EntityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntityClass::Disease => "DISEASE",
            EntityClass::Country => "COUNTRY",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GazetteerEntry {
    pub class: EntityClass,
    pub canonical_id: String,
    pub display_name: String,
}

#[derive(Debug, thiserror::Error)]
pub enum GazetteerError {
    #[error("reading gazetteer: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected 4 tab-separated columns (class, canonical_id, display_name, surface_form)")]
    Columns { line: usize },
    #[error("line {line}: unknown entity class `{class}`")]
    Class { line: usize, class: String },
    #[error("line {line}: empty canonical id or surface form")]
    Empty { line: usize },
    #[error("line {line}: `{id}` has display name `{found}`, previously `{expected}`")]
    DisplayName { line: usize, id: String, expected: String, found: String },
    #[error("surface form `{surface}` resolves to both `{first}` and `{second}`")]
    Ambiguous { surface: String, first: String, second: String },
}

/// Surface form to canonical entity table. Immutable once built; share it
/// behind an [`Arc`].
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: Vec<GazetteerEntry>,
    by_id: HashMap<(EntityClass, String), usize>,
    by_surface: HashMap<String, usize>,
    max_tokens: usize,
}

static BUNDLED: Lazy<Arc<Gazetteer>> = Lazy::new(|| {
    let mut g = Gazetteer::parse(BUNDLED_DISEASES).expect("bundled gazetteer is valid");
    g.add_countries(&CountryTable::bundled()).expect("country names do not collide with diseases");
    Arc::new(g)
});

impl Gazetteer {
    /// Bundled disease list plus every country name and alias from the
    /// bundled country table.
    pub fn bundled() -> Arc<Gazetteer> {
        BUNDLED.clone()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GazetteerError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Parses the tab-separated `class, canonical_id, display_name,
    /// surface_form` format, one surface form per line.
    pub fn parse(text: &str) -> Result<Self, GazetteerError> {
        let mut g = Gazetteer::default();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() != 4 {
                return Err(GazetteerError::Columns { line: line_no });
            }
            let class = match cols[0].to_ascii_uppercase().as_str() {
                "DISEASE" => EntityClass::Disease,
                "COUNTRY" => EntityClass::Country,
                _ => return Err(GazetteerError::Class { line: line_no, class: cols[0].to_string() }),
            };
            if cols[1].is_empty() || fold(cols[3]).is_empty() {
                return Err(GazetteerError::Empty { line: line_no });
            }
            g.insert(line_no, class, cols[1], cols[2], cols[3])?;
        }
        Ok(g)
    }

    /// Adds every `(alpha3, display_name, alias)` row as a country entry.
    pub fn add_countries(&mut self, table: &CountryTable) -> Result<(), GazetteerError> {
        for (code, name, alias) in table.rows() {
            self.insert(0, EntityClass::Country, code, name, alias)?;
        }
        Ok(())
    }

    fn insert(
        &mut self,
        line: usize,
        class: EntityClass,
        id: &str,
        display: &str,
        surface: &str,
    ) -> Result<(), GazetteerError> {
        let key = (class, id.to_string());
        let idx = match self.by_id.get(&key) {
            Some(&idx) => {
                let existing = &self.entries[idx].display_name;
                if existing != display {
                    return Err(GazetteerError::DisplayName {
                        line,
                        id: id.to_string(),
                        expected: existing.clone(),
                        found: display.to_string(),
                    });
                }
                idx
            }
            None => {
                self.entries.push(GazetteerEntry {
                    class,
                    canonical_id: id.to_string(),
                    display_name: display.to_string(),
                });
                let idx = self.entries.len() - 1;
                self.by_id.insert(key, idx);
                // the display name is always a surface form of its own entry
                self.add_surface(display, idx)?;
                idx
            }
        };
        self.add_surface(surface, idx)
    }

    fn add_surface(&mut self, surface: &str, idx: usize) -> Result<(), GazetteerError> {
        let key = fold(surface);
        if key.is_empty() {
            return Ok(());
        }
        if let Some(&prev) = self.by_surface.get(&key) {
            if prev != idx {
                return Err(GazetteerError::Ambiguous {
                    surface: surface.to_string(),
                    first: self.entries[prev].canonical_id.clone(),
                    second: self.entries[idx].canonical_id.clone(),
                });
            }
            return Ok(());
        }
        self.max_tokens = self.max_tokens.max(key.split(' ').count());
        self.by_surface.insert(key, idx);
        Ok(())
    }

    /// Case- and punctuation-insensitive lookup.
    pub fn lookup(&self, surface: &str) -> Option<&GazetteerEntry> {
        self.lookup_folded(&fold(surface))
    }

    pub(crate) fn lookup_folded(&self, key: &str) -> Option<&GazetteerEntry> {
        self.by_surface.get(key).map(|&i| &self.entries[i])
    }

    pub fn entry(&self, class: EntityClass, canonical_id: &str) -> Option<&GazetteerEntry> {
        self.by_id.get(&(class, canonical_id.to_string())).map(|&i| &self.entries[i])
    }

    pub fn entries(&self) -> &[GazetteerEntry] {
        &self.entries
    }

    /// Longest surface form, in word tokens.
    pub fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    pub fn surface_count(&self) -> usize {
        self.by_surface.len()
    }
}
