use std::fmt;

use serde::{Deserialize, Serialize};

use crate::annotator::{EntityClass, Gazetteer};

/// A disease resolved to its gazetteer id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CanonicalDisease {
    #[serde(rename = "id")]
    canonical_id: String,
    #[serde(rename = "name")]
    display_name: String,
}

impl CanonicalDisease {
    pub(crate) fn new(canonical_id: impl Into<String>, display_name: impl Into<String>) -> Self {
        CanonicalDisease { canonical_id: canonical_id.into(), display_name: display_name.into() }
    }

    pub fn canonical_id(&self) -> &str {
        &self.canonical_id
    }

    pub fn display_name(&self) -> &str {
        &self.display_name
    }
}

impl fmt::Display for CanonicalDisease {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_name)
    }
}

/// Resolves a disease name or synonym through the gazetteer.
pub fn normalize_disease(raw: &str, gazetteer: &Gazetteer) -> Option<CanonicalDisease> {
    let entry = gazetteer.lookup(raw).filter(|e| e.class == EntityClass::Disease)?;
    Some(CanonicalDisease::new(entry.canonical_id.clone(), entry.display_name.clone()))
}
