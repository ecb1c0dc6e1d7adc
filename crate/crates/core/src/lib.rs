//! # epix-core
//!
//! Structured epidemic fact extraction from outbreak news.
//!
//! Four facts are pulled out of each document: the disease, the country
//! where cases were reported, the date of the case count, and the count
//! itself. Three kinds of extractor produce them:
//!
//! - [`annotator`]: a rule-based pipeline (gazetteer, count and date
//!   annotators, then most-frequent key-entity filtering).
//! - [`llm`]: prompted chat-completion models, zero-shot or few-shot, behind
//!   a transport with retry and a record/replay cache.
//! - [`ensemble`]: per-field majority voting over any set of extractors.
//!
//! Every extractor emits the same [`ExtractionRecord`], and [`eval`] scores
//! records against gold annotations as a binary classification problem per
//! field (absent value = negative class) with Precision, Recall and F1.
//!
//! ```
//! use epix_core::annotator::{extract_rule_based, Gazetteer};
//! use epix_core::corpus::{Document, Source};
//!
//! let gazetteer = Gazetteer::bundled();
//! let doc = Document::new("d1", Source::WhoDon, "Nipah", "Nipah virus outbreak in India on 31 May 2018; 15 cases.");
//! let record = extract_rule_based(&doc, &gazetteer);
//! assert_eq!(record.country.unwrap().value.alpha3(), "IND");
//! assert_eq!(record.count.unwrap().value.value, 15);
//! ```

pub mod annotator;
pub mod corpus;
pub mod ensemble;
pub mod eval;
pub mod jsonl;
pub mod llm;
pub mod markup;
pub mod normalize;

pub use corpus::{Document, GoldAnnotation, Source};
pub use ensemble::{ExtractionRecord, Extracted};
pub use normalize::{CanonicalDisease, CaseCount, CountAttribute, CountryCode, Field, FieldValue, IsoDate};
