//! Outbreak-news documents and gold annotations: ingestion from ProMED
//! posts and WHO Disease Outbreak News articles, and line-delimited
//! persistence.

use std::collections::HashSet;
use std::path::Path;

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::jsonl::{self, JsonlError};
use crate::markup::{has_markup, strip_markup};
use crate::normalize::{find_dates, IsoDate};

/// Titles fall back to this many leading body characters.
pub const TITLE_FALLBACK_CHARS: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "PROMED")]
    Promed,
    #[serde(rename = "WHO_DON")]
    WhoDon,
    #[serde(rename = "OTHER")]
    Other,
}

/// One normalized outbreak-news item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub source: Source,
    pub url: Option<String>,
    pub published: Option<IsoDate>,
    pub title: String,
    /// Plain text, markup stripped.
    pub body: String,
}

impl Document {
    pub fn new(id: impl Into<String>, source: Source, title: impl Into<String>, body: impl Into<String>) -> Self {
        Document { id: id.into(), source, url: None, published: None, title: title.into(), body: body.into() }
    }

    pub fn char_count(&self) -> usize {
        self.body.chars().count()
    }
}

/// Expert-labelled facts for one document. Absent facts are `None`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldAnnotation {
    pub document_id: String,
    #[serde(default)]
    pub disease: Option<String>,
    #[serde(default)]
    pub country: Option<String>,
    #[serde(default)]
    pub date: Option<IsoDate>,
    #[serde(default)]
    pub count: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("input is empty")]
    EmptyInput,
    #[error(transparent)]
    File(#[from] JsonlError),
}

/// Optional metadata supplied alongside a raw post.
#[derive(Debug, Clone, Default)]
pub struct SourceHint {
    pub id: Option<String>,
    pub url: Option<String>,
    pub published: Option<IsoDate>,
}

/// A parsed document plus ingestion diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parsed {
    pub document: Document,
    /// Markup was not well-formed; stripping was best effort.
    pub malformed_markup: bool,
}

fn digest_id(prefix: &str, raw: &str) -> String {
    let hash = Sha256::digest(raw.as_bytes());
    format!("{prefix}-{}", &hex::encode(hash)[..12])
}

fn title_fallback(body: &str) -> String {
    body.chars().take(TITLE_FALLBACK_CHARS).collect::<String>().trim().to_string()
}

static SUBJECT_LINE: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?im)^[ \t]*(?:subject|title)[ \t]*:[ \t]*(.+)$").unwrap());
static DATE_LINE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?im)^[ \t]*(?:published[ \t]+date|date)[ \t]*:[ \t]*(.+)$").unwrap());

/// Parses a ProMED post, plain text or HTML.
///
/// The title is the first `Subject:` (or `Title:`) line, which is removed
/// from the body; without one, the first 120 body characters. A `Date:` or
/// `Published Date:` header sets `published` unless the hint provides it.
pub fn parse_promed_post(raw: &str, hint: Option<&SourceHint>) -> Result<Parsed, CorpusError> {
    if raw.trim().is_empty() {
        return Err(CorpusError::EmptyInput);
    }
    let stripped = strip_markup(raw);
    let mut text = stripped.text;

    let mut title = None;
    if let Some(caps) = SUBJECT_LINE.captures(&text) {
        title = Some(caps[1].trim().to_string());
        let line = caps.get(0).unwrap().range();
        text.replace_range(line, "");
        text = crate::markup::normalize_whitespace(&text);
    }
    let published = hint.and_then(|h| h.published).or_else(|| {
        DATE_LINE.captures(&text).and_then(|c| find_dates(&c[1], None).first().map(|m| m.date))
    });
    let title = title.filter(|t| !t.is_empty()).unwrap_or_else(|| title_fallback(&text));

    let document = Document {
        id: hint.and_then(|h| h.id.clone()).unwrap_or_else(|| digest_id("promed", raw)),
        source: Source::Promed,
        url: hint.and_then(|h| h.url.clone()),
        published,
        title,
        body: text,
    };
    Ok(Parsed { document, malformed_markup: stripped.malformed })
}

static HEADING: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?is)<h1\b[^>]*>(.*?)</h1\s*>").unwrap());
static TITLE_TAG: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?is)<title\b[^>]*>(.*?)</title\s*>").unwrap());
static TIME_TAG: Lazy<Regex> = Lazy::new(|| Regex::new(r#"(?is)<time\b[^>]*\bdatetime\s*=\s*["']([^"']+)["']"#).unwrap());
static HEAD_BLOCK: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?is)<head\b.*?</head\s*>").unwrap());
static CANONICAL: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r#"(?is)<link\b[^>]*\brel\s*=\s*["']canonical["'][^>]*\bhref\s*=\s*["']([^"']+)["']"#).unwrap()
});

/// Number of leading body lines searched for a date header.
const DATE_HEADER_LINES: usize = 6;

/// Parses a WHO Disease Outbreak News article.
///
/// The title comes from the first `<h1>`, else `<title>`, else the body. The
/// publication date comes from a `<time datetime>` element, else from the
/// first full date in the leading lines of the article text ("31 May 2018 |
/// Disease Outbreak News"). Without `url`, the page's canonical link is
/// used when present. The id is derived from the URL, or from the content
/// when there is none.
pub fn parse_don_article(raw: &str, url: Option<&str>) -> Result<Parsed, CorpusError> {
    if raw.trim().is_empty() {
        return Err(CorpusError::EmptyInput);
    }
    let inner_text = |re: &Regex| {
        re.captures(raw)
            .map(|c| strip_markup(&c[1]).text.split_whitespace().collect::<Vec<_>>().join(" "))
            .filter(|t| !t.is_empty())
    };
    let heading = inner_text(&HEADING).or_else(|| inner_text(&TITLE_TAG));

    let without_head = HEAD_BLOCK.replace(raw, "");
    let stripped = strip_markup(&without_head);
    let text = stripped.text;

    let published = TIME_TAG
        .captures(raw)
        .and_then(|c| find_dates(&c[1], None).first().map(|m| m.date))
        .or_else(|| {
            text.lines()
                .filter(|l| !l.trim().is_empty())
                .take(DATE_HEADER_LINES)
                .find_map(|l| find_dates(l, None).first().map(|m| m.date))
        });

    let url = url.map(str::to_string).or_else(|| CANONICAL.captures(raw).map(|c| c[1].trim().to_string()));
    let document = Document {
        id: digest_id("don", url.as_deref().unwrap_or(raw)),
        source: Source::WhoDon,
        url,
        published,
        title: heading.unwrap_or_else(|| title_fallback(&text)),
        body: text,
    };
    Ok(Parsed { document, malformed_markup: stripped.malformed })
}

/// Loads a corpus file. Ids must be non-empty and unique and bodies must be
/// free of markup; violations are schema errors naming the line.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Document>, CorpusError> {
    let mut seen = HashSet::new();
    let docs = jsonl::read_with(path.as_ref(), |d: &Document, _| {
        if d.id.is_empty() {
            return Err("empty document id".to_string());
        }
        if !seen.insert(d.id.clone()) {
            return Err(format!("duplicate document id `{}`", d.id));
        }
        if has_markup(&d.body) {
            return Err(format!("body of `{}` contains markup", d.id));
        }
        Ok(())
    })?;
    Ok(docs)
}

/// Hex SHA-256 of a file's bytes.
pub fn corpus_digest(path: impl AsRef<Path>) -> std::io::Result<String> {
    Ok(hex::encode(Sha256::digest(std::fs::read(path)?)))
}

pub fn save_corpus(docs: &[Document], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    Ok(jsonl::write(path.as_ref(), docs)?)
}

/// Loads a gold file. `document_id` is required and non-empty; present
/// string fields must be non-empty (absence is `null`).
pub fn load_gold(path: impl AsRef<Path>) -> Result<Vec<GoldAnnotation>, CorpusError> {
    let gold = jsonl::read_with(path.as_ref(), |g: &GoldAnnotation, _| {
        if g.document_id.is_empty() {
            return Err("empty document_id".to_string());
        }
        for (name, value) in [("disease", &g.disease), ("country", &g.country)] {
            if value.as_deref().is_some_and(|v| v.trim().is_empty()) {
                return Err(format!("{name} is an empty string; use null for absent values"));
            }
        }
        Ok(())
    })?;
    Ok(gold)
}

pub fn save_gold(gold: &[GoldAnnotation], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    Ok(jsonl::write(path.as_ref(), gold)?)
}
