//! Best-effort HTML to plain text.
//!
//! Tags are removed, block-level elements become line breaks, `script` and
//! `style` content is dropped, and entities are decoded. Input that is not
//! well-formed never fails; it only sets [`Stripped::malformed`].
//!
//! The output never contains `<` directly followed by an ASCII letter, `/`,
//! `!` or `?`, and stripping its own output is the identity.

use once_cell::sync::Lazy;
use regex::Regex;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stripped {
    pub text: String,
    /// An unterminated tag or comment was encountered.
    pub malformed: bool,
}

const BLOCK_TAGS: &[&str] = &[
    "address", "article", "aside", "blockquote", "body", "br", "caption", "dd", "div", "dl", "dt", "figcaption",
    "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6", "head", "header", "hr", "html", "li", "main",
    "nav", "ol", "p", "pre", "section", "table", "tbody", "tfoot", "thead", "title", "tr", "ul",
];
const CELL_TAGS: &[&str] = &["td", "th"];
const RAW_TEXT_TAGS: &[&str] = &["script", "style", "noscript", "template"];

fn starts_tag(next: Option<char>) -> bool {
    next.is_some_and(|c| c.is_ascii_alphabetic() || matches!(c, '/' | '!' | '?'))
}

/// Byte index just past the `>` closing the tag that starts at `from`,
/// skipping `>` inside quoted attribute values.
fn tag_end(s: &str, from: usize) -> Option<usize> {
    let mut quote = None;
    for (i, c) in s[from..].char_indices() {
        match (quote, c) {
            (Some(q), c) if c == q => quote = None,
            (Some(_), _) => {}
            (None, '"' | '\'') => quote = Some(c),
            (None, '>') => return Some(from + i + 1),
            _ => {}
        }
    }
    None
}

fn tag_name(tag: &str) -> String {
    tag.trim_start_matches('<')
        .trim_start_matches('/')
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric())
        .flat_map(|c| c.to_lowercase())
        .collect()
}

fn remove_tags(raw: &str, malformed: &mut bool) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut i = 0;
    while i < raw.len() {
        let rest = &raw[i..];
        let c = rest.chars().next().unwrap();
        if c != '<' || !starts_tag(rest[1..].chars().next()) {
            out.push(c);
            i += c.len_utf8();
            continue;
        }
        if let Some(comment) = rest.strip_prefix("<!--") {
            match comment.find("-->") {
                Some(end) => i += 4 + end + 3,
                None => {
                    *malformed = true;
                    break;
                }
            }
            continue;
        }
        let Some(end) = tag_end(raw, i + 1) else {
            // unterminated tag: keep the text, the sanitizer defuses the `<`
            *malformed = true;
            out.push('<');
            i += 1;
            continue;
        };
        let tag = &raw[i..end];
        let name = tag_name(tag);
        let closing = tag.starts_with("</");
        i = end;
        if !closing && RAW_TEXT_TAGS.contains(&name.as_str()) && !tag.ends_with("/>") {
            let close = format!("</{name}");
            match raw[i..].to_ascii_lowercase().find(&close) {
                Some(pos) => {
                    let after = i + pos;
                    i = tag_end(raw, after + 1).unwrap_or(raw.len());
                }
                None => {
                    *malformed = true;
                    i = raw.len();
                }
            }
            continue;
        }
        if BLOCK_TAGS.contains(&name.as_str()) {
            if !out.trim_end_matches([' ', '\t']).ends_with('\n') {
                out.push('\n');
            }
        } else if CELL_TAGS.contains(&name.as_str()) {
            out.push(' ');
        }
    }
    out
}

static ENTITY: Lazy<Regex> = Lazy::new(|| Regex::new(r"&(#[0-9]{1,7}|#[xX][0-9a-fA-F]{1,6}|[A-Za-z][A-Za-z0-9]{1,9});").unwrap());

fn named_entity(name: &str) -> Option<char> {
    let c = match name {
        "amp" => '&',
        "lt" => '<',
        "gt" => '>',
        "quot" => '"',
        "apos" => '\'',
        "nbsp" => ' ',
        "ndash" => '–',
        "mdash" => '—',
        "hellip" => '…',
        "lsquo" => '‘',
        "rsquo" => '’',
        "ldquo" => '“',
        "rdquo" => '”',
        "laquo" => '«',
        "raquo" => '»',
        "middot" => '·',
        "bull" => '•',
        "deg" => '°',
        "copy" => '©',
        "reg" => '®',
        "eacute" => 'é',
        "egrave" => 'è',
        "aacute" => 'á',
        "agrave" => 'à',
        "iacute" => 'í',
        "oacute" => 'ó',
        "uacute" => 'ú',
        "ntilde" => 'ñ',
        "ccedil" => 'ç',
        "ocirc" => 'ô',
        "ouml" => 'ö',
        "uuml" => 'ü',
        "auml" => 'ä',
        _ => return None,
    };
    Some(c)
}

fn decode_once(text: &str) -> String {
    ENTITY
        .replace_all(text, |caps: &regex::Captures<'_>| {
            let body = &caps[1];
            let decoded = if let Some(hex) = body.strip_prefix("#x").or_else(|| body.strip_prefix("#X")) {
                u32::from_str_radix(hex, 16).ok().and_then(char::from_u32)
            } else if let Some(dec) = body.strip_prefix('#') {
                dec.parse().ok().and_then(char::from_u32)
            } else {
                named_entity(body)
            };
            match decoded {
                Some('\u{a0}') => " ".to_string(),
                Some(c) if c != '\0' => c.to_string(),
                _ => caps[0].to_string(),
            }
        })
        .into_owned()
}

/// Decodes entities until nothing changes ("&amp;lt;" ends as "<"). Each
/// productive pass shortens the string, so this terminates.
pub fn decode_entities(text: &str) -> String {
    let mut cur = text.to_string();
    loop {
        let next = decode_once(&cur);
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

/// Inserts a space after any `<` that would otherwise open a tag.
fn defuse_angle_brackets(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        out.push(c);
        if c == '<' && starts_tag(chars.peek().copied()) {
            out.push(' ');
        }
    }
    out
}

/// Collapses horizontal whitespace, trims lines, and keeps at most one
/// blank line between paragraphs.
pub fn normalize_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_blank = false;
    for line in text.lines() {
        let collapsed = line.split_whitespace().collect::<Vec<_>>().join(" ");
        if collapsed.is_empty() {
            pending_blank = !out.is_empty();
            continue;
        }
        if !out.is_empty() {
            out.push('\n');
            if pending_blank {
                out.push('\n');
            }
        }
        pending_blank = false;
        out.push_str(&collapsed);
    }
    out
}

pub fn strip_markup(raw: &str) -> Stripped {
    let mut malformed = false;
    let without_tags = remove_tags(raw, &mut malformed);
    let text = normalize_whitespace(&defuse_angle_brackets(&decode_entities(&without_tags)));
    Stripped { text, malformed }
}

/// True when `text` still contains something that looks like a tag.
pub fn has_markup(text: &str) -> bool {
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '<' && chars.peek().is_some_and(|n| n.is_ascii_alphabetic()) {
            return true;
        }
    }
    false
}
