use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

/// What a count refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CountAttribute {
    Case,
    Death,
    Unknown,
}

impl CountAttribute {
    /// Preference order used when count candidates tie on frequency.
    pub fn rank(self) -> u8 {
        match self {
            CountAttribute::Case => 0,
            CountAttribute::Death => 1,
            CountAttribute::Unknown => 2,
        }
    }
}

/// A parsed case or death count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CaseCount {
    pub value: u64,
    pub approximate: bool,
    pub attribute: CountAttribute,
}

impl CaseCount {
    /// An exact count of unknown attribute.
    pub fn new(value: u64) -> Self {
        CaseCount { value, approximate: false, attribute: CountAttribute::Unknown }
    }
}

/// A count expression found in running text, with byte offsets covering the
/// hedge, the number and the attribute keyword.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMention {
    pub start: usize,
    pub end: usize,
    pub count: CaseCount,
    /// Whether an attribute keyword ("cases", "deaths", ...) followed the number.
    pub has_keyword: bool,
}

static HEDGE_BEFORE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(
        r"(?i)\b(?:about|approximately|approx\.?|around|roughly|nearly|almost|more\s+than|over|at\s+least|up\s+to|some|an\s+estimated|estimated|less\s+than|fewer\s+than|under|close\s+to|~)\s*$",
    )
    .unwrap()
});

static KEYWORD_AFTER: Lazy<Regex> = Lazy::new(|| {
    Regex::new(
        r"(?i)^(?:[ \t]+|[ \t]*-[ \t]*)(?:(?:new|additional|confirmed|laboratory[- ]confirmed|lab[- ]confirmed|suspected|probable|possible|human|total|reported|fatal|related|associated|locally[- ]acquired|imported|further|more|people|persons|patients|individuals|of\s+whom|of\s+them|have|had|has|who)[ \t]+){0,4}(?P<kw>cases?|infections?|infected|patients|illnesses|deaths?|fatalities|fatality|died|dead|deceased)\b",
    )
    .unwrap()
});

static DIGITS: Lazy<Regex> = Lazy::new(|| Regex::new(r"\d{1,3}(?:,\d{3})+|\d+").unwrap());

fn attribute_of(keyword: &str) -> CountAttribute {
    let k = keyword.to_ascii_lowercase();
    if k.starts_with("death") || k.starts_with("fatalit") || k == "died" || k == "dead" || k == "deceased" {
        CountAttribute::Death
    } else {
        CountAttribute::Case
    }
}

fn unit_word(w: &str) -> Option<u64> {
    let v = match w {
        "zero" => 0,
        "one" => 1,
        "two" => 2,
        "three" => 3,
        "four" => 4,
        "five" => 5,
        "six" => 6,
        "seven" => 7,
        "eight" => 8,
        "nine" => 9,
        "ten" => 10,
        "eleven" => 11,
        "twelve" => 12,
        "thirteen" => 13,
        "fourteen" => 14,
        "fifteen" => 15,
        "sixteen" => 16,
        "seventeen" => 17,
        "eighteen" => 18,
        "nineteen" => 19,
        _ => return None,
    };
    Some(v)
}

fn tens_word(w: &str) -> Option<u64> {
    let v = match w {
        "twenty" => 20,
        "thirty" => 30,
        "forty" => 40,
        "fifty" => 50,
        "sixty" => 60,
        "seventy" => 70,
        "eighty" => 80,
        "ninety" => 90,
        _ => return None,
    };
    Some(v)
}

/// Words of `text` (ASCII letters only) with byte ranges; anything else
/// separates words. Used for number-word parsing.
fn letter_words(text: &str) -> Vec<(usize, usize, String)> {
    static WORD: Lazy<Regex> = Lazy::new(|| Regex::new(r"[A-Za-z]+").unwrap());
    WORD.find_iter(text).map(|m| (m.start(), m.end(), m.as_str().to_ascii_lowercase())).collect()
}

/// Gap between two number words must be blank or a single hyphen.
fn joinable(gap: &str) -> bool {
    let g = gap.trim_matches(|c| c == ' ' || c == '\t');
    g.is_empty() || g == "-"
}

/// Parses 0..=99 starting at word `i`; returns (value, words consumed).
fn parse_below_hundred(words: &[(usize, usize, String)], text: &str, i: usize) -> Option<(u64, usize)> {
    let w = &words.get(i)?.2;
    if let Some(v) = unit_word(w) {
        return Some((v, 1));
    }
    let tens = tens_word(w)?;
    if let Some(next) = words.get(i + 1) {
        if joinable(&text[words[i].1..next.0]) {
            if let Some(u) = unit_word(&next.2).filter(|u| (1..=9).contains(u)) {
                return Some((tens + u, 2));
            }
        }
    }
    Some((tens, 1))
}

/// Parses an English number word phrase (0..=999) starting at word `i`.
fn parse_number_words(words: &[(usize, usize, String)], text: &str, i: usize) -> Option<(u64, usize)> {
    let (low, used) = parse_below_hundred(words, text, i)?;
    let h = i + used;
    let is_hundred = words
        .get(h)
        .is_some_and(|w| w.2 == "hundred" && joinable(&text[words[h - 1].1..w.0]));
    if !(is_hundred && (1..=9).contains(&low)) {
        return Some((low, used));
    }
    let mut total = low * 100;
    let mut consumed = used + 1;
    let mut j = h + 1;
    if words.get(j).is_some_and(|w| w.2 == "and" && joinable(&text[words[j - 1].1..w.0])) {
        j += 1;
    }
    if let Some(w) = words.get(j) {
        if joinable(&text[words[j - 1].1..w.0]) {
            if let Some((rest, n)) = parse_below_hundred(words, text, j).filter(|(r, _)| *r > 0) {
                total += rest;
                consumed = (j - i) + n;
            }
        }
    }
    Some((total, consumed))
}

/// A bare number (digits or words) with its byte range.
fn number_candidates(text: &str) -> Vec<(usize, usize, u64)> {
    let mut out = Vec::new();
    for m in DIGITS.find_iter(text) {
        let before = text[..m.start()].chars().next_back();
        let after = text[m.end()..].chars().next();
        let hyphen_joined = before == Some('-')
            && text[..m.start() - 1].chars().next_back().is_some_and(char::is_alphanumeric);
        // part of a decimal, an identifier ("COVID-19") or a longer token
        if hyphen_joined
            || before.is_some_and(|c| c.is_alphanumeric() || c == '.' || c == ',')
            || after.is_some_and(|c| c.is_alphanumeric())
            || (after == Some('.') && text[m.end() + 1..].starts_with(|c: char| c.is_ascii_digit()))
        {
            continue;
        }
        let digits: String = m.as_str().chars().filter(|c| c.is_ascii_digit()).collect();
        if let Ok(v) = digits.parse::<u64>() {
            out.push((m.start(), m.end(), v));
        }
    }
    let words = letter_words(text);
    let mut i = 0;
    while i < words.len() {
        match parse_number_words(&words, text, i) {
            Some((v, n)) => {
                out.push((words[i].0, words[i + n - 1].1, v));
                i += n;
            }
            None => i += 1,
        }
    }
    out.sort_by_key(|c| c.0);
    out
}

/// Every count expression in `text`, left to right, whether or not an
/// attribute keyword follows the number.
pub fn find_count_expressions(text: &str) -> Vec<CountMention> {
    number_candidates(text)
        .into_iter()
        .map(|(s, e, value)| {
            let hedge = HEDGE_BEFORE.find(&text[..s]);
            let keyword = KEYWORD_AFTER.captures(&text[e..]);
            let start = hedge.map_or(s, |h| h.start());
            let (end, attribute) = match &keyword {
                Some(c) => {
                    let kw = c.name("kw").unwrap();
                    (e + kw.end(), attribute_of(kw.as_str()))
                }
                None => (e, CountAttribute::Unknown),
            };
            CountMention {
                start,
                end,
                count: CaseCount { value, approximate: hedge.is_some(), attribute },
                has_keyword: keyword.is_some(),
            }
        })
        .collect()
}

/// Parses the first count in `raw`.
///
/// Digits (with optional thousands separators) and English number words up
/// to 999 are recognized. A preceding hedge ("about", "more than", ...) sets
/// `approximate`; a following keyword sets the attribute (cases/infections
/// to [`CountAttribute::Case`], deaths/fatalities to
/// [`CountAttribute::Death`]).
pub fn parse_count_expression(raw: &str) -> Option<CaseCount> {
    find_count_expressions(raw).into_iter().next().map(|m| m.count)
}
