use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use once_cell::sync::Lazy;
use regex::{Captures, Regex};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A Gregorian calendar date, always rendered as `YYYY-MM-DD`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IsoDate(NaiveDate);

impl IsoDate {
    /// Years are limited to 1..=9999 so the four-digit rendering is total.
    pub fn from_ymd(year: i32, month: u32, day: u32) -> Option<Self> {
        if !(1..=9999).contains(&year) {
            return None;
        }
        NaiveDate::from_ymd_opt(year, month, day).map(IsoDate)
    }

    pub fn year(&self) -> i32 {
        self.0.year()
    }

    pub fn month(&self) -> u32 {
        self.0.month()
    }

    pub fn day(&self) -> u32 {
        self.0.day()
    }
}

impl fmt::Display for IsoDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}", self.year(), self.month(), self.day())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("`{0}` is not a YYYY-MM-DD calendar date")]
pub struct InvalidIsoDate(pub String);

impl FromStr for IsoDate {
    type Err = InvalidIsoDate;

    /// Strict `YYYY-MM-DD` parsing, used for stored files. Free text goes
    /// through [`normalize_date`].
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || InvalidIsoDate(s.to_string());
        let b = s.as_bytes();
        if b.len() != 10 || b[4] != b'-' || b[7] != b'-' {
            return Err(bad());
        }
        let num = |r: std::ops::Range<usize>| -> Result<u32, InvalidIsoDate> {
            let part = &s[r];
            if part.bytes().all(|c| c.is_ascii_digit()) {
                part.parse().map_err(|_| bad())
            } else {
                Err(bad())
            }
        };
        IsoDate::from_ymd(num(0..4)? as i32, num(5..7)?, num(8..10)?).ok_or_else(bad)
    }
}

impl Serialize for IsoDate {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for IsoDate {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A date found in running text. Offsets are byte offsets into the scanned
/// string; ranges cover the whole range expression and resolve to its start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DateMention {
    pub start: usize,
    pub end: usize,
    pub date: IsoDate,
}

const MONTH: &str = r"(?:jan(?:uary)?|feb(?:ruary)?|mar(?:ch)?|apr(?:il)?|may|june?|july?|aug(?:ust)?|sep(?:t(?:ember)?)?|oct(?:ober)?|nov(?:ember)?|dec(?:ember)?)\.?";
const ORD: &str = r"(?:st|nd|rd|th)?";
const RANGE_SEP: &str = r"\s*(?:-|–|—|to|until|and)\s*";

// Alternatives are ordered so that, at any start position, the more specific
// form wins (leftmost-first semantics).
static DATE_RE: Lazy<Regex> = Lazy::new(|| {
    let iso = r"(?P<iso_y>\d{4})-(?P<iso_m>\d{1,2})-(?P<iso_d>\d{1,2})(?:\s*(?:-|–|to|until)\s*\d{4}-\d{1,2}-\d{1,2})?";
    let dmy_cross = format!(
        r"(?P<dmc_d>\d{{1,2}}){ORD}\s+(?P<dmc_m>{MONTH}){RANGE_SEP}\d{{1,2}}{ORD}\s+{MONTH},?\s+(?P<dmc_y>\d{{4}})"
    );
    let mdy_cross = format!(
        r"(?P<mdc_m>{MONTH})\s+(?P<mdc_d>\d{{1,2}}){ORD}{RANGE_SEP}{MONTH}\s+\d{{1,2}}{ORD},?\s+(?P<mdc_y>\d{{4}})"
    );
    let dmy = format!(
        r"(?P<dmy_d>\d{{1,2}}){ORD}(?:{RANGE_SEP}\d{{1,2}}{ORD})?\s+(?:of\s+)?(?P<dmy_m>{MONTH}),?\s+(?P<dmy_y>\d{{4}})"
    );
    let mdy = format!(
        r"(?P<mdy_m>{MONTH})\s+(?P<mdy_d>\d{{1,2}}){ORD}(?:{RANGE_SEP}\d{{1,2}}{ORD})?,?\s+(?P<mdy_y>\d{{4}})"
    );
    let slash = r"(?P<sl_d>\d{1,2})/(?P<sl_m>\d{1,2})/(?P<sl_y>\d{4})";
    let md = format!(r"(?P<md_m>{MONTH})\s+(?P<md_d>\d{{1,2}}){ORD}(?:{RANGE_SEP}\d{{1,2}}{ORD})?");
    let dm = format!(r"(?P<dm_d>\d{{1,2}}){ORD}(?:{RANGE_SEP}\d{{1,2}}{ORD})?\s+(?:of\s+)?(?P<dm_m>{MONTH})");
    let pattern = format!(
        r"(?i)\b(?:{iso}|{dmy_cross}|{mdy_cross}|{dmy}|{mdy}|{slash}|{md}|{dm})\b"
    );
    Regex::new(&pattern).expect("date grammar compiles")
});

fn month_number(name: &str) -> Option<u32> {
    let key: String = name.trim_end_matches('.').chars().take(3).flat_map(char::to_lowercase).collect();
    let m = match key.as_str() {
        "jan" => 1,
        "feb" => 2,
        "mar" => 3,
        "apr" => 4,
        "may" => 5,
        "jun" => 6,
        "jul" => 7,
        "aug" => 8,
        "sep" => 9,
        "oct" => 10,
        "nov" => 11,
        "dec" => 12,
        _ => return None,
    };
    Some(m)
}

fn resolve(caps: &Captures<'_>, anchor_year: Option<i32>) -> Option<IsoDate> {
    let num = |name: &str| caps.name(name).and_then(|m| m.as_str().parse::<u32>().ok());
    let month = |name: &str| caps.name(name).and_then(|m| month_number(m.as_str()));
    let full = |y: &str, m: Option<u32>, d: &str| IsoDate::from_ymd(num(y)? as i32, m?, num(d)?);

    if caps.name("iso_y").is_some() {
        return full("iso_y", num("iso_m"), "iso_d");
    }
    if caps.name("dmc_y").is_some() {
        return full("dmc_y", month("dmc_m"), "dmc_d");
    }
    if caps.name("mdc_y").is_some() {
        return full("mdc_y", month("mdc_m"), "mdc_d");
    }
    if caps.name("dmy_y").is_some() {
        return full("dmy_y", month("dmy_m"), "dmy_d");
    }
    if caps.name("mdy_y").is_some() {
        return full("mdy_y", month("mdy_m"), "mdy_d");
    }
    if caps.name("sl_y").is_some() {
        return full("sl_y", num("sl_m"), "sl_d");
    }
    let year = anchor_year?;
    if caps.name("md_m").is_some() {
        return IsoDate::from_ymd(year, month("md_m")?, num("md_d")?);
    }
    if caps.name("dm_m").is_some() {
        return IsoDate::from_ymd(year, month("dm_m")?, num("dm_d")?);
    }
    None
}

/// Every resolvable date mention in `text`, left to right.
///
/// Mentions without a year ("May 19") resolve against `anchor_year` and are
/// dropped when no anchor is given. Impossible dates (31 February) are
/// dropped.
pub fn find_dates(text: &str, anchor_year: Option<i32>) -> Vec<DateMention> {
    DATE_RE
        .captures_iter(text)
        .filter_map(|caps| {
            let whole = caps.get(0)?;
            let date = resolve(&caps, anchor_year)?;
            Some(DateMention { start: whole.start(), end: whole.end(), date })
        })
        .collect()
}

/// First resolvable date in `raw`, or `None`. Never fails.
///
/// Recognized: `YYYY-MM-DD`, `DD Month YYYY`, `Month DD, YYYY`,
/// `DD/MM/YYYY`, and ranges of these (resolved to the start date).
pub fn normalize_date(raw: &str) -> Option<IsoDate> {
    normalize_date_with_year(raw, None)
}

/// Like [`normalize_date`], with year-less forms resolved against
/// `anchor_year` (typically the document's publication year).
pub fn normalize_date_with_year(raw: &str, anchor_year: Option<i32>) -> Option<IsoDate> {
    find_dates(raw, anchor_year).into_iter().next().map(|m| m.date)
}
