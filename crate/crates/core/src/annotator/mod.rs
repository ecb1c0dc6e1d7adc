//! Rule-based baseline extractor.
//!
//! Three annotators run over the document body: a resolved keyword
//! annotator backed by the [`Gazetteer`] (diseases and countries), a count
//! annotator and a date annotator. The key-entity filter then keeps, per
//! class, the most frequently mentioned canonical value; ties go to the
//! value mentioned first.
//!
//! All span offsets are character offsets into `Document::body`.

mod gazetteer;

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

pub use gazetteer::{EntityClass, Gazetteer, GazetteerEntry, GazetteerError};

use crate::corpus::Document;
use crate::ensemble::{ExtractionRecord, Extracted};
use crate::normalize::{
    find_count_expressions, find_dates, word_tokens, CanonicalDisease, CaseCount, CountryTable, IsoDate,
};

pub const DEFAULT_EXTRACTOR_ID: &str = "rule-based";

/// A gazetteer hit in the document body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySpan {
    pub class: EntityClass,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub canonical_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountSpan {
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub count: CaseCount,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DateSpan {
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub date: IsoDate,
}

/// The winning value of one class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyEntity<T> {
    pub value: T,
    pub mentions: usize,
    /// Character offset of the first mention.
    pub first_offset: usize,
    /// Text of the first mention.
    pub surface: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyEntitySet {
    /// Canonical gazetteer id.
    pub disease: Option<KeyEntity<String>>,
    /// Canonical gazetteer id (alpha-3 code for the bundled table).
    pub country: Option<KeyEntity<String>>,
    pub date: Option<KeyEntity<IsoDate>>,
    pub count: Option<KeyEntity<CaseCount>>,
}

/// Byte offset to character offset lookup over one string.
struct CharIndex {
    starts: Vec<usize>,
}

impl CharIndex {
    fn new(text: &str) -> Self {
        CharIndex { starts: text.char_indices().map(|(i, _)| i).collect() }
    }

    fn char_offset(&self, byte: usize) -> usize {
        self.starts.partition_point(|&b| b < byte)
    }
}

/// A multi-token match may not span a line break or a sentence boundary.
fn gap_allows_join(gap: &str) -> bool {
    if gap.contains('\n') {
        return false;
    }
    let mut chars = gap.chars().peekable();
    while let Some(c) = chars.next() {
        if matches!(c, '.' | ';' | ':' | '!' | '?') && chars.peek().is_some_and(|n| n.is_whitespace()) {
            return false;
        }
    }
    true
}

/// Gazetteer annotation with longest-match-wins: every candidate match is
/// collected, then accepted longest first, and any candidate overlapping an
/// accepted one is dropped.
pub fn annotate_entities(doc: &Document, gazetteer: &Gazetteer) -> Vec<EntitySpan> {
    let body = doc.body.as_str();
    let tokens = word_tokens(body);
    let lowered: Vec<String> = tokens.iter().map(|&(s, e)| body[s..e].to_lowercase()).collect();

    // (start byte, end byte, entry)
    let mut candidates = Vec::new();
    for i in 0..tokens.len() {
        let mut key = String::new();
        for k in 0..gazetteer.max_tokens().min(tokens.len() - i) {
            let j = i + k;
            if k > 0 {
                if !gap_allows_join(&body[tokens[j - 1].1..tokens[j].0]) {
                    break;
                }
                key.push(' ');
            }
            key.push_str(&lowered[j]);
            if let Some(entry) = gazetteer.lookup_folded(&key) {
                candidates.push((tokens[i].0, tokens[j].1, entry));
            }
        }
    }
    candidates.sort_by(|a, b| (b.1 - b.0).cmp(&(a.1 - a.0)).then(a.0.cmp(&b.0)));

    let mut accepted: Vec<(usize, usize, &GazetteerEntry)> = Vec::new();
    for cand in candidates {
        if accepted.iter().all(|acc| cand.1 <= acc.0 || cand.0 >= acc.1) {
            accepted.push(cand);
        }
    }
    accepted.sort_by_key(|c| c.0);

    let index = CharIndex::new(body);
    accepted
        .into_iter()
        .map(|(s, e, entry)| EntitySpan {
            class: entry.class,
            start: index.char_offset(s),
            end: index.char_offset(e),
            surface: body[s..e].to_string(),
            canonical_id: entry.canonical_id.clone(),
        })
        .collect()
}

fn anchor_year(doc: &Document) -> Option<i32> {
    doc.published.map(|d| d.year())
}

/// Date mentions, ranges resolved to their start. Year-less mentions use the
/// publication year.
pub fn annotate_dates(doc: &Document) -> Vec<DateSpan> {
    let body = doc.body.as_str();
    let index = CharIndex::new(body);
    find_dates(body, anchor_year(doc))
        .into_iter()
        .map(|m| DateSpan {
            start: index.char_offset(m.start),
            end: index.char_offset(m.end),
            surface: body[m.start..m.end].to_string(),
            date: m.date,
        })
        .collect()
}

/// Count expressions followed by an attribute keyword ("15 cases", "about
/// 200 infections", "thirteen deaths"). Numbers inside date mentions are
/// never counts.
pub fn annotate_counts(doc: &Document) -> Vec<CountSpan> {
    let body = doc.body.as_str();
    let dates = find_dates(body, anchor_year(doc));
    let index = CharIndex::new(body);
    find_count_expressions(body)
        .into_iter()
        .filter(|m| m.has_keyword)
        .filter(|m| dates.iter().all(|d| m.end <= d.start || m.start >= d.end))
        .map(|m| CountSpan {
            start: index.char_offset(m.start),
            end: index.char_offset(m.end),
            surface: body[m.start..m.end].to_string(),
            count: m.count,
        })
        .collect()
}

struct Tally<T> {
    entity: KeyEntity<T>,
    rank: u8,
}

/// Most frequent key, ties broken by `rank` (lower wins) and then by the
/// earliest first mention.
fn most_frequent<K, T>(mentions: impl IntoIterator<Item = (K, T, usize, String, u8)>) -> Option<KeyEntity<T>>
where
    K: Eq + Hash,
{
    let mut tallies: HashMap<K, Tally<T>> = HashMap::new();
    for (key, value, offset, surface, rank) in mentions {
        match tallies.get_mut(&key) {
            Some(t) => {
                t.entity.mentions += 1;
                if rank < t.rank || (rank == t.rank && offset < t.entity.first_offset) {
                    t.rank = rank;
                    t.entity.value = value;
                }
                if offset < t.entity.first_offset {
                    t.entity.first_offset = offset;
                    t.entity.surface = surface;
                }
            }
            None => {
                tallies.insert(key, Tally { entity: KeyEntity { value, mentions: 1, first_offset: offset, surface }, rank });
            }
        }
    }
    tallies
        .into_values()
        .min_by(|a, b| {
            b.entity
                .mentions
                .cmp(&a.entity.mentions)
                .then(a.rank.cmp(&b.rank))
                .then(a.entity.first_offset.cmp(&b.entity.first_offset))
        })
        .map(|t| t.entity)
}

/// Reduces the annotations of one document to one winner per class.
///
/// Frequency is counted over the whole document. Count mentions are grouped
/// by integer value; at equal frequency a group whose mentions include a
/// case count beats one with only deaths, which beats unknown attributes.
pub fn filter_key_entities(spans: &[EntitySpan], counts: &[CountSpan], dates: &[DateSpan]) -> KeyEntitySet {
    let of_class = |class: EntityClass| {
        most_frequent(
            spans
                .iter()
                .filter(|s| s.class == class)
                .map(|s| (s.canonical_id.clone(), s.canonical_id.clone(), s.start, s.surface.clone(), 0)),
        )
    };
    KeyEntitySet {
        disease: of_class(EntityClass::Disease),
        country: of_class(EntityClass::Country),
        date: most_frequent(dates.iter().map(|d| (d.date, d.date, d.start, d.surface.clone(), 0))),
        count: most_frequent(
            counts
                .iter()
                .map(|c| (c.count.value, c.count, c.start, c.surface.clone(), c.count.attribute.rank())),
        ),
    }
}

/// The rule-based extractor: annotate, filter, and map winners into an
/// [`ExtractionRecord`].
#[derive(Debug, Clone)]
pub struct RuleBasedExtractor {
    pub id: String,
    gazetteer: std::sync::Arc<Gazetteer>,
}

impl RuleBasedExtractor {
    pub fn new(id: impl Into<String>, gazetteer: std::sync::Arc<Gazetteer>) -> Self {
        RuleBasedExtractor { id: id.into(), gazetteer }
    }

    pub fn key_entities(&self, doc: &Document) -> KeyEntitySet {
        let spans = annotate_entities(doc, &self.gazetteer);
        let counts = annotate_counts(doc);
        let dates = annotate_dates(doc);
        filter_key_entities(&spans, &counts, &dates)
    }

    pub fn extract(&self, doc: &Document) -> ExtractionRecord {
        let keys = self.key_entities(doc);
        to_record(doc, &self.id, &keys, &self.gazetteer)
    }
}

fn to_record(doc: &Document, extractor_id: &str, keys: &KeyEntitySet, gazetteer: &Gazetteer) -> ExtractionRecord {
    let mut record = ExtractionRecord::empty(&doc.id, extractor_id);
    record.disease = keys.disease.as_ref().and_then(|k| {
        let entry = gazetteer.entry(EntityClass::Disease, &k.value)?;
        Some(Extracted {
            raw: k.surface.clone(),
            value: CanonicalDisease::new(entry.canonical_id.clone(), entry.display_name.clone()),
        })
    });
    record.country = keys.country.as_ref().and_then(|k| {
        let code = CountryTable::bundled().get(&k.value)?.clone();
        Some(Extracted { raw: k.surface.clone(), value: code })
    });
    record.date = keys.date.as_ref().map(|k| Extracted { raw: k.surface.clone(), value: k.value });
    record.count = keys.count.as_ref().map(|k| Extracted { raw: k.surface.clone(), value: k.value });
    record
}

/// Runs the rule-based pipeline with the default extractor id.
pub fn extract_rule_based(doc: &Document, gazetteer: &Gazetteer) -> ExtractionRecord {
    let spans = annotate_entities(doc, gazetteer);
    let counts = annotate_counts(doc);
    let dates = annotate_dates(doc);
    let keys = filter_key_entities(&spans, &counts, &dates);
    to_record(doc, DEFAULT_EXTRACTOR_ID, &keys, gazetteer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Source;
    use crate::normalize::CountAttribute;
    use proptest::prelude::*;

    fn doc(body: &str) -> Document {
        Document::new("t", Source::Other, "t", body)
    }

    fn slice(body: &str, start: usize, end: usize) -> String {
        body.chars().skip(start).take(end - start).collect()
    }

    #[test]
    fn longest_match_and_synonym_resolution() {
        let g = Gazetteer::bundled();
        let spans = annotate_entities(&doc("Ebola virus disease in DRC"), &g);
        assert_eq!(spans.len(), 2);
        assert_eq!(spans[0].class, EntityClass::Disease);
        assert_eq!(spans[0].surface, "Ebola virus disease");
        assert_eq!(spans[0].canonical_id, "ebola-virus-disease");
        assert_eq!(spans[1].class, EntityClass::Country);
        assert_eq!(spans[1].canonical_id, "COD");
        assert_eq!(spans[1].surface, "DRC");
    }

    #[test]
    fn repeated_mentions_share_an_id() {
        let g = Gazetteer::bundled();
        let spans = annotate_entities(&doc("Zika Zika Zika"), &g);
        assert_eq!(spans.len(), 3);
        assert!(spans.iter().all(|s| s.canonical_id == "zika-virus-disease"));
    }

    #[test]
    fn empty_body_has_no_spans() {
        assert!(annotate_entities(&doc(""), &Gazetteer::bundled()).is_empty());
        assert!(annotate_counts(&doc("")).is_empty());
        assert!(annotate_dates(&doc("")).is_empty());
    }

    #[test]
    fn matches_do_not_cross_sentences() {
        let g = Gazetteer::bundled();
        let spans = annotate_entities(&doc("It was Ebola. Virus disease spread."), &g);
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].surface, "Ebola");
    }

    #[test]
    fn offsets_are_character_offsets() {
        let g = Gazetteer::bundled();
        let body = "Épidémie: Zika in Côte d'Ivoire";
        let spans = annotate_entities(&doc(body), &g);
        for s in &spans {
            assert_eq!(slice(body, s.start, s.end), s.surface);
        }
        assert_eq!(spans[1].canonical_id, "CIV");
    }

    #[test]
    fn counts_with_attributes() {
        let c = annotate_counts(&doc("15 cases and 13 deaths"));
        assert_eq!(c.len(), 2);
        assert_eq!((c[0].count.value, c[0].count.attribute), (15, CountAttribute::Case));
        assert_eq!((c[1].count.value, c[1].count.attribute), (13, CountAttribute::Death));

        let c = annotate_counts(&doc("more than 200 infections"));
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].count, CaseCount { value: 200, approximate: true, attribute: CountAttribute::Case });

        assert!(annotate_counts(&doc("no counts")).is_empty());
    }

    #[test]
    fn disease_names_with_digits_are_not_counts() {
        assert!(annotate_counts(&doc("COVID-19 cases rose")).is_empty());
    }

    #[test]
    fn dates_in_context() {
        let mut d = doc("Reported on 31 May 2018. Cluster from May 19-21, 2018. Seen next Tuesday.");
        let dates = annotate_dates(&d);
        let got: Vec<String> = dates.iter().map(|x| x.date.to_string()).collect();
        assert_eq!(got, ["2018-05-31", "2018-05-19"]);

        d.body = "Onset on May 3.".into();
        assert!(annotate_dates(&d).is_empty());
        d.published = IsoDate::from_ymd(2019, 6, 1);
        assert_eq!(annotate_dates(&d)[0].date.to_string(), "2019-05-03");
    }

    fn span(class: EntityClass, id: &str, start: usize) -> EntitySpan {
        EntitySpan { class, start, end: start + 1, surface: id.to_string(), canonical_id: id.to_string() }
    }

    #[test]
    fn strict_maximum_wins() {
        let d = EntityClass::Disease;
        let spans = vec![span(d, "ebola", 0), span(d, "zika", 10), span(d, "zika", 20), span(d, "zika", 30)];
        let keys = filter_key_entities(&spans, &[], &[]);
        assert_eq!(keys.disease.unwrap().value, "zika");
    }

    #[test]
    fn tie_goes_to_earliest_mention() {
        let d = EntityClass::Disease;
        let spans = vec![span(d, "zika", 90), span(d, "ebola", 4), span(d, "zika", 100), span(d, "ebola", 120)];
        let keys = filter_key_entities(&spans, &[], &[]);
        let winner = keys.disease.unwrap();
        assert_eq!(winner.value, "ebola");
        assert_eq!(winner.mentions, 2);
        assert_eq!(winner.first_offset, 4);
    }

    #[test]
    fn empty_inputs_give_empty_set() {
        assert_eq!(filter_key_entities(&[], &[], &[]), KeyEntitySet::default());
    }

    #[test]
    fn count_tie_prefers_cases() {
        let mk = |value, attribute, start| CountSpan {
            start,
            end: start + 2,
            surface: String::new(),
            count: CaseCount { value, approximate: false, attribute },
        };
        let counts = vec![mk(13, CountAttribute::Death, 0), mk(15, CountAttribute::Case, 20)];
        let keys = filter_key_entities(&[], &counts, &[]);
        assert_eq!(keys.count.unwrap().value.value, 15);
        // frequency still dominates attribute
        let counts = vec![mk(13, CountAttribute::Death, 0), mk(15, CountAttribute::Case, 20), mk(13, CountAttribute::Death, 40)];
        assert_eq!(filter_key_entities(&[], &counts, &[]).count.unwrap().value.value, 13);
    }

    #[test]
    fn crafted_fixture_traces_by_hand() {
        let g = Gazetteer::bundled();
        let r = extract_rule_based(&doc("Nipah virus outbreak in India on 31 May 2018; 15 cases."), &g);
        assert_eq!(r.disease.unwrap().value.display_name(), "Nipah virus");
        assert_eq!(r.country.unwrap().value.alpha3(), "IND");
        assert_eq!(r.date.unwrap().value.to_string(), "2018-05-31");
        assert_eq!(r.count.unwrap().value.value, 15);
    }

    #[test]
    fn nothing_recognizable() {
        let r = extract_rule_based(&doc("The weather was pleasant."), &Gazetteer::bundled());
        assert!(r.disease.is_none() && r.country.is_none() && r.date.is_none() && r.count.is_none());
        assert_eq!(r.extractor_id, DEFAULT_EXTRACTOR_ID);
    }

    #[test]
    fn frequent_country_wins() {
        let r = extract_rule_based(
            &doc("Spain reported. France reported. France again. France. France, and France."),
            &Gazetteer::bundled(),
        );
        assert_eq!(r.country.unwrap().value.alpha3(), "FRA");
    }

    const FRAGMENTS: &[&str] = &[
        "Zika cases rose in Brazil.",
        "Ebola virus disease was confirmed in DRC.",
        "About 15 cases were reported on 31 May 2018.",
        "Officials in India counted thirteen deaths.",
        "The EVD outbreak spread to Uganda.",
        "Nipah virus killed 4 people died in Kerala.",
        "More than 200 infections by May 19-21, 2018.",
        "Cholera hit Yemen hard.",
        "Nothing else to add.",
    ];

    fn body_strategy() -> impl Strategy<Value = String> {
        prop::collection::vec(prop::sample::select(FRAGMENTS), 0..8).prop_map(|v| v.join(" "))
    }

    proptest! {
        #[test]
        fn span_offsets_match_body(body in body_strategy()) {
            let d = doc(&body);
            for s in annotate_entities(&d, &Gazetteer::bundled()) {
                prop_assert!(s.start < s.end && s.end <= body.chars().count());
                prop_assert_eq!(slice(&body, s.start, s.end), s.surface);
            }
            for c in annotate_counts(&d) {
                prop_assert_eq!(slice(&body, c.start, c.end), c.surface);
            }
        }

        #[test]
        fn doubling_body_keeps_winners(body in body_strategy()) {
            let g = Gazetteer::bundled();
            let once = RuleBasedExtractor::new("r", g.clone());
            let single = once.key_entities(&doc(&body));
            let double = once.key_entities(&doc(&format!("{body}\n\n{body}")));
            prop_assert_eq!(single.disease.as_ref().map(|k| &k.value), double.disease.as_ref().map(|k| &k.value));
            prop_assert_eq!(single.country.as_ref().map(|k| &k.value), double.country.as_ref().map(|k| &k.value));
            prop_assert_eq!(single.date.as_ref().map(|k| k.value), double.date.as_ref().map(|k| k.value));
            prop_assert_eq!(single.count.as_ref().map(|k| k.value.value), double.count.as_ref().map(|k| k.value.value));
            for (a, b) in [(&single.disease, &double.disease), (&single.country, &double.country)] {
                if let (Some(a), Some(b)) = (a, b) {
                    prop_assert_eq!(2 * a.mentions, b.mentions);
                }
            }
        }

        #[test]
        fn filter_ignores_span_order(body in body_strategy(), seed in any::<u64>()) {
            let d = doc(&body);
            let spans = annotate_entities(&d, &Gazetteer::bundled());
            let counts = annotate_counts(&d);
            let dates = annotate_dates(&d);
            let base = filter_key_entities(&spans, &counts, &dates);
            let mut shuffled = spans.clone();
            let n = shuffled.len();
            for i in (1..n).rev() {
                shuffled.swap(i, (seed as usize ^ i.wrapping_mul(2654435761)) % (i + 1));
            }
            let mut rc = counts.clone();
            rc.reverse();
            let mut rd = dates.clone();
            rd.reverse();
            prop_assert_eq!(base, filter_key_entities(&shuffled, &rc, &rd));
        }
    }
}
