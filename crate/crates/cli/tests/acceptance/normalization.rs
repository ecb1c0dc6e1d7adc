use chrono::{Datelike, NaiveDate};
use epix_core::annotator::Gazetteer;
use epix_core::normalize::{
    normalize_country, normalize_date, normalize_disease, parse_count_expression, values_match, CaseCount,
    CountAttribute, Field, FieldValue, IsoDate,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

const DATE_CASES: u32 = 1000;
const PROPERTY_CASES: u32 = 1000;

fn expect<T: PartialEq + std::fmt::Debug>(what: &str, got: T, want: T) -> Result<(), String> {
    if got == want {
        Ok(())
    } else {
        Err(format!("{what}: got {got:?}, want {want:?}"))
    }
}

fn date(s: &str) -> IsoDate {
    s.parse().unwrap()
}

fn fixed_examples() -> Result<usize, String> {
    let gaz = Gazetteer::bundled();
    let mut n = 0;
    let mut tick = |r: Result<(), String>| {
        n += 1;
        r
    };

    tick(expect("31 May 2018", normalize_date("31 May 2018"), Some(date("2018-05-31"))))?;
    tick(expect("May 19-21, 2018", normalize_date("May 19-21, 2018"), Some(date("2018-05-19"))))?;
    tick(expect("next Tuesday", normalize_date("next Tuesday"), None))?;
    tick(expect("31 February 2019", normalize_date("31 February 2019"), None))?;

    tick(expect("India", normalize_country("India").map(|c| c.alpha3().to_string()), Some("IND".into())))?;
    let usa = normalize_country("usa").ok_or("usa did not resolve")?;
    tick(expect("usa", (usa.alpha3(), usa.display_name()), ("USA", "United States of America")))?;
    tick(expect("Atlantis", normalize_country("Atlantis"), None))?;

    let nipah = normalize_disease("NIPAH Virus", &gaz).ok_or("NIPAH Virus did not resolve")?;
    tick(expect("NIPAH Virus", nipah.canonical_id(), "nipah-virus"))?;
    let evd = normalize_disease("EVD", &gaz).ok_or("EVD did not resolve")?;
    tick(expect("EVD", evd.display_name(), "Ebola virus disease"))?;
    tick(expect("common cold", normalize_disease("common cold", &gaz), None))?;

    let cc = |value, approximate, attribute| Some(CaseCount { value, approximate, attribute });
    tick(expect("about 15 cases", parse_count_expression("about 15 cases"), cc(15, true, CountAttribute::Case)))?;
    tick(expect("thirteen deaths", parse_count_expression("thirteen deaths"), cc(13, false, CountAttribute::Death)))?;
    tick(expect("no numbers here", parse_count_expression("no numbers here"), None))?;

    let c = |s: &str| FieldValue::Country(normalize_country(s).unwrap());
    let d = |s: &str| FieldValue::Disease(normalize_disease(s, &gaz).unwrap());
    tick(expect("IND vs India", values_match(Field::Country, &c("IND"), &c("India")), true))?;
    tick(expect("Ebola vs EVD", values_match(Field::Disease, &d("Ebola"), &d("EVD")), true))?;
    tick(expect("Zika vs Ebola", values_match(Field::Disease, &d("Zika"), &d("Ebola")), false))?;
    let approx = FieldValue::Count(cc(15, true, CountAttribute::Case).unwrap());
    tick(expect("~15 vs 15", values_match(Field::Count, &approx, &FieldValue::Count(CaseCount::new(15))), true))?;
    tick(expect("15 vs 16", values_match(Field::Count, &approx, &FieldValue::Count(CaseCount::new(16))), false))?;
    let day = FieldValue::Date(date("2018-05-31"));
    tick(expect("date vs count field", values_match(Field::Count, &day, &approx), false))?;
    Ok(n)
}

/// Renders a date in one of the accepted surface forms, inside a sentence.
fn render(d: NaiveDate, style: usize) -> String {
    let text = match style {
        0 => d.format("%Y-%m-%d").to_string(),
        1 => d.format("%-d %B %Y").to_string(),
        2 => d.format("%B %-d, %Y").to_string(),
        3 => d.format("%d/%m/%Y").to_string(),
        4 => d.format("%-d %b %Y").to_string(),
        5 => d.format("%b. %-d %Y").to_string(),
        6 => d.format("%-d of %B, %Y").to_string(),
        // a range resolves to its first day
        _ => format!("{}–{} {}", d.day(), d.day() + 1, d.format("%B %Y")),
    };
    format!("The ministry reported it on {text} in a statement.")
}

fn date_round_trip() -> Result<(), String> {
    let lo = NaiveDate::from_ymd_opt(1950, 1, 1).unwrap().num_days_from_ce();
    let hi = NaiveDate::from_ymd_opt(2049, 12, 31).unwrap().num_days_from_ce();
    let mut runner = TestRunner::new(Config { cases: DATE_CASES, failure_persistence: None, ..Config::default() });
    runner
        .run(&(lo..=hi, 0..8usize), |(days, style)| {
            let d = NaiveDate::from_num_days_from_ce_opt(days).unwrap();
            let iso = IsoDate::from_ymd(d.year(), d.month(), d.day()).unwrap();
            prop_assert_eq!(iso.to_string().parse::<IsoDate>().unwrap(), iso);
            let sentence = render(d, style);
            prop_assert_eq!(normalize_date(&sentence), Some(iso), "{}", sentence);
            Ok(())
        })
        .map_err(|e| format!("date round trip: {e}"))
}

fn value_pool() -> Vec<FieldValue> {
    let gaz = Gazetteer::bundled();
    let mut pool: Vec<FieldValue> = ["Ebola", "EVD", "Zika", "ZIKV", "cholera", "Nipah", "measles"]
        .iter()
        .map(|s| FieldValue::Disease(normalize_disease(s, &gaz).unwrap()))
        .collect();
    pool.extend(["India", "IND", "DRC", "COD", "Brazil"].iter().map(|s| FieldValue::Country(normalize_country(s).unwrap())));
    pool.extend(["2018-05-31", "2018-05-30", "2020-02-29"].iter().map(|s| FieldValue::Date(date(s))));
    pool.extend([
        FieldValue::Count(CaseCount::new(15)),
        FieldValue::Count(CaseCount { value: 15, approximate: true, attribute: CountAttribute::Death }),
        FieldValue::Count(CaseCount::new(16)),
    ]);
    pool
}

fn match_properties() -> Result<(), String> {
    let pool = value_pool();
    let n = pool.len();
    let fields = prop::sample::select(Field::ALL.to_vec());
    let mut runner = TestRunner::new(Config { cases: PROPERTY_CASES, failure_persistence: None, ..Config::default() });
    runner
        .run(&(0..n, 0..n, fields), |(i, j, field)| {
            let (a, b) = (&pool[i], &pool[j]);
            if a.field() == field {
                prop_assert!(values_match(field, a, a), "{} not reflexive", a);
            }
            prop_assert_eq!(values_match(field, a, b), values_match(field, b, a), "{} vs {}", a, b);
            Ok(())
        })
        .map_err(|e| format!("values_match: {e}"))
}

pub fn check() -> Result<String, String> {
    let examples = fixed_examples()?;
    date_round_trip()?;
    match_properties()?;
    Ok(format!("{examples} examples, {DATE_CASES} dates, {PROPERTY_CASES} match cases"))
}
