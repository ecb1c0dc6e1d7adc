use epix_core::annotator::Gazetteer;
use epix_core::corpus::GoldAnnotation;
use epix_core::ensemble::{ExtractionRecord, Extracted};
use epix_core::eval::{accumulate_confusion, normalize_gold, ConfusionCounts, MatchMode};
use epix_core::normalize::{normalize_country, normalize_disease, CaseCount, CountAttribute, CountryTable, Field, IsoDate};

type Row = [Option<&'static str>; 4];

/// (document, gold [disease, country, date, count], prediction [same]).
/// A `~` prefix on a predicted count marks it approximate.
const FIXTURE: [(&str, Row, Row); 12] = [
    ("d01", [Some("Nipah virus"), Some("India"), Some("2018-05-31"), Some("15")], [Some("Nipah"), Some("IND"), Some("2018-05-31"), Some("15")]),
    ("d02", [Some("Ebola virus disease"), Some("Democratic Republic of the Congo"), Some("2018-05-08"), Some("2")], [Some("EVD"), Some("DRC"), Some("2018-05-10"), Some("21")]),
    ("d03", [Some("Cholera"), Some("Yemen"), None, Some("332658")], [Some("cholera"), None, Some("2017-07-13"), None]),
    ("d04", [None, None, None, None], [None, None, None, None]),
    ("d05", [None, None, None, None], [Some("Zika"), Some("Brazil"), Some("2016-02-01"), Some("9")]),
    ("d06", [Some("Measles"), Some("Ukraine"), Some("2019-02-21"), Some("21830")], [None, None, None, None]),
    ("d07", [Some("Dengue"), Some("Bangladesh"), Some("2019-08-03"), Some("1712")], [Some("Chikungunya"), Some("India"), Some("2019-08-03"), Some("~1712")]),
    ("d08", [Some("Plague"), Some("Madagascar"), Some("2017-10-10"), Some("387")], [Some("pneumonic plague"), Some("Madagascar"), Some("2017-08-01"), Some("387")]),
    ("d09", [Some("MERS"), Some("Saudi Arabia"), Some("2019-02-28"), None], [Some("Middle East respiratory syndrome"), Some("KSA"), None, Some("68")]),
    ("d10", [Some("Yellow fever"), Some("Brazil"), None, Some("13")], [None, Some("Brazil"), None, Some("~13")]),
    ("d11", [None, Some("China"), Some("2017-03-05"), Some("2")], [Some("H7N9"), Some("China"), Some("2017-03-05"), Some("3")]),
    ("d12", [Some("Zika"), None, Some("2015-10-05"), None], [Some("Zika virus"), Some("Colombia"), Some("2015-10-16"), None]),
];

fn gold(id: &str, row: &Row) -> GoldAnnotation {
    GoldAnnotation {
        document_id: id.into(),
        disease: row[0].map(Into::into),
        country: row[1].map(Into::into),
        date: row[2].map(|d| d.parse().unwrap()),
        count: row[3].map(|c| c.parse().unwrap()),
    }
}

fn prediction(id: &str, row: &Row, gazetteer: &Gazetteer) -> ExtractionRecord {
    let mut r = ExtractionRecord::empty(id, "fixture");
    r.disease = row[0].map(|s| Extracted { raw: s.into(), value: normalize_disease(s, gazetteer).expect(s) });
    r.country = row[1].map(|s| Extracted { raw: s.into(), value: normalize_country(s).expect(s) });
    r.date = row[2].map(|s| Extracted { raw: s.into(), value: s.parse::<IsoDate>().unwrap() });
    r.count = row[3].map(|s| {
        let approximate = s.starts_with('~');
        let value = s.trim_start_matches('~').parse().unwrap();
        Extracted { raw: s.into(), value: CaseCount { value, approximate, attribute: CountAttribute::Case } }
    });
    r
}

/// Canonical comparison key of a raw cell, derived without the eval module.
fn key(field: Field, raw: &str, gazetteer: &Gazetteer) -> String {
    match field {
        Field::Disease => normalize_disease(raw, gazetteer).unwrap().canonical_id().to_string(),
        Field::Country => normalize_country(raw).unwrap().alpha3().to_string(),
        Field::Date => raw.to_string(),
        Field::Count => raw.trim_start_matches('~').to_string(),
    }
}

/// Enumerates every (gold, prediction) pair, scoring those about the same
/// document.
fn oracle(field: Field, mode: MatchMode, gazetteer: &Gazetteer) -> ConfusionCounts {
    let col = Field::ALL.iter().position(|&f| f == field).unwrap();
    let mut c = ConfusionCounts::default();
    for (gid, grow, _) in &FIXTURE {
        for (pid, _, prow) in &FIXTURE {
            if gid != pid {
                continue;
            }
            match (grow[col], prow[col]) {
                (None, None) => c.tn += 1,
                (None, Some(_)) => c.fp += 1,
                (Some(_), None) => c.fn_ += 1,
                (Some(g), Some(p)) => {
                    let correct = mode == MatchMode::DetectionOnly || key(field, g, gazetteer) == key(field, p, gazetteer);
                    if correct {
                        c.tp += 1
                    } else {
                        c.fp += 1
                    }
                }
            }
        }
    }
    c
}

pub fn check() -> Result<String, String> {
    let gazetteer = Gazetteer::bundled();
    let golds: Vec<GoldAnnotation> = FIXTURE.iter().map(|(id, g, _)| gold(id, g)).collect();
    let golds = normalize_gold(&golds, &gazetteer, &CountryTable::bundled()).map_err(|e| e.to_string())?;
    let preds: Vec<ExtractionRecord> = FIXTURE.iter().map(|(id, _, p)| prediction(id, p, &gazetteer)).collect();
    let mut cells = 0;
    for mode in [MatchMode::StrictValue, MatchMode::DetectionOnly] {
        for field in Field::ALL {
            let got = accumulate_confusion(&golds, &preds, field, mode).map_err(|e| e.to_string())?;
            let want = oracle(field, mode, &gazetteer);
            if got != want {
                return Err(format!("{} {field}: got {got:?}, oracle {want:?}", mode.as_str()));
            }
            if got.total() != 12 {
                return Err(format!("{} {field}: total {}", mode.as_str(), got.total()));
            }
            cells += 1;
        }
    }
    Ok(format!("{cells} (mode, field) cells agree, 12 samples each"))
}
