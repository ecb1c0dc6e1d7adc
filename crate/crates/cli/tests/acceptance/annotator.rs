use epix_core::annotator::{annotate_entities, extract_rule_based, EntityClass, Gazetteer, KeyEntity, RuleBasedExtractor};
use epix_core::corpus::{Document, Source};
use epix_core::normalize::CountAttribute;

/// Expected winner: (value, mentions, surface of first mention).
type Want = Option<(&'static str, usize, &'static str)>;

struct Snippet {
    body: &'static str,
    disease: Want,
    country: Want,
    date: Want,
    count: Want,
    count_attribute: Option<CountAttribute>,
}

const SNIPPETS: [Snippet; 8] = [
    Snippet {
        body: "Nipah virus infection was confirmed in Kerala, India on 31 May 2018. Officials reported 15 cases, and the Nipah cluster is under investigation.",
        disease: Some(("nipah-virus", 2, "Nipah virus infection")),
        country: Some(("IND", 1, "India")),
        date: Some(("2018-05-31", 1, "31 May 2018")),
        count: Some(("15", 1, "15 cases")),
        count_attribute: Some(CountAttribute::Case),
    },
    // two-way frequency ties: the earlier first mention wins
    Snippet {
        body: "Dengue was reported in Brazil. Zika was reported in Peru. Later, Zika and dengue spread beyond Peru and Brazil.",
        disease: Some(("dengue", 2, "Dengue")),
        country: Some(("BRA", 2, "Brazil")),
        date: None,
        count: None,
        count_attribute: None,
    },
    // the long name swallows the short one it contains
    Snippet {
        body: "An outbreak of Ebola virus disease was declared in Guinea. Ebola has caused 3 deaths.",
        disease: Some(("ebola-virus-disease", 2, "Ebola virus disease")),
        country: Some(("GIN", 1, "Guinea")),
        date: None,
        count: Some(("3", 1, "3 deaths")),
        count_attribute: Some(CountAttribute::Death),
    },
    Snippet {
        body: "Measles is spreading in Romania. Rubella was also detected. Measles vaccination and measles surveillance continue.",
        disease: Some(("measles", 3, "Measles")),
        country: Some(("ROU", 1, "Romania")),
        date: None,
        count: None,
        count_attribute: None,
    },
    Snippet {
        body: "Cholera update: 12 cases on 3 March 2019 in Haiti, then 40 cases on 10 March 2019. By 10 March 2019 the total stood at 40 cases.",
        disease: Some(("cholera", 1, "Cholera")),
        country: Some(("HTI", 1, "Haiti")),
        date: Some(("2019-03-10", 2, "10 March 2019")),
        count: Some(("40", 2, "40 cases")),
        count_attribute: Some(CountAttribute::Case),
    },
    Snippet {
        body: "MERS-CoV was confirmed in Saudi Arabia. Middle East respiratory syndrome remains a concern in KSA, with 4 new cases of MERS this week.",
        disease: Some(("mers", 3, "MERS-CoV")),
        country: Some(("SAU", 2, "Saudi Arabia")),
        date: None,
        count: Some(("4", 1, "4 new cases")),
        count_attribute: Some(CountAttribute::Case),
    },
    Snippet {
        body: "No outbreak news today; markets were calm and the weather was mild.",
        disease: None,
        country: None,
        date: None,
        count: None,
        count_attribute: None,
    },
    // a country tie across a line break, and a spelled-out count
    Snippet {
        body: "Thirteen deaths from yellow fever were reported in Brazil.\nAngola",
        disease: Some(("yellow-fever", 1, "yellow fever")),
        country: Some(("BRA", 1, "Brazil")),
        date: None,
        count: Some(("13", 1, "Thirteen deaths")),
        count_attribute: Some(CountAttribute::Death),
    },
];

fn compare<T: ToString>(what: &str, got: Option<&KeyEntity<T>>, want: Want) -> Result<(), String> {
    let got = got.map(|k| (k.value.to_string(), k.mentions, k.surface.clone()));
    let want = want.map(|(v, n, s)| (v.to_string(), n, s.to_string()));
    if got == want {
        Ok(())
    } else {
        Err(format!("{what}: got {got:?}, want {want:?}"))
    }
}

fn check_one(i: usize, s: &Snippet, extractor: &RuleBasedExtractor, gaz: &Gazetteer) -> Result<(), String> {
    let doc = Document::new(format!("snippet-{}", i + 1), Source::Other, "", s.body);
    let keys = extractor.key_entities(&doc);
    compare("disease", keys.disease.as_ref(), s.disease)?;
    compare("country", keys.country.as_ref(), s.country)?;
    compare("date", keys.date.as_ref(), s.date)?;
    let count = keys.count.as_ref().map(|k| KeyEntity {
        value: k.value.value,
        mentions: k.mentions,
        first_offset: k.first_offset,
        surface: k.surface.clone(),
    });
    compare("count", count.as_ref(), s.count)?;
    let attribute = keys.count.as_ref().map(|k| k.value.attribute);
    if attribute != s.count_attribute {
        return Err(format!("count attribute: got {attribute:?}, want {:?}", s.count_attribute));
    }

    // the record view must carry the same winners
    let record = extract_rule_based(&doc, gaz);
    let pairs = [
        (record.disease.map(|e| (e.value.canonical_id().to_string(), e.raw)), s.disease),
        (record.country.map(|e| (e.value.alpha3().to_string(), e.raw)), s.country),
        (record.date.map(|e| (e.value.to_string(), e.raw)), s.date),
        (record.count.map(|e| (e.value.value.to_string(), e.raw)), s.count),
    ];
    for (got, want) in pairs {
        let want = want.map(|(v, _, surface)| (v.to_string(), surface.to_string()));
        if got != want {
            return Err(format!("record: got {got:?}, want {want:?}"));
        }
    }
    Ok(())
}

pub fn check() -> Result<String, String> {
    let gaz = Gazetteer::bundled();
    let extractor = RuleBasedExtractor::new("rule-based", gaz.clone());
    for (i, s) in SNIPPETS.iter().enumerate() {
        check_one(i, s, &extractor, &gaz).map_err(|e| format!("snippet {}: {e}", i + 1))?;
    }

    // no disease span may overlap the one that won the Ebola overlap
    let doc = Document::new("overlap", Source::Other, "", SNIPPETS[2].body);
    let diseases: Vec<_> =
        annotate_entities(&doc, &gaz).into_iter().filter(|s| s.class == EntityClass::Disease).collect();
    let surfaces: Vec<&str> = diseases.iter().map(|s| s.surface.as_str()).collect();
    if surfaces != ["Ebola virus disease", "Ebola"] || diseases[0].end > diseases[1].start {
        return Err(format!("overlap spans: {surfaces:?}"));
    }
    Ok(format!("{} snippets, frequency ties and nested names resolved", SNIPPETS.len()))
}
