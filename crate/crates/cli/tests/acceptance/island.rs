use epix_core::llm::{extract_json_island, NoIsland};
use indexmap::IndexMap;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

const CASES: u32 = 1000;

fn runner() -> TestRunner {
    TestRunner::new(Config { cases: CASES, failure_persistence: None, ..Config::default() })
}

fn flat_map() -> impl Strategy<Value = IndexMap<String, String>> {
    prop::collection::vec(("[a-z][a-z_]{0,9}", any::<String>()), 0..7).prop_map(|pairs| pairs.into_iter().collect())
}

pub fn check() -> Result<String, String> {
    let prose = "[^{}]{0,60}";
    runner()
        .run(&(prose, flat_map(), any::<bool>(), prose), |(before, map, pretty, after)| {
            let json = if pretty { serde_json::to_string_pretty(&map) } else { serde_json::to_string(&map) }.unwrap();
            let text = format!("{before}{json}{after}");
            let got = extract_json_island(&text);
            prop_assert_eq!(got.as_ref().ok(), Some(&map), "{}", text);
            let keys: Vec<&String> = got.as_ref().unwrap().keys().collect();
            prop_assert_eq!(keys, map.keys().collect::<Vec<_>>());
            Ok(())
        })
        .map_err(|e| format!("round trip: {e}"))?;

    runner()
        .run(&"[^{}]{0,200}", |text| {
            prop_assert_eq!(extract_json_island(&text), Err(NoIsland));
            Ok(())
        })
        .map_err(|e| format!("brace-free input: {e}"))?;
    Ok(format!("{CASES} maps recovered from prose, {CASES} brace-free inputs rejected"))
}
