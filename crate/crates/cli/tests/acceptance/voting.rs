use epix_core::annotator::Gazetteer;
use epix_core::ensemble::{EnsembleConfig, ExtractionRecord, TieBreak, VotePolicy};
use epix_core::normalize::{normalize_country, normalize_disease, values_match, CaseCount, CountAttribute, Field, FieldValue, IsoDate};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

const CASES: u32 = 1000;

/// Small per-field pools. Several entries are different spellings of one
/// value so that matching is not plain equality.
fn pools() -> Vec<(Field, Vec<FieldValue>)> {
    let gaz = Gazetteer::bundled();
    let disease = ["Ebola", "EVD", "Ebola virus disease", "Zika", "ZIKV", "cholera", "MERS"]
        .iter()
        .map(|s| FieldValue::Disease(normalize_disease(s, &gaz).expect(s)))
        .collect();
    let country = ["India", "IND", "DRC", "Democratic Republic of the Congo", "Brazil", "usa"]
        .iter()
        .map(|s| FieldValue::Country(normalize_country(s).expect(s)))
        .collect();
    let date = ["2018-05-31", "2019-03-04", "2020-02-29", "2017-01-01"]
        .iter()
        .map(|s| FieldValue::Date(s.parse::<IsoDate>().unwrap()))
        .collect();
    let count = vec![
        FieldValue::Count(CaseCount::new(15)),
        FieldValue::Count(CaseCount { value: 15, approximate: true, attribute: CountAttribute::Case }),
        FieldValue::Count(CaseCount { value: 3, approximate: false, attribute: CountAttribute::Death }),
        FieldValue::Count(CaseCount::new(102)),
        FieldValue::Count(CaseCount::new(0)),
    ];
    vec![(Field::Disease, disease), (Field::Country, country), (Field::Date, date), (Field::Count, count)]
}

fn same(field: Field, a: &Option<FieldValue>, b: &Option<FieldValue>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => values_match(field, x, y),
        _ => false,
    }
}

fn config(n: usize, min_agreement: usize, tie_break: TieBreak, priority: Vec<usize>) -> EnsembleConfig {
    let members: Vec<String> = (0..n).map(|i| format!("m{i}")).collect();
    let priority = priority.iter().map(|&i| members[i].clone()).collect();
    EnsembleConfig::new("vote", members, VotePolicy { min_agreement, tie_break, priority }).unwrap()
}

fn tie_break() -> impl Strategy<Value = TieBreak> {
    prop_oneof![Just(TieBreak::PriorityOrder), Just(TieBreak::Abstain)]
}

/// (field index, member count, min_agreement, tie break, priority permutation)
fn setup(max_members: usize) -> impl Strategy<Value = (usize, usize, usize, TieBreak, Vec<usize>)> {
    (0..4usize, 2..=max_members).prop_flat_map(|(f, n)| {
        (Just(f), Just(n), 1..=n, tie_break(), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
    })
}

fn pick(pool: &[FieldValue], i: Option<usize>) -> Option<FieldValue> {
    i.map(|i| pool[i % pool.len()].clone())
}

fn run<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config { cases: CASES, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

pub fn check() -> Result<String, String> {
    let pools = pools();

    run("unanimity", (setup(5), proptest::option::of(0..8usize), prop::collection::vec(0..8usize, 5)), |((f, n, k, tb, pr), v, variants)| {
        let (field, pool) = &pools[f];
        // each member may spell the shared value differently
        let base = pick(pool, v);
        let spellings: Vec<&FieldValue> =
            base.iter().flat_map(|b| pool.iter().filter(move |p| values_match(*field, p, b))).collect();
        let cands: Vec<Option<FieldValue>> =
            (0..n).map(|i| base.as_ref().map(|_| spellings[variants[i] % spellings.len()].clone())).collect();
        let got = config(n, k, tb, pr).vote_field(*field, &cands).unwrap();
        prop_assert!(same(*field, &got, &base), "{cands:?} -> {got:?}");
        Ok(())
    })?;

    run("copies", (setup(5), prop::collection::vec(proptest::option::of(0..8usize), 4)), |((_, n, k, tb, pr), picks)| {
        let mut original = ExtractionRecord::empty("doc", "source");
        for (i, (field, pool)) in pools.iter().enumerate() {
            original.set(*field, pick(pool, picks[i]).map(|v| (format!("raw {v}"), v)));
        }
        let cfg = config(n, k, tb, pr);
        let copies: Vec<ExtractionRecord> = cfg
            .members
            .iter()
            .map(|m| ExtractionRecord { extractor_id: m.clone(), ..original.clone() })
            .collect();
        let combined = cfg.combine(&copies).unwrap();
        for (field, _) in &pools {
            prop_assert_eq!(combined.value(*field), original.value(*field));
            prop_assert_eq!(combined.raw(*field), original.raw(*field));
        }
        Ok(())
    })?;

    let abstain = (0..4usize, 2..=5usize)
        .prop_flat_map(|(f, n)| (Just(f), Just(n), 1..=n, prop::collection::vec(proptest::option::of(0..8usize), n)))
        .prop_flat_map(|(f, n, k, cands)| (Just(f), Just(n), Just(k), Just(cands.clone()), Just(cands).prop_shuffle()));
    run("abstain permutation", abstain, |(f, n, k, order, shuffled)| {
        let (field, pool) = &pools[f];
        let cfg = config(n, k, TieBreak::Abstain, Vec::new());
        let a: Vec<_> = order.iter().map(|&i| pick(pool, i)).collect();
        let b: Vec<_> = shuffled.iter().map(|&i| pick(pool, i)).collect();
        let (ra, rb) = (cfg.vote_field(*field, &a).unwrap(), cfg.vote_field(*field, &b).unwrap());
        prop_assert!(same(*field, &ra, &rb), "{a:?} -> {ra:?} but {b:?} -> {rb:?}");
        Ok(())
    })?;

    let majority = (0..4usize, proptest::option::of(0..8usize), proptest::option::of(0..8usize), 0..3usize, tie_break(), Just(vec![0usize, 1, 2]).prop_shuffle());
    run("2-of-3 majority", majority, |(f, agreed, other, odd_slot, tb, pr)| {
        let (field, pool) = &pools[f];
        let agreed = pick(pool, agreed);
        let other = pick(pool, other);
        let mut cands = vec![agreed.clone(), agreed.clone(), agreed.clone()];
        cands[odd_slot] = other;
        let got = config(3, 2, tb, pr).vote_field(*field, &cands).unwrap();
        prop_assert!(same(*field, &got, &agreed), "{cands:?} -> {got:?}");
        Ok(())
    })?;

    Ok(format!("4 properties x {CASES} cases"))
}
