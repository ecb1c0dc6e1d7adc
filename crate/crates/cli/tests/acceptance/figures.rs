use std::time::{Duration, Instant};

use epix_core::eval::f1;

const SCORES: &str = include_str!("published_scores.csv");
const TOLERANCE: f64 = 0.002;

pub fn check() -> Result<String, String> {
    let start = Instant::now();
    let mut rows = 0;
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for line in SCORES.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split(',').collect();
        let [figure, field, extractor, p, r, published] = cols[..] else {
            return Err(format!("malformed row `{line}`"));
        };
        let num = |s: &str| s.parse::<f64>().map_err(|e| format!("`{s}`: {e}"));
        let (p, r, published) = (num(p)?, num(r)?, num(published)?);
        let diff = (f1(p, r) - published).abs();
        worst = worst.max(diff);
        if diff > TOLERANCE {
            bad.push(format!("fig {figure} {field} {extractor}: f1({p}, {r}) = {:.4} vs {published}", f1(p, r)));
        }
        rows += 1;
    }
    let elapsed = start.elapsed();
    if rows != 40 {
        return Err(format!("expected 40 rows, found {rows}"));
    }
    if !bad.is_empty() {
        return Err(bad.join("; "));
    }
    if elapsed >= Duration::from_secs(1) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("{rows} rows, max |diff| {worst:.4}"))
}
