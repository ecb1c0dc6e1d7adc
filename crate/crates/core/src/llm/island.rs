use indexmap::IndexMap;

use super::ABSENT_MARKER;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no JSON object found in model output")]
pub struct NoIsland;

/// End (exclusive byte index) of the brace-balanced region opening at
/// `start`, ignoring braces inside JSON strings.
fn balanced_end(text: &str, start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, b) in text.bytes().enumerate().skip(start) {
        if in_string {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

fn value_text(value: serde_json::Value) -> String {
    match value {
        serde_json::Value::String(s) => s,
        serde_json::Value::Null => ABSENT_MARKER.to_string(),
        other => other.to_string(),
    }
}

/// Finds the first balanced `{...}` region of `text` that parses as a JSON
/// object and returns its entries in order, keys lowercased. String values
/// are returned as-is, `null` as `"None"`, anything else as compact JSON.
pub fn extract_json_island(text: &str) -> Result<IndexMap<String, String>, NoIsland> {
    for (start, _) in text.match_indices('{') {
        let Some(end) = balanced_end(text, start) else { continue };
        if let Ok(object) = serde_json::from_str::<IndexMap<String, serde_json::Value>>(&text[start..end]) {
            return Ok(object.into_iter().map(|(k, v)| (k.to_lowercase(), value_text(v))).collect());
        }
    }
    Err(NoIsland)
}
