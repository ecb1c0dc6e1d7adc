//! Line-delimited JSON files: one record per line, UTF-8.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}, line {line}: {message}")]
    Schema { path: String, line: usize, message: String },
}

impl JsonlError {
    pub fn schema(path: &Path, line: usize, message: impl Into<String>) -> Self {
        JsonlError::Schema { path: path.display().to_string(), line, message: message.into() }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        JsonlError::Io { path: path.display().to_string(), source }
    }
}

/// Reads every non-blank line of `path` as a `T`, passing each through
/// `check` (which receives the 1-based line number) before accepting it.
pub fn read_with<T, F>(path: &Path, mut check: F) -> Result<Vec<T>, JsonlError>
where
    T: DeserializeOwned,
    F: FnMut(&T, usize) -> Result<(), String>,
{
    let file = File::open(path).map_err(|e| JsonlError::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| JsonlError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item: T = serde_json::from_str(&line).map_err(|e| JsonlError::schema(path, line_no, e.to_string()))?;
        check(&item, line_no).map_err(|m| JsonlError::schema(path, line_no, m))?;
        out.push(item);
    }
    Ok(out)
}

pub fn read<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, JsonlError> {
    read_with(path, |_, _| Ok(()))
}

/// Writes one compact JSON object per line, replacing any existing file.
pub fn write<'a, T, I>(path: &Path, items: I) -> Result<(), JsonlError>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let file = File::create(path).map_err(|e| JsonlError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| JsonlError::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| JsonlError::io(path, e))?;
    }
    w.flush().map_err(|e| JsonlError::io(path, e))
}
