use std::collections::BTreeMap;
use std::fs;
use std::io::ErrorKind;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

const LIMIT: Duration = Duration::from_secs(10);
const DEAD_ENDPOINT: &str = "http://127.0.0.1:9/";

fn copy_dir(from: &Path, to: &Path) -> std::io::Result<()> {
    fs::create_dir_all(to)?;
    for entry in fs::read_dir(from)? {
        let entry = entry?;
        let target = to.join(entry.file_name());
        if entry.file_type()?.is_dir() {
            copy_dir(&entry.path(), &target)?;
        } else {
            fs::copy(entry.path(), target)?;
        }
    }
    Ok(())
}

/// Every file below `dir`, keyed by relative path.
fn snapshot(dir: &Path) -> std::io::Result<BTreeMap<PathBuf, Vec<u8>>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path)?);
            }
        }
    }
    Ok(out)
}

fn without_timestamp(bytes: &[u8]) -> Result<serde_json::Value, String> {
    let mut v: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| e.to_string())?;
    let meta = v.get_mut("metadata").and_then(|m| m.as_object_mut()).ok_or("report.json lacks metadata")?;
    if meta.remove("timestamp").is_none_or(|t| t.is_null()) {
        return Err("report.json carries no timestamp".into());
    }
    Ok(v)
}

fn epix(config: &Path, args: &[&str]) -> Result<(), String> {
    let mut argv = vec!["epix".to_string(), "--config".into(), config.display().to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    match epix_cli::run(&argv) {
        0 => Ok(()),
        code => Err(format!("`epix {}` exited {code}", args.join(" "))),
    }
}

/// Runs the whole pipeline in a fresh copy of the fixture and returns the
/// output tree.
fn pipeline(fixture: &Path, endpoint: &str) -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path();
    copy_dir(fixture, root).map_err(|e| e.to_string())?;
    let config = root.join("epix.toml");
    let text = fs::read_to_string(&config).map_err(|e| e.to_string())?;
    if !text.contains(DEAD_ENDPOINT) {
        return Err("fixture config has no endpoint to redirect".into());
    }
    fs::write(&config, text.replace(DEAD_ENDPOINT, endpoint)).map_err(|e| e.to_string())?;

    let raw = root.join("raw");
    epix(&config, &["ingest", "--source", "don", &raw.join("don").display().to_string()])?;
    epix(&config, &["ingest", "--source", "promed", &raw.join("promed").display().to_string(), "--append"])?;
    epix(&config, &["extract"])?;
    epix(&config, &["evaluate"])?;

    let mut tree = snapshot(&root.join("out")).map_err(|e| e.to_string())?;
    tree.insert("corpus.jsonl".into(), fs::read(root.join("corpus.jsonl")).map_err(|e| e.to_string())?);
    Ok(tree)
}

pub fn check() -> Result<String, String> {
    let started = Instant::now();
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/e2e");
    // every model points here; any connection attempt shows up as a pending accept
    let sentinel = TcpListener::bind("127.0.0.1:0").map_err(|e| e.to_string())?;
    sentinel.set_nonblocking(true).map_err(|e| e.to_string())?;
    let endpoint = format!("http://{}/", sentinel.local_addr().map_err(|e| e.to_string())?);

    let first = pipeline(&fixture, &endpoint)?;
    let second = pipeline(&fixture, &endpoint)?;

    match sentinel.accept() {
        Err(e) if e.kind() == ErrorKind::WouldBlock => {}
        Ok((_, peer)) => return Err(format!("network connection from {peer}")),
        Err(e) => return Err(e.to_string()),
    }

    let predictions = first.keys().filter(|p| p.starts_with("predictions")).count();
    if predictions != 5 {
        return Err(format!("expected 5 prediction files, found {predictions}"));
    }
    let docs = first.get(Path::new("predictions/mock-ensemble.jsonl")).map(|b| b.split(|&c| c == b'\n').filter(|l| !l.is_empty()).count());
    if docs != Some(10) {
        return Err(format!("ensemble predicted {docs:?} documents, expected 10"));
    }
    if first.keys().ne(second.keys()) {
        return Err("the two runs wrote different files".into());
    }
    for (path, a) in &first {
        let b = &second[path];
        let same = if path == Path::new("report.json") { without_timestamp(a)? == without_timestamp(b)? } else { a == b };
        if !same {
            return Err(format!("{} differs between runs", path.display()));
        }
    }

    let elapsed = started.elapsed();
    if elapsed > LIMIT {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("{} files identical across 2 runs, 0 connections", first.len()))
}
