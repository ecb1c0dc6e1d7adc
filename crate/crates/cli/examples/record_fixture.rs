//! Regenerates `fixtures/e2e/cache` by running the fixture config in RECORD
//! mode against a local stub that serves the canned answers in
//! `fixtures/e2e/answers.json`.
//!
//!     cargo run -p epix-cli --example record_fixture

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use epix_core::corpus::load_corpus;
use epix_core::llm::ChatRequest;

type Answers = HashMap<String, HashMap<String, String>>;

fn read_request(stream: &TcpStream) -> Result<Vec<u8>> {
    let mut reader = BufReader::new(stream);
    let mut length = 0;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            bail!("connection closed mid-request");
        }
        if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
            length = v.trim().parse()?;
        }
        if line == "\r\n" {
            break;
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body)?;
    Ok(body)
}

fn answer(body: &[u8], answers: &Answers, bodies: &[(String, String)]) -> Result<String> {
    let request: ChatRequest = serde_json::from_slice(body)?;
    let query = request.messages.last().ok_or_else(|| anyhow!("no messages"))?;
    let text = query.content.strip_prefix("Report:\n").unwrap_or(&query.content);
    let (doc_id, _) = bodies
        .iter()
        .find(|(_, b)| b.starts_with(text))
        .ok_or_else(|| anyhow!("query matches no corpus document"))?;
    let reply = answers
        .get(&request.model)
        .and_then(|m| m.get(doc_id))
        .ok_or_else(|| anyhow!("no canned answer for {} on {doc_id}", request.model))?;
    Ok(serde_json::json!({
        "id": format!("fixture-{doc_id}"),
        "object": "chat.completion",
        "model": request.model,
        "choices": [{"index": 0, "message": {"role": "assistant", "content": reply}, "finish_reason": "stop"}]
    })
    .to_string())
}

fn serve(listener: TcpListener, answers: Answers, bodies: Vec<(String, String)>) {
    for stream in listener.incoming() {
        let Ok(mut stream) = stream else { continue };
        let (status, payload) = match read_request(&stream).and_then(|b| answer(&b, &answers, &bodies)) {
            Ok(p) => ("200 OK", p),
            Err(e) => {
                eprintln!("stub: {e:#}");
                ("400 Bad Request", serde_json::json!({"error": e.to_string()}).to_string())
            }
        };
        let _ = write!(
            stream,
            "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
            payload.len()
        );
    }
}

fn run_cli(args: &[&str]) -> Result<()> {
    let mut argv = vec!["epix"];
    argv.extend_from_slice(args);
    match epix_cli::run(argv) {
        0 => Ok(()),
        code => bail!("epix {} exited with {code}", args.join(" ")),
    }
}

fn main() -> Result<()> {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/e2e");
    let work = tempfile::tempdir()?;
    let corpus = work.path().join("corpus.jsonl");
    let corpus_arg = corpus.to_str().unwrap();
    let raw = |s: &str| fixture.join("raw").join(s).display().to_string();
    run_cli(&["ingest", "--source", "don", &raw("don"), "--corpus", corpus_arg])?;
    run_cli(&["ingest", "--source", "promed", &raw("promed"), "--corpus", corpus_arg, "--append"])?;

    let answers: Answers = serde_json::from_str(&std::fs::read_to_string(fixture.join("answers.json"))?)?;
    let bodies = load_corpus(&corpus)?.into_iter().map(|d| (d.id, d.body)).collect();
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let endpoint = format!("http://{}/v1/chat/completions", listener.local_addr()?);
    std::thread::spawn(move || serve(listener, answers, bodies));

    let cache: PathBuf = fixture.join("cache");
    if cache.exists() {
        std::fs::remove_dir_all(&cache)?;
    }
    let mut config: toml::Table = toml::from_str(&std::fs::read_to_string(fixture.join("epix.toml"))?)?;
    config.insert("corpus".into(), corpus_arg.into());
    config.insert("output".into(), work.path().join("out").display().to_string().into());
    let transport = config.get_mut("transport").and_then(|t| t.as_table_mut()).context("[transport] table")?;
    transport.insert("mode".into(), "record".into());
    transport.insert("cache_dir".into(), cache.display().to_string().into());
    for model in config.get_mut("models").and_then(|m| m.as_array_mut()).context("[[models]]")? {
        model.as_table_mut().context("model table")?.insert("endpoint".into(), endpoint.clone().into());
    }
    let config_path = work.path().join("record.toml");
    std::fs::write(&config_path, toml::to_string(&config)?)?;

    std::env::set_var(epix_core::llm::API_KEY_VAR, "fixture");
    run_cli(&["--config", config_path.to_str().unwrap(), "extract"])?;
    let entries = std::fs::read_dir(&cache)?.count();
    println!("recorded {entries} responses into {}", cache.display());
    Ok(())
}
