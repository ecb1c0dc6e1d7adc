//! The `epix` command line: ingest raw outbreak reports into a corpus,
//! run the configured extractors over it, and score them against gold.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use epix_core::llm::TransportMode;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_TRANSPORT: u8 = 3;
pub const EXIT_EVALUATION: u8 = 4;

/// Config file looked up in the working directory when `--config` is absent.
pub const DEFAULT_CONFIG: &str = "epix.toml";

#[derive(Debug, Parser)]
#[command(name = "epix", version, about = "Epidemic fact extraction from outbreak news")]
pub struct Cli {
    /// Run configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides the config file.
    #[arg(long, global = true, value_name = "DIR")]
    pub output: Option<PathBuf>,
    /// Transport mode; overrides the config file.
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Live,
    Record,
    Replay,
}

impl From<ModeArg> for TransportMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Live => TransportMode::Live,
            ModeArg::Record => TransportMode::Record,
            ModeArg::Replay => TransportMode::Replay,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    /// WHO Disease Outbreak News HTML pages.
    Don,
    /// ProMED posts, plain text or HTML.
    Promed,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse raw reports (a file or a directory of files) into a corpus file.
    Ingest {
        #[arg(long, value_enum)]
        source: SourceArg,
        input: PathBuf,
        /// Corpus file to write; defaults to the config's corpus.
        #[arg(long, value_name = "PATH")]
        corpus: Option<PathBuf>,
        /// Add to an existing corpus instead of replacing it.
        #[arg(long)]
        append: bool,
    },
    /// Run extractors over the corpus, writing one predictions file each.
    Extract {
        /// Only run these extractors (repeatable).
        #[arg(long = "extractor", value_name = "ID")]
        only: Vec<String>,
    },
    /// Score predictions against gold and write every report format.
    Evaluate {
        /// Only score these extractors (repeatable).
        #[arg(long = "extractor", value_name = "ID")]
        only: Vec<String>,
    },
    /// Re-render a saved report.json in another format.
    Report {
        report: PathBuf,
        /// text, csv, jsonl, plot or json.
        #[arg(long, default_value = "text")]
        format: String,
        /// Write here instead of standard output.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

/// An error together with the process exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub trait ExitCodeExt<T> {
    fn code(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ExitCodeExt<T> for Result<T, E> {
    fn code(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure { code, error: e.into() })
    }
}

impl Failure {
    pub fn new(code: u8, error: anyhow::Error) -> Self {
        Failure { code, error }
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit status.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match commands::dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    }
}
