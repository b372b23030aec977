//! The `chm` command: check `.ch` files and run expectation corpora.

pub mod corpus;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub const EXIT_USAGE: i32 = 64;
pub const EXIT_IO: i32 = 66;

#[derive(Debug, Parser)]
#[command(name = "chm", version, about = "Type inference for a small Haskell-like language with nested annotations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Type-check source files.
    Check(CheckArgs),
    /// Check every `.ch` file of a directory against its `.expect` sidecar.
    Corpus(CorpusArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    /// Maximum number of rule applications per derivation.
    #[arg(long, env = "CHM_FUEL", default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub fuel: u64,
    /// Do not make parents call nested definitions they do not use.
    #[arg(long)]
    pub no_forced_calls: bool,
    /// Print the generated CHR program.
    #[arg(long)]
    pub dump_chrs: bool,
    /// Print the derivation of every top-level definition.
    #[arg(long)]
    pub trace: bool,
    /// Machine-readable output.
    #[arg(long)]
    pub json: bool,
    /// Recompute unifiers from scratch after every step.
    #[arg(long)]
    pub paranoid: bool,
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    pub dir: PathBuf,
}

impl CheckArgs {
    pub fn options(&self) -> chm_core::Options {
        chm_core::Options {
            fuel: self.fuel as usize,
            forced_calls: !self.no_forced_calls,
            paranoid: self.paranoid,
            trace: self.trace,
        }
    }
}

/// Run the command line and return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    match cli.command {
        Command::Check(args) => check(&args, &mut stdout.lock(), &mut stderr.lock()),
        Command::Corpus(args) => corpus::run_corpus_cmd(&args.dir, &mut stdout.lock(), &mut stderr.lock()),
    }
}

/// Check all files concurrently and print their reports in argument order.
pub fn check(args: &CheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let reports: Vec<report::FileReport> = std::thread::scope(|s| {
        let handles: Vec<_> =
            args.paths.iter().map(|p| s.spawn(move || report::check_file(p, &args.options()))).collect();
        handles.into_iter().map(|h| h.join().expect("checker thread panicked")).collect()
    });
    let mut code = 0;
    let mut json = Vec::new();
    for r in &reports {
        code = code.max(r.exit_code());
        if args.json {
            json.push(r.to_json());
            if let report::FileReport::Io { message, .. } = r {
                let _ = writeln!(err, "{message}");
            }
            continue;
        }
        match r {
            report::FileReport::Io { message, .. } => {
                let _ = writeln!(err, "{message}");
            }
            _ => {
                let _ = write!(out, "{}", r.render(args.dump_chrs, args.trace));
            }
        }
    }
    if args.json {
        let doc = if json.len() == 1 { json.pop().unwrap() } else { serde_json::Value::Array(json) };
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json"));
    }
    code
}
