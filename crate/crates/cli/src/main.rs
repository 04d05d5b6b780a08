use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

mod commands;
mod report;
mod wire;

use commands::{Command, Config, Input};

/// Coherence checks, Dutch books and balance synthesis over betting
/// portfolios. Reports are JSON on standard output.
#[derive(Parser, Debug)]
#[command(name = "coherence-lab", version)]
struct Cli {
    /// Terms summed explicitly per series before the tail bound takes over.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    horizon: u64,
    /// Seed for sampled outcomes.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Bets shown per countable portfolio.
    #[arg(long, global = true, default_value_t = 20)]
    prefix: usize,
    /// Price offset for the gallery chains, as p/q.
    #[arg(long, global = true, value_parser = commands::parse_delta)]
    delta: Option<coherence_core::Q>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Classify each portfolio into systems 1, 2, 2B, 2A and 3.
    Classify { file: PathBuf },
    /// Finite LP coherence, chain obstructions and reductions.
    Coherence { file: PathBuf },
    /// Search for Dutch books.
    DutchBook { file: PathBuf },
    /// Countable additivity of the prices on a decomposition.
    Additivity { file: PathBuf },
    /// Generated field, atoms and p-finiteness.
    Atoms { file: PathBuf },
    /// Build a portfolio whose balance is a given simple function.
    Synthesize { file: PathBuf },
    /// Run a built-in instance: example-2.4, example-3.6, example-4.3 or example-4.4.
    Gallery { name: String },
}

fn read_input(path: &PathBuf) -> Result<wire::InstanceFile> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        s
    } else {
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
    };
    wire::parse_instance(&text)
}

fn main_inner(cli: Cli) -> Result<String> {
    let (cmd, file) = match &cli.cmd {
        Cmd::Gallery { name } => (Command::Gallery, Err(name)),
        Cmd::Classify { file } => (Command::Classify, Ok(file)),
        Cmd::Coherence { file } => (Command::Coherence, Ok(file)),
        Cmd::DutchBook { file } => (Command::DutchBook, Ok(file)),
        Cmd::Additivity { file } => (Command::Additivity, Ok(file)),
        Cmd::Atoms { file } => (Command::Atoms, Ok(file)),
        Cmd::Synthesize { file } => (Command::Synthesize, Ok(file)),
    };
    let input = match file {
        Ok(path) => Input::File(Box::new(read_input(path)?)),
        Err(name) => Input::Gallery(name.clone()),
    };
    let cfg = Config { horizon: cli.horizon, seed: cli.seed, prefix: cli.prefix, delta: cli.delta };
    let report = commands::run(cmd, input, &cfg)?;
    Ok(serde_json::to_string_pretty(&report)?)
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{out}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => ExitCode::from(1),
                _ => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
