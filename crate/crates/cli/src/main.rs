use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use humanet::report::{compare, run_scenario};
use humanet::scenario::Scenario;

/// Community-scoped MANET service simulator.
#[derive(Parser)]
#[command(name = "humanet", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and print its metrics as JSON.
    Run {
        scenario: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare control traffic against the periodic flooding baseline.
    Compare {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a scenario without running it.
    Validate { scenario: PathBuf },
    /// Run a scenario and print one line per radio event.
    Trace {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &PathBuf) -> Result<Scenario> {
    Scenario::from_file(path).with_context(|| format!("invalid scenario {}", path.display()))
}

fn emit(text: String, out: Option<PathBuf>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(&p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn status(errors: usize) -> ExitCode {
    if errors == 0 {
        ExitCode::SUCCESS
    } else {
        eprintln!("run finished with {errors} error(s); see the report");
        ExitCode::from(2)
    }
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Cmd::Run { scenario, seed, out } => {
            let sc = load(&scenario)?;
            let run = run_scenario(&sc, seed, false)?;
            emit(serde_json::to_string_pretty(&run.report)? + "\n", out)?;
            Ok(status(run.error_count()))
        }
        Cmd::Compare { scenario, seed } => {
            let sc = load(&scenario)?;
            let (run, cmp) = compare(&sc, seed)?;
            println!("{}", serde_json::to_string_pretty(&cmp)?);
            Ok(status(run.error_count()))
        }
        Cmd::Validate { scenario } => {
            let sc = load(&scenario)?;
            println!(
                "ok: {} nodes, {} events, environment {}",
                sc.nodes.len(),
                sc.events.len(),
                sc.environment()
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Trace { scenario, seed, out } => {
            let sc = load(&scenario)?;
            let run = run_scenario(&sc, seed, true)?;
            let mut text = run.trace_lines().join("\n");
            text.push('\n');
            emit(text, out)?;
            Ok(status(run.error_count()))
        }
    }
}
