use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use dperm::error::{CliError, Result};
use dperm::{catalog, experiments, output, RunConfig};
use dperm_core::Execution;
use serde_json::json;

/// Differentially private ERM laboratory.
#[derive(Debug, Parser)]
#[command(name = "dperm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// List the available experiments.
    List {
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Per-experiment pass/fail counts and worst slack of a results CSV.
    Summarize { results: PathBuf },
}

const EXIT_FAILED_CHECK: u8 = 2;

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("DPERM_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t >= 1)
        .ok_or_else(|| CliError::Threads(format!("expected a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Threads(e.to_string()))
}

fn run(path: &Path) -> Result<ExitCode> {
    let cfg = RunConfig::load(path)?;
    init_threads()?;
    let start = Instant::now();
    let mut outcome = experiments::run(&cfg, Execution::default())?;
    output::sort_rows(&mut outcome.rows);
    let results = cfg.output_path();
    output::write_rows(&results, &outcome.rows, cfg.format)?;
    let manifest = output::manifest(&cfg, &results, &outcome.rows, start.elapsed().as_secs_f64());
    let manifest_path = output::manifest_path(&results);
    output::write_manifest(&manifest_path, &manifest)?;

    let failures: Vec<_> = outcome.rows.iter().filter(|r| !r.pass).collect();
    let summary = json!({
        "experiment": cfg.experiment,
        "rows": outcome.rows.len(),
        "failed": failures.len(),
        "failures": failures,
        "witnesses": outcome.witnesses,
        "notes": outcome.notes,
        "results": results,
        "manifest": manifest_path,
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    Ok(if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILED_CHECK)
    })
}

fn summarize(path: &Path) -> Result<ExitCode> {
    let rows = output::read_rows(path)?;
    print!("{}", output::render_summary(&rows));
    Ok(if rows.iter().all(|r| r.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILED_CHECK)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config } => run(config),
        Command::List { json } => {
            if *json {
                println!("{}", catalog::render_json());
            } else {
                print!("{}", catalog::render_table());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Summarize { results } => summarize(results),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::FAILURE
    })
}
