//! Thin command-line shell over the library: run sweeps from config files,
//! verify the update mathematics, and render result tables.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use quicklap::config::load_run_config;
use quicklap::experiment::{export_results, run_sweep};
use quicklap::report::{render_report, ReportFormat};
use quicklap::verify::{run_checks, Fault};

#[derive(Parser)]
#[command(name = "quicklap", version, about = "Online driving-reward learning from corrections and language")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single episode or a full sweep from a config file.
    Run {
        /// TOML config; every key has a default, so an empty file is valid.
        #[arg(long)]
        config: PathBuf,
        /// Dotted-path overrides, e.g. --set backend.kind=mock
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory (overrides experiment.out_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace the master seed list with a single seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Language backend kind: remote, mock, replay or oracle.
        #[arg(long)]
        backend: Option<String>,
    },
    /// Run randomized self-checks of the update rules and metrics.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Negative control: inject a known defect and expect detection.
        #[arg(long, hide = true, value_name = "FAULT")]
        inject_fault: Option<String>,
    },
    /// Print result tables from an exported results directory.
    Report {
        results_dir: PathBuf,
        /// Output format: markdown or csv.
        #[arg(long, default_value = "markdown")]
        format: String,
    },
}

fn cmd_run(
    config: PathBuf,
    mut set: Vec<String>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    backend: Option<String>,
) -> Result<(), (u8, String)> {
    if let Some(kind) = backend {
        set.push(format!("language.kind={kind}"));
    }
    if let Some(seed) = seed {
        set.push(format!("experiment.seeds=[{seed}]"));
    }
    let run_config =
        load_run_config(&config, &set).map_err(|e| (2, format!("invalid config: {e}")))?;
    let out_dir = out.unwrap_or_else(|| run_config.experiment.out_dir.clone());
    let sweep = run_config.to_sweep();
    eprintln!(
        "running {} scenario(s) x {} algorithm(s) x {} utterance(s) x {} horizon(s) x {} seed(s)",
        sweep.scenarios.len(),
        sweep.algorithms.len(),
        sweep.utterances.len(),
        sweep.horizons.len(),
        sweep.seeds.len()
    );
    let result = run_sweep(&sweep).map_err(|e| (1, e.to_string()))?;
    let failed = result.episodes.iter().filter(|e| !e.ok).count();
    if failed > 0 {
        eprintln!("warning: {failed} episode(s) failed and were excluded from aggregates:");
        for record in result.episodes.iter().filter(|e| !e.ok) {
            eprintln!(
                "  {} / {} / {:?}: {}",
                record.key.scenario,
                record.key.algorithm,
                record.key.utterance,
                record.error.as_deref().unwrap_or("unknown")
            );
        }
    }
    let files = export_results(&result, &out_dir).map_err(|e| (1, e.to_string()))?;
    for cell in &result.summary.cells {
        println!(
            "{:<6} {:<13} nmse {:.4} ± {:.4} (n = {})",
            cell.scenario,
            cell.algorithm.name(),
            cell.mean_nmse,
            cell.sem,
            cell.n
        );
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    if failed > 0 {
        return Err((1, format!("{failed} episode(s) failed")));
    }
    Ok(())
}

fn cmd_verify(seed: u64, inject_fault: Option<String>) -> Result<(), (u8, String)> {
    let fault = match inject_fault.as_deref() {
        None => Fault::None,
        Some("gain") => Fault::WrongGain,
        Some(other) => return Err((2, format!("unknown fault `{other}` (expected gain)"))),
    };
    let report = run_checks(seed, fault);
    println!("seed: {}", report.seed);
    for outcome in &report.outcomes {
        let status = if outcome.passed { "pass" } else { "FAIL" };
        println!("[{status}] {}", outcome.name);
        if !outcome.passed {
            println!("       {}", outcome.detail);
        }
    }
    if report.all_passed() {
        println!("all {} checks passed", report.outcomes.len());
        Ok(())
    } else {
        let failed = report.outcomes.iter().filter(|o| !o.passed).count();
        Err((1, format!("{failed} check(s) failed")))
    }
}

fn cmd_report(results_dir: PathBuf, format: String) -> Result<(), (u8, String)> {
    let format: ReportFormat = format.parse().map_err(|e| (2, format!("{e}")))?;
    let text = render_report(&results_dir, format).map_err(|e| (1, e.to_string()))?;
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            set,
            out,
            seed,
            backend,
        } => cmd_run(config, set, out, seed, backend),
        Command::Verify { seed, inject_fault } => cmd_verify(seed, inject_fault),
        Command::Report { results_dir, format } => cmd_report(results_dir, format),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
