use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mcris_core::channel::Scenario;
use mcris_core::error::Error;
use mcris_core::experiment::{
    emit_results, load_suite, run_sweep, OutputFormat, RunOptions, SweepOutput, SweepSpec, FULL_TRIALS,
};

#[derive(Parser)]
#[command(name = "mcris", version, about = "Monte Carlo sweeps for coupling-aware active RIS links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write one row per (scheme, value, trial) plus aggregates.
    Run {
        /// Scenario JSON; omitted fields take their defaults.
        #[arg(long)]
        scenario: PathBuf,
        /// Sweep JSON (axis, values, schemes, trials, base_seed, optimizer).
        #[arg(long)]
        sweep: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: OutputFormat,
        /// Use 100 trials per point.
        #[arg(long)]
        full: bool,
        /// Worker threads (falls back to MCRIS_THREADS).
        #[arg(long)]
        threads: Option<usize>,
        /// Record wall times in the `ms` column (output is then not reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Run every entry of a suite manifest, writing `<name>.csv` or `<name>.json` per entry.
    Suite {
        /// JSON array of {"name", "scenario", "sweep"} with paths relative to the manifest.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value = "csv")]
        format: OutputFormat,
        #[arg(long)]
        full: bool,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        timing: bool,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_TRIAL_FAILED: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match cli.command {
        Command::Run { scenario, sweep, out, format, full, threads, timing } => {
            let scenario = match Scenario::load(&scenario) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            let mut spec = match SweepSpec::load(&sweep) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            if full {
                spec.trials = FULL_TRIALS;
            }
            let opts = RunOptions { threads, record_timing: timing };
            let output = match run_sweep(&spec, &scenario, &opts) {
                Ok(o) => o,
                Err(e) => return fail(e),
            };
            if let Err(e) = emit_results(&output.document(), &out, format) {
                return fail(e);
            }
            finish(report(&output))
        }
        Command::Suite { manifest, out_dir, format, full, threads, timing } => {
            let runs = match load_suite(&manifest) {
                Ok(r) => r,
                Err(e) => return fail(e),
            };
            if let Err(e) = std::fs::create_dir_all(&out_dir) {
                return fail(e.into());
            }
            let opts = RunOptions { threads, record_timing: timing };
            let ext = match format {
                OutputFormat::Csv => "csv",
                OutputFormat::Json => "json",
            };
            let mut clean = true;
            for mut run in runs {
                if full {
                    run.sweep.trials = FULL_TRIALS;
                }
                let output = match run_sweep(&run.sweep, &run.scenario, &opts) {
                    Ok(o) => o,
                    Err(e) => return fail(e),
                };
                let path = out_dir.join(format!("{}.{ext}", run.name));
                if let Err(e) = emit_results(&output.document(), &path, format) {
                    return fail(e);
                }
                eprintln!("{}: {} rows -> {}", run.name, output.rows.len(), path.display());
                clean &= report(&output);
            }
            finish(clean)
        }
    }
}

/// Prints trial failures; true when there were none.
fn report(output: &SweepOutput) -> bool {
    for f in &output.failures {
        eprintln!("trial failed: {} at {} seed {}: {}", f.scheme.name(), f.value, f.seed, f.message);
    }
    output.failures.is_empty()
}

fn finish(clean: bool) -> ExitCode {
    if clean {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_TRIAL_FAILED)
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_CONFIG)
}
