//! Command-line front end: `corrguard run` and `corrguard sweep`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use corrguard::harness::{
    parse_fractions, run_experiment, run_sweep, sweep_rows, write_run_artifacts, write_sweep,
    ExperimentConfig,
};

#[derive(Parser)]
#[command(version, about = "Federated label-flipping simulation with correlation-based detection")]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write rounds.csv, detections.json and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one experiment per attacker fraction and write the sweep table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated attacker fractions, e.g. 0.1,0.2,0.3.
        #[arg(long, value_name = "LIST")]
        attack_fractions: String,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Returns `Ok(false)` when the run completed but something in it failed
/// (an aborted round or a failed scenario).
fn execute(command: Command) -> corrguard::Result<bool> {
    match command {
        Command::Run { config } => {
            let config = ExperimentConfig::load(&config)?;
            let outcome = run_experiment(&config)?;
            write_run_artifacts(&outcome, &config.output_dir)?;
            let s = &outcome.summary;
            println!(
                "accuracy {:.4}  macro_f1 {:.4}  asr {:.4}  ed {}",
                s.final_accuracy,
                s.final_macro_f1,
                s.final_asr,
                s.ed.map(|e| e.to_string()).unwrap_or_else(|| "-".into())
            );
            println!("artifacts in {}", config.output_dir.display());
            if !s.aborted_rounds.is_empty() {
                eprintln!("aborted rounds: {:?}", s.aborted_rounds);
                return Ok(false);
            }
            Ok(true)
        }
        Command::Sweep {
            config,
            attack_fractions,
        } => {
            let config = ExperimentConfig::load(&config)?;
            let fractions = parse_fractions(&attack_fractions)?;
            let scenarios = run_sweep(&config, &fractions);
            write_sweep(&scenarios, &config.output_dir)?;
            let rows = sweep_rows(&scenarios);
            println!("{:>6} {:>10} {:>9} {:>9} {:>7} {:>4}", "m", "policy", "accuracy", "f1", "asr", "ed");
            let mut ok = true;
            for row in &rows {
                match &row.error {
                    Some(e) => {
                        ok = false;
                        println!("{:>6.2} {:>10} failed: {e}", row.m, row.policy);
                    }
                    None => println!(
                        "{:>6.2} {:>10} {:>9.4} {:>9.4} {:>7.4} {:>4}",
                        row.m,
                        row.policy,
                        row.final_accuracy.unwrap_or(f64::NAN),
                        row.final_f1.unwrap_or(f64::NAN),
                        row.final_asr.unwrap_or(f64::NAN),
                        row.ed.map(|e| e.to_string()).unwrap_or_else(|| "-".into())
                    ),
                }
            }
            for s in &scenarios {
                if let Ok(o) = &s.outcome {
                    if !o.summary.aborted_rounds.is_empty() {
                        ok = false;
                        eprintln!("m={}: aborted rounds {:?}", s.m, o.summary.aborted_rounds);
                    }
                }
            }
            println!("sweep table in {}", config.output_dir.display());
            Ok(ok)
        }
    }
}
