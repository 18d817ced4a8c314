//! A-m sweep: one run per attacker fraction, written as a summary table.
//!
//!     cargo run --release --example attack_sweep

use corrguard::harness::{run_sweep, sweep_rows, write_sweep, ExperimentConfig};

fn main() -> corrguard::Result<()> {
    let out = std::env::temp_dir().join("corrguard-sweep");
    let base = ExperimentConfig {
        rounds: 10,
        policy: "density_ad".parse()?,
        output_dir: out.clone(),
        ..ExperimentConfig::default()
    };
    let fractions = [0.1, 0.3, 0.5, 0.7];
    let scenarios = run_sweep(&base, &fractions);
    write_sweep(&scenarios, &out)?;

    println!("   m  policy      accuracy  asr     ed");
    for row in sweep_rows(&scenarios) {
        match row.error {
            Some(e) => println!("{:.2}  {}  failed: {e}", row.m, row.policy),
            None => println!(
                "{:.2}  {:<10}  {:.4}    {:.4}  {}",
                row.m,
                row.policy,
                row.final_accuracy.unwrap_or(f64::NAN),
                row.final_asr.unwrap_or(f64::NAN),
                row.ed.map(|e| e.to_string()).unwrap_or_default()
            ),
        }
    }
    println!("tables in {}", out.display());
    Ok(())
}
