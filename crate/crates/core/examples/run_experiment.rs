//! A full federated run: 50 clients, 30% attackers, MST-AD gating FedAvg.
//!
//!     cargo run --release --example run_experiment [mst_ad|density_ad|fedavg|geomed|oracle]

use corrguard::harness::{run_experiment, ExperimentConfig};

fn main() -> corrguard::Result<()> {
    let policy = std::env::args().nth(1).unwrap_or_else(|| "mst_ad".into());
    let config = ExperimentConfig {
        attacker_fraction: 0.3,
        rounds: 15,
        seed: 7,
        policy: policy.parse()?,
        ..ExperimentConfig::default()
    };
    let outcome = run_experiment(&config)?;
    println!("round  loss    acc     f1      asr     excluded exact");
    for r in &outcome.rounds {
        println!(
            "{:>5}  {:.4}  {:.4}  {:.4}  {:.4}  {:>8} {}",
            r.round, r.train_loss, r.test_accuracy, r.macro_f1, r.asr, r.n_excluded, r.detection_exact
        );
    }
    let s = &outcome.summary;
    println!("attackers: {:?}", s.attackers);
    match s.ed {
        Some(ed) => println!("earliest exact detection: {ed}"),
        None => println!("policy {} does not detect", config.policy),
    }
    Ok(())
}
