//! Builds the client correlation graph from a handful of synthetic updates.
//!
//! Three clients push roughly the same direction, two push its opposite.
//!
//!     cargo run --example correlation_graph

use corrguard::gradients::{build_correlation_matrix, Centering, GradientUpdate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> corrguard::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let base: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
    let updates: Vec<GradientUpdate> = (0..5)
        .map(|id| {
            let sign = if id < 3 { 1.0 } else { -1.0 };
            let delta = base.iter().map(|b| sign * b + 0.3 * rng.random_range(-1.0..1.0)).collect();
            GradientUpdate::new(id, delta, 100)
        })
        .collect();

    let m = build_correlation_matrix(&updates, Centering::PerVector)?;
    println!("pairwise Pearson correlation of client updates:");
    for i in 0..m.n() {
        let row: Vec<String> = m.row(i).iter().map(|w| format!("{w:+.3}")).collect();
        println!("  client {i}: {}", row.join(" "));
    }
    println!("\nas JSON: {}", serde_json::to_string(&m)?);
    Ok(())
}
