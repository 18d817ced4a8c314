//! Density-AD on the same kind of graph, printing the peel trace.
//!
//!     cargo run --example density_detection

use corrguard::detect::{density_ad, Diagnostics};
use corrguard::gradients::CorrelationMatrix;

fn main() -> corrguard::Result<()> {
    let m = CorrelationMatrix::from_fn(4, |i, j| match (i, j) {
        (2, 3) => 0.9,
        (0, 1) => 0.5,
        _ => 0.1,
    })?;

    let result = density_ad(&m)?;
    let Diagnostics::DensityAd(d) = &result.diagnostics else {
        unreachable!()
    };
    println!("vertex  density before  density without it  removed");
    for step in &d.trace {
        println!(
            "{:>6}  {:>14.4}  {:>18.4}  {}",
            step.vertex, step.density_before, step.density_after, step.removed
        );
    }
    println!(
        "sparse list {:?} (density {:.4}) vs remaining (density {:.4})",
        d.sparse_list, d.sparse_density, d.remaining_density
    );
    println!("flagged: {:?}", result.attackers);
    Ok(())
}
