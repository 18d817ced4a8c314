//! FedAvg with and without exclusion next to the geometric median, on
//! updates where a group pulls in the opposite direction.
//!
//!     cargo run --example robust_aggregation

use std::collections::BTreeSet;

use corrguard::aggregate::{apply_delta, geometric_median, weighted_aggregate};
use corrguard::fl::ModelSpec;
use corrguard::gradients::GradientUpdate;

fn main() -> corrguard::Result<()> {
    let spec = ModelSpec::softmax(1, 2); // 4 parameters
    let global = spec.zeros();
    let honest = [1.0, 0.5, -0.5, 0.2];
    let updates: Vec<GradientUpdate> = (0..5)
        .map(|id| {
            let sign = if id < 3 { 1.0 } else { -3.0 };
            GradientUpdate::new(id, honest.iter().map(|v| sign * v).collect(), 50)
        })
        .collect();

    let fedavg = weighted_aggregate(&global, &updates, &BTreeSet::new())?;
    let excluded = weighted_aggregate(&global, &updates, &BTreeSet::from([3, 4]))?;
    let gm = geometric_median(&updates, 1e-9, 1000)?;
    let geomed = apply_delta(&global, &gm.point)?;

    println!("honest update  {honest:?}");
    println!("fedavg         {:?}", fedavg.values());
    println!("exclude {{3,4}}  {:?}", excluded.values());
    println!("geomed         {:?}  ({} iterations)", geomed.values(), gm.iterations);
    Ok(())
}
