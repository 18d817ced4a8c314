//! MST-AD on a small hand-built graph: build the maximum spanning tree,
//! cut its lightest edge, flag the more cohesive side.
//!
//!     cargo run --example mst_detection

use corrguard::detect::{mst_ad, Diagnostics};
use corrguard::gradients::CorrelationMatrix;

fn main() -> corrguard::Result<()> {
    // Clients 2, 5 and 6 collude.
    let colluders = [2, 5, 6];
    let m = CorrelationMatrix::from_fn(8, |i, j| {
        match (colluders.contains(&i), colluders.contains(&j)) {
            (true, true) => 0.85 + 0.01 * (i + j) as f64,
            (false, false) => 0.40 + 0.02 * ((i * j) % 5) as f64,
            _ => 0.05 * ((i + 2 * j) % 3) as f64,
        }
    })?;

    let result = mst_ad(&m)?;
    let Diagnostics::MstAd(d) = &result.diagnostics else {
        unreachable!()
    };
    println!("maximum spanning tree (in acceptance order):");
    for e in &d.tree {
        println!("  ({}, {})  {:.3}", e.u, e.v, e.weight);
    }
    println!("cut edge: ({}, {}) weight {:.3}", d.cut_edge.u, d.cut_edge.v, d.cut_edge.weight);
    for s in &d.subtrees {
        println!("  subtree {:?}: {} edges, mean weight {:.3}", s.vertices, s.edge_count, s.avg_weight);
    }
    println!("flagged: {:?} (ambiguous: {})", result.attackers, d.ambiguous);
    Ok(())
}
