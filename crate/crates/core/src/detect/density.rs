//! Density-AD: single-pass greedy peeling of sparse vertices.
//!
//! Density here is the mean edge weight of an induced subgraph. A vertex is
//! sparse when dropping it strictly raises the density of the active set.
//! Vertices are examined once each, from the highest index down, and the
//! denser of (peeled vertices, survivors) is flagged.

use std::collections::BTreeSet;

use log::debug;
use serde::Serialize;

use super::{DetectionResult, Diagnostics};
use crate::error::{Error, Result};
use crate::gradients::CorrelationMatrix;

/// Density of a set too small to hold an edge.
const EMPTY_DENSITY: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeelStep {
    pub vertex: usize,
    /// Density of the active set when `vertex` was examined.
    pub density_before: f64,
    /// Density the active set would have without `vertex`.
    pub density_after: f64,
    pub removed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityDiagnostics {
    pub trace: Vec<PeelStep>,
    /// Peeled vertices, in removal order.
    pub sparse_list: Vec<usize>,
    pub sparse_density: f64,
    pub remaining_density: f64,
    pub ambiguous: bool,
}

fn pair_count(k: usize) -> f64 {
    (k * k.saturating_sub(1) / 2) as f64
}

/// Mean edge weight of the subgraph induced by `subset`, or -1 when it has
/// fewer than two vertices.
pub fn density(matrix: &CorrelationMatrix, subset: &[usize]) -> f64 {
    if subset.len() < 2 {
        return EMPTY_DENSITY;
    }
    let mut sum = 0.0;
    for (a, &i) in subset.iter().enumerate() {
        for &j in &subset[a + 1..] {
            sum += matrix.get(i, j);
        }
    }
    sum / pair_count(subset.len())
}

pub fn density_ad(matrix: &CorrelationMatrix) -> Result<DetectionResult> {
    let n = matrix.n();
    if n < 3 {
        return Err(Error::TooFewClients(n));
    }

    let mut active = vec![true; n];
    let mut active_len = n;
    // Row sums over the active set, and the active set's total edge weight.
    let mut row_sum: Vec<f64> = (0..n).map(|i| matrix.row(i).iter().sum()).collect();
    let mut edge_sum = row_sum.iter().sum::<f64>() / 2.0;

    let mut trace = Vec::with_capacity(n);
    let mut sparse_list = Vec::new();
    for v in (0..n).rev() {
        let before = edge_sum / pair_count(active_len);
        let after = if active_len - 1 < 2 {
            EMPTY_DENSITY
        } else {
            (edge_sum - row_sum[v]) / pair_count(active_len - 1)
        };
        let removed = after > before;
        trace.push(PeelStep {
            vertex: v,
            density_before: before,
            density_after: after,
            removed,
        });
        if removed {
            active[v] = false;
            active_len -= 1;
            edge_sum -= row_sum[v];
            for (u, sum) in row_sum.iter_mut().enumerate() {
                *sum -= matrix.get(u, v);
            }
            sparse_list.push(v);
        }
    }

    let remaining: Vec<usize> = (0..n).filter(|&v| active[v]).collect();
    let sparse_density = density(matrix, &sparse_list);
    let remaining_density = density(matrix, &remaining);
    let ambiguous = sparse_list.is_empty() || sparse_density == remaining_density;
    if ambiguous {
        debug!(
            "density_ad: ambiguous split (sparse {sparse_density}, remaining {remaining_density})"
        );
    }
    let attackers: BTreeSet<usize> = if sparse_density > remaining_density {
        sparse_list.iter().copied().collect()
    } else {
        remaining.iter().copied().collect()
    };

    Ok(DetectionResult {
        attackers,
        diagnostics: Diagnostics::DensityAd(DensityDiagnostics {
            trace,
            sparse_list,
            sparse_density,
            remaining_density,
            ambiguous,
        }),
    })
}

/// Closed-form test for whether `candidate` is sparse once `removed_so_far`
/// has been peeled: its mean weight to the surviving vertices is below the
/// survivors' density.
///
/// Works from the full matrix only, so it serves as an independent check on
/// the incremental bookkeeping in [`density_ad`].
///
/// # Panics
///
/// If `candidate` was already removed or fewer than 3 vertices remain.
pub fn removal_condition_holds(
    matrix: &CorrelationMatrix,
    removed_so_far: &[usize],
    candidate: usize,
) -> bool {
    let n = matrix.n();
    let k = removed_so_far.len();
    assert!(
        !removed_so_far.contains(&candidate),
        "candidate {candidate} already removed"
    );
    assert!(n - k >= 3, "need at least 3 active vertices");

    let row_sum = |v: usize| -> f64 { matrix.row(v).iter().sum() };
    let total: f64 = (0..n).map(row_sum).sum::<f64>() / 2.0;
    let removed_rows: f64 = removed_so_far.iter().map(|&j| row_sum(j)).sum();
    let mut within_removed = 0.0;
    for (a, &i) in removed_so_far.iter().enumerate() {
        for &j in &removed_so_far[a + 1..] {
            within_removed += matrix.get(i, j);
        }
    }
    let remaining = (n - k) as f64;
    let graph_average = 2.0 * (total - removed_rows + within_removed) / (remaining * (remaining - 1.0));

    let to_removed: f64 = removed_so_far.iter().map(|&j| matrix.get(candidate, j)).sum();
    let residual_degree = (row_sum(candidate) - to_removed) / (remaining - 1.0);

    residual_degree < graph_average
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand_example() -> CorrelationMatrix {
        CorrelationMatrix::from_fn(4, |i, j| match (i, j) {
            (2, 3) => 0.9,
            (0, 1) => 0.5,
            _ => 0.1,
        })
        .unwrap()
    }

    #[test]
    fn density_of_small_sets() {
        let m = hand_example();
        assert_eq!(density(&m, &[0, 1]), 0.5);
        assert_eq!(density(&m, &[2]), -1.0);
        assert_eq!(density(&m, &[]), -1.0);
        let uniform = CorrelationMatrix::from_fn(5, |_, _| 0.25).unwrap();
        assert_eq!(density(&uniform, &[0, 2, 4]), 0.25);
    }

    #[test]
    fn hand_traced_peel() {
        let m = hand_example();
        let result = density_ad(&m).unwrap();
        let Diagnostics::DensityAd(d) = &result.diagnostics else {
            panic!("wrong diagnostics");
        };
        let order: Vec<(usize, bool)> = d.trace.iter().map(|s| (s.vertex, s.removed)).collect();
        assert_eq!(order, vec![(3, false), (2, false), (1, true), (0, true)]);

        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        assert!(close(d.trace[0].density_before, 0.3));
        assert!(close(d.trace[0].density_after, 0.7 / 3.0));
        assert!(close(d.trace[1].density_after, 0.7 / 3.0));
        assert!(close(d.trace[2].density_after, 1.1 / 3.0));
        assert!(close(d.trace[3].density_before, 1.1 / 3.0));
        assert!(close(d.trace[3].density_after, 0.9));

        assert_eq!(d.sparse_list, vec![1, 0]);
        assert_eq!(d.sparse_density, 0.5);
        assert!(close(d.remaining_density, 0.9));
        assert_eq!(result.attackers, BTreeSet::from([2, 3]));
    }

    #[test]
    fn uniform_graph_flags_everyone() {
        let m = CorrelationMatrix::from_fn(6, |_, _| 0.4).unwrap();
        let result = density_ad(&m).unwrap();
        assert_eq!(result.attackers, (0..6).collect());
        assert!(result.is_ambiguous());
        for i in 0..6 {
            assert!(!removal_condition_holds(&m, &[], i));
        }
    }

    #[test]
    fn closed_form_on_hand_example() {
        let m = hand_example();
        assert!(removal_condition_holds(&m, &[], 1));
        assert!(!removal_condition_holds(&m, &[], 3));
        assert!(removal_condition_holds(&m, &[1], 0));
    }

    #[test]
    #[should_panic]
    fn closed_form_rejects_removed_candidate() {
        removal_condition_holds(&hand_example(), &[1], 1);
    }

    #[test]
    fn small_graphs_rejected() {
        let m = CorrelationMatrix::from_fn(2, |_, _| 0.1).unwrap();
        assert!(matches!(density_ad(&m), Err(Error::TooFewClients(2))));
    }
}
