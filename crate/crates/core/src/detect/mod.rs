//! Attacker detectors over the client correlation graph.
//!
//! Both detectors split the clients into two groups and flag the more
//! cohesive one. Vertex indices in a [`DetectionResult`] are positions in the
//! correlation matrix; use [`DetectionResult::relabel`] to map them back to
//! client ids when the round did not include every client.

mod density;
mod mst;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gradients::CorrelationMatrix;

pub use density::{density, density_ad, removal_condition_holds, DensityDiagnostics, PeelStep};
pub use mst::{maximum_spanning_tree, mst_ad, Edge, MstDiagnostics, Subtree};

/// Flagged vertices plus whatever the detector recorded on the way.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionResult {
    pub attackers: BTreeSet<usize>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "detector", rename_all = "snake_case")]
pub enum Diagnostics {
    MstAd(MstDiagnostics),
    DensityAd(DensityDiagnostics),
}

impl DetectionResult {
    /// True when the decision hit a tie the algorithm had to break by convention.
    pub fn is_ambiguous(&self) -> bool {
        match &self.diagnostics {
            Diagnostics::MstAd(d) => d.ambiguous,
            Diagnostics::DensityAd(d) => d.ambiguous,
        }
    }

    /// Rewrites every vertex index `k` as `ids[k]`.
    pub fn relabel(&self, ids: &[usize]) -> DetectionResult {
        let map = |v: &usize| ids[*v];
        let diagnostics = match &self.diagnostics {
            Diagnostics::MstAd(d) => {
                let edge = |e: &Edge| Edge::new(ids[e.u], ids[e.v], e.weight);
                let subtree = |s: &Subtree| Subtree {
                    vertices: s.vertices.iter().map(map).collect(),
                    ..s.clone()
                };
                Diagnostics::MstAd(MstDiagnostics {
                    tree: d.tree.iter().map(edge).collect(),
                    cut_edge: edge(&d.cut_edge),
                    subtrees: [subtree(&d.subtrees[0]), subtree(&d.subtrees[1])],
                    ambiguous: d.ambiguous,
                })
            }
            Diagnostics::DensityAd(d) => Diagnostics::DensityAd(DensityDiagnostics {
                trace: d
                    .trace
                    .iter()
                    .map(|s| PeelStep {
                        vertex: ids[s.vertex],
                        ..*s
                    })
                    .collect(),
                sparse_list: d.sparse_list.iter().map(map).collect(),
                ..d.clone()
            }),
        };
        DetectionResult {
            attackers: self.attackers.iter().map(map).collect(),
            diagnostics,
        }
    }
}

/// The two correlation-graph detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    MstAd,
    DensityAd,
}

impl Detector {
    pub fn detect(self, matrix: &CorrelationMatrix) -> Result<DetectionResult> {
        match self {
            Detector::MstAd => mst_ad(matrix),
            Detector::DensityAd => density_ad(matrix),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Detector::MstAd => "mst_ad",
            Detector::DensityAd => "density_ad",
        }
    }
}
