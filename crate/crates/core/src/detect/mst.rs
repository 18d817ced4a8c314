//! MST-AD: split the maximum spanning tree at its lightest edge.
//!
//! Kruskal's algorithm runs over the edges in non-increasing weight order
//! (ties by vertex pair, ascending). Because edges enter the tree in that
//! order, the last edge added is the lightest one, and it is the cut edge.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use log::debug;
use serde::Serialize;

use super::{DetectionResult, Diagnostics};
use crate::error::{Error, Result};
use crate::gradients::CorrelationMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(u: usize, v: usize, weight: f64) -> Self {
        Self { u, v, weight }
    }

    fn key(&self) -> (usize, usize) {
        (self.u.min(self.v), self.u.max(self.v))
    }
}

/// Heaviest first, then lexicographic on the vertex pair.
fn edge_order(a: &Edge, b: &Edge) -> Ordering {
    b.weight
        .total_cmp(&a.weight)
        .then_with(|| a.key().cmp(&b.key()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subtree {
    pub vertices: Vec<usize>,
    pub edge_count: usize,
    /// Mean edge weight, or -1 for a single vertex.
    pub avg_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MstDiagnostics {
    pub tree: Vec<Edge>,
    pub cut_edge: Edge,
    /// `subtrees[0]` holds `cut_edge.u`, `subtrees[1]` holds `cut_edge.v`.
    pub subtrees: [Subtree; 2],
    pub ambiguous: bool,
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Returns false if `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            Ordering::Less => self.parent[ra] = rb,
            Ordering::Greater => self.parent[rb] = ra,
            Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Maximum-weight spanning tree of the complete correlation graph, edges in
/// the order Kruskal accepted them.
pub fn maximum_spanning_tree(matrix: &CorrelationMatrix) -> Result<Vec<Edge>> {
    let n = matrix.n();
    if n < 3 {
        return Err(Error::TooFewClients(n));
    }
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n {
        for v in (u + 1)..n {
            edges.push(Edge::new(u, v, matrix.get(u, v)));
        }
    }
    edges.sort_by(edge_order);

    let mut uf = UnionFind::new(n);
    let mut tree = Vec::with_capacity(n - 1);
    for e in edges {
        if uf.union(e.u, e.v) {
            tree.push(e);
            if tree.len() == n - 1 {
                break;
            }
        }
    }
    Ok(tree)
}

fn summarize(vertices: Vec<usize>, tree: &[Edge]) -> Subtree {
    let members: BTreeSet<usize> = vertices.iter().copied().collect();
    let (sum, count) = tree
        .iter()
        .filter(|e| members.contains(&e.u))
        .fold((0.0, 0usize), |(s, c), e| (s + e.weight, c + 1));
    let avg_weight = if count == 0 { -1.0 } else { sum / count as f64 };
    Subtree {
        vertices,
        edge_count: count,
        avg_weight,
    }
}

pub fn mst_ad(matrix: &CorrelationMatrix) -> Result<DetectionResult> {
    let tree = maximum_spanning_tree(matrix)?;
    let n = matrix.n();
    let (cut_edge, rest) = tree.split_last().expect("n >= 3 gives a nonempty tree");

    let mut uf = UnionFind::new(n);
    for e in rest {
        uf.union(e.u, e.v);
    }
    let side_u = uf.find(cut_edge.u);
    let (left, right): (Vec<usize>, Vec<usize>) = (0..n).partition(|&v| uf.find(v) == side_u);
    let subtrees = [summarize(left, rest), summarize(right, rest)];

    let (flagged, ambiguous) = match subtrees[0].avg_weight.total_cmp(&subtrees[1].avg_weight) {
        Ordering::Greater => (0, false),
        Ordering::Less => (1, false),
        Ordering::Equal => {
            // Smaller group wins; on equal size, the side holding cut_edge.u.
            let pick = usize::from(subtrees[1].vertices.len() < subtrees[0].vertices.len());
            debug!("mst_ad: subtree averages tie at {}", subtrees[0].avg_weight);
            (pick, true)
        }
    };

    Ok(DetectionResult {
        attackers: subtrees[flagged].vertices.iter().copied().collect(),
        diagnostics: Diagnostics::MstAd(MstDiagnostics {
            cut_edge: *cut_edge,
            tree,
            subtrees,
            ambiguous,
        }),
    })
}
