//! Bidirectional label-flipping attackers.

use std::collections::BTreeSet;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Two classes an attacker swaps in its local data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct FlipPair {
    pub a: usize,
    pub b: usize,
}

impl FlipPair {
    pub fn new(a: usize, b: usize) -> Self {
        Self { a, b }
    }

    pub fn validate(&self, num_classes: usize) -> Result<()> {
        for class in [self.a, self.b] {
            if class >= num_classes {
                return Err(Error::InvalidClass { class, num_classes });
            }
        }
        if self.a == self.b {
            return Err(Error::InvalidData(format!(
                "flip pair needs two distinct classes, got ({}, {})",
                self.a, self.b
            )));
        }
        Ok(())
    }

    pub fn apply(&self, label: usize) -> usize {
        if label == self.a {
            self.b
        } else if label == self.b {
            self.a
        } else {
            label
        }
    }

    pub fn contains(&self, label: usize) -> bool {
        label == self.a || label == self.b
    }
}

impl From<[usize; 2]> for FlipPair {
    fn from([a, b]: [usize; 2]) -> Self {
        Self { a, b }
    }
}

impl From<FlipPair> for [usize; 2] {
    fn from(p: FlipPair) -> Self {
        [p.a, p.b]
    }
}

/// An A-m scenario resolved to concrete attacker ids.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackConfig {
    pub flip_pair: FlipPair,
    pub attacker_fraction: f64,
    pub attacker_ids: BTreeSet<usize>,
}

impl AttackConfig {
    /// Picks `round(fraction * n)` attackers uniformly at random from `0..n`.
    ///
    /// A nonzero scenario must yield at least two attackers; a lone attacker
    /// has nobody to collude with.
    pub fn resolve(flip_pair: FlipPair, fraction: f64, n: usize, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::Config(format!(
                "attacker fraction must lie in [0, 1), got {fraction}"
            )));
        }
        let count = Self::attacker_count(fraction, n);
        if fraction > 0.0 && count < 2 {
            return Err(Error::Config(format!(
                "attacker fraction {fraction} of {n} clients gives {count} attacker(s); collusion needs at least 2"
            )));
        }
        let mut rng = seed::rng(seed, &[seed::ATTACKERS]);
        let attacker_ids = index::sample(&mut rng, n, count).into_iter().collect();
        Ok(Self {
            flip_pair,
            attacker_fraction: fraction,
            attacker_ids,
        })
    }

    pub fn attacker_count(fraction: f64, n: usize) -> usize {
        (fraction * n as f64).round() as usize
    }

    pub fn is_attacker(&self, client: usize) -> bool {
        self.attacker_ids.contains(&client)
    }
}
