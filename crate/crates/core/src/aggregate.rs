//! Server-side aggregation: sample-weighted averaging with exclusion, and the
//! geometric-median baseline.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::detect::Detector;
use crate::error::{Error, Result};
use crate::fl::ModelParams;
use crate::gradients::GradientUpdate;

/// How the server turns a round's updates into the next global model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AggregationPolicy {
    /// Plain sample-weighted averaging of every update.
    FedAvg,
    /// Averaging over the clients the detector did not flag.
    FedAvgWithDetector(Detector),
    /// Averaging with exactly the true attackers removed. A reference point
    /// for what a perfect detector achieves.
    Oracle,
    /// Geometric median of the updates; never flags anyone.
    GeoMed,
}

impl AggregationPolicy {
    pub fn detector(&self) -> Option<Detector> {
        match self {
            AggregationPolicy::FedAvgWithDetector(d) => Some(*d),
            _ => None,
        }
    }

    /// Whether flagged updates are dropped before aggregation.
    pub fn excludes(&self) -> bool {
        matches!(
            self,
            AggregationPolicy::FedAvgWithDetector(_) | AggregationPolicy::Oracle
        )
    }

    /// Whether the policy produces an attacker set for earliest-detection.
    pub fn reports_detection(&self) -> bool {
        self.excludes()
    }
}

impl fmt::Display for AggregationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AggregationPolicy::FedAvg => "fedavg",
            AggregationPolicy::FedAvgWithDetector(d) => d.name(),
            AggregationPolicy::Oracle => "oracle",
            AggregationPolicy::GeoMed => "geomed",
        })
    }
}

impl FromStr for AggregationPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fedavg" => AggregationPolicy::FedAvg,
            "mst_ad" => AggregationPolicy::FedAvgWithDetector(Detector::MstAd),
            "density_ad" => AggregationPolicy::FedAvgWithDetector(Detector::DensityAd),
            "oracle" => AggregationPolicy::Oracle,
            "geomed" => AggregationPolicy::GeoMed,
            other => {
                return Err(Error::Config(format!(
                    "unknown policy {other:?} (expected fedavg, mst_ad, density_ad, oracle or geomed)"
                )))
            }
        })
    }
}

impl TryFrom<String> for AggregationPolicy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AggregationPolicy> for String {
    fn from(p: AggregationPolicy) -> Self {
        p.to_string()
    }
}

fn check_lengths(d: usize, updates: &[&GradientUpdate]) -> Result<()> {
    match updates.iter().find(|u| u.delta.len() != d) {
        Some(u) => Err(Error::LengthMismatch {
            client: u.client_id,
            expected: d,
            found: u.delta.len(),
        }),
        None => Ok(()),
    }
}

/// `global + sum(p_i * delta_i)` over the non-excluded updates, with
/// `p_i = num_samples_i / sum(num_samples)` taken over those same updates.
///
/// Updates are reduced in ascending client-id order.
pub fn weighted_aggregate(
    global: &ModelParams,
    updates: &[GradientUpdate],
    excluded: &BTreeSet<usize>,
) -> Result<ModelParams> {
    let mut included: Vec<&GradientUpdate> = updates
        .iter()
        .filter(|u| !excluded.contains(&u.client_id))
        .collect();
    if included.is_empty() {
        return Err(Error::AllExcluded);
    }
    included.sort_by_key(|u| u.client_id);
    check_lengths(global.len(), &included)?;

    let total: usize = included.iter().map(|u| u.num_samples).sum();
    let mut step = vec![0.0; global.len()];
    for u in &included {
        let p = u.num_samples as f64 / total as f64;
        for (s, d) in step.iter_mut().zip(&u.delta) {
            *s += p * d;
        }
    }
    let values = global.values().iter().zip(&step).map(|(w, s)| w + s).collect();
    ModelParams::new(*global.spec(), values)
}

/// Result of the Weiszfeld iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricMedian {
    pub point: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Lower bound on distances so an iterate sitting on a data point stays finite.
const WEISZFELD_EPS: f64 = 1e-12;

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Weiszfeld iteration from the coordinate-wise mean, stopping once a step
/// moves less than `tol` or after `max_iters` steps.
pub fn geometric_median(
    updates: &[GradientUpdate],
    tol: f64,
    max_iters: usize,
) -> Result<GeometricMedian> {
    let Some(first) = updates.first() else {
        return Err(Error::TooFewUpdates { needed: 1, found: 0 });
    };
    let d = first.delta.len();
    let refs: Vec<&GradientUpdate> = updates.iter().collect();
    check_lengths(d, &refs)?;

    let mut x: Vec<f64> = (0..d)
        .map(|k| updates.iter().map(|u| u.delta[k]).sum::<f64>() / updates.len() as f64)
        .collect();
    for iteration in 1..=max_iters {
        let mut numer = vec![0.0; d];
        let mut denom = 0.0;
        for u in updates {
            let w = 1.0 / distance(&u.delta, &x).max(WEISZFELD_EPS);
            denom += w;
            for (n, v) in numer.iter_mut().zip(&u.delta) {
                *n += w * v;
            }
        }
        let next: Vec<f64> = numer.into_iter().map(|n| n / denom).collect();
        let moved = distance(&next, &x);
        x = next;
        if moved < tol {
            return Ok(GeometricMedian {
                point: x,
                iterations: iteration,
                converged: true,
            });
        }
    }
    warn!("geometric median did not reach tol {tol} in {max_iters} iterations");
    Ok(GeometricMedian {
        point: x,
        iterations: max_iters,
        converged: false,
    })
}

/// Applies a single aggregate delta to the global model.
pub fn apply_delta(global: &ModelParams, delta: &[f64]) -> Result<ModelParams> {
    if delta.len() != global.len() {
        return Err(Error::LengthMismatch {
            client: 0,
            expected: global.len(),
            found: delta.len(),
        });
    }
    let values = global.values().iter().zip(delta).map(|(w, d)| w + d).collect();
    ModelParams::new(*global.spec(), values)
}
