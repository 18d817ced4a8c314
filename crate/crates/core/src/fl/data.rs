//! Labeled samples, client shards, synthetic blobs and non-IID partitioning.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use super::attack::FlipPair;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: usize,
}

/// The local training data of one client.
#[derive(Debug, Clone, PartialEq)]
pub struct DataShard {
    pub owner: usize,
    pub samples: Vec<Sample>,
}

impl DataShard {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of samples per label.
    pub fn label_counts(&self) -> BTreeMap<usize, usize> {
        let mut counts = BTreeMap::new();
        for s in &self.samples {
            *counts.entry(s.label).or_insert(0) += 1;
        }
        counts
    }
}

/// Gaussian clouds of `per_class` samples around one random center per class.
///
/// Centers are drawn from N(0, 1) per coordinate and samples add N(0, spread²)
/// noise. Output is class-major: all of class 0, then class 1, and so on.
pub fn synth_blobs(
    num_classes: usize,
    input_dim: usize,
    per_class: usize,
    spread: f64,
    seed: u64,
) -> Result<Vec<Sample>> {
    if num_classes < 2 {
        return Err(Error::InvalidData(format!(
            "need at least 2 classes, got {num_classes}"
        )));
    }
    if input_dim == 0 || spread.is_nan() || spread < 0.0 {
        return Err(Error::InvalidData(format!(
            "bad blob shape: input_dim {input_dim}, spread {spread}"
        )));
    }
    let mut rng = seed::rng(seed, &[seed::DATA]);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let centers: Vec<Vec<f64>> = (0..num_classes)
        .map(|_| (0..input_dim).map(|_| unit.sample(&mut rng)).collect())
        .collect();

    let mut samples = Vec::with_capacity(num_classes * per_class);
    for (label, center) in centers.iter().enumerate() {
        for _ in 0..per_class {
            let features = center
                .iter()
                .map(|c| c + spread * unit.sample(&mut rng))
                .collect();
            samples.push(Sample { features, label });
        }
    }
    Ok(samples)
}

/// Splits `total` into integer parts proportional to `weights` by the
/// largest-remainder method. Ties in the remainder favour the lower index.
fn largest_remainder(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Non-IID split of `dataset` into `n` shards using per-class Dirichlet(alpha)
/// client proportions.
///
/// Each class is shuffled and cut into consecutive runs sized by the drawn
/// proportions. Any client left empty then takes one sample from the largest
/// shard (lowest owner id on ties).
pub fn dirichlet_partition(
    dataset: Vec<Sample>,
    n: usize,
    alpha: f64,
    seed: u64,
) -> Result<Vec<DataShard>> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::InvalidAlpha(alpha));
    }
    if n == 0 || dataset.len() < n {
        return Err(Error::NotEnoughSamples {
            samples: dataset.len(),
            clients: n,
        });
    }
    let mut rng = seed::rng(seed, &[seed::PARTITION]);
    let gamma = Gamma::new(alpha, 1.0).map_err(|_| Error::InvalidAlpha(alpha))?;

    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, s) in dataset.iter().enumerate() {
        by_class.entry(s.label).or_default().push(i);
    }

    let mut owner_of = vec![0usize; dataset.len()];
    for indices in by_class.values_mut() {
        indices.shuffle(&mut rng);
        let mut weights: Vec<f64> = (0..n).map(|_| gamma.sample(&mut rng)).collect();
        if weights.iter().sum::<f64>() == 0.0 {
            // Tiny alpha can underflow every draw; the limit is one owner per class.
            weights[0] = 1.0;
        }
        let counts = largest_remainder(&weights, indices.len());
        let mut cursor = 0;
        for (client, &count) in counts.iter().enumerate() {
            for &i in &indices[cursor..cursor + count] {
                owner_of[i] = client;
            }
            cursor += count;
        }
    }

    let mut shards: Vec<DataShard> = (0..n)
        .map(|owner| DataShard {
            owner,
            samples: Vec::new(),
        })
        .collect();
    // Visit samples class by class in shuffled order so shard contents are
    // independent of the input ordering within a class.
    let mut slots: Vec<Option<Sample>> = dataset.into_iter().map(Some).collect();
    for indices in by_class.values() {
        for &i in indices {
            let sample = slots[i].take().expect("each sample assigned once");
            shards[owner_of[i]].samples.push(sample);
        }
    }

    while let Some(empty) = shards.iter().position(|s| s.is_empty()) {
        let donor = (0..n)
            .max_by(|&a, &b| shards[a].len().cmp(&shards[b].len()).then(b.cmp(&a)))
            .expect("n > 0");
        let moved = shards[donor].samples.pop().expect("donor holds >= 2 samples");
        shards[empty].samples.push(moved);
    }
    Ok(shards)
}

/// Swaps labels `a` and `b` throughout the shard. Features are untouched.
pub fn flip_labels(shard: &DataShard, pair: FlipPair, num_classes: usize) -> Result<DataShard> {
    pair.validate(num_classes)?;
    let samples = shard
        .samples
        .iter()
        .map(|s| Sample {
            features: s.features.clone(),
            label: pair.apply(s.label),
        })
        .collect();
    Ok(DataShard {
        owner: shard.owner,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labeled(labels: &[usize]) -> DataShard {
        DataShard {
            owner: 3,
            samples: labels
                .iter()
                .enumerate()
                .map(|(i, &label)| Sample {
                    features: vec![i as f64],
                    label,
                })
                .collect(),
        }
    }

    fn labels(shard: &DataShard) -> Vec<usize> {
        shard.samples.iter().map(|s| s.label).collect()
    }

    #[test]
    fn flips_both_directions() {
        let shard = labeled(&[0, 1, 2, 1, 0]);
        let flipped = flip_labels(&shard, FlipPair::new(0, 1), 3).unwrap();
        assert_eq!(labels(&flipped), vec![1, 0, 2, 0, 1]);
        assert_eq!(flipped.owner, 3);
        for (a, b) in shard.samples.iter().zip(&flipped.samples) {
            assert_eq!(a.features, b.features);
        }
    }

    #[test]
    fn flip_without_targets_is_identity() {
        let shard = labeled(&[2, 3, 4]);
        assert_eq!(flip_labels(&shard, FlipPair::new(0, 1), 5).unwrap(), shard);
    }

    #[test]
    fn flip_rejects_bad_pairs() {
        let shard = labeled(&[0]);
        assert!(flip_labels(&shard, FlipPair::new(0, 0), 3).is_err());
        assert!(matches!(
            flip_labels(&shard, FlipPair::new(0, 3), 3),
            Err(Error::InvalidClass { class: 3, .. })
        ));
    }

    #[test]
    fn blobs_have_requested_shape() {
        let data = synth_blobs(10, 4, 100, 0.5, 1).unwrap();
        assert_eq!(data.len(), 1000);
        for c in 0..10 {
            assert_eq!(data.iter().filter(|s| s.label == c).count(), 100);
        }
        assert_eq!(data, synth_blobs(10, 4, 100, 0.5, 1).unwrap());
        assert_ne!(data, synth_blobs(10, 4, 100, 0.5, 2).unwrap());
    }

    #[test]
    fn zero_spread_collapses_to_centers() {
        let data = synth_blobs(3, 5, 7, 0.0, 9).unwrap();
        for c in 0..3 {
            let class: Vec<_> = data.iter().filter(|s| s.label == c).collect();
            assert!(class.iter().all(|s| s.features == class[0].features));
        }
        assert_ne!(data[0].features, data[7].features);
    }

    #[test]
    fn blobs_reject_single_class() {
        assert!(synth_blobs(1, 2, 3, 1.0, 0).is_err());
    }

    #[test]
    fn partition_rejects_bad_arguments() {
        let data = synth_blobs(2, 2, 5, 1.0, 0).unwrap();
        assert!(matches!(
            dirichlet_partition(data.clone(), 4, 0.0, 1),
            Err(Error::InvalidAlpha(_))
        ));
        assert!(matches!(
            dirichlet_partition(data, 11, 1.0, 1),
            Err(Error::NotEnoughSamples { .. })
        ));
    }

    #[test]
    fn huge_alpha_is_nearly_balanced() {
        let data = synth_blobs(10, 2, 1000, 1.0, 4).unwrap();
        let shards = dirichlet_partition(data, 50, 1e6, 4).unwrap();
        for s in &shards {
            let ratio = s.len() as f64 / 200.0;
            assert!((0.98..=1.02).contains(&ratio), "shard size {}", s.len());
        }
    }

    #[test]
    fn partition_is_deterministic() {
        let data = synth_blobs(10, 3, 60, 1.0, 42).unwrap();
        let a = dirichlet_partition(data.clone(), 50, 0.9, 42).unwrap();
        let b = dirichlet_partition(data, 50, 0.9, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tiny_shards_are_rebalanced() {
        let data = synth_blobs(2, 1, 10, 1.0, 0).unwrap();
        let shards = dirichlet_partition(data, 20, 0.01, 5).unwrap();
        assert!(shards.iter().all(|s| s.len() == 1));
    }

    #[test]
    fn largest_remainder_sums_exactly() {
        assert_eq!(largest_remainder(&[1.0, 1.0, 1.0], 10), vec![4, 3, 3]);
        assert_eq!(largest_remainder(&[0.5, 0.25, 0.25], 3), vec![1, 1, 1]);
    }

    proptest! {
        #[test]
        fn partition_preserves_every_sample(
            n in 1usize..30,
            classes in 2usize..6,
            per_class in 5usize..40,
            alpha in 0.05f64..5.0,
            seed in any::<u64>(),
        ) {
            let data = synth_blobs(classes, 2, per_class, 1.0, seed).unwrap();
            prop_assume!(data.len() >= n);
            let shards = dirichlet_partition(data.clone(), n, alpha, seed).unwrap();
            prop_assert_eq!(shards.len(), n);
            prop_assert!(shards.iter().all(|s| !s.is_empty()));
            prop_assert_eq!(shards.iter().map(|s| s.len()).sum::<usize>(), data.len());
            for c in 0..classes {
                let total: usize = shards
                    .iter()
                    .map(|s| s.label_counts().get(&c).copied().unwrap_or(0))
                    .sum();
                prop_assert_eq!(total, per_class);
            }
            // Disjoint: each sample's features appear exactly once across shards.
            let mut seen: Vec<Vec<u64>> = shards
                .iter()
                .flat_map(|s| s.samples.iter().map(|x| x.features.iter().map(|f| f.to_bits()).collect()))
                .collect();
            let mut expected: Vec<Vec<u64>> = data
                .iter()
                .map(|x| x.features.iter().map(|f| f.to_bits()).collect())
                .collect();
            seen.sort();
            expected.sort();
            prop_assert_eq!(seen, expected);
        }

        #[test]
        fn flip_is_an_involution(labels in prop::collection::vec(0usize..6, 0..50), a in 0usize..6, b in 0usize..6) {
            prop_assume!(a != b);
            let shard = labeled(&labels);
            let pair = FlipPair::new(a, b);
            let twice = flip_labels(&flip_labels(&shard, pair, 6).unwrap(), pair, 6).unwrap();
            prop_assert_eq!(twice, shard);
        }
    }
}
