//! The federated training loop.

use std::collections::BTreeSet;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use super::config::{DatasetConfig, ExperimentConfig};
use crate::aggregate::{apply_delta, geometric_median, weighted_aggregate, AggregationPolicy};
use crate::detect::Diagnostics;
use crate::error::{Error, Result};
use crate::fl::{
    dirichlet_partition, flip_labels, load_idx, local_train, synth_blobs, AttackConfig, DataShard,
    Hyper, LocalTraining, ModelParams, ModelSpec, Sample,
};
use crate::gradients::{build_correlation_matrix, CorrelationMatrix, GradientUpdate};
use crate::metrics::{attack_success_rate, earliest_detection, evaluate, EarliestDetection, RoundRecord};
use crate::seed;

/// What the server decided in one round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundDetection {
    pub round: usize,
    /// Client ids the policy excluded.
    pub flagged: Vec<usize>,
    /// Client ids whose updates went into the aggregate.
    pub included: Vec<usize>,
    /// Every update was excluded, so the global model was carried forward.
    pub aborted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlations: Option<CorrelationMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    /// Earliest exact detection; absent for policies that do not detect.
    pub ed: Option<EarliestDetection>,
    pub final_train_loss: f64,
    pub final_accuracy: f64,
    pub final_macro_f1: f64,
    pub final_asr: f64,
    pub final_confusion: crate::metrics::ConfusionMatrix,
    pub aborted_rounds: Vec<usize>,
    pub attackers: Vec<usize>,
    pub shard_sizes: Vec<usize>,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub rounds: Vec<RoundRecord>,
    pub detections: Vec<RoundDetection>,
    pub summary: Summary,
}

/// Clients, their (possibly poisoned) shards, the held-out test set and
/// the current global model.
#[derive(Debug, Clone)]
pub struct Federation {
    config: ExperimentConfig,
    attack: AttackConfig,
    shards: Vec<DataShard>,
    test_set: Vec<Sample>,
    global: ModelParams,
}

fn load_dataset(config: &DatasetConfig, seed: u64) -> Result<(Vec<Sample>, Vec<Sample>)> {
    match config {
        DatasetConfig::Synth {
            num_classes,
            input_dim,
            train_per_class,
            test_per_class,
            spread,
        } => {
            let per_class = train_per_class + test_per_class;
            let all = synth_blobs(*num_classes, *input_dim, per_class, *spread, seed)?;
            let (mut train, mut test) = (Vec::new(), Vec::new());
            for (i, sample) in all.into_iter().enumerate() {
                if i % per_class < *train_per_class {
                    train.push(sample);
                } else {
                    test.push(sample);
                }
            }
            Ok((train, test))
        }
        DatasetConfig::Idx {
            train_images,
            train_labels,
            test_images,
            test_labels,
            train_limit,
            test_limit,
        } => {
            let mut train = load_idx(train_images, train_labels)?;
            let mut test = load_idx(test_images, test_labels)?;
            if let Some(n) = train_limit {
                train.truncate(*n);
            }
            if let Some(n) = test_limit {
                test.truncate(*n);
            }
            Ok((train, test))
        }
    }
}

impl Federation {
    /// Builds the dataset, partitions it, picks the attackers and poisons
    /// their shards.
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let (train, test_set) = load_dataset(&config.dataset, config.seed)?;
        let (Some(first), false) = (train.first(), test_set.is_empty()) else {
            return Err(Error::InvalidData("empty train or test set".into()));
        };
        let input_dim = first.features.len();
        if let Some(s) = train.iter().chain(&test_set).find(|s| s.features.len() != input_dim) {
            return Err(Error::InvalidData(format!(
                "feature length {} differs from {input_dim}",
                s.features.len()
            )));
        }
        let num_classes = 1 + train.iter().chain(&test_set).map(|s| s.label).max().unwrap_or(0);
        config.flip_pair.validate(num_classes)?;

        let mut spec = ModelSpec::softmax(input_dim, num_classes);
        if let Some(h) = config.model.hidden {
            spec = spec.with_hidden(h);
        }
        let global = spec.init(config.seed);

        let attack = AttackConfig::resolve(
            config.flip_pair,
            config.attacker_fraction,
            config.n_clients,
            config.seed,
        )?;
        let shards = dirichlet_partition(train, config.n_clients, config.alpha, config.seed)?
            .into_iter()
            .map(|shard| {
                if attack.is_attacker(shard.owner) {
                    flip_labels(&shard, attack.flip_pair, num_classes)
                } else {
                    Ok(shard)
                }
            })
            .collect::<Result<Vec<_>>>()?;

        info!(
            "federation: {} clients, {} attackers, {} parameters, policy {}",
            shards.len(),
            attack.attacker_ids.len(),
            global.len(),
            config.policy
        );
        Ok(Self {
            config,
            attack,
            shards,
            test_set,
            global,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn attack(&self) -> &AttackConfig {
        &self.attack
    }

    pub fn shards(&self) -> &[DataShard] {
        &self.shards
    }

    pub fn global(&self) -> &ModelParams {
        &self.global
    }

    /// Drops the given clients from the federation entirely.
    pub fn remove_clients(&mut self, ids: &BTreeSet<usize>) {
        self.shards.retain(|s| !ids.contains(&s.owner));
    }

    /// Attackers that are still taking part.
    pub fn present_attackers(&self) -> BTreeSet<usize> {
        self.shards
            .iter()
            .map(|s| s.owner)
            .filter(|id| self.attack.is_attacker(*id))
            .collect()
    }

    fn train_clients(&self, round: usize) -> Result<Vec<LocalTraining>> {
        let settings = self.config.hyper;
        self.shards
            .par_iter()
            .map(|shard| {
                let hyper = Hyper {
                    lr: settings.lr,
                    epochs: settings.epochs,
                    batch_size: settings.batch_size,
                    seed: seed::derive_seed(
                        self.config.seed,
                        &[seed::TRAIN, shard.owner as u64, round as u64],
                    ),
                };
                local_train(&self.global, shard, &hyper)
            })
            .collect()
    }

    /// Runs round `round` (1-based) and advances the global model.
    pub fn step(&mut self, round: usize) -> Result<(RoundRecord, RoundDetection)> {
        self.try_step(round).map_err(|e| Error::Round {
            round,
            source: Box::new(e),
        })
    }

    fn try_step(&mut self, round: usize) -> Result<(RoundRecord, RoundDetection)> {
        let trained = self.train_clients(round)?;
        let total_samples: usize = trained.iter().map(|t| t.update.num_samples).sum();
        let train_loss = trained
            .iter()
            .map(|t| t.loss * t.update.num_samples as f64)
            .sum::<f64>()
            / total_samples as f64;
        let updates: Vec<GradientUpdate> = trained.into_iter().map(|t| t.update).collect();
        let ids: Vec<usize> = updates.iter().map(|u| u.client_id).collect();

        let policy = self.config.policy;
        let correlations = if policy.detector().is_some() || self.config.record_correlations {
            Some(build_correlation_matrix(&updates, self.config.correlation_centering)?)
        } else {
            None
        };

        let (flagged, diagnostics) = match policy {
            AggregationPolicy::FedAvgWithDetector(detector) => {
                let matrix = correlations.as_ref().expect("computed for detectors");
                let result = detector.detect(matrix)?.relabel(&ids);
                (result.attackers, Some(result.diagnostics))
            }
            AggregationPolicy::Oracle => (self.present_attackers(), None),
            AggregationPolicy::FedAvg | AggregationPolicy::GeoMed => (BTreeSet::new(), None),
        };

        let (next, aborted) = match policy {
            AggregationPolicy::GeoMed => {
                let gm = geometric_median(
                    &updates,
                    self.config.geomed.tol,
                    self.config.geomed.max_iters,
                )?;
                (apply_delta(&self.global, &gm.point)?, false)
            }
            _ => match weighted_aggregate(&self.global, &updates, &flagged) {
                Ok(next) => (next, false),
                Err(Error::AllExcluded) => {
                    warn!("round {round}: every client flagged, keeping the previous global model");
                    (self.global.clone(), true)
                }
                Err(e) => return Err(e),
            },
        };
        self.global = next;

        let eval = evaluate(&self.global, &self.test_set)?;
        let asr = attack_success_rate(&eval.confusion, self.config.flip_pair, self.config.asr_mode)?;
        let detection_exact = policy.reports_detection() && flagged == self.present_attackers();

        let included: Vec<usize> = if aborted {
            Vec::new()
        } else {
            ids.iter().copied().filter(|id| !flagged.contains(id)).collect()
        };
        let record = RoundRecord {
            round,
            train_loss,
            test_accuracy: eval.accuracy,
            macro_f1: eval.macro_f1,
            asr,
            detection_exact,
            n_excluded: flagged.len(),
            confusion: eval.confusion,
        };
        let detection = RoundDetection {
            round,
            flagged: flagged.into_iter().collect(),
            included,
            aborted,
            diagnostics,
            correlations: correlations.filter(|_| self.config.record_correlations),
        };
        Ok((record, detection))
    }

    /// Runs every configured round.
    pub fn run(mut self) -> Result<ExperimentOutcome> {
        let mut rounds = Vec::with_capacity(self.config.rounds);
        let mut detections = Vec::with_capacity(self.config.rounds);
        for round in 1..=self.config.rounds {
            let (record, detection) = self.step(round)?;
            info!(
                "round {round}: acc {:.4} asr {:.4} loss {:.4} excluded {}{}",
                record.test_accuracy,
                record.asr,
                record.train_loss,
                record.n_excluded,
                if record.detection_exact { " (exact)" } else { "" }
            );
            rounds.push(record);
            detections.push(detection);
        }

        let last = rounds.last().expect("rounds >= 1");
        let exactness: Vec<bool> = rounds.iter().map(|r| r.detection_exact).collect();
        let summary = Summary {
            ed: self
                .config
                .policy
                .reports_detection()
                .then(|| earliest_detection(&exactness)),
            final_train_loss: last.train_loss,
            final_accuracy: last.test_accuracy,
            final_macro_f1: last.macro_f1,
            final_asr: last.asr,
            final_confusion: last.confusion.clone(),
            aborted_rounds: detections.iter().filter(|d| d.aborted).map(|d| d.round).collect(),
            attackers: self.present_attackers().into_iter().collect(),
            shard_sizes: self.shards.iter().map(|s| s.len()).collect(),
            config: self.config,
        };
        Ok(ExperimentOutcome {
            rounds,
            detections,
            summary,
        })
    }
}

/// Builds the federation from `config` and runs it to completion.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    Federation::new(config.clone())?.run()
}
