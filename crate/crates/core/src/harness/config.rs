//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aggregate::AggregationPolicy;
use crate::error::{Error, Result};
use crate::fl::{AttackConfig, FlipPair};
use crate::gradients::Centering;
use crate::metrics::AsrMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "defaults::n_clients")]
    pub n_clients: usize,
    /// Fraction of clients that collude (the `m` of an A-m scenario).
    #[serde(default)]
    pub attacker_fraction: f64,
    #[serde(default = "defaults::flip_pair")]
    pub flip_pair: FlipPair,
    #[serde(default = "defaults::rounds")]
    pub rounds: usize,
    /// Dirichlet concentration of the non-IID split.
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub hyper: TrainSettings,
    #[serde(default = "defaults::policy")]
    pub policy: AggregationPolicy,
    #[serde(default)]
    pub correlation_centering: Centering,
    #[serde(default)]
    pub asr_mode: AsrMode,
    #[serde(default)]
    pub geomed: GeoMedSettings,
    /// Include every round's correlation matrix in `detections.json`.
    #[serde(default)]
    pub record_correlations: bool,
    #[serde(default = "defaults::output_dir")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    /// Gaussian blobs; the first `train_per_class` samples of each class
    /// train, the next `test_per_class` test.
    Synth {
        #[serde(default = "defaults::num_classes")]
        num_classes: usize,
        #[serde(default = "defaults::input_dim")]
        input_dim: usize,
        #[serde(default = "defaults::train_per_class")]
        train_per_class: usize,
        #[serde(default = "defaults::test_per_class")]
        test_per_class: usize,
        #[serde(default = "defaults::spread")]
        spread: f64,
    },
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        /// Keep only the first N training samples.
        #[serde(default)]
        train_limit: Option<usize>,
        #[serde(default)]
        test_limit: Option<usize>,
    },
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig::Synth {
            num_classes: defaults::num_classes(),
            input_dim: defaults::input_dim(),
            train_per_class: defaults::train_per_class(),
            test_per_class: defaults::test_per_class(),
            spread: defaults::spread(),
        }
    }
}

impl DatasetConfig {
    /// Resolves relative IDX paths against `base`.
    fn rebase(&mut self, base: &Path) {
        if let DatasetConfig::Idx {
            train_images,
            train_labels,
            test_images,
            test_labels,
            ..
        } = self
        {
            for p in [train_images, train_labels, test_images, test_labels] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Width of the optional ReLU hidden layer; softmax regression when absent.
    #[serde(default)]
    pub hidden: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            lr: 0.1,
            epochs: 1,
            batch_size: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeoMedSettings {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for GeoMedSettings {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iters: 500,
        }
    }
}

mod defaults {
    use super::*;

    pub fn num_classes() -> usize {
        10
    }
    pub fn input_dim() -> usize {
        20
    }
    pub fn train_per_class() -> usize {
        600
    }
    pub fn test_per_class() -> usize {
        100
    }
    pub fn spread() -> f64 {
        1.0
    }
    pub fn n_clients() -> usize {
        50
    }
    pub fn flip_pair() -> FlipPair {
        FlipPair::new(0, 1)
    }
    pub fn rounds() -> usize {
        30
    }
    pub fn alpha() -> f64 {
        0.9
    }
    pub fn policy() -> AggregationPolicy {
        AggregationPolicy::FedAvg
    }
    pub fn output_dir() -> PathBuf {
        PathBuf::from("out")
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("every field has a default")
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file; relative dataset and output paths are taken
    /// relative to the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            config.dataset.rebase(base);
            if config.output_dir.is_relative() {
                config.output_dir = base.join(&config.output_dir);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.rounds == 0 {
            return bad("rounds must be >= 1".into());
        }
        if self.n_clients < 2 {
            return bad(format!("need at least 2 clients, got {}", self.n_clients));
        }
        if self.policy.detector().is_some() && self.n_clients < 3 {
            return bad(format!("{} needs at least 3 clients", self.policy));
        }
        if self.alpha.is_nan() || self.alpha <= 0.0 {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        if !(0.0..1.0).contains(&self.attacker_fraction) {
            return bad(format!(
                "attacker_fraction must lie in [0, 1), got {}",
                self.attacker_fraction
            ));
        }
        let count = AttackConfig::attacker_count(self.attacker_fraction, self.n_clients);
        if self.attacker_fraction > 0.0 && count < 2 {
            return bad(format!(
                "attacker_fraction {} of {} clients gives {count} attacker(s); need at least 2",
                self.attacker_fraction, self.n_clients
            ));
        }
        if self.hyper.lr.is_nan() || self.hyper.lr < 0.0 || self.hyper.batch_size == 0 {
            return bad(format!("bad hyperparameters {:?}", self.hyper));
        }
        if self.model.hidden == Some(0) {
            return bad("hidden layer width must be positive".into());
        }
        if let DatasetConfig::Synth {
            num_classes,
            train_per_class,
            test_per_class,
            ..
        } = &self.dataset
        {
            self.flip_pair.validate(*num_classes)?;
            if *train_per_class == 0 || *test_per_class == 0 {
                return bad("synthetic dataset needs train and test samples".into());
            }
        }
        Ok(())
    }
}
