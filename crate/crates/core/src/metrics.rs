//! Test-set metrics, attack success rate and earliest detection.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fl::{FlipPair, ModelParams, Sample};

/// Counts indexed `[true_class][predicted_class]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        Self {
            counts: vec![vec![0; num_classes]; num_classes],
        }
    }

    pub fn from_pairs(num_classes: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut m = Self::new(num_classes);
        for (truth, predicted) in pairs {
            m.record(truth, predicted);
        }
        m
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_total(&self, truth: usize) -> u64 {
        self.counts[truth].iter().sum()
    }

    pub fn column_total(&self, predicted: usize) -> u64 {
        self.counts.iter().map(|r| r[predicted]).sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.num_classes()).map(|c| self.counts[c][c]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.total() as f64
    }

    /// Unweighted mean of per-class F1; a class with no true or predicted
    /// samples contributes 0.
    pub fn macro_f1(&self) -> f64 {
        let k = self.num_classes();
        let sum: f64 = (0..k)
            .map(|c| {
                let tp = self.counts[c][c];
                let denom = self.row_total(c) + self.column_total(c);
                if denom == 0 {
                    0.0
                } else {
                    2.0 * tp as f64 / denom as f64
                }
            })
            .sum();
        sum / k as f64
    }

    fn merge(mut self, other: &ConfusionMatrix) -> Self {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub confusion: ConfusionMatrix,
}

/// Argmax predictions of `model` over `test_set`.
pub fn evaluate(model: &ModelParams, test_set: &[Sample]) -> Result<Evaluation> {
    if test_set.is_empty() {
        return Err(Error::InvalidData("empty test set".into()));
    }
    let k = model.spec().num_classes;
    if let Some(s) = test_set.iter().find(|s| s.label >= k) {
        return Err(Error::InvalidClass {
            class: s.label,
            num_classes: k,
        });
    }
    let confusion = test_set
        .par_chunks(512)
        .map(|chunk| {
            ConfusionMatrix::from_pairs(k, chunk.iter().map(|s| (s.label, model.predict(&s.features))))
        })
        .collect::<Vec<_>>()
        .iter()
        .fold(ConfusionMatrix::new(k), ConfusionMatrix::merge);
    Ok(Evaluation {
        accuracy: confusion.accuracy(),
        macro_f1: confusion.macro_f1(),
        confusion,
    })
}

/// Which misclassifications of targeted samples count as attack successes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsrMode {
    /// Any wrong prediction on a sample of either flipped class.
    #[default]
    AnyError,
    /// Only predictions of the partner class (a as b, b as a).
    FlipDirectionOnly,
}

/// Fraction of test samples from the two flipped classes that the model gets wrong.
pub fn attack_success_rate(confusion: &ConfusionMatrix, pair: FlipPair, mode: AsrMode) -> Result<f64> {
    pair.validate(confusion.num_classes())?;
    let (a, b) = (pair.a, pair.b);
    let targeted = confusion.row_total(a) + confusion.row_total(b);
    if targeted == 0 {
        return Err(Error::NoTargetedSamples);
    }
    let hits = match mode {
        AsrMode::AnyError => {
            (confusion.row_total(a) - confusion.get(a, a)) + (confusion.row_total(b) - confusion.get(b, b))
        }
        AsrMode::FlipDirectionOnly => confusion.get(a, b) + confusion.get(b, a),
    };
    Ok(hits as f64 / targeted as f64)
}

/// First round (1-based) at which the flagged set matched the attackers exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EarliestDetection {
    Round(usize),
    Undetected,
}

impl EarliestDetection {
    pub fn round(self) -> Option<usize> {
        match self {
            EarliestDetection::Round(r) => Some(r),
            EarliestDetection::Undetected => None,
        }
    }
}

impl fmt::Display for EarliestDetection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EarliestDetection::Round(r) => write!(f, "{r}"),
            EarliestDetection::Undetected => f.write_str("*"),
        }
    }
}

impl Serialize for EarliestDetection {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            EarliestDetection::Round(r) => serializer.serialize_u64(*r as u64),
            EarliestDetection::Undetected => serializer.serialize_str("*"),
        }
    }
}

pub fn earliest_detection(per_round_exactness: &[bool]) -> EarliestDetection {
    per_round_exactness
        .iter()
        .position(|&exact| exact)
        .map_or(EarliestDetection::Undetected, |i| EarliestDetection::Round(i + 1))
}

/// Everything measured for one round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub train_loss: f64,
    pub test_accuracy: f64,
    pub macro_f1: f64,
    pub asr: f64,
    /// Flagged set equals the true attacker set. Always false for policies
    /// that do not detect.
    pub detection_exact: bool,
    pub n_excluded: usize,
    pub confusion: ConfusionMatrix,
}
