//! Local minibatch SGD on a client's shard.

use rand::seq::SliceRandom;

use super::data::{DataShard, Sample};
use super::model::ModelParams;
use crate::error::{Error, Result};
use crate::gradients::GradientUpdate;
use crate::seed;

/// Local optimisation settings plus the seed of this client's shuffling stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyper {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalTraining {
    pub update: GradientUpdate,
    /// Mean cross-entropy of the trained local model over its own shard.
    pub loss: f64,
}

/// Trains a copy of `global` on `shard` and reports `local - global`.
pub fn local_train(global: &ModelParams, shard: &DataShard, hyper: &Hyper) -> Result<LocalTraining> {
    if shard.is_empty() {
        return Err(Error::InvalidData(format!("client {} has no data", shard.owner)));
    }
    if hyper.lr.is_nan() || hyper.lr < 0.0 || hyper.batch_size == 0 {
        return Err(Error::Config(format!(
            "bad hyperparameters: lr {}, batch_size {}",
            hyper.lr, hyper.batch_size
        )));
    }

    let mut local = global.clone();
    let mut grad = vec![0.0; local.len()];
    let mut order: Vec<&Sample> = shard.samples.iter().collect();
    let mut rng = seed::rng(hyper.seed, &[seed::TRAIN]);

    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(hyper.batch_size) {
            let loss = local.loss_and_gradient(batch, &mut grad);
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    client: shard.owner,
                    loss,
                });
            }
            for (w, g) in local.values_mut().iter_mut().zip(&grad) {
                *w -= hyper.lr * g;
            }
        }
    }

    let loss = local.loss(&shard.samples);
    if !loss.is_finite() {
        return Err(Error::Diverged {
            client: shard.owner,
            loss,
        });
    }
    let delta = local
        .values()
        .iter()
        .zip(global.values())
        .map(|(l, g)| l - g)
        .collect();
    Ok(LocalTraining {
        update: GradientUpdate::new(shard.owner, delta, shard.len()),
        loss,
    })
}
