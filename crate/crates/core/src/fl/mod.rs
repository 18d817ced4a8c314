//! Federated-learning substrate: the shared classifier, client data shards,
//! dataset sources and the label-flipping attacker.

mod attack;
mod data;
mod idx;
mod model;
mod train;

pub use attack::{AttackConfig, FlipPair};
pub use data::{dirichlet_partition, flip_labels, synth_blobs, DataShard, Sample};
pub use idx::{load_idx, parse_idx_images, parse_idx_labels};
pub use model::{ModelParams, ModelSpec};
pub use train::{local_train, Hyper, LocalTraining};
