//! Detection of collusive label-flipping clients in federated learning.
//!
//! Colluding attackers train on the same poisoned labels, so their weight
//! updates correlate with each other more than with anyone else. This crate
//! builds the client correlation graph each round and splits it two ways:
//!
//! - [`detect::mst_ad`] cuts the lightest edge of the maximum spanning tree
//!   and flags the subtree with the higher mean edge weight;
//! - [`detect::density_ad`] peels vertices whose removal raises the mean edge
//!   weight and flags the denser of the peeled and surviving sets.
//!
//! Around the detectors sits a small simulator ([`fl`], [`aggregate`],
//! [`harness`]) with non-IID Dirichlet partitioning, bidirectional label
//! flipping, softmax-regression clients, detector-gated FedAvg and a
//! geometric-median baseline, plus the metrics ([`metrics`]) used to judge
//! mitigation: accuracy, macro F1, attack success rate and earliest
//! detection round.
//!
//! ```
//! use corrguard::detect::mst_ad;
//! use corrguard::gradients::CorrelationMatrix;
//!
//! // clients 2 and 3 collude
//! let m = CorrelationMatrix::from_fn(4, |i, j| match (i, j) {
//!     (2, 3) => 0.9,
//!     (0, 1) => 0.5,
//!     _ => 0.1,
//! })?;
//! let flagged: Vec<usize> = mst_ad(&m)?.attackers.into_iter().collect();
//! assert_eq!(flagged, [2, 3]);
//! # Ok::<(), corrguard::Error>(())
//! ```

pub mod aggregate;
pub mod detect;
mod error;
pub mod fl;
pub mod gradients;
pub mod harness;
pub mod metrics;
pub mod seed;

pub use error::{Error, Result};
