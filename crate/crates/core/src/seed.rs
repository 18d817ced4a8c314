//! Deterministic seed derivation.
//!
//! Every random stream in a simulation is keyed by the global seed plus a
//! purpose tag and any indices (client, round). Streams never depend on the
//! order in which threads consume them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const DATA: u64 = 1;
pub(crate) const PARTITION: u64 = 2;
pub(crate) const ATTACKERS: u64 = 3;
pub(crate) const INIT: u64 = 4;
pub(crate) const TRAIN: u64 = 5;
pub(crate) const SWEEP: u64 = 6;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `base` with each part in turn.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub(crate) fn rng(base: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, parts))
}
