//! Non-IID partitioning and a 0<->1 label flip on the attackers' shards.
//!
//!     cargo run --example label_flip_attack

use corrguard::fl::{dirichlet_partition, flip_labels, synth_blobs, AttackConfig, FlipPair};

fn main() -> corrguard::Result<()> {
    let data = synth_blobs(10, 20, 100, 1.0, 5)?;
    let shards = dirichlet_partition(data, 10, 0.9, 5)?;
    let attack = AttackConfig::resolve(FlipPair::new(0, 1), 0.3, 10, 5)?;
    println!("attackers: {:?}", attack.attacker_ids);

    for shard in &shards {
        let poisoned = if attack.is_attacker(shard.owner) {
            flip_labels(shard, attack.flip_pair, 10)?
        } else {
            shard.clone()
        };
        let counts = poisoned.label_counts();
        let c = |k| counts.get(&k).copied().unwrap_or(0);
        println!(
            "client {:>2} {:>8}  {:>3} samples  class0={:<3} class1={:<3} classes={:?}",
            shard.owner,
            if attack.is_attacker(shard.owner) { "attacker" } else { "normal" },
            poisoned.len(),
            c(0),
            c(1),
            counts.keys().collect::<Vec<_>>()
        );
    }
    Ok(())
}
