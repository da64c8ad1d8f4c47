//! Seeded random streams.
//!
//! Splitting rule: replica `i` of an ensemble with master seed `s` draws from
//! `ChaCha8Rng::seed_from_u64(s)` with its stream id set to `i`. Streams are
//! disjoint 2^64-block sequences of the same key, so replicas never overlap
//! and the output of replica `i` does not depend on how many other replicas
//! run or on which worker runs it.
//!
//! Independent sub-experiments inside one run take their master seed from
//! [`derive_seed`], which hashes the run's master seed with a label.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type ReplicaRng = ChaCha8Rng;

pub fn replica_rng(master_seed: u64, replica: u64) -> ReplicaRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replica);
    rng
}

/// First 8 bytes (little endian) of `SHA-256(master_seed.to_le_bytes() || label)`.
pub fn derive_seed(master_seed: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}
