//! Deterministic random streams.
//!
//! Every random draw in the crate comes from a ChaCha20 generator whose seed is
//! the SHA-256 digest of `(master_seed, stream_label, index)`. Parallel trials
//! therefore never share state and produce the same numbers regardless of how
//! they are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha20Rng;

/// 32-byte seed for substream `index` of `label` under `master_seed`.
pub fn substream_seed(master_seed: u64, label: &str, index: u64) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    seed
}

/// 64-bit seed derived the same way; used for per-trial seeds stored in reports.
pub fn derive_seed(master_seed: u64, label: &str, index: u64) -> u64 {
    let bytes = substream_seed(master_seed, label, index);
    u64::from_le_bytes(bytes[..8].try_into().unwrap())
}

pub fn stream(master_seed: u64, label: &str, index: u64) -> StreamRng {
    ChaCha20Rng::from_seed(substream_seed(master_seed, label, index))
}
