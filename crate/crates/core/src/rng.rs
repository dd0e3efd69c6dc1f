//! Named random substreams.
//!
//! Every consumer of randomness derives its own ChaCha stream from a
//! top-level seed, a stream name and an index, so subsystems can be
//! re-seeded independently and parallel chunks never share state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SimRng = ChaCha8Rng;

pub const STREAM_MODEL_INIT: &str = "model-init";
pub const STREAM_TRAIN: &str = "train";
pub const STREAM_CHANNEL: &str = "channel";
pub const STREAM_BLER: &str = "bler";

/// Derives an independent generator for `(seed, name, indices)`.
pub fn substream(seed: u64, name: &str, indices: &[u64]) -> SimRng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((name.len() as u64).to_le_bytes());
    hasher.update(name.as_bytes());
    for i in indices {
        hasher.update(i.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}
