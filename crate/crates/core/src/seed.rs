//! Deterministic seed derivation. Every random stream is keyed by a master
//! seed plus a label, so results never depend on processing order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// First 8 bytes (little endian) of SHA-256 over the seed and label.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let digest = Sha256::new().chain_update(master.to_le_bytes()).chain_update(label.as_bytes()).finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

pub fn rng_for(master: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, label))
}
