//! Deterministic seed derivation and RNG construction.
//!
//! Every random decision in the engine flows through a [`ChaCha8Rng`] whose
//! seed is derived from a master seed plus a list of string parts naming the
//! decision site (e.g. `["split", "3"]`). Derivation hashes a canonical
//! string with SHA-256 and takes the first 8 bytes little-endian, so streams
//! for different sites are independent and adding a new site never perturbs
//! an existing one.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derive a child seed from `master` and a path of string parts.
///
/// The canonical string is `master` in decimal followed by each part, all
/// separated by `/`. Parts must not be chosen so that distinct paths collide
/// (none of the engine's fixed part names contain `/`).
pub fn derive_seed(master: u64, parts: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_string().as_bytes());
    for part in parts {
        hasher.update(b"/");
        hasher.update(part.as_bytes());
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Construct the RNG for a derived stream.
pub fn rng_from(master: u64, parts: &[&str]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, parts))
}

/// Round half away from zero, for non-negative fractions of dataset sizes.
///
/// Used everywhere a count is derived from a fraction (test split sizes,
/// init pool sizes, batch sizes) so that all components agree on rounding.
pub fn round_size(x: f64) -> usize {
    debug_assert!(x >= 0.0);
    (x + 0.5).floor() as usize
}
