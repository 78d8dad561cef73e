//! Seed derivation and generator construction.
//!
//! Every stochastic routine in the crate takes an explicit seed (or an
//! explicit generator). Independent streams are derived from a root seed by
//! hashing a stream label and an index into a 64-bit value:
//!
//! ```text
//! stream_seed = splitmix64(splitmix64(root ^ fnv1a(label)) ^ index)
//! ```
//!
//! The derivation is pure, so the same `(root, label, index)` triple always
//! yields the same stream on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label
        .bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

pub fn derive_seed(root: u64, label: &str, index: u64) -> u64 {
    splitmix64(splitmix64(root ^ fnv1a(label)) ^ index)
}

pub fn rng_from_seed(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(root: u64, label: &str, index: u64) -> StreamRng {
    rng_from_seed(derive_seed(root, label, index))
}
