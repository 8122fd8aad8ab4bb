//! Seed derivation tree.
//!
//! Every random stream is a `ChaCha8Rng` seeded from a `u64`. Child seeds are
//! derived from a parent seed and a child index with one SplitMix64 step:
//!
//! ```text
//! child = splitmix64(parent ^ splitmix64(index + 0x9E37_79B9_7F4A_7C15))
//! ```
//!
//! The Monte Carlo harness uses the tree
//! `master -> order -> trial -> {SYSTEM, EXCITATION, GA}`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SYSTEM: u64 = 0;
pub const EXCITATION: u64 = 1;
pub const GA: u64 = 2;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn derive(parent: u64, index: u64) -> u64 {
    splitmix64(parent ^ splitmix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
