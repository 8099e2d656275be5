//! Seeded random source.
//!
//! Every stochastic routine in the crate draws from [`SeededRng`], a SplitMix64 stream. A
//! uniform `f64` is `(next_u64 >> 11) * 2^-53`, which lets ports in other languages
//! reproduce the same streams from the same seeds.

use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

pub type SeededRng = SplitMix64;

pub fn seeded(seed: u64) -> SeededRng {
    SplitMix64::seed_from_u64(seed)
}

/// Seed of an independent stream for a sub-task (graph, rewards, stickiness, ...) of one
/// experiment seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn substream(seed: u64, tag: u64) -> SeededRng {
    seeded(derive_seed(seed, tag))
}
