//! Seed handling.
//!
//! Every trial draws from its own ChaCha stream. The stream for trial `i`
//! under root seed `root` is seeded with `split_seed(root, i)`, which is
//! the SplitMix64 finalizer applied to `root ^ i`. This rule is part of the
//! stable interface: adding trials never changes the draws of earlier ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The RNG used throughout the crate.
pub type DpRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `index`-th child stream of `root`.
pub fn split_seed(root: u64, index: u64) -> u64 {
    mix64(root ^ index)
}

pub fn rng_from_seed(seed: u64) -> DpRng {
    DpRng::seed_from_u64(seed)
}

/// RNG for the `index`-th trial of an experiment rooted at `root`.
pub fn trial_rng(root: u64, index: u64) -> DpRng {
    rng_from_seed(split_seed(root, index))
}
