//! Seed derivation and the RNG used everywhere.
//!
//! All randomness in the crate flows through [`SeedRng`] instances created
//! from explicit `u64` seeds.  Sub-streams (scene layout, camera pose,
//! object shape, ...) are derived with [`derive_seed`] so that every
//! consumer owns an independent, reproducible stream regardless of call
//! order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The one RNG type used across the crate.
pub type SeedRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeedRng {
    SeedRng::seed_from_u64(seed)
}

/// Derive an independent child seed from `(seed, tag)`.
///
/// SplitMix64 finalizer over the combined words; cheap, stateless and
/// stable across platforms.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
