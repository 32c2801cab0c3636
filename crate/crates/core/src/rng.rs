//! Seeded random number generation.
//!
//! Every random draw in the pipeline goes through [`Rng`], a ChaCha stream
//! cipher with 8 rounds. Its output is specified bit-for-bit independently of
//! platform and word size, so a dataset seed reproduces the same fields,
//! weights and projections everywhere. Child seeds for per-item streams are
//! derived with [`derive_seed`].

use rand::SeedableRng;

pub type Rng = rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for item `index` of a collection seeded with `base`.
///
/// `mix64(mix64(base) + golden * (index + 1))`, the SplitMix64 stream
/// construction, so neighbouring indices give unrelated seeds.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    mix64(mix64(base).wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index.wrapping_add(1))))
}
