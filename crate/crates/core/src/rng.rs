//! Seeded random streams.
//!
//! Every stream is a xoshiro256++ generator. Its 256-bit state is filled by
//! SplitMix64 starting from a 64-bit stream seed, and the stream seed for
//! index `i` under master seed `s` is `mix64(s + (i + 1) · 0x9E3779B97F4A7C15)`,
//! where `mix64` is the SplitMix64 output finalizer. Work split across
//! threads therefore draws the same numbers regardless of scheduling.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub type StreamRng = Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for sub-stream `index` of `seed`.
pub fn stream(seed: u64, index: u64) -> StreamRng {
    let s = mix64(seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)));
    Xoshiro256PlusPlus::seed_from_u64(s)
}

/// Uniform double in `[0, 1)` from the top 53 bits of one output.
pub fn unit_f64<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
