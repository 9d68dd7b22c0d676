//! Seeded random streams.
//!
//! Every consumer of randomness derives its own ChaCha stream from an
//! instance seed and a fixed tag, so results never depend on call order
//! across subsystems or worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub mod tag {
    pub const SCENARIO: u64 = 1;
    pub const GAINS: u64 = 2;
    pub const CHANNELS: u64 = 3;
    pub const POWER: u64 = 4;
}

/// A ChaCha stream keyed by `(seed, tag)`.
pub fn stream(seed: u64, tag: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Platform-independent hash of a sequence of words.
pub fn stable_hash(words: &[u64]) -> u64 {
    words.iter().fold(0x243F_6A88_85A3_08D3, |acc, &w| mix(acc ^ mix(w)))
}
