//! Seeded randomness.
//!
//! Every random draw in the crate comes from ChaCha8 keyed by the user seed,
//! with a separate 64-bit stream per purpose. Two runs with the same
//! `(instance, seed)` therefore make identical draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Named streams so that independent stages never share draws.
pub mod stream {
    pub const PRIME: u64 = 1;
    pub const MATRIX: u64 = 2;
    pub const POINTS: u64 = 3;
    pub const LOWER: u64 = 4;
    pub const UPPER: u64 = 5;
    pub const EXTRACT: u64 = 6;
    pub const FLOW: u64 = 7;
}

pub fn rng_for(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derive a child seed for attempt `k` of a retried computation.
pub fn attempt_seed(seed: u64, attempt: usize) -> u64 {
    seed ^ (attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}
