//! Solver configuration and the retry loop shared by randomized solvers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::DEFAULT_PRIME_BITS;
use crate::rng::attempt_seed;

/// Number of fresh-seed attempts before reporting a probabilistic failure.
pub const DEFAULT_ATTEMPTS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub seed: u64,
    pub prime_bits: u32,
    pub attempts: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { seed: 0, prime_bits: DEFAULT_PRIME_BITS, attempts: DEFAULT_ATTEMPTS }
    }
}

impl SolveConfig {
    pub fn with_seed(seed: u64) -> Self {
        SolveConfig { seed, ..Default::default() }
    }

    /// The same configuration with a derived seed.
    pub fn child(&self, salt: u64) -> Self {
        SolveConfig { seed: attempt_seed(self.seed, salt as usize + 1000), ..*self }
    }
}

/// Run `job` with successive attempt seeds until it succeeds or fails with a
/// non-retryable error. Returns the value and the number of retries used.
pub fn with_retries<T>(cfg: &SolveConfig, mut job: impl FnMut(u64) -> Result<T>) -> Result<(T, usize)> {
    let attempts = cfg.attempts.max(1);
    let mut last = String::new();
    for k in 0..attempts {
        match job(attempt_seed(cfg.seed, k)) {
            Ok(v) => return Ok((v, k)),
            Err(e) if e.is_retryable() => last = e.to_string(),
            Err(e) => return Err(e),
        }
    }
    Err(Error::Probabilistic { attempts, reason: last })
}
