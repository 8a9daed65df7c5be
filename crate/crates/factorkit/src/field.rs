//! Prime fields `Z_p` with `p < 2^63`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Default lower bound exponent for random primes.
pub const DEFAULT_PRIME_BITS: u32 = 31;
pub const MAX_PRIME_BITS: u32 = 62;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeField {
    p: u64,
    small: bool,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if p < 2 || p >= 1 << 63 || !is_prime(p) {
            return Err(Error::input(format!("{p} is not a prime below 2^63")));
        }
        Ok(PrimeField { p, small: p < 1 << 32 })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        if self.small {
            a * b % self.p
        } else {
            ((a as u128 * b as u128) % self.p as u128) as u64
        }
    }

    pub fn pow(&self, mut a: u64, mut e: u64) -> u64 {
        let mut r = 1 % self.p;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        r
    }

    /// Multiplicative inverse; `a` must be nonzero.
    pub fn inv(&self, a: u64) -> u64 {
        debug_assert!(a != 0);
        self.pow(a, self.p - 2)
    }

    /// Reduce a signed integer.
    pub fn from_i64(&self, x: i64) -> u64 {
        let r = x.rem_euclid(self.p as i64);
        r as u64
    }

    pub fn random(&self, rng: &mut Rng) -> u64 {
        rng.gen_range(0..self.p)
    }

    pub fn random_nonzero(&self, rng: &mut Rng) -> u64 {
        rng.gen_range(1..self.p)
    }

    /// A random prime in `[L, 2L]` with `L = max(2^bits, phi^3, degree_bound + 2)`.
    pub fn choose(bits: u32, phi: usize, degree_bound: usize, rng: &mut Rng) -> Result<Self> {
        if !(2..=MAX_PRIME_BITS).contains(&bits) {
            return Err(Error::input(format!(
                "prime bits must lie in 2..={MAX_PRIME_BITS}, got {bits}"
            )));
        }
        let cube = (phi as u128).pow(3);
        let lower = (1u128 << bits).max(cube).max(degree_bound as u128 + 2);
        if lower > 1u128 << MAX_PRIME_BITS {
            return Err(Error::input("required prime exceeds 2^62"));
        }
        let lower = lower as u64;
        loop {
            let cand = rng.gen_range(lower..=2 * lower) | 1;
            if is_prime(cand) {
                return PrimeField::new(cand);
            }
        }
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &b in &BASES {
        if n % b == 0 {
            return n == b;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;

    #[test]
    fn primality_small() {
        let sieve: Vec<u64> = (0..200).filter(|&n| is_prime(n)).collect();
        let naive: Vec<u64> = (0..200u64)
            .filter(|&n| n >= 2 && (2..n).all(|d| n % d != 0))
            .collect();
        assert_eq!(sieve, naive);
        assert!(is_prime(2_147_483_647));
        assert!(!is_prime(3_215_031_751));
    }

    #[test]
    fn chosen_prime_in_range() {
        let mut rng = rng_for(7, 0);
        let f = PrimeField::choose(31, 10, 100, &mut rng).unwrap();
        assert!(f.p() >= 1 << 31 && f.p() <= 1 << 32);
        let g = PrimeField::choose(62, 10, 100, &mut rng).unwrap();
        assert!(g.p() >= 1 << 62);
    }

    #[test]
    fn arithmetic() {
        for p in [101u64, 2_147_483_647, 4_611_686_018_427_388_039] {
            let f = PrimeField::new(p).unwrap();
            let a = p - 3;
            assert_eq!(f.mul(a, f.inv(a)), 1);
            assert_eq!(f.add(a, 5), 2);
            assert_eq!(f.sub(2, 5), p - 3);
            assert_eq!(f.from_i64(-1), p - 1);
        }
    }
}
