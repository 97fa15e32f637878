//! Deterministic random streams.
//!
//! A [`RandomStream`] is identified by a 64-bit key. Child streams are derived
//! from `(key, label)` without advancing the parent, so a computation split
//! into blocks draws the same numbers no matter how blocks are scheduled.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct RandomStream {
    key: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self::from_key(mix64(seed ^ 0x6A09_E667_F3BC_C908))
    }

    fn from_key(key: u64) -> Self {
        Self {
            key,
            rng: ChaCha8Rng::seed_from_u64(key),
        }
    }

    /// Child stream for `label`. Does not consume from `self`.
    pub fn derive(&self, label: u64) -> Self {
        Self::from_key(mix64(self.key ^ mix64(label.wrapping_add(0x9E37_79B9_7F4A_7C15))))
    }

    pub fn derive_named(&self, name: &str) -> Self {
        self.derive(fnv1a64(name.as_bytes()))
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in the open interval `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Fisher-Yates shuffle of `0..n` into `out`.
    pub fn permutation(&mut self, n: usize, out: &mut Vec<usize>) {
        out.clear();
        out.extend(0..n);
        for i in (1..n).rev() {
            let j = self.index(i + 1);
            out.swap(i, j);
        }
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
