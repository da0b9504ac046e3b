//! Seeded random streams and stable seed derivation.
//!
//! Determinism contract: every stochastic component takes a `ChaCha8Rng`
//! (or a `u64` seed it expands itself), and derived seeds are produced by
//! [`SeedMix`], an FNV-1a accumulator over the parts that identify the
//! consumer. Hashes are platform-independent, so identical configurations
//! replay identically everywhere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Incremental FNV-1a mixer for deriving child seeds from structured keys.
#[derive(Debug, Clone, Copy)]
pub struct SeedMix(u64);

impl SeedMix {
    pub fn new(root: u64) -> Self {
        SeedMix(FNV_OFFSET).u64(root)
    }

    pub fn u64(mut self, v: u64) -> Self {
        for byte in v.to_le_bytes() {
            self.0 ^= u64::from(byte);
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
        self
    }

    pub fn str(mut self, s: &str) -> Self {
        for byte in s.as_bytes() {
            self.0 ^= u64::from(*byte);
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
        // Length terminator so ("ab","c") and ("a","bc") differ.
        self.u64(s.len() as u64)
    }

    pub fn build(self) -> u64 {
        self.0
    }
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal draw via Box-Muller (one value per call).
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // 1 - u keeps the argument of ln strictly positive.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * core::f64::consts::PI * u2).cos()
}

/// In-place Fisher-Yates shuffle.
pub fn shuffle<T>(items: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}

/// Draws `k` distinct elements, uniformly, preserving draw order.
pub fn sample_distinct<T: Copy>(items: &[T], k: usize, rng: &mut ChaCha8Rng) -> alloc::vec::Vec<T> {
    let mut pool: alloc::vec::Vec<T> = items.to_vec();
    let k = k.min(pool.len());
    let mut out = alloc::vec::Vec::with_capacity(k);
    for _ in 0..k {
        let j = rng.gen_range(0..pool.len());
        out.push(pool.swap_remove(j));
    }
    out
}
