//! Counter-based random streams.
//!
//! A stream is identified by `(seed, index)`. The ChaCha8 key is derived from
//! the 64-bit master seed with `SeedableRng::seed_from_u64`, the ChaCha stream
//! id is set to `index` and the block counter starts at zero. ChaCha exposes
//! 2^64 streams per key, so every trial or worker gets its own sequence with no
//! coordination and any implementation using the same derivation reproduces
//! the samples bit for bit.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::prob::Prob;

#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    index: u64,
    rng: ChaCha8Rng,
    bits: u64,
    bits_left: u32,
}

impl RandomStream {
    pub fn new(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        RandomStream { seed, index, rng, bits: 0, bits_left: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn take_bits(&mut self, k: u32) -> u64 {
        debug_assert!(k <= 63);
        if k == 0 {
            return 0;
        }
        if self.bits_left < k {
            self.bits = self.rng.next_u64();
            self.bits_left = 64;
        }
        let out = self.bits & ((1u64 << k) - 1);
        self.bits >>= k;
        self.bits_left -= k;
        out
    }

    /// Exact Bernoulli(num/den) draw.
    ///
    /// Dyadic probabilities consume only `log2(den)` random bits per draw; other
    /// denominators use unbiased rejection sampling on `0..den`.
    pub fn bernoulli(&mut self, p: Prob) -> bool {
        let den = p.denom();
        if den.is_power_of_two() && den < (1 << 63) {
            self.take_bits(den.trailing_zeros()) < p.numer()
        } else {
            self.rng.random_range(0..den) < p.numer()
        }
    }
}
