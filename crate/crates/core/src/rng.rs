//! Seeded generator for reproducible random corpora.
//!
//! Corpora are drawn from SplitMix64 (Steele, Lea & Flood 2014) seeded with a
//! single 64-bit value. Uniform reals take the top 53 bits of each output:
//! `u = (next >> 11) * 2^-53`, so draws lie in `[0, 1)` and are reproducible by
//! any implementation of the same generator.

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand_core::RngCore;
use rand_xoshiro::rand_core::SeedableRng;
use rand_xoshiro::SplitMix64;

#[derive(Debug, Clone)]
pub struct CorpusRng {
    inner: SplitMix64,
}

impl CorpusRng {
    pub fn new(seed: u64) -> Self {
        Self { inner: SplitMix64::seed_from_u64(seed) }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Uniform draw in the closed disk of the given radius around the origin.
    pub fn disk(&mut self, radius: f64) -> Complex64 {
        let r = radius * self.unit().sqrt();
        let t = core::f64::consts::TAU * self.unit();
        Complex64::from_polar(r, t)
    }

    /// Uniform draw with modulus in `[r_lo, r_hi)` and uniform argument.
    pub fn annulus(&mut self, r_lo: f64, r_hi: f64) -> Complex64 {
        let r = self.uniform(r_lo, r_hi);
        let t = core::f64::consts::TAU * self.unit();
        Complex64::from_polar(r, t)
    }
}
