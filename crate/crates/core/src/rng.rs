//! Keyed random streams for Monte Carlo replicates.
//!
//! Replicate `i` of a run with seed `s` draws from ChaCha8 seeded with
//! `seed_from_u64(s)` on stream `i`. Uniforms are `(⌊w / 2^11⌋ + 1/2) / 2^53`
//! for each 64-bit output `w`, and normals are `Φ⁻¹(u)`. Replicates are
//! therefore independent of how they are scheduled.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::gauss::normal_from_uniform;

const TWO_POW_MINUS_53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Debug, Clone)]
pub struct ReplicateStream {
    inner: ChaCha8Rng,
}

impl ReplicateStream {
    pub fn new(seed: u64, replicate: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(replicate);
        Self { inner }
    }

    /// Uniform on the open interval `(0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * TWO_POW_MINUS_53
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        normal_from_uniform(self.uniform())
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.normal();
        }
    }
}
