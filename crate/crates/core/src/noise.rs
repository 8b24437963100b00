//! Counter-based Gaussian noise keyed by `(seed, particle, step)`.
//!
//! Each particle owns a ChaCha8 stream (`set_stream(m)`) and every step
//! consumes a fixed number of 32-bit words, so the draw for step `n` sits at
//! word `n · words_per_step` regardless of thread scheduling or schedule.

use std::f64::consts::TAU;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct NoiseStream {
    rng: ChaCha8Rng,
    dim: usize,
}

/// Two `u64` draws per Box–Muller pair, two words each.
pub fn words_per_step(dim: usize) -> u128 {
    4 * dim.div_ceil(2) as u128
}

#[inline]
fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl NoiseStream {
    pub fn new(seed: u64, particle: u64, dim: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(particle);
        Self { rng, dim }
    }

    /// Positions the stream at the start of `step`.
    pub fn seek(&mut self, step: usize) {
        self.rng.set_word_pos(step as u128 * words_per_step(self.dim));
    }

    /// Fills `out` (length `dim`) with the standard normals of the next step.
    pub fn next_step(&mut self, out: &mut [f64]) {
        let mut i = 0;
        while i < self.dim {
            let u1 = open_unit(self.rng.next_u64());
            let u2 = open_unit(self.rng.next_u64());
            let r = (-2.0 * u1.ln()).sqrt();
            let (s, c) = (TAU * u2).sin_cos();
            out[i] = r * c;
            if i + 1 < self.dim {
                out[i + 1] = r * s;
            }
            i += 2;
        }
    }
}

/// Standard normals `ξ[m][n][i]` for the whole grid, flattened.
pub fn noise_increments(seed: u64, particles: usize, steps: usize, dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; particles * steps * dim];
    for (m, block) in out.chunks_mut(steps * dim).enumerate() {
        let mut stream = NoiseStream::new(seed, m as u64, dim);
        for row in block.chunks_mut(dim) {
            stream.next_step(row);
        }
    }
    out
}
