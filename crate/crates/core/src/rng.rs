//! Counter-addressed Gaussian noise.
//!
//! Sample `k` of stream `s` under seed `seed` is a pure function of
//! `(seed, s, k)`: the ChaCha keystream is positioned directly at word `4k`,
//! so results never depend on the order or thread in which samples are drawn.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseStream {
    seed: u64,
    stream: u64,
}

impl NoiseStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Standard normal deviate number `k` of this stream.
    pub fn standard_normal(&self, k: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(u128::from(k) * 4);
        let u1 = unit_open(rng.next_u64());
        let u2 = unit_open(rng.next_u64());
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// `len` consecutive deviates scaled by `sigma`, starting at counter 0.
    pub fn normals(&self, len: usize, sigma: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        (0..len)
            .map(|_| {
                let u1 = unit_open(rng.next_u64());
                let u2 = unit_open(rng.next_u64());
                sigma * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect()
    }
}

// (0, 1], never zero so the logarithm stays finite.
fn unit_open(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
}
