//! Seeded random numbers for instance generation.
//!
//! Uniforms come from ChaCha20 (`rand_chacha::ChaCha20Rng::seed_from_u64`),
//! converted to `[0, 1)` by the standard 53-bit mantissa rule. Normal deviates
//! use the basic Box-Muller transform, one pair per two uniforms, so the
//! stream is reproducible from the algorithm description alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub struct Gaussian {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl Gaussian {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Standard normal deviate.
    pub fn sample(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - u keeps the logarithm argument in (0, 1].
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}
