//! Seeded standard-normal variates.
//!
//! The generator is ChaCha8 seeded from a `u64`; normals come from the
//! Box–Muller transform, consuming two uniforms per pair and returning the
//! cosine branch first. Keeping this explicit (rather than relying on a
//! distribution crate's sampler) pins the exact sequence a seed produces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct NormalSampler {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Next `N(0, 1)` draw.
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - U maps [0, 1) onto (0, 1], keeping ln() finite
        let u1 = 1.0 - self.rng.gen::<f64>();
        let u2: f64 = self.rng.gen();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }
}
