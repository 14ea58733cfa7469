//! Seeded uniform stream and Box-Muller Gaussian increments.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Identity of the uniform generator, recorded alongside every trajectory.
pub const GENERATOR: &str = "chacha8/box-muller";

/// Deterministic uniform generator. Identical `(seed, stream)` pairs produce
/// identical streams; independent paths use distinct streams of one seed.
#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
            spare: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform on (0, 1] with 53 bits of resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        let bits = self.inner.next_u64() >> 11;
        (bits as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
    }

    /// Two independent standard normals from two fresh uniforms.
    #[inline]
    pub fn gauss_pair(&mut self) -> (f64, f64) {
        let u1 = self.uniform();
        let u2 = self.uniform();
        box_muller(u1, u2)
    }

    /// One standard normal; the second half of each Box-Muller pair is kept
    /// for the next call.
    #[inline]
    pub fn gauss(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (z1, z2) = self.gauss_pair();
        self.spare = Some(z2);
        z1
    }
}

/// `z1 = sqrt(-2 ln u1) cos(2 pi u2)`, `z2 = sqrt(-2 ln u1) sin(2 pi u2)`.
#[inline]
pub fn box_muller(u1: f64, u2: f64) -> (f64, f64) {
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (r * c, r * s)
}
