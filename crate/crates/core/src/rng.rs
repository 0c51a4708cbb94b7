//! Seeded random streams.
//!
//! Every random quantity in the engine comes from [`SeededRng`], a thin layer
//! over the ChaCha20 stream cipher used as a counter-based generator
//! (`rand_chacha::ChaCha20Rng`). A 64-bit seed is expanded to the 256-bit key
//! with `SeedableRng::seed_from_u64`, and independent streams under one key are
//! selected with the ChaCha stream word. Given `(seed, stream)` the sequence of
//! `u64` draws is identical on every platform.
//!
//! Conversions to floating point are fixed here rather than borrowed from a
//! distribution crate:
//!
//! * uniform `[0, 1)`: the top 53 bits of a `u64` draw times 2⁻⁵³;
//! * standard normal: Box–Muller on two uniform draws, both outputs used.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

/// Deterministic generator for a `(seed, stream)` pair.
#[derive(Clone, Debug)]
pub struct SeededRng {
    inner: ChaCha20Rng,
    spare_normal: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        SeededRng {
            inner,
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[low, high)`.
    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.next_f64()
    }

    /// Standard normal draw via Box–Muller.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // u1 in (0, 1] keeps the logarithm finite.
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and an index:
/// `splitmix64(seed ^ splitmix64(index))`.
///
/// Used to give every stylization level its own noise stream from one
/// user-facing seed.
pub fn mix64(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}
