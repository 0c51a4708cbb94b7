//! Seeded synthetic test images.

use crate::rng::SeededRng;
use crate::tensor::Image;

/// A smooth, colourful `height × width` pattern: per channel, a sum of four
/// random plane waves plus mild pixel noise, mapped into `[0, 255]`.
/// Different seeds give unrelated patterns.
pub fn pattern_image(height: usize, width: usize, seed: u64) -> Image {
    let mut rng = SeededRng::new(seed);
    let waves: Vec<[f64; 4]> = (0..12)
        .map(|_| {
            let freq_y = rng.uniform(0.5, 6.0) / height as f64;
            let freq_x = rng.uniform(0.5, 6.0) / width as f64;
            let phase = rng.uniform(0.0, std::f64::consts::TAU);
            let amp = rng.uniform(0.2, 1.0);
            [freq_y, freq_x, phase, amp]
        })
        .collect();
    let mut pixels = Vec::with_capacity(height * width * 3);
    for y in 0..height {
        for x in 0..width {
            for c in 0..3 {
                let mut v = 0.0;
                let mut norm = 0.0;
                for [fy, fx, phase, amp] in &waves[c * 4..c * 4 + 4] {
                    let t = std::f64::consts::TAU * (fy * y as f64 + fx * x as f64) + phase;
                    v += amp * t.sin();
                    norm += amp;
                }
                let noise = 0.08 * rng.standard_normal();
                let unit = 0.5 + 0.45 * (v / norm) + noise;
                pixels.push((unit.clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
    }
    Image::new(height, width, pixels).expect("pattern dimensions are consistent")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_seed_dependent() {
        assert_eq!(pattern_image(8, 8, 1), pattern_image(8, 8, 1));
        assert_ne!(pattern_image(8, 8, 1), pattern_image(8, 8, 2));
    }
}
