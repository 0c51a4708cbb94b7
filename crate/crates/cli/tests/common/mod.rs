#![allow(dead_code)]

use dfp_core::rng::SeededRng;
use dfp_core::{FeatureMap, GramMatrix, Image};

/// `c × hw` feature with standard normal entries plus a per-channel offset.
pub fn random_feature(c: usize, hw: usize, seed: u64) -> FeatureMap {
    let mut rng = SeededRng::new(seed);
    let offsets: Vec<f64> = (0..c).map(|_| rng.uniform(-2.0, 2.0)).collect();
    let data = (0..c * hw)
        .map(|i| offsets[i / hw] + rng.standard_normal())
        .collect();
    FeatureMap::new(c, 1, hw, data).unwrap()
}

pub fn random_image(h: usize, w: usize, seed: u64) -> Image {
    let mut rng = SeededRng::new(seed);
    Image::new(h, w, (0..h * w * 3).map(|_| rng.next_u64() as u8).collect()).unwrap()
}

/// Row-major `m × k` times `k × n`, plain loops.
pub fn naive_matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for p in 0..k {
            let aip = a[i * k + p];
            for j in 0..n {
                out[i * n + j] += aip * b[p * n + j];
            }
        }
    }
    out
}

pub fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = a[i * cols + j];
        }
    }
    out
}

/// Largest `|A − I|` entry.
pub fn identity_error(a: &[f64], n: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((a[i * n + j] - target).abs());
        }
    }
    worst
}

pub fn gram_of(data: &[f64], c: usize, hw: usize) -> GramMatrix {
    let t = transpose(data, c, hw);
    let mut g = naive_matmul(data, &t, c, hw, c);
    for i in 0..c {
        for j in 0..i {
            let s = 0.5 * (g[i * c + j] + g[j * c + i]);
            g[i * c + j] = s;
            g[j * c + i] = s;
        }
    }
    GramMatrix::new(c, g).unwrap()
}
