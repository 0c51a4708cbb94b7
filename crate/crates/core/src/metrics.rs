//! Style loss, style-space membership and pixel-space diversity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{gram, FeatureMap, GramMatrix, Image};

/// `‖F·Fᵀ − G‖_F`.
pub fn style_loss(f: &FeatureMap, target: &GramMatrix) -> Result<f64> {
    if f.channels() != target.dim() {
        return Err(Error::DimensionMismatch {
            context: "feature channels vs Gram dimension",
            expected: target.dim(),
            found: f.channels(),
        });
    }
    gram(f).distance(target)
}

/// Whether `F` lies within `epsilon` of the style space of `G`.
///
/// `epsilon = 0` tests exact membership, which floating point cannot express;
/// an absolute slack of `1e-9 · max(1, ‖G‖_F)` is always added.
pub fn in_style_space(f: &FeatureMap, target: &GramMatrix, epsilon: f64) -> Result<bool> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be non-negative, got {epsilon}"
        )));
    }
    let slack = 1e-9 * target.frobenius_norm().max(1.0);
    Ok(style_loss(f, target)? <= epsilon + slack)
}

/// Diagnostic only: Frobenius distance between the Gram matrices of two
/// feature maps with equal channel counts.
pub fn gram_distance(a: &FeatureMap, b: &FeatureMap) -> Result<f64> {
    if a.channels() != b.channels() {
        return Err(Error::DimensionMismatch {
            context: "feature channels",
            expected: a.channels(),
            found: b.channels(),
        });
    }
    gram(a).distance(&gram(b))
}

/// Mean absolute RGB difference normalized to `[0, 1]`:
/// `‖x1 − x2‖₁ / (W · H · 255 · 3)`.
pub fn pixel_distance(x1: &Image, x2: &Image) -> Result<f64> {
    if x1.height() != x2.height() || x1.width() != x2.width() {
        return Err(Error::InvalidInput(format!(
            "image sizes differ: {}×{} vs {}×{}",
            x1.height(),
            x1.width(),
            x2.height(),
            x2.width()
        )));
    }
    let total: u64 = x1
        .pixels()
        .iter()
        .zip(x2.pixels())
        .map(|(a, b)| u64::from(a.abs_diff(*b)))
        .sum();
    Ok(total as f64 / (x1.pixels().len() as f64 * 255.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairDistance {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
}

/// Pairwise pixel-distance summary over a sample set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    #[serde(rename = "pairs")]
    pub pair_count: usize,
    pub mean_pixel_distance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_pair: Option<Vec<PairDistance>>,
}

impl DiversityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn without_pairs(mut self) -> Self {
        self.per_pair = None;
        self
    }
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Mean [`pixel_distance`] over all `n(n−1)/2` unordered pairs, with the
/// per-pair list in `(i, j)`, `i < j` lexicographic order.
pub fn diversity_score(samples: &[Image]) -> Result<DiversityReport> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples {
            found: samples.len(),
        });
    }
    let (h, w) = (samples[0].height(), samples[0].width());
    if let Some(bad) = samples
        .iter()
        .position(|s| s.height() != h || s.width() != w)
    {
        return Err(Error::InvalidInput(format!(
            "sample {bad} is {}×{}, expected {h}×{w}",
            samples[bad].height(),
            samples[bad].width()
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..samples.len())
        .flat_map(|a| (a + 1..samples.len()).map(move |b| (a, b)))
        .collect();
    let per_pair: Vec<PairDistance> = pairs
        .par_iter()
        .map(|&(a, b)| {
            pixel_distance(&samples[a], &samples[b]).map(|distance| PairDistance { a, b, distance })
        })
        .collect::<Result<_>>()?;
    let mean = compensated_sum(per_pair.iter().map(|p| p.distance)) / per_pair.len() as f64;
    Ok(DiversityReport {
        pair_count: per_pair.len(),
        mean_pixel_distance: mean,
        per_pair: Some(per_pair),
    })
}
