//! Multi-level stylization over an exactly invertible patch codec.
//!
//! Each [`CodecLevel`] cuts the image into non-overlapping `p × p` patches,
//! flattens each patch to a vector of `3p²` values (index
//! `channel · p² + dy · p + dx`) and rotates it by a seeded orthonormal basis.
//! Patch `(by, bx)` becomes feature column `by · (W/p) + bx`. Decoding applies
//! the transposed basis, so `decode ∘ encode` is the identity up to rounding.
//!
//! [`stylize`] runs one PWCT per level, deepest (largest patch) first, on
//! images kept in `[0, 1]` floating point; only the final result is clamped
//! and quantized. Level `i` draws its noise from seed
//! `mix64(noise_seed, i)` (see [`crate::rng::mix64`]).

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense;
use crate::error::{Error, Result};
use crate::linalg::{orthogonal_noise, NoiseSpec, DEFAULT_THRESHOLD};
use crate::rng::mix64;
use crate::tensor::{feature_to_image, image_to_feature, FeatureMap, Image};
use crate::transform::{pwct, PwctParams};

/// Rows per parallel work unit. Fixed so results do not depend on the
/// number of worker threads.
const PATCH_CHUNK: usize = 256;

/// Seeds of the codec bases in [`default_config`], deepest level first.
pub const DEFAULT_LEVEL_SEEDS: [u64; 3] = [0xC0DE_0008, 0xC0DE_0004, 0xC0DE_0002];

/// One level of the patch codec.
#[derive(Clone, Debug, PartialEq)]
pub struct CodecLevel {
    patch: usize,
    level_seed: u64,
    /// `C × C` row-major orthonormal basis, `C = 3p²`.
    basis: Vec<f64>,
}

impl CodecLevel {
    pub fn new(patch: usize, level_seed: u64) -> Result<Self> {
        if patch == 0 {
            return Err(Error::InvalidParameter(
                "patch size must be at least 1".into(),
            ));
        }
        let c = 3 * patch * patch;
        let basis = orthogonal_noise(c, &NoiseSpec::standard_normal(level_seed))?;
        Ok(CodecLevel {
            patch,
            level_seed,
            basis: basis.data().to_vec(),
        })
    }

    pub fn patch(&self) -> usize {
        self.patch
    }

    pub fn channels(&self) -> usize {
        3 * self.patch * self.patch
    }

    pub fn level_seed(&self) -> u64 {
        self.level_seed
    }

    pub fn basis(&self) -> &[f64] {
        &self.basis
    }
}

/// Encodes a 3-channel `[0, 1]` pixel map (as produced by
/// [`image_to_feature`]) into patch features.
pub fn encode_pixels(pixels: &FeatureMap, level: &CodecLevel) -> Result<FeatureMap> {
    if pixels.channels() != 3 {
        return Err(Error::DimensionMismatch {
            context: "pixel map channels",
            expected: 3,
            found: pixels.channels(),
        });
    }
    let p = level.patch;
    let (h, w) = (pixels.height(), pixels.width());
    if h % p != 0 || w % p != 0 {
        return Err(Error::InvalidInput(format!(
            "image {h}×{w} is not divisible by patch size {p}"
        )));
    }
    let (hp, wp) = (h / p, w / p);
    let c = level.channels();
    let n = hp * wp;
    let src = pixels.data();

    // Patch-major layout: row `k` holds patch `k`.
    let mut patches = vec![0.0; n * c];
    patches.par_chunks_mut(c).enumerate().for_each(|(k, row)| {
        let (by, bx) = (k / wp, k % wp);
        for ch in 0..3 {
            for dy in 0..p {
                let y = by * p + dy;
                for dx in 0..p {
                    row[ch * p * p + dy * p + dx] = src[ch * h * w + y * w + bx * p + dx];
                }
            }
        }
    });

    // featuresᵀ = patches · basisᵀ
    let mut coded = vec![0.0; n * c];
    coded
        .par_chunks_mut(PATCH_CHUNK * c)
        .zip(patches.par_chunks(PATCH_CHUNK * c))
        .for_each(|(out, block)| {
            let rows = block.len() / c;
            out.copy_from_slice(&dense::matmul_bt(block, &level.basis, rows, c, c));
        });
    FeatureMap::new(c, hp, wp, dense::transpose(&coded, n, c))
}

/// Inverse of [`encode_pixels`], without clamping.
pub fn decode_pixels(features: &FeatureMap, level: &CodecLevel) -> Result<FeatureMap> {
    let c = level.channels();
    if features.channels() != c {
        return Err(Error::DimensionMismatch {
            context: "feature channels vs codec level",
            expected: c,
            found: features.channels(),
        });
    }
    let p = level.patch;
    let (hp, wp) = (features.height(), features.width());
    let (h, w) = (hp * p, wp * p);
    let n = hp * wp;

    // patchesᵀ = featuresᵀ · basis
    let coded = dense::transpose(features.data(), c, n);
    let mut patches = vec![0.0; n * c];
    patches
        .par_chunks_mut(PATCH_CHUNK * c)
        .zip(coded.par_chunks(PATCH_CHUNK * c))
        .for_each(|(out, block)| {
            let rows = block.len() / c;
            out.copy_from_slice(&dense::matmul(block, &level.basis, rows, c, c));
        });

    let mut data = vec![0.0; 3 * h * w];
    data.par_chunks_mut(w).enumerate().for_each(|(line, out)| {
        let (ch, y) = (line / h, line % h);
        let (by, dy) = (y / p, y % p);
        for (x, v) in out.iter_mut().enumerate() {
            let (bx, dx) = (x / p, x % p);
            *v = patches[(by * wp + bx) * c + ch * p * p + dy * p + dx];
        }
    });
    FeatureMap::new(3, h, w, data)
}

pub fn encode(img: &Image, level: &CodecLevel) -> Result<FeatureMap> {
    encode_pixels(&image_to_feature(img), level)
}

/// Decodes, clamps to `[0, 1]` and quantizes.
pub fn decode(features: &FeatureMap, level: &CodecLevel) -> Result<Image> {
    feature_to_image(&decode_pixels(features, level)?)
}

/// Level entry of the JSON configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSpec {
    pub patch: usize,
    pub seed: u64,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

/// Multi-level stylization settings; serialized as the JSON config document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Deepest (largest patch) first.
    pub levels: Vec<LevelSpec>,
    /// Diversity strength per level.
    pub lambda: Vec<f64>,
    pub alpha: f64,
    pub noise_seed: u64,
    #[serde(default = "default_threshold")]
    pub content_threshold: f64,
    #[serde(default = "default_threshold")]
    pub style_threshold: f64,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::Config("at least one level is required".into()));
        }
        if self.lambda.len() != self.levels.len() {
            return Err(Error::Config(format!(
                "{} lambda values for {} levels",
                self.lambda.len(),
                self.levels.len()
            )));
        }
        if let Some(level) = self.levels.iter().find(|l| l.patch == 0) {
            return Err(Error::Config(format!("invalid patch size {}", level.patch)));
        }
        self.params_for(0)
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        for (i, l) in self.lambda.iter().enumerate() {
            if !(0.0..=1.0).contains(l) {
                return Err(Error::Config(format!("lambda[{i}] = {l} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// PWCT parameters for level `index`.
    pub fn params_for(&self, index: usize) -> PwctParams {
        PwctParams {
            lambda: self.lambda[index],
            alpha: self.alpha,
            content_threshold: self.content_threshold,
            style_threshold: self.style_threshold,
            noise: NoiseSpec::standard_normal(mix64(self.noise_seed, index as u64)),
        }
    }

    /// Side length every padded image must be a multiple of.
    pub fn block_size(&self) -> usize {
        self.levels.iter().fold(1, |acc, l| lcm(acc, l.patch))
    }
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// Perturb only the deepest level.
    DeepOnly,
    AllLevels,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deep-only" => Ok(Profile::DeepOnly),
            "all-levels" => Ok(Profile::AllLevels),
            other => Err(Error::InvalidParameter(format!(
                "unknown profile '{other}' (expected deep-only or all-levels)"
            ))),
        }
    }
}

/// Three levels with patches 8, 4, 2; `λ = 0.6` at the deepest level only
/// (`DeepOnly`) or at every level (`AllLevels`); `α = 0.6`; noise seed 0.
pub fn default_config(profile: Profile) -> PipelineConfig {
    let patches = [8, 4, 2];
    let levels = patches
        .iter()
        .zip(DEFAULT_LEVEL_SEEDS)
        .map(|(&patch, seed)| LevelSpec { patch, seed })
        .collect();
    let lambda = match profile {
        Profile::DeepOnly => vec![0.6, 0.0, 0.0],
        Profile::AllLevels => vec![0.6; 3],
    };
    PipelineConfig {
        levels,
        lambda,
        alpha: 0.6,
        noise_seed: 0,
        content_threshold: DEFAULT_THRESHOLD,
        style_threshold: DEFAULT_THRESHOLD,
    }
}

/// Replicates the last row and column out to `height × width`.
fn pad_edges(f: &FeatureMap, height: usize, width: usize) -> Result<FeatureMap> {
    if height == f.height() && width == f.width() {
        return Ok(f.clone());
    }
    let (h, w) = (f.height(), f.width());
    let mut data = Vec::with_capacity(f.channels() * height * width);
    for c in 0..f.channels() {
        let plane = f.row(c);
        for y in 0..height {
            let sy = y.min(h - 1);
            for x in 0..width {
                data.push(plane[sy * w + x.min(w - 1)]);
            }
        }
    }
    FeatureMap::new(f.channels(), height, width, data)
}

fn crop(f: &FeatureMap, height: usize, width: usize) -> Result<FeatureMap> {
    if height == f.height() && width == f.width() {
        return Ok(f.clone());
    }
    let w = f.width();
    let mut data = Vec::with_capacity(f.channels() * height * width);
    for c in 0..f.channels() {
        let plane = f.row(c);
        for y in 0..height {
            data.extend_from_slice(&plane[y * w..y * w + width]);
        }
    }
    FeatureMap::new(f.channels(), height, width, data)
}

fn pad_to_block(f: &FeatureMap, block: usize) -> Result<FeatureMap> {
    pad_edges(
        f,
        f.height().div_ceil(block) * block,
        f.width().div_ceil(block) * block,
    )
}

/// Coarse-to-fine stylization of `content` with the statistics of `style`.
pub fn stylize(content: &Image, style: &Image, cfg: &PipelineConfig) -> Result<Image> {
    cfg.validate()?;
    let block = cfg.block_size();
    let mut current = pad_to_block(&image_to_feature(content), block)?;
    let style_pixels = pad_to_block(&image_to_feature(style), block)?;

    for (index, spec) in cfg.levels.iter().enumerate() {
        let level = CodecLevel::new(spec.patch, spec.seed)?;
        let fc = encode_pixels(&current, &level)?;
        let fs = encode_pixels(&style_pixels, &level)?;
        let out = pwct(&fc, &fs, &cfg.params_for(index))?;
        current = decode_pixels(&out, &level)?;
    }
    feature_to_image(&crop(&current, content.height(), content.width())?)
}
