//! Array types for feature maps, Gram matrices and images.
//!
//! A [`FeatureMap`] stores the vectorized `C × (H·W)` layout directly,
//! row-major, with `H` and `W` kept as metadata so a map can be decoded back
//! to its spatial shape. All arithmetic is `f64`.

mod npy;
mod ppm;

use std::io::Write;
use std::path::Path;

use crate::dense;
use crate::error::{Error, Result};

pub use npy::{decode_array, encode_array, load_array, save_array, Array};
pub use ppm::{decode_ppm, encode_ppm, load_image, save_image};

/// Vectorized feature map: `channels` rows by `height · width` columns.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::InvalidInput(format!(
                "feature map dimensions must be positive, got {channels}×{height}×{width}"
            )));
        }
        let expected = channels * height * width;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "feature map data length",
                expected,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite feature value at index {pos}"
            )));
        }
        Ok(FeatureMap {
            channels,
            height,
            width,
            data,
        })
    }

    /// Builds a `C × n` map (height 1) from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let channels = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(channels * width);
        for row in rows {
            let row = row.as_ref();
            if row.len() != width {
                return Err(Error::DimensionMismatch {
                    context: "feature map row length",
                    expected: width,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        FeatureMap::new(channels, 1, width, data)
    }

    /// Same shape as `self`, new values. Used by the transforms, whose outputs
    /// are finite whenever their inputs are.
    pub(crate) fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        FeatureMap::new(self.channels, self.height, self.width, data)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of spatial positions, `H · W`.
    pub fn positions(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, channel: usize) -> &[f64] {
        let n = self.positions();
        &self.data[channel * n..(channel + 1) * n]
    }

    pub fn get(&self, channel: usize, position: usize) -> f64 {
        self.data[channel * self.positions() + position]
    }

    pub fn same_shape(&self, other: &FeatureMap) -> bool {
        self.channels == other.channels && self.height == other.height && self.width == other.width
    }

    /// Per-channel arithmetic means.
    pub fn channel_means(&self) -> Vec<f64> {
        let n = self.positions() as f64;
        (0..self.channels)
            .map(|c| self.row(c).iter().sum::<f64>() / n)
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        dense::frobenius(&self.data)
    }

    /// Frobenius norm of `self − other`.
    pub fn distance(&self, other: &FeatureMap) -> Result<f64> {
        ensure_same_shape(self, other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }
}

pub(crate) fn ensure_same_shape(a: &FeatureMap, b: &FeatureMap) -> Result<()> {
    if a.channels != b.channels {
        return Err(Error::DimensionMismatch {
            context: "feature map channels",
            expected: a.channels,
            found: b.channels,
        });
    }
    if a.positions() != b.positions() || a.height != b.height {
        return Err(Error::DimensionMismatch {
            context: "feature map positions",
            expected: a.positions(),
            found: b.positions(),
        });
    }
    Ok(())
}

/// Symmetric `dim × dim` second-moment matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl GramMatrix {
    /// Validates size, finiteness and symmetry
    /// (`|G[i][j] − G[j][i]| ≤ 1e-9 · max(1, |G[i][j]|)`).
    ///
    /// Positive semi-definiteness is checked by [`crate::linalg::sym_eig`],
    /// which has the spectrum at hand.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput(
                "Gram matrix dimension must be positive".into(),
            ));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                context: "Gram matrix data length",
                expected: dim * dim,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite Gram entry".into()));
        }
        for i in 0..dim {
            for j in i + 1..dim {
                let (a, b) = (data[i * dim + j], data[j * dim + i]);
                if (a - b).abs() > 1e-9 * a.abs().max(1.0) {
                    return Err(Error::InvalidInput(format!(
                        "Gram matrix is not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
            }
        }
        Ok(GramMatrix { dim, data })
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        GramMatrix { dim, data }
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let dim = values.len();
        let mut data = vec![0.0; dim * dim];
        for (i, v) in values.iter().enumerate() {
            data[i * dim + i] = *v;
        }
        GramMatrix::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        dense::frobenius(&self.data)
    }

    /// Frobenius norm of `self − other`.
    pub fn distance(&self, other: &GramMatrix) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                context: "Gram matrix dimension",
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    /// `‖self − other‖_F / ‖other‖_F`.
    pub fn relative_error(&self, reference: &GramMatrix) -> Result<f64> {
        Ok(self.distance(reference)? / reference.frobenius_norm())
    }
}

/// Per-channel means removed by [`center`].
#[derive(Clone, Debug, PartialEq)]
pub struct MeanVector(Vec<f64>);

impl MeanVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite mean".into()));
        }
        Ok(MeanVector(values))
    }

    pub fn zeros(dim: usize) -> Self {
        MeanVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// 8-bit RGB image, row-major `H × W × 3`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    height: usize,
    width: usize,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(height: usize, width: usize, pixels: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidInput(format!(
                "image dimensions must be positive, got {height}×{width}"
            )));
        }
        if pixels.len() != height * width * 3 {
            return Err(Error::DimensionMismatch {
                context: "image pixel count",
                expected: height * width * 3,
                found: pixels.len(),
            });
        }
        Ok(Image {
            height,
            width,
            pixels,
        })
    }

    pub fn filled(height: usize, width: usize, rgb: [u8; 3]) -> Result<Self> {
        let pixels = rgb
            .iter()
            .copied()
            .cycle()
            .take(height * width * 3)
            .collect();
        Image::new(height, width, pixels)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, y: usize, x: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }
}

/// Dense row-major matrix without structural guarantees; the 2-D payload of
/// an array file.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix data length",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

impl From<GramMatrix> for Matrix {
    fn from(g: GramMatrix) -> Self {
        Matrix {
            rows: g.dim,
            cols: g.dim,
            data: g.data,
        }
    }
}

impl TryFrom<Matrix> for GramMatrix {
    type Error = Error;

    fn try_from(m: Matrix) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::DimensionMismatch {
                context: "Gram matrix must be square; columns",
                expected: m.rows,
                found: m.cols,
            });
        }
        GramMatrix::new(m.rows, m.data)
    }
}

/// `G = F · Fᵀ`.
pub fn gram(f: &FeatureMap) -> GramMatrix {
    let c = f.channels();
    GramMatrix {
        dim: c,
        data: dense::gram(f.data(), c, f.positions()),
    }
}

/// Subtracts each channel's mean; returns the centered map and the means.
pub fn center(f: &FeatureMap) -> (FeatureMap, MeanVector) {
    let means = f.channel_means();
    let n = f.positions();
    let mut data = f.data.clone();
    for (c, m) in means.iter().enumerate() {
        for v in &mut data[c * n..(c + 1) * n] {
            *v -= m;
        }
    }
    let centered = FeatureMap {
        channels: f.channels,
        height: f.height,
        width: f.width,
        data,
    };
    (centered, MeanVector(means))
}

/// Adds `mean[c]` to every entry of channel `c`.
pub fn recenter(f: &FeatureMap, mean: &MeanVector) -> Result<FeatureMap> {
    if mean.dim() != f.channels() {
        return Err(Error::DimensionMismatch {
            context: "mean vector length vs feature channels",
            expected: f.channels(),
            found: mean.dim(),
        });
    }
    let n = f.positions();
    let mut data = f.data.clone();
    for (c, m) in mean.values().iter().enumerate() {
        for v in &mut data[c * n..(c + 1) * n] {
            *v += m;
        }
    }
    f.with_data(data)
}

/// RGB image to a 3-channel map scaled to `[0, 1]` (channel-planar).
pub fn image_to_feature(img: &Image) -> FeatureMap {
    let n = img.height * img.width;
    let mut data = vec![0.0; 3 * n];
    for (i, px) in img.pixels.chunks_exact(3).enumerate() {
        for c in 0..3 {
            data[c * n + i] = f64::from(px[c]) / 255.0;
        }
    }
    FeatureMap {
        channels: 3,
        height: img.height,
        width: img.width,
        data,
    }
}

/// Clamps to `[0, 1]` and quantizes each value by `round(v · 255)`.
pub fn feature_to_image(f: &FeatureMap) -> Result<Image> {
    if f.channels() != 3 {
        return Err(Error::DimensionMismatch {
            context: "image feature channels",
            expected: 3,
            found: f.channels(),
        });
    }
    let n = f.positions();
    let mut pixels = vec![0u8; 3 * n];
    for i in 0..n {
        for c in 0..3 {
            pixels[i * 3 + c] = quantize(f.data[c * n + i]);
        }
    }
    Image::new(f.height, f.width, pixels)
}

pub(crate) fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes `bytes` to a temporary file beside `path`, then renames it into
/// place. A failed write leaves no partial file at `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut builder = tempfile::Builder::new();
    // Temp files default to owner-only access; outputs should not.
    #[cfg(unix)]
    builder.permissions(std::os::unix::fs::PermissionsExt::from_mode(0o644));
    let mut tmp = builder.tempfile_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
