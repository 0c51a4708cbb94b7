//! Random orthogonal matrices.
//!
//! A square matrix `N` is sampled from a seeded distribution and factorized;
//! its left orthogonal factor is the noise `Z`. Sampling uses
//! [`SeededRng`] on stream 0; if `N` is numerically rank-deficient it is
//! resampled on streams 1 and 2 before giving up.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dense;
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor::Matrix;

const MAX_ATTEMPTS: u64 = 3;
/// `N` counts as rank-deficient when its smallest pivot (or singular value)
/// is at most this fraction of its largest.
const RANK_TOLERANCE: f64 = 1e-12;

/// Entry distribution for the raw noise matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum Distribution {
    StandardNormal,
    /// Uniform on `(−1, 1)`.
    Uniform,
    Normal {
        mean: f64,
        std_dev: f64,
    },
}

/// How the left orthogonal factor of `N` is obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Factorization {
    /// Householder `N = QR`, columns of `Q` signed so that `R` has a positive
    /// diagonal.
    #[default]
    Qr,
    /// `N = U Σ Vᵀ`, returning `U`.
    Svd,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub seed: u64,
    pub distribution: Distribution,
    pub factorization: Factorization,
}

impl NoiseSpec {
    pub fn new(seed: u64, distribution: Distribution) -> Result<Self> {
        let spec = NoiseSpec {
            seed,
            distribution,
            factorization: Factorization::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn standard_normal(seed: u64) -> Self {
        NoiseSpec {
            seed,
            distribution: Distribution::StandardNormal,
            factorization: Factorization::default(),
        }
    }

    pub fn with_factorization(mut self, factorization: Factorization) -> Self {
        self.factorization = factorization;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Distribution::Normal { mean, std_dev } = self.distribution {
            if !mean.is_finite() || !(std_dev > 0.0 && std_dev.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "normal noise needs finite mean and positive std_dev, got ({mean}, {std_dev})"
                )));
            }
        }
        Ok(())
    }

    fn sample(&self, rng: &mut SeededRng) -> f64 {
        match self.distribution {
            Distribution::StandardNormal => rng.standard_normal(),
            Distribution::Uniform => loop {
                // Open interval: reject the single point −1.
                let u = rng.uniform(-1.0, 1.0);
                if u > -1.0 {
                    break u;
                }
            },
            Distribution::Normal { mean, std_dev } => mean + std_dev * rng.standard_normal(),
        }
    }
}

/// Square matrix with `Z·Zᵀ = Zᵀ·Z = I`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl OrthogonalMatrix {
    /// Checks both identity products elementwise within 1e-10.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                context: "orthogonal matrix data length",
                expected: dim * dim,
                found: data.len(),
            });
        }
        let z = OrthogonalMatrix { dim, data };
        let err = z.orthogonality_error();
        if err.is_nan() || err > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "matrix is not orthogonal (max deviation {err:e})"
            )));
        }
        Ok(z)
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        OrthogonalMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Largest elementwise deviation of `ZZᵀ` or `ZᵀZ` from the identity.
    pub fn orthogonality_error(&self) -> f64 {
        let n = self.dim;
        let zzt = dense::matmul_bt(&self.data, &self.data, n, n, n);
        let zt = dense::transpose(&self.data, n, n);
        let ztz = dense::matmul_bt(&zt, &zt, n, n, n);
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let t = if i == j { 1.0 } else { 0.0 };
                worst = worst
                    .max((zzt[i * n + j] - t).abs())
                    .max((ztz[i * n + j] - t).abs());
            }
        }
        worst
    }
}

impl From<OrthogonalMatrix> for Matrix {
    fn from(z: OrthogonalMatrix) -> Self {
        Matrix::new(z.dim, z.dim, z.data).expect("square data")
    }
}

fn sample_matrix(rank: usize, spec: &NoiseSpec, stream: u64) -> Vec<f64> {
    let mut rng = SeededRng::with_stream(spec.seed, stream);
    (0..rank * rank).map(|_| spec.sample(&mut rng)).collect()
}

/// The first raw sample `N` (stream 0) that [`orthogonal_noise`] factorizes.
pub fn raw_noise(rank: usize, spec: &NoiseSpec) -> Result<Matrix> {
    if rank == 0 {
        return Err(Error::InvalidParameter(
            "noise rank must be at least 1".into(),
        ));
    }
    spec.validate()?;
    Matrix::new(rank, rank, sample_matrix(rank, spec, 0))
}

/// Seeded `rank × rank` orthogonal noise. Deterministic in `(rank, spec)`.
pub fn orthogonal_noise(rank: usize, spec: &NoiseSpec) -> Result<OrthogonalMatrix> {
    if rank == 0 {
        return Err(Error::InvalidParameter(
            "noise rank must be at least 1".into(),
        ));
    }
    spec.validate()?;
    for stream in 0..MAX_ATTEMPTS {
        let n = sample_matrix(rank, spec, stream);
        let factor = match spec.factorization {
            Factorization::Qr => qr_left_factor(rank, &n),
            Factorization::Svd => svd_left_factor(rank, &n)?,
        };
        if let Some(data) = factor {
            return Ok(OrthogonalMatrix { dim: rank, data });
        }
        log::debug!("noise sample on stream {stream} is rank-deficient; resampling");
    }
    Err(Error::NumericalFailure(format!(
        "sampled noise matrix was rank-deficient in {MAX_ATTEMPTS} attempts"
    )))
}

fn to_row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let (rows, cols) = m.shape();
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            out.push(m[(i, j)]);
        }
    }
    out
}

fn qr_left_factor(rank: usize, n: &[f64]) -> Option<Vec<f64>> {
    let qr = DMatrix::from_row_slice(rank, rank, n).qr();
    let r = qr.r();
    let pivots: Vec<f64> = (0..rank).map(|i| r[(i, i)]).collect();
    let largest = pivots.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    let smallest = pivots.iter().fold(f64::INFINITY, |m, p| m.min(p.abs()));
    if largest.is_nan() || largest <= 0.0 || smallest <= RANK_TOLERANCE * largest {
        return None;
    }
    let mut q = qr.q();
    for (j, p) in pivots.iter().enumerate() {
        if *p < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Some(to_row_major(&q))
}

fn svd_left_factor(rank: usize, n: &[f64]) -> Result<Option<Vec<f64>>> {
    let m = DMatrix::from_row_slice(rank, rank, n);
    let svd = nalgebra::SVD::try_new(m, true, false, f64::EPSILON, 100 * rank + 1000)
        .ok_or_else(|| Error::NumericalFailure("SVD of noise matrix did not converge".into()))?;
    let s = svd.singular_values.as_slice();
    let largest = s.iter().fold(0.0f64, |m, v| m.max(*v));
    let smallest = s.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if largest.is_nan() || largest <= 0.0 || smallest <= RANK_TOLERANCE * largest {
        return Ok(None);
    }
    let u = svd.u.expect("left singular vectors requested");
    Ok(Some(to_row_major(&u)))
}
