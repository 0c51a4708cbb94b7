//! Symmetric eigendecomposition with small-eigenvalue truncation, plus the
//! orthogonal noise generator.
//!
//! Both solvers return eigenpairs in the same canonical form: eigenvalues in
//! descending order (equal eigenvalues keep the solver's output order), and
//! each eigenvector signed so that its largest-magnitude component is
//! positive.

mod jacobi;
mod noise;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::tensor::GramMatrix;

pub use jacobi::{jacobi_eig, JACOBI_MAX_SWEEPS};
pub use noise::{
    orthogonal_noise, raw_noise, Distribution, Factorization, NoiseSpec, OrthogonalMatrix,
};

/// Eigenvalues at or below this are discarded by default.
pub const DEFAULT_THRESHOLD: f64 = 1e-5;

/// Truncated eigenpairs `(D, E)` of a Gram matrix: `G ≈ E · diag(D) · Eᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenFactorization {
    dim: usize,
    eigenvalues: Vec<f64>,
    /// `dim × rank`, row-major; columns are the eigenvectors.
    eigenvectors: Vec<f64>,
}

impl EigenFactorization {
    /// Assembles a factorization from eigenpairs, checking shapes, order and
    /// column orthonormality (`EᵀE = I` within 1e-10).
    pub fn new(dim: usize, eigenvalues: Vec<f64>, eigenvectors: Vec<f64>) -> Result<Self> {
        let rank = eigenvalues.len();
        if rank == 0 || rank > dim {
            return Err(Error::InvalidInput(format!(
                "factorization rank {rank} invalid for dimension {dim}"
            )));
        }
        if eigenvectors.len() != dim * rank {
            return Err(Error::DimensionMismatch {
                context: "eigenvector matrix length",
                expected: dim * rank,
                found: eigenvectors.len(),
            });
        }
        if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput("eigenvalues must be descending".into()));
        }
        let fact = EigenFactorization {
            dim,
            eigenvalues,
            eigenvectors,
        };
        let gram = fact.vector_gram();
        for i in 0..rank {
            for j in 0..rank {
                let target = if i == j { 1.0 } else { 0.0 };
                if (gram[i * rank + j] - target).abs() > 1e-10 {
                    return Err(Error::InvalidInput(
                        "eigenvectors are not orthonormal".into(),
                    ));
                }
            }
        }
        Ok(fact)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of retained eigenpairs, `r = C − k`.
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Number of discarded eigenpairs, `k`.
    pub fn truncated(&self) -> usize {
        self.dim - self.rank()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Row-major `dim × rank`.
    pub fn eigenvectors(&self) -> &[f64] {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, index: usize) -> Vec<f64> {
        let r = self.rank();
        (0..self.dim)
            .map(|i| self.eigenvectors[i * r + index])
            .collect()
    }

    /// `EᵀE`, `rank × rank`.
    pub fn vector_gram(&self) -> Vec<f64> {
        let r = self.rank();
        let et = crate::dense::transpose(&self.eigenvectors, self.dim, r);
        crate::dense::matmul(&et, &self.eigenvectors, r, self.dim, r)
    }

    /// `E · diag(f(D)) · Eᵀ`, row-major `dim × dim`.
    pub(crate) fn spectral_map(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let scaled = self.scaled_vectors(f);
        crate::dense::matmul_bt(&scaled, &self.eigenvectors, self.dim, self.rank(), self.dim)
    }

    /// `E · diag(f(D))`, row-major `dim × rank`.
    pub(crate) fn scaled_vectors(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let r = self.rank();
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&d| f(d)).collect();
        let mut out = self.eigenvectors.clone();
        for row in out.chunks_exact_mut(r) {
            for (v, w) in row.iter_mut().zip(&weights) {
                *v *= w;
            }
        }
        out
    }

    /// `E · diag(D) · Eᵀ`.
    pub fn reconstruct(&self) -> GramMatrix {
        let mut data = self.spectral_map(|d| d);
        symmetrize(&mut data, self.dim);
        GramMatrix::new(self.dim, data).expect("reconstruction of a valid factorization")
    }
}

fn symmetrize(data: &mut [f64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (data[i * n + j] + data[j * n + i]);
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
}

/// Orders eigenpairs descending (stable on ties), fixes eigenvector signs,
/// and keeps pairs whose eigenvalue passes `keep`. `vectors` is column-major
/// `n × n`, column `i` paired with `values[i]`.
pub(crate) fn canonicalize(
    n: usize,
    values: &[f64],
    vectors_col_major: &[f64],
    keep: impl Fn(f64) -> bool,
) -> (Vec<f64>, Vec<f64>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let order: Vec<usize> = order.into_iter().filter(|&i| keep(values[i])).collect();
    let r = order.len();

    let mut eigenvalues = Vec::with_capacity(r);
    let mut eigenvectors = vec![0.0; n * r];
    for (col, &src) in order.iter().enumerate() {
        eigenvalues.push(values[src]);
        let v = &vectors_col_major[src * n..(src + 1) * n];
        let mut lead = 0;
        for i in 1..n {
            if v[i].abs() > v[lead].abs() {
                lead = i;
            }
        }
        let sign = if v[lead] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            eigenvectors[i * r + col] = sign * v[i];
        }
    }
    (eigenvalues, eigenvectors)
}

/// Eigendecomposition of a symmetric PSD Gram matrix, keeping eigenvalues
/// strictly greater than `threshold` (an absolute bound).
///
/// Errors with [`Error::InvalidInput`] if some eigenvalue is below
/// `−1e-9 · trace(G)`, [`Error::Degenerate`] if no eigenvalue passes the
/// threshold, and [`Error::NumericalFailure`] if the QR iteration stalls.
pub fn sym_eig(g: &GramMatrix, threshold: f64) -> Result<EigenFactorization> {
    if !(threshold >= 0.0 && threshold.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "truncation threshold must be finite and non-negative, got {threshold}"
        )));
    }
    let n = g.dim();
    // Symmetric, so the row-major buffer reads the same column-major.
    let m = DMatrix::from_column_slice(n, n, g.data());
    let max_iterations = 100 * n + 1000;
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, max_iterations).ok_or_else(|| {
        Error::NumericalFailure(format!(
            "symmetric eigensolver did not converge within {max_iterations} iterations"
        ))
    })?;
    let values = eig.eigenvalues.as_slice();

    let floor = -1e-9 * g.trace().abs();
    if let Some(&lowest) = values.iter().min_by(|a, b| a.total_cmp(b)) {
        if lowest < floor {
            return Err(Error::InvalidInput(format!(
                "Gram matrix is not positive semi-definite (eigenvalue {lowest:e})"
            )));
        }
    }

    let (eigenvalues, eigenvectors) =
        canonicalize(n, values, eig.eigenvectors.as_slice(), |d| d > threshold);
    if eigenvalues.is_empty() {
        return Err(Error::Degenerate(format!(
            "all {n} eigenvalues are at or below the threshold {threshold:e}"
        )));
    }
    Ok(EigenFactorization {
        dim: n,
        eigenvalues,
        eigenvectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use crate::tensor::{gram, FeatureMap};

    pub(crate) fn random_psd(n: usize, seed: u64) -> GramMatrix {
        let mut rng = SeededRng::new(seed);
        let data = (0..n * 2 * n).map(|_| rng.standard_normal()).collect();
        gram(&FeatureMap::new(n, 1, 2 * n, data).unwrap())
    }

    #[test]
    fn diagonal_input() {
        let f = sym_eig(
            &GramMatrix::diagonal(&[4.0, 9.0]).unwrap(),
            DEFAULT_THRESHOLD,
        )
        .unwrap();
        assert_eq!(f.eigenvalues(), &[9.0, 4.0]);
        assert_eq!(f.eigenvectors(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn truncation_rule() {
        let f = sym_eig(&GramMatrix::diagonal(&[4.0, 1e-9]).unwrap(), 1e-5).unwrap();
        assert_eq!(f.rank(), 1);
        assert_eq!(f.truncated(), 1);
        assert_eq!(f.eigenvalues(), &[4.0]);
        assert_eq!(f.eigenvector(0), vec![1.0, 0.0]);
    }

    #[test]
    fn truncation_counts_values_strictly_above() {
        let g = GramMatrix::diagonal(&[3.0, 1e-5, 2e-5, 0.0]).unwrap();
        let f = sym_eig(&g, 1e-5).unwrap();
        assert_eq!(f.eigenvalues(), &[3.0, 2e-5]);
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let g = GramMatrix::diagonal(&[0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(sym_eig(&g, 1e-5), Err(Error::Degenerate(_))));
    }

    #[test]
    fn indefinite_input_rejected() {
        let g = GramMatrix::new(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(matches!(sym_eig(&g, 1e-5), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn negative_threshold_rejected() {
        assert!(matches!(
            sym_eig(&GramMatrix::identity(2), -1.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn equal_eigenvalues_keep_order() {
        let f = sym_eig(&GramMatrix::identity(3), 0.0).unwrap();
        assert_eq!(f.eigenvalues(), &[1.0; 3]);
        assert_eq!(f.reconstruct(), GramMatrix::identity(3));
    }

    #[test]
    fn matches_jacobi_oracle_6x6() {
        let g = random_psd(6, 5);
        let fast = sym_eig(&g, 0.0).unwrap();
        let oracle = jacobi_eig(&g).unwrap();
        for (a, b) in fast.eigenvalues().iter().zip(oracle.eigenvalues()) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "{a} vs {b}");
        }
        let err = fast.reconstruct().distance(&oracle.reconstruct()).unwrap();
        assert!(err <= 1e-9, "reconstruction gap {err:e}");
        let self_err = fast.reconstruct().distance(&g).unwrap() / g.frobenius_norm();
        assert!(self_err <= 1e-8);
    }

    #[test]
    fn eigenvectors_orthonormal_and_signed() {
        let f = sym_eig(&random_psd(12, 8), DEFAULT_THRESHOLD).unwrap();
        let eye = f.vector_gram();
        let r = f.rank();
        for i in 0..r {
            for j in 0..r {
                let t = if i == j { 1.0 } else { 0.0 };
                assert!((eye[i * r + j] - t).abs() <= 1e-10);
            }
            let v = f.eigenvector(i);
            let lead = v
                .iter()
                .copied()
                .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn factorization_validation() {
        assert!(EigenFactorization::new(2, vec![1.0, 2.0], vec![1.0, 0.0, 0.0, 1.0]).is_err());
        assert!(EigenFactorization::new(2, vec![2.0], vec![1.0, 1.0]).is_err());
        assert!(EigenFactorization::new(2, vec![2.0], vec![0.6, 0.8]).is_ok());
    }
}
