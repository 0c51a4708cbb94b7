//! Cyclic Jacobi eigenvalue iteration.
//!
//! Slow (O(n³) per sweep) but simple and unconditionally stable; this is the
//! independent reference that [`super::sym_eig`] is checked against.

use super::{canonicalize, EigenFactorization};
use crate::error::{Error, Result};
use crate::tensor::GramMatrix;

pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Untruncated eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps run over all `(p, q)` pairs with `p < q` in row order until the
/// off-diagonal Frobenius norm is at most `1e-12 · ‖G‖_F`. Intended for
/// `dim ≤ 64`.
pub fn jacobi_eig(g: &GramMatrix) -> Result<EigenFactorization> {
    let n = g.dim();
    let mut a = g.data().to_vec();
    // Column-major accumulation of rotations: v[col * n + row].
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let tolerance = 1e-12 * g.frobenius_norm();

    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off_norm(&a) > tolerance {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NumericalFailure(format!(
                "Jacobi iteration did not converge in {JACOBI_MAX_SWEEPS} sweeps"
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let (c, s) = rotation(a[p * n + p], a[q * n + q], apq);
                // A ← Jᵀ A J with J the (p, q) plane rotation.
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[p * n + k];
                    let vkq = v[q * n + k];
                    v[p * n + k] = c * vkp - s * vkq;
                    v[q * n + k] = s * vkp + c * vkq;
                }
            }
        }
    }

    let values: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let (eigenvalues, eigenvectors) = canonicalize(n, &values, &v, |_| true);
    Ok(EigenFactorization {
        dim: n,
        eigenvalues,
        eigenvectors,
    })
}

/// Cosine and sine zeroing the `(p, q)` entry of a symmetric 2×2 block.
fn rotation(app: f64, aqq: f64, apq: f64) -> (f64, f64) {
    let tau = (aqq - app) / (2.0 * apq);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    (c, t * c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::tests::random_psd;

    #[test]
    fn identity() {
        let f = jacobi_eig(&GramMatrix::identity(3)).unwrap();
        assert_eq!(f.eigenvalues(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn classic_two_by_two() {
        let g = GramMatrix::new(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let f = jacobi_eig(&g).unwrap();
        assert!((f.eigenvalues()[0] - 3.0).abs() < 1e-14);
        assert!((f.eigenvalues()[1] - 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = f.eigenvector(0);
        let v1 = f.eigenvector(1);
        assert!((v0[0].abs() - h).abs() < 1e-14 && (v0[0] - v0[1]).abs() < 1e-14);
        assert!((v1[0].abs() - h).abs() < 1e-14 && (v1[0] + v1[1]).abs() < 1e-14);
    }

    #[test]
    fn reconstructs_random_8x8() {
        let g = random_psd(8, 21);
        let f = jacobi_eig(&g).unwrap();
        assert_eq!(f.rank(), 8);
        let err = f.reconstruct().distance(&g).unwrap();
        assert!(err <= 1e-10, "{err:e}");
    }

    #[test]
    fn zero_matrix_converges_immediately() {
        let f = jacobi_eig(&GramMatrix::diagonal(&[0.0, 0.0]).unwrap()).unwrap();
        assert_eq!(f.eigenvalues(), &[0.0, 0.0]);
    }
}
