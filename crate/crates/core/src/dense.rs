//! Row-major dense products on flat slices.
//!
//! Thin wrappers over `matrixmultiply::dgemm`, which takes arbitrary strides,
//! so transposes are expressed by swapping strides instead of copying.

/// `A (m×k) · B (k×n)`, all row-major.
pub(crate) fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    let mut c = vec![0.0; m * n];
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    // SAFETY: slice lengths checked above; strides describe row-major layouts
    // that stay within those lengths.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            n as isize,
            1,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    c
}

/// `A (m×k) · Bᵀ` where `B` is stored row-major as `n×k`.
pub(crate) fn matmul_bt(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), n * k);
    let mut c = vec![0.0; m * n];
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    // SAFETY: as in `matmul`; Bᵀ is addressed with row stride 1, column stride k.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            1,
            k as isize,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    c
}

/// `A · Aᵀ` for row-major `A (m×k)`, symmetrized exactly.
pub(crate) fn gram(a: &[f64], m: usize, k: usize) -> Vec<f64> {
    let mut g = matmul_bt(a, a, m, k, m);
    for i in 0..m {
        for j in i + 1..m {
            let v = 0.5 * (g[i * m + j] + g[j * m + i]);
            g[i * m + j] = v;
            g[j * m + i] = v;
        }
    }
    g
}

pub(crate) fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut t = vec![0.0; a.len()];
    for i in 0..rows {
        for j in 0..cols {
            t[j * rows + i] = a[i * cols + j];
        }
    }
    t
}

pub(crate) fn frobenius(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}
