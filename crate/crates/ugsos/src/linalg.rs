//! Thin wrappers over the dense symmetric and Hermitian eigensolvers.

use faer::{c64, Mat, Side};

/// Eigen-decomposition of a symmetric column-major matrix; eigenvalues ascending,
/// eigenvectors as columns of the returned column-major buffer.
pub fn sym_eigen(n: usize, a: &[f64]) -> (Vec<f64>, Vec<f64>) {
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let m = Mat::<f64>::from_fn(n, n, |i, j| a[i + j * n]);
    let evd = m.self_adjoint_eigen(Side::Lower).expect("symmetric eigensolver failed");
    let s = evd.S().column_vector();
    let u = evd.U();
    let values = (0..n).map(|i| s[i]).collect();
    let mut vectors = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            vectors[i + j * n] = u[(i, j)];
        }
    }
    (values, vectors)
}

/// Eigenvalues only, ascending.
pub fn sym_eigenvalues(n: usize, a: &[f64]) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let m = Mat::<f64>::from_fn(n, n, |i, j| a[i + j * n]);
    m.self_adjoint_eigenvalues(Side::Lower).expect("symmetric eigensolver failed")
}

pub fn min_eigenvalue(n: usize, a: &[f64]) -> f64 {
    sym_eigenvalues(n, a).first().copied().unwrap_or(0.0)
}

/// Projects a symmetric matrix onto the PSD cone in place. Returns the
/// smallest eigenvalue before projection.
pub fn project_psd(n: usize, a: &mut [f64]) -> f64 {
    let m = Mat::<f64>::from_fn(n, n, |i, j| a[i + j * n]);
    let evd = m.self_adjoint_eigen(Side::Lower).expect("symmetric eigensolver failed");
    let s = evd.S().column_vector();
    let u = evd.U();
    let lo = s[0];
    if lo >= 0.0 {
        return lo;
    }
    let neg: Vec<usize> = (0..n).filter(|&i| s[i] < 0.0).collect();
    let keep_neg = neg.len() <= n - neg.len();
    let idx: Vec<usize> = if keep_neg { neg } else { (0..n).filter(|&i| s[i] > 0.0).collect() };
    let scaled = Mat::<f64>::from_fn(n, idx.len(), |i, c| u[(i, idx[c])] * s[idx[c]].abs().sqrt());
    let r = &scaled * scaled.transpose();
    for j in 0..n {
        for i in 0..n {
            let v = r[(i, j)];
            a[i + j * n] = if keep_neg { a[i + j * n] + v } else { v };
        }
    }
    lo
}

/// Eigenvalues of a Hermitian column-major matrix, ascending.
pub fn herm_eigenvalues(n: usize, a: &[c64]) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let m = Mat::<c64>::from_fn(n, n, |i, j| a[i + j * n]);
    let evd = m.self_adjoint_eigen(Side::Lower).expect("hermitian eigensolver failed");
    let s = evd.S().column_vector();
    (0..n).map(|i| s[i].re).collect()
}

/// Hermitian counterpart of [`project_psd`].
pub fn project_psd_herm(n: usize, a: &mut [c64]) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let m = Mat::<c64>::from_fn(n, n, |i, j| a[i + j * n]);
    let evd = m.self_adjoint_eigen(Side::Lower).expect("hermitian eigensolver failed");
    let s: Vec<f64> = {
        let d = evd.S().column_vector();
        (0..n).map(|i| d[i].re).collect()
    };
    let u = evd.U();
    let lo = s[0];
    if lo >= 0.0 {
        return lo;
    }
    let neg: Vec<usize> = (0..n).filter(|&i| s[i] < 0.0).collect();
    let keep_neg = neg.len() <= n - neg.len();
    let idx: Vec<usize> = if keep_neg { neg } else { (0..n).filter(|&i| s[i] > 0.0).collect() };
    let scaled = Mat::<c64>::from_fn(n, idx.len(), |i, c| u[(i, idx[c])] * s[idx[c]].abs().sqrt());
    let r = &scaled * scaled.adjoint();
    for j in 0..n {
        for i in 0..n {
            let v = r[(i, j)];
            a[i + j * n] = if keep_neg { a[i + j * n] + v } else { v };
        }
    }
    lo
}
