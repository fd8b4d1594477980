use super::WeightedGraph;
use crate::error::{Error, Result};
use crate::linalg::sym_eigen;
use serde::Serialize;

/// Eigen-decomposition of a random-walk matrix in the `pi`-inner product.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub pi: Vec<f64>,
    /// Walk eigenvalues, descending.
    pub values: Vec<f64>,
    /// `vectors[i]` is a right eigenvector for `values[i]`, `pi`-orthonormal.
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub eigenvalues: Vec<f64>,
    pub spectral_gap: f64,
}

/// Cap on vertex count for dense decomposition.
pub const SPECTRAL_CAP: usize = 10_000;

/// Decomposes `A` through the symmetric matrix `D^(1/2) A D^(-1/2)`.
pub fn spectral_decompose(g: &WeightedGraph) -> Result<SpectralData> {
    let n = g.num_vertices();
    if n > SPECTRAL_CAP {
        return Err(Error::size("vertices", n, SPECTRAL_CAP));
    }
    let deg: Vec<f64> = (0..n).map(|u| g.degree(u)).collect();
    let total: f64 = deg.iter().sum();
    if total <= 0.0 {
        return Err(Error::Domain("zero total weight".into()));
    }
    if let Some(u) = deg.iter().position(|&d| d == 0.0) {
        return Err(Error::Domain(format!("vertex {u} has zero degree")));
    }
    let mut s = vec![0.0; n * n];
    for u in 0..n {
        for &(v, w) in g.row(u) {
            s[u + v * n] = w / (deg[u] * deg[v]).sqrt();
        }
    }
    let (vals, vecs) = sym_eigen(n, &s);
    let pi: Vec<f64> = deg.iter().map(|d| d / total).collect();
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for j in (0..n).rev() {
        let mut lam = vals[j];
        if lam > 1.0 && lam < 1.0 + 1e-9 {
            lam = 1.0;
        }
        if lam < -1.0 && lam > -1.0 - 1e-9 {
            lam = -1.0;
        }
        values.push(lam);
        let phi = &vecs[j * n..(j + 1) * n];
        let mut v: Vec<f64> = (0..n).map(|i| phi[i] / pi[i].sqrt()).collect();
        // fix sign so the first large entry is positive
        if let Some(x) = v.iter().find(|x| x.abs() > 1e-8) {
            if *x < 0.0 {
                v.iter_mut().for_each(|y| *y = -*y);
            }
        }
        vectors.push(v);
    }
    Ok(SpectralData { pi, values, vectors })
}

impl SpectralData {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Indices of eigenvectors with Laplacian eigenvalue at most `lambda`
    /// (walk eigenvalue at least `1 - lambda`).
    pub fn low_indices(&self, lambda: f64) -> Vec<usize> {
        (0..self.len()).filter(|&i| 1.0 - self.values[i] <= lambda + 1e-12).collect()
    }

    /// Coefficients of `f` in the eigenbasis.
    pub fn coefficients(&self, f: &[f64]) -> Vec<f64> {
        self.vectors.iter().map(|v| super::inner(&self.pi, v, f)).collect()
    }

    /// Projection onto the span of the eigenvectors in `indices`.
    pub fn project(&self, f: &[f64], indices: &[usize]) -> Vec<f64> {
        let n = f.len();
        let mut out = vec![0.0; n];
        for &i in indices {
            let c = super::inner(&self.pi, &self.vectors[i], f);
            for (o, x) in out.iter_mut().zip(&self.vectors[i]) {
                *o += c * x;
            }
        }
        out
    }

    /// `Pi_lambda f`: projection onto Laplacian eigenvalues at most `lambda`.
    pub fn project_low(&self, f: &[f64], lambda: f64) -> Vec<f64> {
        self.project(f, &self.low_indices(lambda))
    }

    pub fn report(&self) -> SpectralReport {
        SpectralReport {
            eigenvalues: self.values.clone(),
            spectral_gap: if self.len() > 1 { 1.0 - self.values[1] } else { 0.0 },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{inner, noisy_hypercube};

    #[test]
    fn two_point_hypercube() {
        let s = spectral_decompose(&noisy_hypercube(1, 0.25).unwrap()).unwrap();
        assert!((s.values[0] - 1.0).abs() < 1e-12);
        assert!((s.values[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn triangle_spectrum_and_invariants() {
        let g = WeightedGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let s = spectral_decompose(&g).unwrap();
        let want = [1.0, -0.5, -0.5];
        for (a, b) in s.values.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        for i in 0..3 {
            for j in 0..3 {
                let ip = inner(&s.pi, &s.vectors[i], &s.vectors[j]);
                assert!((ip - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
            let av = g.apply_walk(&s.vectors[i]);
            for (a, v) in av.iter().zip(&s.vectors[i]) {
                assert!((a - s.values[i] * v).abs() < 1e-10);
            }
        }
        assert!(s.vectors[0].iter().all(|x| (x - 1.0).abs() < 1e-10));
    }

    #[test]
    fn rejects_isolated_vertex() {
        let g = WeightedGraph::from_edges(3, [(0, 1, 1.0)]).unwrap();
        assert!(spectral_decompose(&g).is_err());
    }
}
