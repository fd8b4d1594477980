//! Weighted constraint graphs, generators, and spectral utilities.

mod expansion;
pub(crate) mod generators;
mod hypercontractivity;
mod spectral;

pub use expansion::{expansion, set_expansion, sse_profile, ExpansionReport, SseProfile};
pub use generators::{johnson_cayley_graph, johnson_graph, noisy_hypercube, shortcode_graph, subsets_of_size};
pub use hypercontractivity::hypercontractivity_search;
pub use spectral::{spectral_decompose, SpectralData};

use crate::error::{Error, Result};
use crate::instance::UgInstance;

/// Cap on stored nonzero weights.
pub const MAX_ENTRIES: usize = 50_000_000;

/// Undirected weighted graph stored as symmetric sparse rows. A self-loop
/// appears once in its own row.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    rows: Vec<Vec<(usize, f64)>>,
    labels: Option<Vec<String>>,
}

impl WeightedGraph {
    /// Builds from `(u, v, w)` triples; repeated pairs accumulate, zero weights are dropped.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::Input(format!("edge ({u}, {v}) out of range")));
            }
            if w < 0.0 || !w.is_finite() {
                return Err(Error::Input(format!("edge ({u}, {v}) has weight {w}")));
            }
            if w == 0.0 {
                continue;
            }
            rows[u].push((v, w));
            if u != v {
                rows[v].push((u, w));
            }
        }
        for r in rows.iter_mut() {
            r.sort_by_key(|&(v, _)| v);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(r.len());
            for &(v, w) in r.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == v => last.1 += w,
                    _ => merged.push((v, w)),
                }
            }
            *r = merged;
        }
        let g = WeightedGraph { rows, labels: None };
        if g.total_weight() <= 0.0 {
            return Err(Error::Domain("graph has zero total weight".into()));
        }
        Ok(g)
    }

    /// Builds from a dense symmetric weight matrix (row-major).
    pub fn from_dense(n: usize, w: &[f64]) -> Result<Self> {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u..n {
                let a = w[u * n + v];
                let b = w[v * n + u];
                if (a - b).abs() > 1e-12 * (1.0 + a.abs()) {
                    return Err(Error::Input(format!("weights not symmetric at ({u}, {v})")));
                }
                edges.push((u, v, a));
            }
        }
        Self::from_edges(n, edges)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        assert_eq!(labels.len(), self.rows.len());
        self.labels = Some(labels);
        self
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn num_vertices(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, u: usize) -> &[(usize, f64)] {
        &self.rows[u]
    }

    pub fn weight(&self, u: usize, v: usize) -> f64 {
        match self.rows[u].binary_search_by_key(&v, |&(x, _)| x) {
            Ok(i) => self.rows[u][i].1,
            Err(_) => 0.0,
        }
    }

    /// Each undirected edge once, as `(u, v, w)` with `u <= v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(u, r)| r.iter().filter(move |&&(v, _)| v >= u).map(move |&(v, w)| (u, v, w)))
    }

    pub fn degree(&self, u: usize) -> f64 {
        self.rows[u].iter().map(|&(_, w)| w).sum()
    }

    pub fn total_weight(&self) -> f64 {
        (0..self.rows.len()).map(|u| self.degree(u)).sum()
    }

    /// Probability proportional to weighted degree.
    pub fn stationary(&self) -> Vec<f64> {
        let d: Vec<f64> = (0..self.rows.len()).map(|u| self.degree(u)).collect();
        let s: f64 = d.iter().sum();
        d.into_iter().map(|x| x / s).collect()
    }

    /// Row-stochastic random-walk matrix, row-major.
    pub fn transition_dense(&self) -> Vec<f64> {
        let n = self.rows.len();
        let mut a = vec![0.0; n * n];
        for u in 0..n {
            let d = self.degree(u);
            if d > 0.0 {
                for &(v, w) in &self.rows[u] {
                    a[u * n + v] = w / d;
                }
            }
        }
        a
    }

    /// `(A f)(u) = sum_v A(u, v) f(v)`.
    pub fn apply_walk(&self, f: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| {
                let d: f64 = r.iter().map(|&(_, w)| w).sum();
                if d == 0.0 {
                    0.0
                } else {
                    r.iter().map(|&(v, w)| w * f[v]).sum::<f64>() / d
                }
            })
            .collect()
    }

    /// Subgraph induced on `keep`, re-indexed in order.
    pub fn induced(&self, keep: &[usize]) -> Result<Self> {
        let mut pos = vec![usize::MAX; self.rows.len()];
        for (i, &v) in keep.iter().enumerate() {
            pos[v] = i;
        }
        let edges: Vec<_> = self
            .edges()
            .filter(|&(u, v, _)| pos[u] != usize::MAX && pos[v] != usize::MAX)
            .map(|(u, v, w)| (pos[u], pos[v], w))
            .collect();
        Self::from_edges(keep.len(), edges)
    }

    /// Edge-list JSON `{"n", "edges": [{"u", "v", "w"}]}`, each edge once with `u <= v`.
    pub fn to_json(&self) -> String {
        #[derive(serde::Serialize)]
        struct GraphEdge {
            u: usize,
            v: usize,
            w: f64,
        }
        #[derive(serde::Serialize)]
        struct GraphFile {
            n: usize,
            edges: Vec<GraphEdge>,
        }
        let edges = self.edges().map(|(u, v, w)| GraphEdge { u, v, w }).collect();
        crate::json::to_string_pretty(&GraphFile { n: self.num_vertices(), edges })
    }

    /// Largest deviation of a random-walk row sum from 1 (rows with zero degree skipped).
    pub fn row_sum_error(&self) -> f64 {
        let a = self.transition_dense();
        let n = self.num_vertices();
        (0..n)
            .filter(|&u| self.degree(u) > 0.0)
            .map(|u| (a[u * n..(u + 1) * n].iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Unconstrained unique games instance on the non-loop edges, all shifts 0.
    pub fn to_instance(&self, k: usize) -> Result<UgInstance> {
        UgInstance::new(
            self.num_vertices(),
            k,
            self.edges().filter(|&(u, v, _)| u != v).map(|(u, v, w)| crate::instance::Edge { u, v, w, shift: 0 }),
        )
    }
}

/// `<f, g>_pi`.
pub fn inner(pi: &[f64], f: &[f64], g: &[f64]) -> f64 {
    pi.iter().zip(f).zip(g).map(|((p, a), b)| p * a * b).sum()
}

/// `E_pi |f|^p`.
pub fn moment(pi: &[f64], f: &[f64], p: i32) -> f64 {
    pi.iter().zip(f).map(|(w, x)| w * x.abs().powi(p)).sum()
}

/// `<f, L f>_pi` with `L = I - A`.
pub fn laplacian_form(g: &WeightedGraph, f: &[f64]) -> f64 {
    let total = g.total_weight();
    let mut s = 0.0;
    for (u, v, w) in g.edges() {
        if u != v {
            let d = f[u] - f[v];
            s += w * d * d;
        }
    }
    s / total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_form_matches_definition() {
        let g = WeightedGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 2.0), (0, 0, 0.5)]).unwrap();
        let f = [0.3, -1.0, 2.0];
        let pi = g.stationary();
        let af = g.apply_walk(&f);
        let direct = inner(&pi, &f, &f) - inner(&pi, &f, &af);
        assert!((laplacian_form(&g, &f) - direct).abs() < 1e-12);
    }

    #[test]
    fn accumulates_duplicates() {
        let g = WeightedGraph::from_edges(2, [(0, 1, 1.0), (1, 0, 2.0)]).unwrap();
        assert_eq!(g.weight(0, 1), 3.0);
        assert_eq!(g.edges().count(), 1);
    }
}
