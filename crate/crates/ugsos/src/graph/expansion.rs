use super::{laplacian_form, WeightedGraph};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionReport {
    /// `<f, L f>_pi`
    pub quadratic: f64,
    /// `E_pi f`
    pub mean: f64,
    /// `<f, L f>_pi / E_pi f`, when the mean is nonzero.
    pub phi: Option<f64>,
}

pub fn expansion(g: &WeightedGraph, f: &[f64]) -> Result<ExpansionReport> {
    if f.len() != g.num_vertices() {
        return Err(Error::Input(format!("function has {} values, graph has {} vertices", f.len(), g.num_vertices())));
    }
    let pi = g.stationary();
    let quadratic = laplacian_form(g, f);
    let mean: f64 = pi.iter().zip(f).map(|(p, x)| p * x).sum();
    let phi = if mean.abs() > 0.0 { Some(quadratic / mean) } else { None };
    Ok(ExpansionReport { quadratic, mean, phi })
}

/// Edge expansion of the indicator of `set`.
pub fn set_expansion(g: &WeightedGraph, set: &[usize]) -> Result<f64> {
    let mut f = vec![0.0; g.num_vertices()];
    for &v in set {
        f[v] = 1.0;
    }
    expansion(g, &f)?.phi.ok_or_else(|| Error::Domain("set has zero measure".into()))
}

#[derive(Debug, Clone, Serialize)]
pub struct SseProfile {
    /// cardinality -> minimum expansion over sets of that size with measure at most delta
    pub min_expansion: BTreeMap<usize, f64>,
    /// false when the profile comes from random sampling
    pub exhaustive: bool,
}

/// Exhaustive cap on enumerated sets.
pub const SSE_EXHAUSTIVE_CAP: f64 = 1e7;
const SSE_SAMPLES: usize = 1_000_000;

/// Minimum expansion per cardinality over sets of measure at most `delta`.
pub fn sse_profile(g: &WeightedGraph, delta: f64) -> SseProfile {
    let n = g.num_vertices();
    let pi = g.stationary();
    let mut sorted = pi.clone();
    sorted.sort_by(f64::total_cmp);
    // largest cardinality that can fit under delta
    let mut max_card = 0;
    let mut acc = 0.0;
    for p in &sorted {
        if acc + p > delta + 1e-12 {
            break;
        }
        acc += p;
        max_card += 1;
    }
    let count: f64 = (1..=max_card).map(|c| super::generators::binom(n, c)).sum();
    let mut min_expansion = BTreeMap::new();
    let deg: Vec<f64> = (0..n).map(|u| g.degree(u)).collect();
    let total: f64 = deg.iter().sum();
    let consider = |set: &[usize], out: &mut BTreeMap<usize, f64>| {
        let measure: f64 = set.iter().map(|&v| pi[v]).sum();
        if measure > delta + 1e-12 || measure == 0.0 {
            return;
        }
        // weight leaving the set
        let mut inside = vec![false; n];
        for &v in set {
            inside[v] = true;
        }
        let mut cut = 0.0;
        for &v in set {
            for &(u, w) in g.row(v) {
                if !inside[u] {
                    cut += w;
                }
            }
        }
        let phi = (cut / total) / measure;
        let e = out.entry(set.len()).or_insert(f64::INFINITY);
        if phi < *e {
            *e = phi;
        }
    };
    if count <= SSE_EXHAUSTIVE_CAP {
        for c in 1..=max_card {
            for s in super::subsets_of_size(n, c) {
                consider(&s, &mut min_expansion);
            }
        }
        SseProfile { min_expansion, exhaustive: true }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x55e);
        for _ in 0..SSE_SAMPLES {
            let c = rng.gen_range(1..=max_card.max(1));
            let mut set: Vec<usize> = rand::seq::index::sample(&mut rng, n, c).into_vec();
            set.sort_unstable();
            consider(&set, &mut min_expansion);
        }
        SseProfile { min_expansion, exhaustive: false }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::noisy_hypercube;

    #[test]
    fn constant_and_single_edge() {
        let g = noisy_hypercube(2, 0.3).unwrap();
        assert!(expansion(&g, &[1.0; 4]).unwrap().quadratic.abs() < 1e-15);
        let k2 = WeightedGraph::from_edges(2, [(0, 1, 1.0)]).unwrap();
        assert!((expansion(&k2, &[1.0, 0.0]).unwrap().phi.unwrap() - 1.0).abs() < 1e-15);
        assert!(expansion(&k2, &[0.0, 0.0]).unwrap().phi.is_none());
    }

    #[test]
    fn subcube_expansion_equals_flip_probability() {
        let g = noisy_hypercube(2, 0.25).unwrap();
        // vertices with coordinate 0 equal to +1: bit 0 clear
        let phi = set_expansion(&g, &[0, 2]).unwrap();
        assert!((phi - 0.25).abs() < 1e-12);
    }

    #[test]
    fn singleton_profiles() {
        let g = noisy_hypercube(3, 0.3).unwrap();
        let prof = sse_profile(&g, 1.0 / 8.0);
        assert!(prof.exhaustive);
        let want = 1.0 - 0.7f64.powi(3);
        assert!((prof.min_expansion[&1] - want).abs() < 1e-12);
        let kn = WeightedGraph::from_edges(4, super::super::subsets_of_size(4, 2).into_iter().map(|s| (s[0], s[1], 1.0)))
            .unwrap();
        assert!((sse_profile(&kn, 0.25).min_expansion[&1] - 1.0).abs() < 1e-12);
    }
}
