//! Affine unique games instances over Z_k.

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub type Assignment = Vec<usize>;

/// A constraint `x_u - x_v = shift (mod k)`, stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
    pub shift: usize,
}

/// One endpoint's view of an edge: `x_self - x_to = shift`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub to: usize,
    pub w: f64,
    pub shift: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UgInstance {
    n: usize,
    k: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<Arc>>,
    degree: Vec<f64>,
    total: f64,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    k: usize,
    n: usize,
    edges: Vec<Edge>,
}

impl UgInstance {
    /// Builds an instance, orienting every edge so that `u < v`.
    pub fn new(n: usize, k: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::Input("need at least one vertex and one label".into()));
        }
        let mut canon = Vec::new();
        for e in edges {
            if e.u >= n || e.v >= n {
                return Err(Error::Input(format!("edge ({}, {}) out of range for n = {n}", e.u, e.v)));
            }
            if e.u == e.v {
                return Err(Error::Input(format!("self-loop at vertex {}", e.u)));
            }
            if !(e.w > 0.0) || !e.w.is_finite() {
                return Err(Error::Input(format!("edge ({}, {}) has weight {}", e.u, e.v, e.w)));
            }
            let shift = e.shift % k;
            canon.push(if e.u < e.v {
                Edge { shift, ..e }
            } else {
                Edge { u: e.v, v: e.u, w: e.w, shift: (k - shift) % k }
            });
        }
        let total: f64 = canon.iter().map(|e| e.w).sum();
        if canon.is_empty() || total <= 0.0 {
            return Err(Error::Input("total edge weight must be positive".into()));
        }
        let mut adj = vec![Vec::new(); n];
        let mut degree = vec![0.0; n];
        for e in &canon {
            adj[e.u].push(Arc { to: e.v, w: e.w, shift: e.shift });
            adj[e.v].push(Arc { to: e.u, w: e.w, shift: (k - e.shift) % k });
            degree[e.u] += e.w;
            degree[e.v] += e.w;
        }
        Ok(UgInstance { n, k, edges: canon, adj, degree, total })
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn alphabet_size(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn arcs(&self, u: usize) -> &[Arc] {
        &self.adj[u]
    }

    pub fn total_weight(&self) -> f64 {
        self.total
    }

    pub fn weighted_degree(&self, u: usize) -> f64 {
        self.degree[u]
    }

    /// Stationary measure of the random walk: weighted degree over twice the total weight.
    pub fn stationary(&self) -> Vec<f64> {
        self.degree.iter().map(|d| d / (2.0 * self.total)).collect()
    }

    fn check_len(&self, x: &[usize]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Input(format!("assignment has {} entries, instance has {}", x.len(), self.n)));
        }
        if let Some(&bad) = x.iter().find(|&&a| a >= self.k) {
            return Err(Error::Input(format!("label {bad} outside Z_{}", self.k)));
        }
        Ok(())
    }

    /// Whether `x` satisfies the edge.
    pub fn satisfied(&self, e: &Edge, x: &[usize]) -> bool {
        (x[e.u] + self.k - x[e.v]) % self.k == e.shift
    }

    /// Weighted fraction of satisfied constraints.
    pub fn value(&self, x: &[usize]) -> Result<f64> {
        self.check_len(x)?;
        Ok(self.value_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: &[usize]) -> f64 {
        let sat: f64 = self.edges.iter().filter(|e| self.satisfied(e, x)).map(|e| e.w).sum();
        sat / self.total
    }

    /// Weighted fraction of the constraints at `u` satisfied by `x`.
    pub fn local_value(&self, x: &[usize], u: usize) -> Result<f64> {
        self.check_len(x)?;
        if u >= self.n {
            return Err(Error::Input(format!("vertex {u} out of range")));
        }
        if self.adj[u].is_empty() {
            return Err(Error::Domain(format!("vertex {u} is isolated")));
        }
        let k = self.k;
        let sat: f64 = self.adj[u]
            .iter()
            .filter(|a| (x[u] + k - x[a.to]) % k == a.shift)
            .map(|a| a.w)
            .sum();
        Ok(sat / self.degree[u])
    }

    /// Edges with both endpoints in `keep`, re-indexed to keep's order.
    pub fn induced(&self, keep: &[usize]) -> Vec<Edge> {
        let mut pos = vec![usize::MAX; self.n];
        for (i, &v) in keep.iter().enumerate() {
            pos[v] = i;
        }
        self.edges
            .iter()
            .filter(|e| pos[e.u] != usize::MAX && pos[e.v] != usize::MAX)
            .copied()
            .collect()
    }

    pub fn to_json(&self) -> String {
        crate::json::to_string_pretty(&InstanceFile { k: self.k, n: self.n, edges: self.edges.clone() })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: InstanceFile = serde_json::from_str(s)?;
        UgInstance::new(f.n, f.k, f.edges)
    }
}

/// Default enumeration cap for [`brute_force_opt`].
pub const BRUTE_FORCE_CAP: u128 = 10_000_000;

/// Exact optimum by enumeration with `x_0` fixed to 0.
pub fn brute_force_opt(inst: &UgInstance, cap: u128) -> Result<(Assignment, f64)> {
    let (n, k) = (inst.n, inst.k);
    let space = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if space > cap {
        return Err(Error::size("k^n", space, cap));
    }
    let mut x = vec![0usize; n];
    let mut best = (x.clone(), inst.value_unchecked(&x));
    if n == 1 {
        return Ok(best);
    }
    loop {
        let mut i = 1;
        while i < n {
            x[i] += 1;
            if x[i] < k {
                break;
            }
            x[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
        let v = inst.value_unchecked(&x);
        if v > best.1 {
            best = (x.clone(), v);
        }
    }
    Ok(best)
}

/// Plants a uniformly random assignment on the graph's non-loop edges and
/// corrupts each edge independently with probability `eps`.
pub fn plant_instance<R: Rng>(
    graph: &WeightedGraph,
    k: usize,
    eps: f64,
    rng: &mut R,
) -> Result<(UgInstance, Assignment)> {
    if k < 2 {
        return Err(Error::Parameter(format!("alphabet size {k} < 2")));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Parameter(format!("noise {eps} outside [0, 1]")));
    }
    let n = graph.num_vertices();
    let x: Assignment = (0..n).map(|_| rng.gen_range(0..k)).collect();
    let mut edges = Vec::new();
    for (u, v, w) in graph.edges() {
        if u == v {
            continue;
        }
        let mut shift = (x[u] + k - x[v]) % k;
        if rng.gen_bool(eps) {
            shift = (shift + rng.gen_range(1..k)) % k;
        }
        edges.push(Edge { u, v, w, shift });
    }
    Ok((UgInstance::new(n, k, edges)?, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(u: usize, v: usize, shift: usize) -> Edge {
        Edge { u, v, w: 1.0, shift }
    }

    fn triangle(shifts: [usize; 3]) -> UgInstance {
        UgInstance::new(3, 2, [edge(0, 1, shifts[0]), edge(1, 2, shifts[1]), edge(0, 2, shifts[2])]).unwrap()
    }

    #[test]
    fn values_on_triangle() {
        let t = triangle([0, 0, 0]);
        assert_eq!(t.value(&[0, 0, 0]).unwrap(), 1.0);
        assert!((t.value(&[0, 0, 1]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(t.local_value(&[0, 0, 1], 2).unwrap(), 0.0);
        assert_eq!(t.local_value(&[0, 0, 1], 0).unwrap(), 0.5);
    }

    #[test]
    fn single_edge_shift() {
        let e = UgInstance::new(2, 3, [Edge { u: 0, v: 1, w: 5.0, shift: 2 }]).unwrap();
        assert_eq!(e.value(&[2, 0]).unwrap(), 1.0);
        let (_, v) = brute_force_opt(&e, BRUTE_FORCE_CAP).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn reverse_orientation_negates_shift() {
        let a = UgInstance::new(2, 3, [Edge { u: 1, v: 0, w: 1.0, shift: 1 }]).unwrap();
        assert_eq!(a.edges()[0], Edge { u: 0, v: 1, w: 1.0, shift: 2 });
        // x_1 - x_0 = 1
        assert_eq!(a.value(&[0, 1]).unwrap(), 1.0);
        assert_eq!(a.value(&[1, 2]).unwrap(), 1.0);
        assert_eq!(a.value(&[1, 0]).unwrap(), 0.0);
    }

    #[test]
    fn brute_force_triangle() {
        assert_eq!(brute_force_opt(&triangle([0, 0, 0]), BRUTE_FORCE_CAP).unwrap().1, 1.0);
        let (x, v) = brute_force_opt(&triangle([0, 0, 1]), BRUTE_FORCE_CAP).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(x[0], 0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(UgInstance::new(2, 2, [edge(0, 0, 0)]).is_err());
        assert!(UgInstance::new(2, 2, [edge(0, 2, 0)]).is_err());
        assert!(UgInstance::new(2, 2, [Edge { u: 0, v: 1, w: 0.0, shift: 0 }]).is_err());
        let t = triangle([0, 0, 0]);
        assert!(t.value(&[0, 0]).is_err());
        let iso = UgInstance::new(3, 2, [edge(0, 1, 0)]).unwrap();
        assert!(matches!(iso.local_value(&[0, 0, 0], 2), Err(Error::Domain(_))));
        assert_eq!(iso.stationary()[2], 0.0);
        let big = UgInstance::new(30, 2, [edge(0, 1, 0)]).unwrap();
        assert!(matches!(brute_force_opt(&big, BRUTE_FORCE_CAP), Err(Error::Size { .. })));
    }

    #[test]
    fn json_round_trip() {
        let t = UgInstance::new(3, 3, [Edge { u: 2, v: 0, w: 0.3, shift: 1 }, edge(0, 1, 2)]).unwrap();
        let back = UgInstance::from_json(&t.to_json()).unwrap();
        assert_eq!(t, back);
    }
}
