//! Condition & Round, its derandomization, and the partial-to-full driver.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::sos::{PseudoExpectation, COND_FLOOR};
use crate::{Error, Result, UgInstance};

pub type PartialAssignment = Vec<Option<usize>>;

#[derive(Debug, Clone, Serialize)]
pub struct IterationTrace {
    pub subgraph: Vec<usize>,
    pub subgraph_id: Option<String>,
    pub assigned: Vec<usize>,
    pub cr_val: f64,
    pub value_before: f64,
    pub value_after: f64,
    pub drop: f64,
    pub drop_bound: f64,
    /// Weighted fraction of all edges satisfied by this iteration's labels.
    pub edges_satisfied: f64,
    pub satisfaction_bound: f64,
    pub subgraph_expansion: f64,
    pub resymmetrized: bool,
}

impl IterationTrace {
    pub fn drop_ok(&self) -> bool {
        self.drop <= self.drop_bound + 1e-9
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundingOutcome {
    pub assignment: PartialAssignment,
    /// Value achieved on the rounding domain (all edges, or edges inside the subgraph).
    pub value: f64,
    /// Closed-form expectation of independent rounding that the outcome is compared to.
    pub expected: f64,
    pub conditioned_on: Option<usize>,
    pub trace: Vec<IterationTrace>,
    pub stop_reason: Option<String>,
}

impl RoundingOutcome {
    pub fn full_assignment(&self) -> Vec<usize> {
        self.assignment.iter().map(|a| a.unwrap_or(0)).collect()
    }
}

/// Edges with both endpoints in the domain, weights normalized to sum to one.
struct Domain {
    verts: Vec<usize>,
    edges: Vec<(usize, usize, f64, usize)>,
    incident: Vec<Vec<usize>>,
}

fn edges_in(inst: &UgInstance, verts: &[usize]) -> Result<Domain> {
    let n = inst.num_vertices();
    let mut inside = vec![false; n];
    for &v in verts {
        if v >= n {
            return Err(Error::Input(format!("vertex {v} out of range")));
        }
        inside[v] = true;
    }
    let mut edges: Vec<(usize, usize, f64, usize)> =
        inst.edges().iter().filter(|e| inside[e.u] && inside[e.v]).map(|e| (e.u, e.v, e.w, e.shift)).collect();
    let total: f64 = edges.iter().map(|e| e.2).sum();
    if edges.is_empty() {
        return Err(Error::Domain("subgraph has no internal edges".into()));
    }
    for e in edges.iter_mut() {
        e.2 /= total;
    }
    let mut incident = vec![Vec::new(); n];
    for (i, e) in edges.iter().enumerate() {
        incident[e.0].push(i);
        incident[e.1].push(i);
    }
    Ok(Domain { verts: verts.to_vec(), edges, incident })
}

fn whole(inst: &UgInstance) -> Result<Domain> {
    let all: Vec<usize> = (0..inst.num_vertices()).collect();
    edges_in(inst, &all)
}

/// `pE[X_{v,s} | X_{u,0}]` for every vertex, or `None` on a null event.
pub fn conditioned_marginals(pe: &PseudoExpectation, u: usize) -> Option<Vec<Vec<f64>>> {
    let z = pe.marginal(u, 0);
    if !(z > COND_FLOOR) {
        return None;
    }
    let k = pe.alphabet_size();
    Some(
        (0..pe.num_vertices())
            .map(|v| {
                let row: Vec<f64> = (0..k).map(|s| (pe.pair(v, s, u, 0) / z).max(0.0)).collect();
                let t: f64 = row.iter().sum();
                if t > 0.0 {
                    row.iter().map(|x| x / t).collect()
                } else {
                    vec![1.0 / k as f64; k]
                }
            })
            .collect(),
    )
}

fn marginals(pe: &PseudoExpectation) -> Vec<Vec<f64>> {
    let k = pe.alphabet_size();
    (0..pe.num_vertices()).map(|v| (0..k).map(|s| pe.marginal(v, s)).collect()).collect()
}

fn edge_prob(m: &[Vec<f64>], k: usize, e: &(usize, usize, f64, usize)) -> f64 {
    let (v, w, _, sh) = *e;
    (0..k).map(|s| m[v][s] * m[w][(s + k - sh) % k]).sum()
}

fn independent_value(m: &[Vec<f64>], k: usize, d: &Domain) -> f64 {
    d.edges.iter().map(|e| e.2 * edge_prob(m, k, e)).sum()
}

/// Expected value of independent rounding from the marginals, over the edges of `h`.
pub fn ind_val(pe: &PseudoExpectation, inst: &UgInstance, h: &[usize]) -> Result<f64> {
    let d = edges_in(inst, h)?;
    Ok(independent_value(&marginals(pe), inst.alphabet_size(), &d))
}

/// `E_{u in V(H)}` of the independent-rounding value of `H` after conditioning on `X_{u,0}`.
pub fn cr_val(pe: &PseudoExpectation, inst: &UgInstance, h: &[usize]) -> Result<f64> {
    let d = edges_in(inst, h)?;
    let k = inst.alphabet_size();
    let mut s = 0.0;
    for &u in h {
        let m = conditioned_marginals(pe, u).ok_or_else(|| Error::NullEvent(pe.marginal(u, 0)))?;
        s += independent_value(&m, k, &d);
    }
    Ok(s / h.len() as f64)
}

/// Closed-form expected value of Condition & Round: `E_{u~pi}` of the independent
/// rounding value under the marginals conditioned on `X_{u,0}`.
pub fn cr_expected(pe: &PseudoExpectation, inst: &UgInstance) -> Result<f64> {
    let d = whole(inst)?;
    let k = inst.alphabet_size();
    let pi = inst.stationary();
    let mut s = 0.0;
    for u in 0..inst.num_vertices() {
        if pi[u] == 0.0 {
            continue;
        }
        let m = conditioned_marginals(pe, u).ok_or_else(|| Error::NullEvent(pe.marginal(u, 0)))?;
        s += pi[u] * independent_value(&m, k, &d);
    }
    Ok(s)
}

/// Samples Condition & Round outcomes with precomputed conditioned marginals.
pub struct CrSampler {
    k: usize,
    pi: Vec<f64>,
    conditioned: Vec<Option<Vec<Vec<f64>>>>,
    inst: UgInstance,
    pub expected: f64,
}

impl CrSampler {
    pub fn new(pe: &PseudoExpectation, inst: &UgInstance) -> Result<Self> {
        let n = inst.num_vertices();
        let conditioned: Vec<_> = (0..n).map(|u| conditioned_marginals(pe, u)).collect();
        if conditioned.iter().all(|c| c.is_none()) {
            return Err(Error::NullEvent(0.0));
        }
        Ok(CrSampler {
            k: inst.alphabet_size(),
            pi: inst.stationary(),
            conditioned,
            inst: inst.clone(),
            expected: cr_expected(pe, inst)?,
        })
    }

    fn pick<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
        let r: f64 = rng.gen::<f64>() * probs.iter().sum::<f64>();
        let mut acc = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            acc += p;
            if r < acc {
                return i;
            }
        }
        probs.len() - 1
    }

    /// One run: returns the conditioning vertex and the sampled assignment.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> (usize, Vec<usize>) {
        loop {
            let u = Self::pick(rng, &self.pi);
            // a null event signals an invalid operator; resample the vertex
            if let Some(m) = &self.conditioned[u] {
                let y = m.iter().map(|row| Self::pick(rng, row)).collect();
                return (u, y);
            }
        }
    }

    pub fn sample_value<R: Rng>(&self, rng: &mut R) -> f64 {
        let (_, y) = self.sample(rng);
        self.inst.value(&y).expect("sampled labels are in range")
    }

    pub fn alphabet_size(&self) -> usize {
        self.k
    }
}

/// Randomized Condition & Round with a seeded generator.
pub fn condition_and_round(pe: &PseudoExpectation, inst: &UgInstance, seed: u64) -> Result<RoundingOutcome> {
    let sampler = CrSampler::new(pe, inst)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (u, y) = sampler.sample(&mut rng);
    Ok(RoundingOutcome {
        value: inst.value(&y)?,
        assignment: y.into_iter().map(Some).collect(),
        expected: sampler.expected,
        conditioned_on: Some(u),
        trace: Vec::new(),
        stop_reason: None,
    })
}

/// Greedy fixing of labels by conditional expectations, starting from independent marginals.
fn fix_labels(m: &mut [Vec<f64>], k: usize, d: &Domain) -> Vec<usize> {
    let mut order = d.verts.clone();
    let peak = |row: &Vec<f64>| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    order.sort_by(|&a, &b| peak(&m[b]).partial_cmp(&peak(&m[a])).unwrap().then(a.cmp(&b)));
    for &v in &order {
        let mut best = (f64::NEG_INFINITY, 0);
        for a in 0..k {
            let mut gain = 0.0;
            for &ei in &d.incident[v] {
                let (x, y, w, sh) = d.edges[ei];
                // Pr[x_x - x_y = sh] with v pinned to a
                let p = if x == v {
                    m[y][(a + k - sh) % k]
                } else {
                    debug_assert_eq!(y, v);
                    m[x][(a + sh) % k]
                };
                gain += w * p;
            }
            if gain > best.0 + 1e-15 {
                best = (gain, a);
            }
        }
        m[v] = (0..k).map(|a| if a == best.1 { 1.0 } else { 0.0 }).collect();
    }
    d.verts.iter().map(|&v| m[v].iter().position(|&p| p == 1.0).unwrap()).collect()
}

fn derandomize_on(pe: &PseudoExpectation, inst: &UgInstance, d: &Domain) -> Result<RoundingOutcome> {
    let k = inst.alphabet_size();
    let mut best: Option<(f64, usize, Vec<Vec<f64>>)> = None;
    for &u in &d.verts {
        let Some(m) = conditioned_marginals(pe, u) else { continue };
        let val = independent_value(&m, k, d);
        if best.as_ref().map_or(true, |b| val > b.0) {
            best = Some((val, u, m));
        }
    }
    let (expected, u, mut m) = best.ok_or(Error::NullEvent(0.0))?;
    let labels = fix_labels(&mut m, k, d);
    let mut assignment = vec![None; inst.num_vertices()];
    for (&v, &a) in d.verts.iter().zip(&labels) {
        assignment[v] = Some(a);
    }
    let value = independent_value(&m, k, d);
    Ok(RoundingOutcome { assignment, value, expected, conditioned_on: Some(u), trace: Vec::new(), stop_reason: None })
}

/// Deterministic Condition & Round on the whole instance, or on the subgraph induced by `h`.
pub fn derandomized_round(pe: &PseudoExpectation, inst: &UgInstance, h: Option<&[usize]>) -> Result<RoundingOutcome> {
    match h {
        None => {
            let d = whole(inst)?;
            derandomize_on(pe, inst, &d)
        }
        Some(h) => {
            let d = edges_in(inst, h)?;
            derandomize_on(pe, inst, &d)
        }
    }
}

/// Weighted fraction of all edges with both endpoints labelled and satisfied.
pub fn partial_value(inst: &UgInstance, f: &PartialAssignment) -> f64 {
    let k = inst.alphabet_size();
    let sat: f64 = inst
        .edges()
        .iter()
        .filter(|e| matches!((f[e.u], f[e.v]), (Some(a), Some(b)) if (a + k - b) % k == e.shift))
        .map(|e| e.w)
        .sum();
    sat / inst.total_weight()
}

fn edge_expansion(inst: &UgInstance, h: &[usize]) -> f64 {
    let mut inside = vec![false; inst.num_vertices()];
    for &v in h {
        inside[v] = true;
    }
    let vol: f64 = h.iter().map(|&v| inst.weighted_degree(v)).sum();
    let cut: f64 = inst.edges().iter().filter(|e| inside[e.u] != inside[e.v]).map(|e| e.w).sum();
    if vol > 0.0 {
        cut / vol
    } else {
        0.0
    }
}

/// Subgraph proposal: given the current operator and the labels fixed so far,
/// returns a vertex set and an optional identifier, or `None` to stop.
pub type Subroutine<'a> = dyn FnMut(&PseudoExpectation, &PartialAssignment) -> Result<Option<(Vec<usize>, Option<String>)>> + 'a;

/// Iterated rounding on subgraphs with rerandomization of rounded vertices,
/// while the operator's value stays at least `1 - 2 eps`.
pub fn partial_to_full(inst: &UgInstance, pe0: &PseudoExpectation, subroutine: &mut Subroutine<'_>, eps: f64) -> Result<RoundingOutcome> {
    let n = inst.num_vertices();
    let mut mu = pe0.clone();
    let mut f: PartialAssignment = vec![None; n];
    let mut trace = Vec::new();
    let mut empty_streak = 0;
    let mut stop_reason = None;
    let mut value = mu.objective(inst);
    for _ in 0..=n {
        if value < 1.0 - 2.0 * eps {
            stop_reason = Some("value dropped below 1 - 2 eps".into());
            break;
        }
        let Some((h, id)) = subroutine(&mu, &f)? else {
            stop_reason = Some("subroutine found no subgraph".into());
            break;
        };
        let s: Vec<usize> = h.iter().copied().filter(|&v| f[v].is_none()).collect();
        if s.is_empty() {
            empty_streak += 1;
            if empty_streak >= 2 {
                stop_reason = Some("subroutine returned assigned-only subgraphs twice".into());
                break;
            }
            continue;
        }
        empty_streak = 0;
        let cr = cr_val(&mu, inst, &h).unwrap_or(f64::NAN);
        let mut fj = vec![None; n];
        match edges_in(inst, &s) {
            Ok(d) => {
                let out = derandomize_on(&mu, inst, &d)?;
                fj = out.assignment;
            }
            Err(Error::Domain(_)) => {
                for &v in &s {
                    fj[v] = Some(0);
                }
            }
            Err(e) => return Err(e),
        }
        for &v in &s {
            debug_assert!(f[v].is_none());
            f[v] = fj[v];
        }
        let mut next = mu.rerandomize(&s)?;
        let mut resym = false;
        if next.symmetry_residual() > 1e-8 {
            next = next.symmetrize()?;
            resym = true;
        }
        let after = next.objective(inst);
        let expansion = edge_expansion(inst, &h);
        trace.push(IterationTrace {
            subgraph: h.clone(),
            subgraph_id: id,
            assigned: s.clone(),
            cr_val: cr,
            value_before: value,
            value_after: after,
            drop: value - after,
            drop_bound: 2.0 * h.len() as f64 / n as f64,
            edges_satisfied: partial_value(inst, &fj),
            satisfaction_bound: cr * cr * (1.0 - expansion) * h.len() as f64 / (2.0 * n as f64),
            subgraph_expansion: expansion,
            resymmetrized: resym,
        });
        mu = next;
        value = after;
        if f.iter().all(|a| a.is_some()) {
            stop_reason = Some("every vertex assigned".into());
            break;
        }
    }
    let full: Vec<usize> = f.iter().map(|a| a.unwrap_or(0)).collect();
    Ok(RoundingOutcome {
        value: inst.value(&full)?,
        expected: pe0.objective(inst),
        assignment: f,
        conditioned_on: None,
        trace,
        stop_reason,
    })
}
