//! Shift-partition potentials of pseudodistributions.
//!
//! With `f_s(u) = [X_u - X'_u = s] * p(val_u(X))`, the approximate potential
//! is `sum_s (E_u f_s(u))^2` evaluated under two independent copies. On
//! operators with finite moment tables every quantity is expanded through the
//! identity `X_{u,b} val_u(X)^j = X_{u,b} l_{u,b}^j`, where `l_{u,b}` is the
//! linear form counting neighbours that agree with label `b` at `u`.

use serde::Serialize;

use crate::approx::StepPolynomial;
use crate::graph::{SpectralData, WeightedGraph};
use crate::sos::{Monomial, Poly, PseudoExpectation, Var, COND_FLOOR};
use crate::{Error, Result, UgInstance};

/// Normalized neighbourhoods used to define `val_u`.
#[derive(Debug, Clone)]
pub struct LocalView {
    k: usize,
    arcs: Vec<Vec<(usize, f64, usize)>>,
}

impl LocalView {
    /// `val_u` over every edge of the instance at `u`.
    pub fn global(inst: &UgInstance) -> Self {
        let arcs = (0..inst.num_vertices())
            .map(|u| {
                let d = inst.weighted_degree(u);
                inst.arcs(u).iter().map(|a| (a.to, a.w / d, a.shift)).collect()
            })
            .collect();
        LocalView { k: inst.alphabet_size(), arcs }
    }

    /// `val_u` restricted to edges with both ends in `h`.
    pub fn internal(inst: &UgInstance, h: &[usize]) -> Result<Self> {
        let mut inside = vec![false; inst.num_vertices()];
        for &v in h {
            inside[v] = true;
        }
        let mut arcs = vec![Vec::new(); inst.num_vertices()];
        for &u in h {
            let own: Vec<_> = inst.arcs(u).iter().filter(|a| inside[a.to]).collect();
            let d: f64 = own.iter().map(|a| a.w).sum();
            if own.is_empty() {
                return Err(Error::Domain(format!("vertex {u} has no edge inside the subgraph")));
            }
            arcs[u] = own.iter().map(|a| (a.to, a.w / d, a.shift)).collect();
        }
        Ok(LocalView { k: inst.alphabet_size(), arcs })
    }

    pub fn value(&self, x: &[usize], u: usize) -> f64 {
        let k = self.k;
        self.arcs[u].iter().filter(|&&(w, _, s)| (x[u] + k - x[w]) % k == s).map(|&(_, c, _)| c).sum()
    }

    fn linear(&self, u: usize, b: usize) -> Poly {
        let k = self.k;
        let mut p = Poly::zero();
        for &(w, c, s) in &self.arcs[u] {
            p.add_term(Monomial::var(w, (b + k - s) % k), c);
        }
        p
    }

    /// `X_{u,b} q(l_{u,b})` for a polynomial `q` given by monomial coefficients.
    fn gated(&self, u: usize, b: usize, coeffs: &[f64]) -> Poly {
        let l = self.linear(u, b);
        let gate = Poly::var(Var::new(u, b));
        let mut acc = Poly::zero();
        let mut power = gate.clone();
        for (j, &c) in coeffs.iter().enumerate() {
            if j > 0 {
                power = power.mul(&l);
            }
            acc.add(&power, c);
        }
        acc
    }

    /// `pE[val_u]`.
    pub fn expected_value(&self, pe: &PseudoExpectation, u: usize) -> f64 {
        let k = self.k;
        let mut s = 0.0;
        for b in 0..k {
            for &(w, c, sh) in &self.arcs[u] {
                s += c * pe.pair(u, b, w, (b + k - sh) % k);
            }
        }
        s
    }
}

fn poly_coeffs_pow(c: &[f64], a: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..a {
        let mut next = vec![0.0; out.len() + c.len() - 1];
        for (i, &x) in out.iter().enumerate() {
            for (j, &y) in c.iter().enumerate() {
                next[i + j] += x * y;
            }
        }
        out = next;
    }
    out
}

/// Second-moment data of the functions `f_s` over a vertex set.
struct ShiftMoments {
    /// `single[a][i] = sum_s pE[f_s(u_i)^a] = pE[p(val_u)^a]`.
    single: Vec<Vec<f64>>,
    /// `pair[(a, c)][i][j] = sum_s pE2[f_s(u_i)^a f_s(u_j)^c]`.
    pair: Vec<((usize, usize), Vec<f64>)>,
    /// `mass[s] = sum_i weight_i pE2[f_s(u_i)]`, filled when weights are given.
    mass: Vec<f64>,
}

impl ShiftMoments {
    fn pair(&self, a: usize, c: usize) -> &[f64] {
        &self.pair.iter().find(|(key, _)| *key == (a, c)).expect("requested power").1
    }
}

fn require_product(pe2: &PseudoExpectation) -> Result<()> {
    if pe2.copy_count() != 2 {
        return Err(Error::Domain("potential needs a two-copy operator (use product_copy)".into()));
    }
    Ok(())
}

fn shift_moments(
    pe2: &PseudoExpectation,
    p: &StepPolynomial,
    view: &LocalView,
    verts: &[usize],
    weights: &[f64],
    singles: &[usize],
    pairs: &[(usize, usize)],
) -> Result<ShiftMoments> {
    require_product(pe2)?;
    let base = pe2.base();
    let k = base.alphabet_size();
    let m = verts.len();
    if let Some(d) = base.distribution() {
        let vals: Vec<(Vec<usize>, Vec<f64>, f64)> = d
            .support
            .iter()
            .map(|(x, w)| (x.clone(), verts.iter().map(|&u| p.eval(view.value(x, u))).collect(), *w))
            .collect();
        let single = singles
            .iter()
            .map(|&a| (0..m).map(|i| vals.iter().map(|(_, q, w)| w * q[i].powi(a as i32)).sum()).collect())
            .collect();
        let mut pair_out = Vec::new();
        for &(a, c) in pairs {
            let mut mat = vec![0.0; m * m];
            for (x, q, w) in &vals {
                for (y, _, w2) in &vals {
                    let diff: Vec<usize> = verts.iter().map(|&u| (x[u] + k - y[u]) % k).collect();
                    for i in 0..m {
                        for j in 0..m {
                            if diff[i] == diff[j] {
                                mat[i * m + j] += w * w2 * q[i].powi(a as i32) * q[j].powi(c as i32);
                            }
                        }
                    }
                }
            }
            pair_out.push(((a, c), mat));
        }
        let mut mass = vec![0.0; k];
        for (x, q, w) in &vals {
            for (y, _, w2) in &vals {
                for (i, &u) in verts.iter().enumerate() {
                    mass[(x[u] + k - y[u]) % k] += weights[i] * w * w2 * q[i];
                }
            }
        }
        return Ok(ShiftMoments { single, pair: pair_out, mass });
    }

    let coeffs = p.monomial_coefficients();
    let dp = p.degree();
    let available = base.degree();
    let max_single = singles.iter().copied().max().unwrap_or(0);
    let max_pair = pairs.iter().map(|&(a, c)| a + c).max().unwrap_or(0);
    let required = (1 + max_single * dp).max(if max_pair > 0 { 2 + max_pair * dp } else { 0 });
    if required > available {
        return Err(Error::Degree { required, available });
    }
    let max_pow = max_single.max(pairs.iter().map(|&(a, c)| a.max(c)).max().unwrap_or(0)).max(1);
    // gated[a][i][b] = X_{u,b} p(l_{u,b})^a
    let gated: Vec<Vec<Vec<Poly>>> = (0..=max_pow)
        .map(|a| {
            let ca = poly_coeffs_pow(&coeffs, a);
            verts.iter().map(|&u| (0..k).map(|b| view.gated(u, b, &ca)).collect()).collect()
        })
        .collect();
    let eval = |q: &Poly| base.evaluate(q);
    let mut single = Vec::new();
    for &a in singles {
        let mut v = Vec::with_capacity(m);
        for i in 0..m {
            let mut s = 0.0;
            for b in 0..k {
                s += eval(&gated[a][i][b])?;
            }
            v.push(s);
        }
        single.push(v);
    }
    // diff[i][j][d] = pPr[X_u - X_v = d]
    let mut diff = vec![0.0; m * m * k];
    for i in 0..m {
        for j in 0..m {
            for d in 0..k {
                diff[(i * m + j) * k + d] = (0..k).map(|t| base.pair(verts[i], (t + d) % k, verts[j], t)).sum();
            }
        }
    }
    let mut pair_out = Vec::new();
    for &(a, c) in pairs {
        let mut mat = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                let mut s = 0.0;
                for b in 0..k {
                    for cc in 0..k {
                        let r = diff[(i * m + j) * k + (b + k - cc) % k];
                        if r == 0.0 {
                            continue;
                        }
                        s += r * eval(&gated[a][i][b].mul(&gated[c][j][cc]))?;
                    }
                }
                mat[i * m + j] = s;
            }
        }
        pair_out.push(((a, c), mat));
    }
    let mut mass = vec![0.0; k];
    for (i, &u) in verts.iter().enumerate() {
        for b in 0..k {
            let g = eval(&gated[1][i][b])?;
            for s in 0..k {
                // X_u - X'_u = s with X_u = b
                mass[s] += weights[i] * g * base.marginal(u, (b + k - s) % k);
            }
        }
    }
    Ok(ShiftMoments { single, pair: pair_out, mass })
}

fn quadratic(weights: &[f64], mat: &[f64]) -> f64 {
    let m = weights.len();
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..m {
            s += weights[i] * weights[j] * mat[i * m + j];
        }
    }
    s
}

fn stationary_weights(inst: &UgInstance) -> (Vec<usize>, Vec<f64>) {
    ((0..inst.num_vertices()).collect(), inst.stationary())
}

fn uniform_weights(inst: &UgInstance, h: &[usize]) -> Result<(Vec<usize>, Vec<f64>)> {
    if h.is_empty() {
        return Err(Error::Domain("empty subgraph".into()));
    }
    if let Some(&bad) = h.iter().find(|&&u| u >= inst.num_vertices()) {
        return Err(Error::Input(format!("vertex {bad} out of range")));
    }
    Ok((h.to_vec(), vec![1.0 / h.len() as f64; h.len()]))
}

/// `pE2[sum_s (E_{u~pi} f_s(u))^2]`.
pub fn phi_apx(pe2: &PseudoExpectation, p: &StepPolynomial, inst: &UgInstance) -> Result<f64> {
    let (verts, w) = stationary_weights(inst);
    let sm = shift_moments(pe2, p, &LocalView::global(inst), &verts, &w, &[], &[(1, 1)])?;
    Ok(quadratic(&w, sm.pair(1, 1)))
}

/// The potential averaged uniformly over `h`, with `val_u` taken over all of the instance.
pub fn phi_restricted_global(pe2: &PseudoExpectation, p: &StepPolynomial, h: &[usize], inst: &UgInstance) -> Result<f64> {
    let (verts, w) = uniform_weights(inst, h)?;
    let sm = shift_moments(pe2, p, &LocalView::global(inst), &verts, &w, &[], &[(1, 1)])?;
    Ok(quadratic(&w, sm.pair(1, 1)))
}

/// The potential averaged uniformly over `h`, with `val_u` taken over edges inside `h`.
pub fn phi_local_subgraph(pe2: &PseudoExpectation, p: &StepPolynomial, h: &[usize], inst: &UgInstance) -> Result<f64> {
    let (verts, w) = uniform_weights(inst, h)?;
    let view = LocalView::internal(inst, h)?;
    let sm = shift_moments(pe2, p, &view, &verts, &w, &[], &[(1, 1)])?;
    Ok(quadratic(&w, sm.pair(1, 1)))
}

/// The exact-indicator potential of a pair of integral assignments.
pub fn phi_exact_sampled(inst: &UgInstance, x: &[usize], y: &[usize], beta: f64) -> Result<f64> {
    inst.value(x)?;
    inst.value(y)?;
    let k = inst.alphabet_size();
    let pi = inst.stationary();
    let view = LocalView::global(inst);
    let mut mass = vec![0.0; k];
    for u in 0..inst.num_vertices() {
        if view.value(x, u) >= beta {
            mass[(x[u] + k - y[u]) % k] += pi[u];
        }
    }
    Ok(mass.iter().map(|m| m * m).sum())
}

/// `E_{u,v~pi} sum_s pPr[X_v - X_u = s] pE[[X_v - X_u = s] val_v]`, with
/// conditional terms dropped when the event has pseudo-probability below the floor.
pub fn psi(pe: &PseudoExpectation, inst: &UgInstance) -> Result<f64> {
    if pe.copy_count() != 1 {
        return Err(Error::Domain("psi expects a single-copy operator".into()));
    }
    if !pe.is_exact() && pe.degree() < 4 {
        return Err(Error::Degree { required: 4, available: pe.degree() });
    }
    let n = inst.num_vertices();
    let k = inst.alphabet_size();
    let pi = inst.stationary();
    let view = LocalView::global(inst);
    let mut total = 0.0;
    for u in 0..n {
        for v in 0..n {
            let mut term = 0.0;
            for s in 0..k {
                let pr: f64 = (0..k).map(|t| pe.pair(u, t, v, (s + t) % k)).sum();
                if pr <= COND_FLOOR {
                    continue;
                }
                let mut joint = 0.0;
                for t in 0..k {
                    let b = (s + t) % k;
                    for &(w, c, sh) in &view.arcs[v] {
                        let vars = [Var::new(u, t), Var::new(v, b), Var::new(w, (b + k - sh) % k)];
                        if let Some(m) = Monomial::from_vars(vars) {
                            joint += c * pe.get(&m);
                        }
                    }
                }
                term += pr * joint;
            }
            total += pi[u] * pi[v] * term;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Serialize)]
pub struct PotentialReport {
    pub phi: f64,
    pub psi: f64,
    pub beta: f64,
    pub nu: f64,
    pub poly_degree: usize,
    pub local_values: Vec<f64>,
    pub shift_masses: Option<Vec<f64>>,
}

impl PotentialReport {
    pub fn check(&self) -> bool {
        self.phi >= -1e-6
            && self.psi >= -1e-6
            && self.shift_masses.as_ref().map_or(true, |m| m.iter().sum::<f64>() <= 1.0 + 1e-6)
    }
}

/// Both potentials plus per-vertex local values and per-shift masses.
pub fn potential_report(pe: &PseudoExpectation, p: &StepPolynomial, beta: f64, nu: f64, inst: &UgInstance) -> Result<PotentialReport> {
    let pe2 = pe.product_copy()?;
    let (verts, w) = stationary_weights(inst);
    let view = LocalView::global(inst);
    let sm = shift_moments(&pe2, p, &view, &verts, &w, &[], &[(1, 1)])?;
    Ok(PotentialReport {
        phi: quadratic(&w, sm.pair(1, 1)),
        psi: psi(pe, inst)?,
        beta,
        nu,
        poly_degree: p.degree(),
        local_values: verts.iter().map(|&u| view.expected_value(pe, u)).collect(),
        shift_masses: Some(sm.mass),
    })
}

/// Left and right sides of one inequality, with `holds` judged at `tol`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Sides {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Sides {
    fn at_least(lhs: f64, rhs: f64, tol: f64) -> Self {
        Sides { lhs, rhs, holds: lhs >= rhs - tol }
    }

    fn at_most(lhs: f64, rhs: f64, tol: f64) -> Self {
        Sides { lhs, rhs, holds: lhs <= rhs + tol }
    }
}

/// Constants of a small-set expansion certificate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SseConstants {
    pub alpha: f64,
    pub gamma: f64,
    pub eta: f64,
    pub c_prime: f64,
    /// Laplacian cutoff of the projector used in the cubic correction term.
    pub lambda: f64,
}

impl SseConstants {
    /// Constants implied by `(2, 4, C)`-hypercontractivity of the low eigenspace
    /// below `lambda`, with `eta = 1 / (2 sqrt(eps))`.
    pub fn from_hypercontractivity(lambda: f64, c: f64, eps: f64) -> Self {
        SseConstants {
            alpha: lambda / 2.0,
            gamma: lambda.powi(4) / (16.0 * c),
            eta: 1.0 / (2.0 * eps.sqrt()),
            c_prime: 1.0,
            lambda,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClaimsReport {
    pub beta: f64,
    pub nu: f64,
    pub viol: f64,
    pub phi: f64,
    pub cover: Sides,
    pub expansion: Sides,
    pub b1: Sides,
    /// Needs moments of degree `2 + 4 deg p`; absent when unavailable.
    pub b2: Option<Sides>,
    pub k_term: f64,
    pub partition_bound: Sides,
}

pub fn instance_graph(inst: &UgInstance) -> Result<WeightedGraph> {
    WeightedGraph::from_edges(inst.num_vertices(), inst.edges().iter().map(|e| (e.u, e.v, e.w)))
}

/// Numeric forms of the vertex-cover, expansion, and near-Booleanity bounds on
/// the approximate shift partition, and the resulting lower bound on the potential.
pub fn claims_report(
    pe: &PseudoExpectation,
    p: &StepPolynomial,
    beta: f64,
    nu: f64,
    inst: &UgInstance,
    sse: &SseConstants,
    tol: f64,
) -> Result<ClaimsReport> {
    let pe2 = pe.product_copy()?;
    let (verts, w) = stationary_weights(inst);
    let view = LocalView::global(inst);
    let n = verts.len();
    let b2_possible = pe.is_exact() || 2 + 4 * p.degree() <= pe.degree();
    let pairs: Vec<(usize, usize)> = if b2_possible { vec![(1, 1), (3, 1)] } else { vec![(1, 1)] };
    let sm = shift_moments(&pe2, p, &view, &verts, &w, &[1, 2], &pairs)?;
    let viol = 1.0 - pe.objective(inst);
    let slack = viol / (1.0 - beta - nu) + nu;
    let m11 = sm.pair(1, 1);
    let phi = quadratic(&w, m11);
    let cover_lhs: f64 = (0..n).map(|i| w[i] * sm.single[0][i]).sum();
    let total: f64 = inst.total_weight() * 2.0;
    let mut expansion = 0.0;
    for e in inst.edges() {
        let (i, j) = (e.u, e.v);
        expansion += e.w / total * (sm.single[1][i] + sm.single[1][j] - 2.0 * m11[i * n + j]);
    }
    let b1: f64 = (0..n).map(|i| w[i] * (sm.single[0][i] - sm.single[1][i])).sum();
    let b2 = if b2_possible {
        let spec = crate::graph::spectral_decompose(&instance_graph(inst)?)?;
        let kern = projector_kernel(&spec, sse.lambda);
        let m31 = sm.pair(3, 1);
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += kern[i * n + j] * (m11[i * n + j] - m31[i * n + j]);
            }
        }
        Some(Sides::at_most(s, 1.0 / (2.0 * sse.eta) + sse.eta * slack, tol))
    } else {
        None
    };
    let k_term = sse.c_prime * (sse.alpha - (4.0 + sse.alpha + sse.eta) * slack - 1.0 / (2.0 * sse.eta) - 2.0 * viol);
    Ok(ClaimsReport {
        beta,
        nu,
        viol,
        phi,
        cover: Sides::at_least(cover_lhs, 1.0 - slack, tol),
        expansion: Sides::at_most(expansion, 2.0 * viol + 2.0 * viol / (1.0 - beta - nu) + 2.0 * nu, tol),
        b1: Sides::at_most(b1, slack, tol),
        b2,
        k_term,
        partition_bound: Sides::at_least(phi, sse.gamma * (1.0 - slack) + k_term, 1e-4),
    })
}

/// `K[u][v]` with `<g, Pi f>_pi = sum_{u,v} g_u K[u][v] f_v` for the projector
/// onto Laplacian eigenvalues at most `lambda`.
pub fn projector_kernel(spec: &SpectralData, lambda: f64) -> Vec<f64> {
    let n = spec.pi.len();
    let mut kern = vec![0.0; n * n];
    for idx in spec.low_indices(lambda) {
        let v = &spec.vectors[idx];
        for a in 0..n {
            for b in 0..n {
                kern[a * n + b] += spec.pi[a] * v[a] * v[b] * spec.pi[b];
            }
        }
    }
    kern
}

/// Potential-versus-conditioned-potential inequality `Phi <= Psi / (beta - nu) + nu`.
pub fn phi_psi_check(phi: f64, psi: f64, beta: f64, nu: f64, tol: f64) -> Sides {
    Sides::at_most(phi, psi / (beta - nu) + nu, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sos::Distribution;
    use crate::Edge;

    fn cycle(n: usize, k: usize, shifts: &[usize]) -> UgInstance {
        let edges = (0..n).map(|i| Edge { u: i, v: (i + 1) % n, w: 1.0, shift: shifts[i] });
        UgInstance::new(n, k, edges).unwrap()
    }

    #[test]
    fn exact_potential_examples() {
        let inst = cycle(4, 3, &[0, 0, 0, 0]);
        let x = vec![1, 1, 1, 1];
        assert!((phi_exact_sampled(&inst, &x, &x, 0.5).unwrap() - 1.0).abs() < 1e-15);
        let y = vec![2, 2, 2, 2];
        assert!((phi_exact_sampled(&inst, &x, &y, 0.5).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn integral_psi_is_one() {
        let inst = cycle(5, 3, &[1, 2, 0, 1, 2]);
        let x = crate::instance::brute_force_opt(&inst, 1000).unwrap().0;
        if inst.value(&x).unwrap() == 1.0 {
            let pe = PseudoExpectation::points(Distribution::point(3, x), 4);
            assert!((psi(&pe, &inst).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn internal_view_rejects_isolated() {
        let inst = cycle(4, 2, &[0, 0, 0, 0]);
        assert!(matches!(LocalView::internal(&inst, &[0, 2]), Err(Error::Domain(_))));
    }
}
