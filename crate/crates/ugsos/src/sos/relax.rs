//! The degree-D moment relaxation of the unique games program.
//!
//! Variables are moments of monomials over the reduced labels `0..k-1`; the
//! last label is eliminated through `X_{u,k-1} = 1 - sum_{a<k-1} X_{u,a}`, so
//! the partition axiom holds identically. Entries of the moment matrix that
//! name the same monomial share one variable.

use super::monomial::{monomials_up_to, Monomial, Var};
use crate::error::{Error, Result};
use crate::instance::UgInstance;
use std::collections::HashMap;

/// Cap on the full moment-matrix dimension.
pub const DIMENSION_CAP: usize = 4000;

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub(crate) n: usize,
    pub(crate) k: usize,
    pub(crate) degree: usize,
    full_basis: Vec<Monomial>,
    pub(crate) basis: Vec<Monomial>,
    pub(crate) classes: Vec<Monomial>,
    class_index: HashMap<Monomial, usize>,
    /// Column-major `dim x dim`; `usize::MAX` marks an entry forced to zero.
    pub(crate) entry_class: Vec<usize>,
    pub(crate) class_count: Vec<usize>,
    pub(crate) objective: Vec<f64>,
    pub(crate) objective_const: f64,
    /// `(u, v, shift, weight / total weight)`.
    pub(crate) edges: Vec<(usize, usize, usize, f64)>,
}

/// A linear equality over entries of the full moment matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub terms: Vec<(usize, usize, f64)>,
    pub rhs: f64,
}

pub const ZERO: usize = usize::MAX;

/// Number of monomials of degree at most `d` over `n` vertices and `labels` labels.
fn basis_size(n: usize, labels: usize, d: usize) -> u128 {
    let mut total: u128 = 0;
    let mut choose: u128 = 1;
    for j in 0..=d.min(n) {
        if j > 0 {
            choose = choose * (n - j + 1) as u128 / j as u128;
        }
        total += choose * (labels as u128).pow(j as u32);
    }
    total
}

impl SdpProblem {
    /// Full moment-matrix dimension (monomials of degree at most `D/2` over all labels).
    pub fn dimension(&self) -> usize {
        self.full_basis.len()
    }

    /// Dimension of the reduced matrix the solver works with.
    pub fn reduced_dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn alphabet_size(&self) -> usize {
        self.k
    }

    pub fn full_basis(&self) -> &[Monomial] {
        &self.full_basis
    }

    pub fn num_variables(&self) -> usize {
        self.classes.len()
    }

    pub fn class_of(&self, m: &Monomial) -> Option<usize> {
        self.class_index.get(m).copied()
    }

    /// Writes a monomial over all labels as a combination of reduced monomials.
    pub fn expand(&self, m: &Monomial) -> Vec<(usize, f64)> {
        let last = (self.k - 1) as u16;
        let mut terms: Vec<(Vec<Var>, f64)> = vec![(Vec::new(), 1.0)];
        for v in m.vars() {
            let mut next = Vec::with_capacity(terms.len() * self.k);
            for (vars, c) in terms {
                if v.label != last {
                    let mut w = vars.clone();
                    w.push(*v);
                    next.push((w, c));
                } else {
                    next.push((vars.clone(), c));
                    for a in 0..self.k - 1 {
                        let mut w = vars.clone();
                        w.push(Var { label: a as u16, ..*v });
                        next.push((w, -c));
                    }
                }
            }
            terms = next;
        }
        let mut acc: HashMap<usize, f64> = HashMap::new();
        for (vars, c) in terms {
            if let Some(mono) = Monomial::from_vars(vars) {
                let idx = self.class_index[&mono];
                *acc.entry(idx).or_insert(0.0) += c;
            }
        }
        let mut out: Vec<(usize, f64)> = acc.into_iter().filter(|&(_, c)| c != 0.0).collect();
        out.sort_by_key(|t| t.0);
        out
    }

    /// Value of a full monomial given reduced moments `y`.
    pub fn moment(&self, y: &[f64], m: &Monomial) -> f64 {
        self.expand(m).iter().map(|&(i, c)| c * y[i]).sum()
    }

    /// Objective value of reduced moments `y`.
    pub fn objective_value(&self, y: &[f64]) -> f64 {
        self.objective_const + self.objective.iter().zip(y).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Reduced moment matrix, column-major.
    pub fn reduced_matrix(&self, y: &[f64]) -> Vec<f64> {
        self.entry_class.iter().map(|&c| if c == ZERO { 0.0 } else { y[c] }).collect()
    }

    /// Equalities on the full moment matrix: scaling, zero entries, aliasing
    /// and partition.
    pub fn full_constraints(&self) -> Vec<LinearConstraint> {
        let b = &self.full_basis;
        let dim = b.len();
        let mut out = vec![LinearConstraint { terms: vec![(0, 0, 1.0)], rhs: 1.0 }];
        let mut rep: HashMap<Monomial, (usize, usize)> = HashMap::new();
        for j in 0..dim {
            for i in 0..dim {
                match b[i].mul(&b[j]) {
                    None => out.push(LinearConstraint { terms: vec![(i, j, 1.0)], rhs: 0.0 }),
                    Some(m) => match rep.get(&m) {
                        Some(&(p, q)) => {
                            out.push(LinearConstraint { terms: vec![(i, j, 1.0), (p, q, -1.0)], rhs: 0.0 })
                        }
                        None => {
                            rep.insert(m, (i, j));
                        }
                    },
                }
            }
        }
        for m in monomials_up_to(self.n, self.k, self.degree - 1) {
            let Some(&(p, q)) = rep.get(&m) else { continue };
            for u in 0..self.n {
                if m.vars().iter().any(|v| v.vertex as usize == u) {
                    continue;
                }
                let mut terms = vec![(p, q, -1.0)];
                for a in 0..self.k {
                    let ma = m.mul_var(Var::new(u, a)).expect("vertex absent from monomial");
                    let &(i, j) = &rep[&ma];
                    terms.push((i, j, 1.0));
                }
                out.push(LinearConstraint { terms, rhs: 0.0 });
            }
        }
        out
    }

    /// Full moment matrix `M[i, j] = pE[b_i b_j]`, column-major.
    pub fn full_matrix(&self, moment: impl Fn(&Monomial) -> f64) -> Vec<f64> {
        let b = &self.full_basis;
        let dim = b.len();
        let mut m = vec![0.0; dim * dim];
        for j in 0..dim {
            for i in 0..dim {
                if let Some(p) = b[i].mul(&b[j]) {
                    m[i + j * dim] = moment(&p);
                }
            }
        }
        m
    }

    /// Objective as a sparse functional over full-matrix entries.
    pub fn full_objective(&self, inst: &UgInstance) -> Vec<(usize, usize, f64)> {
        let pos: HashMap<&Monomial, usize> = self.full_basis.iter().enumerate().map(|(i, m)| (m, i)).collect();
        let k = self.k;
        let mut out = Vec::new();
        for e in inst.edges() {
            for a in 0..k {
                let i = pos[&Monomial::var(e.u, a)];
                let j = pos[&Monomial::var(e.v, (a + k - e.shift) % k)];
                out.push((i, j, e.w / inst.total_weight()));
            }
        }
        out
    }
}

/// Builds the degree-`degree` relaxation for `inst`.
pub fn build_relaxation(inst: &UgInstance, degree: usize) -> Result<SdpProblem> {
    if ![2, 4, 6].contains(&degree) {
        return Err(Error::Parameter(format!("degree {degree} not in {{2, 4, 6}}")));
    }
    let (n, k) = (inst.num_vertices(), inst.alphabet_size());
    if k < 2 {
        return Err(Error::Parameter("alphabet size must be at least 2".into()));
    }
    let half = degree / 2;
    let full = basis_size(n, k, half);
    if full > DIMENSION_CAP as u128 {
        return Err(Error::size("moment-matrix dimension", full, DIMENSION_CAP));
    }
    let full_basis = monomials_up_to(n, k, half);
    let basis = monomials_up_to(n, k - 1, half);
    let classes = monomials_up_to(n, k - 1, degree);
    let class_index: HashMap<Monomial, usize> = classes.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
    let dim = basis.len();
    let mut entry_class = vec![ZERO; dim * dim];
    let mut class_count = vec![0usize; classes.len()];
    for j in 0..dim {
        for i in 0..dim {
            if let Some(m) = basis[i].mul(&basis[j]) {
                let c = class_index[&m];
                entry_class[i + j * dim] = c;
                class_count[c] += 1;
            }
        }
    }
    let mut p = SdpProblem {
        n,
        k,
        degree,
        full_basis,
        basis,
        classes,
        class_index,
        entry_class,
        class_count,
        objective: Vec::new(),
        objective_const: 0.0,
        edges: inst.edges().iter().map(|e| (e.u, e.v, e.shift, e.w / inst.total_weight())).collect(),
    };
    let mut obj = vec![0.0; p.classes.len()];
    let total = inst.total_weight();
    for e in inst.edges() {
        for a in 0..k {
            let m = Monomial::from_vars([Var::new(e.u, a), Var::new(e.v, (a + k - e.shift) % k)]).expect("distinct vertices");
            for (c, coef) in p.expand(&m) {
                obj[c] += e.w / total * coef;
            }
        }
    }
    // the constant monomial is pinned to 1
    p.objective_const = obj[0];
    obj[0] = 0.0;
    p.objective = obj;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Edge;

    fn edge(u: usize, v: usize, shift: usize) -> Edge {
        Edge { u, v, w: 1.0, shift }
    }

    #[test]
    fn dimensions() {
        let e = UgInstance::new(2, 2, [edge(0, 1, 0)]).unwrap();
        let p = build_relaxation(&e, 2).unwrap();
        assert_eq!(p.dimension(), 5);
        assert_eq!(p.reduced_dimension(), 3);
        let t = UgInstance::new(3, 2, [edge(0, 1, 0), edge(1, 2, 0), edge(0, 2, 0)]).unwrap();
        assert_eq!(build_relaxation(&t, 2).unwrap().dimension(), 7);
        assert!(matches!(build_relaxation(&t, 3), Err(Error::Parameter(_))));
        let big = UgInstance::new(40, 3, [edge(0, 1, 0)]).unwrap();
        assert!(matches!(build_relaxation(&big, 4), Err(Error::Size { .. })));
    }

    #[test]
    fn expansion_of_last_label() {
        let e = UgInstance::new(2, 3, [edge(0, 1, 0)]).unwrap();
        let p = build_relaxation(&e, 2).unwrap();
        // X_{0,2} = 1 - X_{0,0} - X_{0,1}
        let t = p.expand(&Monomial::var(0, 2));
        assert_eq!(t.len(), 3);
        assert_eq!(t.iter().map(|x| x.1).sum::<f64>(), -1.0);
    }
}
