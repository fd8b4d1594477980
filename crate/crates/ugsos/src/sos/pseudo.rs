//! Pseudoexpectation operators and their calculus.

use super::monomial::{monomials_up_to, Monomial, Var};
use super::poly::Poly;
use crate::error::{Error, Result};
use crate::instance::{Assignment, UgInstance};
use std::collections::HashMap;
use std::sync::Arc;

/// Default floor below which conditioning is refused.
pub const COND_FLOOR: f64 = 1e-9;

/// A finitely supported distribution over assignments.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub k: usize,
    pub n: usize,
    pub support: Vec<(Assignment, f64)>,
}

impl Distribution {
    pub fn point(k: usize, x: Assignment) -> Self {
        Distribution { k, n: x.len(), support: vec![(x, 1.0)] }
    }

    /// Uniform mixture of the `k` global shifts of `x`.
    pub fn shifts_of(k: usize, x: &[usize]) -> Self {
        let support = (0..k).map(|s| (x.iter().map(|&a| (a + s) % k).collect(), 1.0 / k as f64)).collect();
        Distribution { k, n: x.len(), support }
    }

    pub fn prob(&self, m: &Monomial) -> f64 {
        self.support
            .iter()
            .filter(|(x, _)| m.vars().iter().all(|v| x[v.vertex as usize] == v.label as usize))
            .map(|(_, w)| w)
            .sum()
    }
}

#[derive(Debug, Clone)]
enum Store {
    /// Every nonzero monomial of degree at most `degree` (absent keys are 0).
    Table(HashMap<Monomial, f64>),
    /// Two independent copies of the inner operator.
    Product(Arc<PseudoExpectation>),
    /// Exact moments of a distribution, at any degree.
    Points(Arc<Distribution>),
}

#[derive(Debug, Clone)]
pub struct PseudoExpectation {
    degree: usize,
    k: usize,
    n: usize,
    store: Store,
}

impl PseudoExpectation {
    /// Wraps a moment table. Missing keys count as zero.
    pub fn from_table(n: usize, k: usize, degree: usize, table: HashMap<Monomial, f64>) -> Result<Self> {
        if degree < 2 || degree % 2 == 1 {
            return Err(Error::Parameter(format!("degree {degree} must be even and at least 2")));
        }
        Ok(PseudoExpectation { degree, k, n, store: Store::Table(table) })
    }

    /// Moment table of a genuine distribution, complete up to `degree`.
    pub fn from_distribution(d: &Distribution, degree: usize) -> Self {
        let mut table = HashMap::new();
        for m in monomials_up_to(d.n, d.k, degree) {
            table.insert(m.clone(), d.prob(&m));
        }
        PseudoExpectation { degree, k: d.k, n: d.n, store: Store::Table(table) }
    }

    /// Exact, degree-unbounded operator backed by a distribution.
    pub fn points(d: Distribution, degree: usize) -> Self {
        PseudoExpectation { degree, k: d.k, n: d.n, store: Store::Points(Arc::new(d)) }
    }

    /// Independent uniform labels.
    pub fn uniform(n: usize, k: usize, degree: usize) -> Self {
        let table = monomials_up_to(n, k, degree)
            .into_iter()
            .map(|m| {
                let v = (k as f64).powi(-(m.degree() as i32));
                (m, v)
            })
            .collect();
        PseudoExpectation { degree, k, n, store: Store::Table(table) }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn alphabet_size(&self) -> usize {
        self.k
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn copy_count(&self) -> usize {
        match self.store {
            Store::Product(_) => 2,
            _ => 1,
        }
    }

    /// Whether moments of every degree are available.
    pub fn is_exact(&self) -> bool {
        match &self.store {
            Store::Points(_) => true,
            Store::Product(inner) => inner.is_exact(),
            Store::Table(_) => false,
        }
    }

    pub fn distribution(&self) -> Option<&Distribution> {
        match &self.store {
            Store::Points(d) => Some(d),
            _ => None,
        }
    }

    /// The single-copy operator behind a product.
    pub fn base(&self) -> &PseudoExpectation {
        match &self.store {
            Store::Product(inner) => inner,
            _ => self,
        }
    }

    /// Whether a monomial is within the available degree.
    pub fn supports(&self, m: &Monomial) -> bool {
        match &self.store {
            Store::Points(_) => true,
            Store::Table(_) => m.degree() <= self.degree && m.degree_in(1) == 0,
            Store::Product(inner) => {
                inner.is_exact() || (m.degree_in(0) <= self.degree && m.degree_in(1) <= self.degree)
            }
        }
    }

    /// Moment of a canonical monomial. The caller is responsible for the degree.
    pub fn get(&self, m: &Monomial) -> f64 {
        match &self.store {
            Store::Table(t) => t.get(m).copied().unwrap_or(0.0),
            Store::Points(d) => d.prob(m),
            Store::Product(inner) => {
                let (a, b) = m.split_copies();
                let x = inner.get(&a);
                if x == 0.0 {
                    0.0
                } else {
                    x * inner.get(&b)
                }
            }
        }
    }

    /// Linear extension to polynomials.
    pub fn evaluate(&self, p: &Poly) -> Result<f64> {
        let mut s = 0.0;
        for (m, c) in p.terms() {
            if !self.supports(m) {
                let required = match self.store {
                    Store::Product(_) => m.degree_in(0).max(m.degree_in(1)),
                    _ => m.degree(),
                };
                return Err(Error::Degree { required, available: self.degree });
            }
            s += c * self.get(m);
        }
        Ok(s)
    }

    /// Iterates over stored moments (tables only).
    pub fn moments(&self) -> Box<dyn Iterator<Item = (&Monomial, f64)> + '_> {
        match &self.store {
            Store::Table(t) => Box::new(t.iter().map(|(m, &v)| (m, v))),
            _ => Box::new(std::iter::empty()),
        }
    }

    /// Materializes the complete moment table up to the operator's degree.
    pub fn to_table(&self) -> PseudoExpectation {
        match &self.store {
            Store::Table(_) => self.clone(),
            _ => {
                let table = monomials_up_to(self.n, self.k, self.degree)
                    .into_iter()
                    .map(|m| {
                        let v = self.get(&m);
                        (m, v)
                    })
                    .collect();
                PseudoExpectation { degree: self.degree, k: self.k, n: self.n, store: Store::Table(table) }
            }
        }
    }

    /// `pE[X_{u,a}]`.
    pub fn marginal(&self, u: usize, a: usize) -> f64 {
        self.get(&Monomial::var(u, a))
    }

    /// `pE[X_{u,a} X_{v,b}]`.
    pub fn pair(&self, u: usize, a: usize, v: usize, b: usize) -> f64 {
        match Monomial::from_vars([Var::new(u, a), Var::new(v, b)]) {
            Some(m) => self.get(&m),
            None => 0.0,
        }
    }

    /// The relaxation objective `E_(u,v) sum_a pE[X_{u,a} X_{v,pi(a)}]`.
    pub fn objective(&self, inst: &UgInstance) -> f64 {
        let k = self.k;
        let mut s = 0.0;
        for e in inst.edges() {
            let mut sat = 0.0;
            for a in 0..k {
                sat += self.pair(e.u, a, e.v, (a + k - e.shift) % k);
            }
            s += e.w * sat;
        }
        s / inst.total_weight()
    }

    /// Uniform mixture over global label shifts.
    pub fn symmetrize(&self) -> Result<PseudoExpectation> {
        let k = self.k;
        match &self.store {
            Store::Product(_) => Err(Error::Domain("symmetrize expects a single copy".into())),
            Store::Points(d) => {
                let mut support = Vec::new();
                for (x, w) in &d.support {
                    for s in 0..k {
                        support.push((x.iter().map(|&a| (a + s) % k).collect(), w / k as f64));
                    }
                }
                Ok(Self::points(Distribution { k, n: self.n, support }, self.degree))
            }
            Store::Table(t) => {
                let mut out: HashMap<Monomial, f64> = HashMap::with_capacity(t.len());
                for (m, &v) in t {
                    for s in 0..k {
                        *out.entry(m.shifted(s, k)).or_insert(0.0) += v / k as f64;
                    }
                }
                Ok(PseudoExpectation { store: Store::Table(out), ..self.clone_meta() })
            }
        }
    }

    /// Largest change of any moment under a single label shift.
    pub fn symmetry_residual(&self) -> f64 {
        match &self.store {
            Store::Table(t) => t
                .iter()
                .map(|(m, &v)| (self.get(&m.shifted(1, self.k)) - v).abs())
                .fold(0.0, f64::max),
            Store::Points(_) => {
                let table = self.to_table();
                table.symmetry_residual()
            }
            Store::Product(inner) => inner.symmetry_residual(),
        }
    }

    fn clone_meta(&self) -> PseudoExpectation {
        PseudoExpectation { degree: self.degree, k: self.k, n: self.n, store: Store::Table(HashMap::new()) }
    }

    /// Reweights by the indicator `event`: `pE'[m] = pE[m * event] / pE[event]`.
    /// The result has degree `D - 2 deg(event)`.
    pub fn condition(&self, event: &Monomial) -> Result<PseudoExpectation> {
        self.condition_with_floor(event, COND_FLOOR)
    }

    pub fn condition_with_floor(&self, event: &Monomial, floor: f64) -> Result<PseudoExpectation> {
        if event.degree_in(1) > 0 || self.copy_count() == 2 {
            return Err(Error::Domain("conditioning applies to single-copy events".into()));
        }
        let z = self.get(event);
        if !(z >= floor) {
            return Err(Error::NullEvent(z));
        }
        if let Store::Points(d) = &self.store {
            let support = d
                .support
                .iter()
                .filter(|(x, _)| event.vars().iter().all(|v| x[v.vertex as usize] == v.label as usize))
                .map(|(x, w)| (x.clone(), w / z))
                .collect();
            return Ok(Self::points(Distribution { k: self.k, n: self.n, support }, self.degree));
        }
        let cut = 2 * event.degree();
        if cut + 2 > self.degree {
            return Err(Error::Degree { required: cut + 2, available: self.degree });
        }
        let degree = self.degree - cut;
        let mut table = HashMap::new();
        for m in monomials_up_to(self.n, self.k, degree) {
            let v = match m.mul(event) {
                Some(me) => self.get(&me) / z,
                None => 0.0,
            };
            table.insert(m, v);
        }
        Ok(PseudoExpectation { degree, k: self.k, n: self.n, store: Store::Table(table) })
    }

    /// Independent second copy: `pE2[X^a X'^b] = pE[X^a] pE[X^b]`.
    pub fn product_copy(&self) -> Result<PseudoExpectation> {
        if self.copy_count() != 1 {
            return Err(Error::Domain("product_copy expects a single copy".into()));
        }
        Ok(PseudoExpectation { degree: self.degree, k: self.k, n: self.n, store: Store::Product(Arc::new(self.clone())) })
    }

    /// Replaces the labels on `set` by independent uniform labels.
    pub fn rerandomize(&self, set: &[usize]) -> Result<PseudoExpectation> {
        if self.copy_count() != 1 {
            return Err(Error::Domain("rerandomize expects a single copy".into()));
        }
        if set.is_empty() {
            return Ok(self.clone());
        }
        let mut mask = vec![false; self.n];
        for &v in set {
            mask[v] = true;
        }
        let k = self.k as f64;
        if let Store::Points(_) = &self.store {
            return self.to_table().rerandomize(set);
        }
        let mut table = HashMap::new();
        for m in monomials_up_to(self.n, self.k, self.degree) {
            let t = m.vars().iter().filter(|v| mask[v.vertex as usize]).count();
            let rest = m.filter_vertices(|u| !mask[u]);
            table.insert(m, self.get(&rest) * k.powi(-(t as i32)));
        }
        Ok(PseudoExpectation { degree: self.degree, k: self.k, n: self.n, store: Store::Table(table) })
    }

    /// Mixture `(1 - t) self + t other` of two single-copy tables of equal shape.
    pub fn mix(&self, other: &PseudoExpectation, t: f64) -> PseudoExpectation {
        let a = self.to_table();
        let b = other.to_table();
        let mut table: HashMap<Monomial, f64> = HashMap::new();
        for (m, v) in a.moments() {
            *table.entry(m.clone()).or_insert(0.0) += (1.0 - t) * v;
        }
        for (m, v) in b.moments() {
            *table.entry(m.clone()).or_insert(0.0) += t * v;
        }
        PseudoExpectation { degree: self.degree.min(other.degree), k: self.k, n: self.n, store: Store::Table(table) }
    }
}
