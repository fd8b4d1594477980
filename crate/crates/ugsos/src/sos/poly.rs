//! Sparse polynomials in the indicator variables, reduced modulo Booleanity
//! and disjointness.

use super::monomial::{Monomial, Var};
use std::collections::HashMap;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    terms: HashMap<Monomial, f64>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn monomial(m: Monomial, c: f64) -> Self {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn var(v: Var) -> Self {
        Self::monomial(Monomial::from_vars([v]).expect("single variable"), 1.0)
    }

    pub fn add_term(&mut self, m: Monomial, c: f64) {
        if c != 0.0 {
            *self.terms.entry(m).or_insert(0.0) += c;
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, copy: u8) -> usize {
        self.terms.keys().map(|m| m.degree_in(copy)).max().unwrap_or(0)
    }

    pub fn add(&mut self, other: &Poly, scale: f64) {
        for (m, c) in other.terms() {
            self.add_term(m.clone(), scale * c);
        }
    }

    pub fn scaled(&self, s: f64) -> Poly {
        let mut p = Poly::zero();
        p.add(self, s);
        p
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut p = Poly::zero();
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                if let Some(m) = a.mul(b) {
                    p.add_term(m, ca * cb);
                }
            }
        }
        p
    }

    /// Drops terms below `eps` in magnitude.
    pub fn pruned(mut self, eps: f64) -> Poly {
        self.terms.retain(|_, c| c.abs() > eps);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn booleanity_and_disjointness() {
        let x = Poly::var(Var::new(0, 0));
        let y = Poly::var(Var::new(0, 1));
        assert_eq!(x.mul(&x), x);
        assert!(x.mul(&y).is_empty());
        let mut s = x.clone();
        s.add(&y, 1.0);
        // (x + y)^2 = x + y under the axioms
        assert_eq!(s.mul(&s), s);
    }
}
