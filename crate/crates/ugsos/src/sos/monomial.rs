//! Canonical multilinear monomials over the indicator variables `X_{u,a}`.

use smallvec::SmallVec;
use std::fmt;

/// The indicator `X_{vertex,label}` of copy `copy` (0 for `X`, 1 for `X'`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Var {
    pub vertex: u32,
    pub label: u16,
    pub copy: u8,
}

impl Var {
    pub fn new(vertex: usize, label: usize) -> Self {
        Var { vertex: vertex as u32, label: label as u16, copy: 0 }
    }

    pub fn tagged(vertex: usize, label: usize, copy: u8) -> Self {
        Var { vertex: vertex as u32, label: label as u16, copy }
    }
}

/// Sorted product of distinct variables; at most one label per (vertex, copy).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial(SmallVec<[Var; 6]>);

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write!(f, "X{}[{},{}]", if v.copy == 1 { "'" } else { "" }, v.vertex, v.label)?;
        }
        Ok(())
    }
}

impl Monomial {
    pub fn one() -> Self {
        Monomial(SmallVec::new())
    }

    pub fn var(vertex: usize, label: usize) -> Self {
        Monomial(smallvec::smallvec![Var::new(vertex, label)])
    }

    /// Canonical form of a product, or `None` for the zero monomial.
    pub fn from_vars(vars: impl IntoIterator<Item = Var>) -> Option<Self> {
        let mut v: SmallVec<[Var; 6]> = vars.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self::check(v)
    }

    fn check(v: SmallVec<[Var; 6]>) -> Option<Self> {
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                if v[j].vertex != v[i].vertex {
                    break;
                }
                if v[j].copy == v[i].copy {
                    return None;
                }
            }
        }
        Some(Monomial(v))
    }

    pub fn vars(&self) -> &[Var] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn degree_in(&self, copy: u8) -> usize {
        self.0.iter().filter(|v| v.copy == copy).count()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Monomial) -> Option<Monomial> {
        let (a, b) = (&self.0, &other.0);
        let mut out: SmallVec<[Var; 6]> = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Self::check(out)
    }

    pub fn mul_var(&self, v: Var) -> Option<Monomial> {
        self.mul(&Monomial(smallvec::smallvec![v]))
    }

    /// Adds `s` to every label of copy `copy` (mod `k`).
    pub fn shifted(&self, s: usize, k: usize) -> Monomial {
        let mut v: SmallVec<[Var; 6]> = self
            .0
            .iter()
            .map(|x| Var { label: ((x.label as usize + s) % k) as u16, ..*x })
            .collect();
        v.sort_unstable();
        Monomial(v)
    }

    /// Sets every variable's copy tag.
    pub fn with_copy(&self, copy: u8) -> Monomial {
        let mut v: SmallVec<[Var; 6]> = self.0.iter().map(|x| Var { copy, ..*x }).collect();
        v.sort_unstable();
        Monomial(v)
    }

    /// Splits into the `X` part and the `X'` part (the latter re-tagged as copy 0).
    pub fn split_copies(&self) -> (Monomial, Monomial) {
        let a = self.0.iter().filter(|v| v.copy == 0).copied().collect();
        let b = self.0.iter().filter(|v| v.copy == 1).map(|v| Var { copy: 0, ..*v }).collect();
        (Monomial(a), Monomial(b))
    }

    /// Keeps variables whose vertex satisfies `keep`.
    pub fn filter_vertices(&self, mut keep: impl FnMut(usize) -> bool) -> Monomial {
        Monomial(self.0.iter().filter(|v| keep(v.vertex as usize)).copied().collect())
    }

    pub fn label_of(&self, vertex: usize) -> Option<usize> {
        self.0.iter().find(|v| v.vertex as usize == vertex && v.copy == 0).map(|v| v.label as usize)
    }
}

/// Every nonzero copy-0 monomial of degree at most `max_degree` using labels `0..labels`,
/// ordered by degree, then vertex set, then labels.
pub fn monomials_up_to(n: usize, labels: usize, max_degree: usize) -> Vec<Monomial> {
    let mut out = vec![Monomial::one()];
    for d in 1..=max_degree.min(n) {
        for set in crate::graph::subsets_of_size(n, d) {
            let total = labels.pow(d as u32);
            for code in 0..total {
                let mut c = code;
                let mut v: SmallVec<[Var; 6]> = SmallVec::with_capacity(d);
                for &u in set.iter().rev() {
                    v.push(Var::new(u, c % labels));
                    c /= labels;
                }
                v.reverse();
                out.push(Monomial(v));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalization() {
        let a = Monomial::from_vars([Var::new(2, 1), Var::new(0, 0), Var::new(2, 1)]).unwrap();
        assert_eq!(a.degree(), 2);
        assert_eq!(a.vars()[0], Var::new(0, 0));
        assert!(Monomial::from_vars([Var::new(1, 0), Var::new(1, 1)]).is_none());
        assert!(Monomial::from_vars([Var::tagged(1, 0, 0), Var::tagged(1, 1, 1)]).is_some());
        assert!(Monomial::var(3, 0).mul(&Monomial::var(3, 2)).is_none());
        assert_eq!(Monomial::var(3, 0).mul(&Monomial::var(3, 0)).unwrap(), Monomial::var(3, 0));
    }

    #[test]
    fn basis_counts() {
        // 1 + 2 * 2 labels for two vertices, k = 2, degree 1
        assert_eq!(monomials_up_to(2, 2, 1).len(), 5);
        assert_eq!(monomials_up_to(3, 2, 1).len(), 7);
        // 1 + 15*2 + C(15,2)*4
        assert_eq!(monomials_up_to(15, 2, 2).len(), 451);
    }

    #[test]
    fn shifts_and_copies() {
        let m = Monomial::from_vars([Var::new(0, 2), Var::new(1, 0)]).unwrap();
        let s = m.shifted(1, 3);
        assert_eq!(s.label_of(0), Some(0));
        assert_eq!(s.label_of(1), Some(1));
        let t = Monomial::from_vars([Var::tagged(0, 1, 0), Var::tagged(0, 2, 1), Var::tagged(4, 0, 1)]).unwrap();
        let (a, b) = t.split_copies();
        assert_eq!(a, Monomial::var(0, 1));
        assert_eq!(b, Monomial::from_vars([Var::new(0, 2), Var::new(4, 0)]).unwrap());
        assert_eq!(t.degree_in(1), 2);
    }
}
