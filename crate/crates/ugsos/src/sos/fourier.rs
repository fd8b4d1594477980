//! Label-Fourier form of the relaxation.
//!
//! For a vertex `u` and charge `t` let `chi_t(u) = sum_a w^(t a) X_{u,a}` with
//! `w = exp(2 pi i / k)`. Products of characters over distinct vertices span
//! the same space as the monomials, and in that basis the moment matrix has
//! entries `pE[conj(chi_A) chi_B] = z[B - A]`. A common shift of all labels
//! preserves every affine constraint, so the optimum can be taken
//! shift-invariant. Then only total charge zero survives and the matrix splits
//! into one block per charge of the basis element. Blocks of charge `c` and
//! `-c` are conjugate, so only one of each pair is stored.

use super::monomial::{Monomial, Var};
use super::pseudo::PseudoExpectation;
use super::relax::SdpProblem;
use crate::error::Result;
use crate::graph::generators::subsets_of_size;
use crate::linalg::{herm_eigenvalues, project_psd, project_psd_herm, sym_eigenvalues};
use num_complex::Complex64;
use smallvec::SmallVec;
use std::collections::HashMap;

type Cx = Complex64;

/// Character product as `(vertex, charge)` pairs, sorted by vertex, charges nonzero.
pub(crate) type Char = SmallVec<[(u32, u8); 6]>;

fn negate(g: &Char, k: usize) -> Char {
    g.iter().map(|&(u, t)| (u, ((k - t as usize) % k) as u8)).collect()
}

fn charge(g: &Char, k: usize) -> usize {
    g.iter().map(|&(_, t)| t as usize).sum::<usize>() % k
}

/// `b - a`, dropping vertices whose charge cancels.
fn difference(a: &Char, b: &Char, k: usize) -> Char {
    let mut out = Char::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = j == b.len() || (i < a.len() && a[i].0 < b[j].0);
        let take_b = i == a.len() || (j < b.len() && b[j].0 < a[i].0);
        if take_a {
            out.push((a[i].0, (k - a[i].1 as usize) as u8));
            i += 1;
        } else if take_b {
            out.push(b[j]);
            j += 1;
        } else {
            let t = (b[j].1 as usize + k - a[i].1 as usize) % k;
            if t != 0 {
                out.push((a[i].0, t as u8));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Sparse unitary taking a self-conjugate block to a real symmetric one.
#[derive(Debug, Clone)]
struct Realify {
    rows: Vec<SmallVec<[(usize, Cx); 2]>>,
    cols: Vec<SmallVec<[(usize, Cx); 2]>>,
}

impl Realify {
    fn to_real(&self, dim: usize, m: &[Cx]) -> Vec<f64> {
        let mut r = vec![0.0; dim * dim];
        for b in 0..dim {
            for a in 0..dim {
                let mut acc = Cx::new(0.0, 0.0);
                for &(i, tia) in &self.cols[a] {
                    for &(j, tjb) in &self.cols[b] {
                        acc += tia.conj() * m[i + j * dim] * tjb;
                    }
                }
                r[a + b * dim] = acc.re;
            }
        }
        r
    }

    fn from_real(&self, dim: usize, r: &[f64], m: &mut [Cx]) {
        for j in 0..dim {
            for i in 0..dim {
                let mut acc = Cx::new(0.0, 0.0);
                for &(a, tia) in &self.rows[i] {
                    for &(b, tjb) in &self.rows[j] {
                        acc += tia * r[a + b * dim] * tjb.conj();
                    }
                }
                m[i + j * dim] = acc;
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Block {
    mult: f64,
    dim: usize,
    /// Column-major `(class, conjugated)`.
    entries: Vec<(u32, bool)>,
    realify: Option<Realify>,
}

impl Block {
    fn fill(&self, z: &[Cx], out: &mut [Cx]) {
        for (o, &(c, conj)) in out.iter_mut().zip(&self.entries) {
            let v = z[c as usize];
            *o = if conj { v.conj() } else { v };
        }
    }

    fn project(&self, m: &mut [Cx]) {
        match &self.realify {
            Some(t) => {
                let mut r = t.to_real(self.dim, m);
                project_psd(self.dim, &mut r);
                t.from_real(self.dim, &r, m);
            }
            None => {
                project_psd_herm(self.dim, m);
            }
        }
    }

    fn min_eigenvalue(&self, m: &[Cx]) -> f64 {
        let ev = match &self.realify {
            Some(t) => sym_eigenvalues(self.dim, &t.to_real(self.dim, m)),
            None => herm_eigenvalues(self.dim, m),
        };
        ev.first().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct FourierProblem {
    n: usize,
    k: usize,
    degree: usize,
    classes: Vec<Char>,
    index: HashMap<Char, usize>,
    real_class: Vec<bool>,
    weight: Vec<f64>,
    grad: Vec<Cx>,
    obj_const: f64,
    blocks: Vec<Block>,
}

/// Iterates `(1..k)^j` as charge vectors.
fn charge_tuples(j: usize, k: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..j {
        out = out
            .into_iter()
            .flat_map(|p| {
                (1..k).map(move |t| {
                    let mut q = p.clone();
                    q.push(t as u8);
                    q
                })
            })
            .collect();
    }
    out
}

pub(crate) struct AdmmStats {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
}

impl FourierProblem {
    pub(crate) fn new(p: &SdpProblem) -> Self {
        let (n, k, degree) = (p.n, p.k, p.degree);
        let mut by_charge: Vec<Vec<Char>> = vec![Vec::new(); k];
        for j in 0..=(degree / 2).min(n) {
            let tuples = charge_tuples(j, k);
            for s in subsets_of_size(n, j) {
                for t in &tuples {
                    let g: Char = s.iter().zip(t).map(|(&u, &c)| (u as u32, c)).collect();
                    by_charge[charge(&g, k)].push(g);
                }
            }
        }
        let mut fp = FourierProblem {
            n,
            k,
            degree,
            classes: vec![Char::new()],
            index: HashMap::from([(Char::new(), 0)]),
            real_class: vec![true],
            weight: vec![0.0],
            grad: Vec::new(),
            obj_const: 0.0,
            blocks: Vec::new(),
        };
        for c in 0..k {
            let mirror = (k - c) % k;
            if mirror < c {
                continue;
            }
            let basis = &by_charge[c];
            let dim = basis.len();
            let mult = if mirror == c { 1.0 } else { 2.0 };
            let mut entries = Vec::with_capacity(dim * dim);
            for b in basis {
                for a in basis {
                    let (cls, conj) = fp.intern(difference(a, b, k));
                    fp.weight[cls] += mult;
                    entries.push((cls as u32, conj));
                }
            }
            let realify = (mirror == c).then(|| {
                let pos: HashMap<&Char, usize> = basis.iter().enumerate().map(|(i, g)| (g, i)).collect();
                let h = std::f64::consts::FRAC_1_SQRT_2;
                let mut rows = vec![SmallVec::new(); dim];
                let mut cols = vec![SmallVec::new(); dim];
                for i in 0..dim {
                    let q = pos[&negate(&basis[i], k)];
                    if q == i {
                        rows[i].push((i, Cx::new(1.0, 0.0)));
                        cols[i].push((i, Cx::new(1.0, 0.0)));
                    } else if i < q {
                        let entries = [(i, i, Cx::new(h, 0.0)), (q, i, Cx::new(h, 0.0)), (i, q, Cx::new(0.0, h)), (q, q, Cx::new(0.0, -h))];
                        for (r, col, v) in entries {
                            rows[r].push((col, v));
                            cols[col].push((r, v));
                        }
                    }
                }
                Realify { rows, cols }
            });
            fp.blocks.push(Block { mult, dim, entries, realify });
        }
        fp.grad = vec![Cx::new(0.0, 0.0); fp.classes.len()];
        let omega = |e: usize| Cx::from_polar(1.0, 2.0 * std::f64::consts::PI * (e % k) as f64 / k as f64);
        for &(u, v, s, w) in &p.edges {
            fp.obj_const += w / k as f64;
            for t in 1..k {
                let g: Char = [(u as u32, t as u8), (v as u32, (k - t) as u8)].into_iter().collect();
                let a = omega((k - t) * s % k) * (w / k as f64);
                let (cls, conj) = fp.lookup(&g);
                fp.grad[cls] += if conj { a } else { a.conj() };
            }
        }
        fp
    }

    fn intern(&mut self, g: Char) -> (usize, bool) {
        let ng = negate(&g, self.k);
        let conj = ng < g;
        let canon = if conj { ng } else { g };
        let next = self.classes.len();
        let idx = *self.index.entry(canon.clone()).or_insert(next);
        if idx == next {
            self.real_class.push(negate(&canon, self.k) == canon);
            self.classes.push(canon);
            self.weight.push(0.0);
        }
        (idx, conj)
    }

    fn lookup(&self, g: &Char) -> (usize, bool) {
        let ng = negate(g, self.k);
        if ng < *g {
            (self.index[&ng], true)
        } else {
            (self.index[g], false)
        }
    }

    /// Value of the shift-invariant operator with Fourier moments `z`.
    pub(crate) fn objective(&self, z: &[Cx]) -> f64 {
        self.obj_const + self.grad.iter().zip(z).map(|(g, v)| g.re * v.re + g.im * v.im).sum::<f64>()
    }

    /// Weighted class average of block matrices, optionally shifted by the objective gradient.
    fn average(&self, mats: &[Vec<Cx>], rho: Option<f64>) -> Vec<Cx> {
        let mut z = vec![Cx::new(0.0, 0.0); self.classes.len()];
        for (b, m) in self.blocks.iter().zip(mats) {
            for (&(c, conj), v) in b.entries.iter().zip(m) {
                z[c as usize] += if conj { v.conj() } else { *v } * b.mult;
            }
        }
        for (c, zc) in z.iter_mut().enumerate() {
            *zc /= self.weight[c];
            if let Some(rho) = rho {
                *zc += self.grad[c] / (rho * self.weight[c]);
            }
            if self.real_class[c] {
                zc.im = 0.0;
            }
        }
        z[0] = Cx::new(1.0, 0.0);
        z
    }

    fn matrices(&self, z: &[Cx]) -> Vec<Vec<Cx>> {
        self.blocks
            .iter()
            .map(|b| {
                let mut m = vec![Cx::new(0.0, 0.0); b.dim * b.dim];
                b.fill(z, &mut m);
                m
            })
            .collect()
    }

    fn norm(&self, mats: &[Vec<Cx>]) -> f64 {
        self.blocks.iter().zip(mats).map(|(b, m)| b.mult * m.iter().map(|x| x.norm_sqr()).sum::<f64>()).sum::<f64>().sqrt()
    }

    fn diff_norm(&self, a: &[Vec<Cx>], b: &[Vec<Cx>]) -> f64 {
        self.blocks
            .iter()
            .zip(a.iter().zip(b))
            .map(|(blk, (x, y))| blk.mult * x.iter().zip(y).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// Smallest eigenvalue of the moment matrix over all blocks.
    pub(crate) fn min_eigenvalue(&self, z: &[Cx]) -> f64 {
        let mats = self.matrices(z);
        self.blocks.iter().zip(&mats).map(|(b, m)| b.min_eigenvalue(m)).fold(f64::INFINITY, f64::min)
    }

    /// Operator-splitting iterations; returns Fourier moments averaged from the PSD iterate.
    pub(crate) fn admm(&self, tol: f64, max_iter: usize, alpha: f64, rho0: f64) -> (Vec<Cx>, AdmmStats) {
        let mut uniform = vec![Cx::new(0.0, 0.0); self.classes.len()];
        uniform[0] = Cx::new(1.0, 0.0);
        let mut z = self.matrices(&uniform);
        let mut u: Vec<Vec<Cx>> = z.iter().map(|m| vec![Cx::new(0.0, 0.0); m.len()]).collect();
        let mut v = z.clone();
        let mut rho = rho0;
        let (mut r_norm, mut s_norm) = (f64::INFINITY, f64::INFINITY);
        let mut iterations = 0;
        let mut converged = false;
        while iterations < max_iter {
            iterations += 1;
            for ((vb, zb), ub) in v.iter_mut().zip(&z).zip(&u) {
                for ((x, a), b) in vb.iter_mut().zip(zb).zip(ub) {
                    *x = a - b;
                }
            }
            let y = self.average(&v, Some(rho));
            let x = self.matrices(&y);
            let z_old = std::mem::take(&mut z);
            let mut xh = x.clone();
            for (xb, zb) in xh.iter_mut().zip(&z_old) {
                for (a, b) in xb.iter_mut().zip(zb) {
                    *a = *a * alpha + b * (1.0 - alpha);
                }
            }
            z = xh.iter().zip(&u).map(|(a, b)| a.iter().zip(b).map(|(p, q)| p + q).collect()).collect();
            self.project_all(&mut z);
            for ((ub, xb), zb) in u.iter_mut().zip(&xh).zip(&z) {
                for ((p, a), b) in ub.iter_mut().zip(xb).zip(zb) {
                    *p += a - b;
                }
            }
            r_norm = self.diff_norm(&x, &z) / (1.0 + self.norm(&x).max(self.norm(&z)));
            s_norm = rho * self.diff_norm(&z, &z_old) / (1.0 + rho * self.norm(&u));
            if r_norm <= tol && s_norm <= tol {
                converged = true;
                break;
            }
            if iterations % 50 == 0 {
                let scale = if r_norm > 10.0 * s_norm {
                    2.0
                } else if s_norm > 10.0 * r_norm {
                    0.5
                } else {
                    1.0
                };
                if scale != 1.0 {
                    rho *= scale;
                    u.iter_mut().flatten().for_each(|x| *x /= scale);
                }
            }
        }
        let y = self.average(&z, None);
        (y, AdmmStats { iterations, primal_residual: r_norm, dual_residual: s_norm, converged })
    }

    fn project_all(&self, mats: &mut [Vec<Cx>]) {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            self.blocks.par_iter().zip(mats.par_iter_mut()).for_each(|(b, m)| b.project(m));
        }
        #[cfg(not(feature = "parallel"))]
        for (b, m) in self.blocks.iter().zip(mats.iter_mut()) {
            b.project(m);
        }
    }

    /// Mixes in the uniform operator, whose matrix is the identity, until PSD.
    /// Returns the weight used and the final smallest eigenvalue.
    pub(crate) fn repair(&self, z: &mut [Cx]) -> (f64, f64) {
        let lo = self.min_eigenvalue(z);
        if lo >= 0.0 {
            return (0.0, lo);
        }
        let t = ((-lo) / (1.0 - lo) * (1.0 + 1e-6)).min(1.0);
        for zc in z.iter_mut().skip(1) {
            *zc *= 1.0 - t;
        }
        (t, self.min_eigenvalue(z))
    }

    /// Moments of every monomial of degree at most `D` over all labels.
    pub(crate) fn to_pseudo(&self, z: &[Cx]) -> Result<PseudoExpectation> {
        let k = self.k;
        let roots: Vec<Cx> = (0..k).map(|e| Cx::from_polar(1.0, -2.0 * std::f64::consts::PI * e as f64 / k as f64)).collect();
        let mut table = HashMap::new();
        for j in 0..=self.degree.min(self.n) {
            let size = k.pow(j as u32);
            let scale = (k as f64).powi(-(j as i32));
            let digits = |mut x: usize| -> Vec<usize> {
                (0..j)
                    .map(|_| {
                        let d = x % k;
                        x /= k;
                        d
                    })
                    .collect()
            };
            let tuples: Vec<Vec<usize>> = (0..size).map(digits).collect();
            for s in subsets_of_size(self.n, j) {
                let hat: Vec<Cx> = tuples
                    .iter()
                    .map(|t| {
                        let g: Char = s.iter().zip(t).filter(|(_, &c)| c != 0).map(|(&u, &c)| (u as u32, c as u8)).collect();
                        if charge(&g, k) != 0 {
                            return Cx::new(0.0, 0.0);
                        }
                        let (c, conj) = self.lookup(&g);
                        if conj {
                            z[c].conj()
                        } else {
                            z[c]
                        }
                    })
                    .collect();
                for a in &tuples {
                    let mut acc = Cx::new(0.0, 0.0);
                    for (t, h) in tuples.iter().zip(&hat) {
                        if h.re == 0.0 && h.im == 0.0 {
                            continue;
                        }
                        let e: usize = t.iter().zip(a).map(|(x, y)| x * y).sum();
                        acc += roots[e % k] * h;
                    }
                    let m = Monomial::from_vars(s.iter().zip(a).map(|(&u, &l)| Var::new(u, l))).expect("distinct vertices");
                    table.insert(m, acc.re * scale);
                }
            }
        }
        PseudoExpectation::from_table(self.n, self.k, self.degree, table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn difference_cancels_shared_charges() {
        let a: Char = [(0, 1), (2, 2)].into_iter().collect();
        let b: Char = [(0, 1), (1, 1)].into_iter().collect();
        let d = difference(&a, &b, 3);
        assert_eq!(d.as_slice(), &[(1, 1), (2, 1)]);
        assert_eq!(charge(&d, 3), (charge(&b, 3) + 3 - charge(&a, 3)) % 3);
    }
}
