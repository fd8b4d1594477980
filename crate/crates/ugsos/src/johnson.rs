//! Fourier analysis on the Johnson-approximating Cayley graph `C_{n,l,alpha}`
//! on `[n]^l`, restricted subcubes of the Johnson graph `J_{n,l,alpha}`, the
//! structure inequality, and the subcube-driven rounding pipeline.
//!
//! Tuples in `[n]^l` are indexed base `n` with the first coordinate most
//! significant, so a prefix restriction is a contiguous block. Johnson
//! vertices follow the lexicographic order of `subsets_of_size`.

use serde::Serialize;
use std::collections::HashMap;
use std::fmt;

use crate::approx::StepPolynomial;
use crate::graph::generators::{binom, decode_tuple, encode_tuple};
use crate::graph::{johnson_cayley_graph, johnson_graph, laplacian_form, set_expansion, subsets_of_size, WeightedGraph};
use crate::potential::phi_restricted_global;
use crate::rounding::{cr_val, partial_to_full, PartialAssignment, RoundingOutcome};
use crate::sos::{build_relaxation, solve_sdp, PseudoExpectation};
use crate::{Error, Result, UgInstance};

/// Cap on `n^l` for functions on the Cayley graph.
pub const TUPLE_CAP: usize = 100_000;
/// Cap on `n^l 2^l`, the cost of assembling the level functions.
pub const LEVEL_WORK_CAP: usize = 10_000_000;
/// Cap on the number of enumerated subcubes.
pub const SUBCUBE_CAP: usize = 100_000;

const TIE_TOL: f64 = 1e-12;

fn moved_count(l: usize, alpha: f64) -> Result<usize> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Parameter(format!("alpha = {alpha} outside (0, 1]")));
    }
    let m = alpha * l as f64;
    let r = m.round();
    if (m - r).abs() > 1e-9 {
        return Err(Error::Parameter(format!("alpha * l = {m} is not an integer")));
    }
    Ok(r as usize)
}

/// Eigenvalue of the walk on `C_{n,l,alpha}` at a character of degree `t`:
/// the probability that none of the `t` active coordinates is resampled.
pub fn johnson_eigenvalue(l: usize, alpha: f64, t: usize) -> Result<f64> {
    if t > l {
        return Err(Error::Parameter(format!("character degree {t} exceeds l = {l}")));
    }
    let m = moved_count(l, alpha)?;
    let kept = l - m;
    if t > kept {
        return Ok(0.0);
    }
    Ok(binom(l - t, kept - t) / binom(l, kept))
}

/// Closed-form eigenvalue multiset of `C_{n,l,alpha}`, in descending order.
pub fn cayley_spectrum(n: usize, l: usize, alpha: f64) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for t in 0..=l {
        let lam = johnson_eigenvalue(l, alpha, t)?;
        let mult = binom(l, t) as usize * (n - 1).pow(t as u32);
        out.extend(std::iter::repeat(lam).take(mult));
    }
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumCheck {
    pub closed: Vec<f64>,
    pub numeric: Vec<f64>,
    pub max_error: f64,
}

/// Compares the closed-form spectrum with a dense eigensolve of the walk.
pub fn spectrum_check(n: usize, l: usize, alpha: f64) -> Result<SpectrumCheck> {
    let g = johnson_cayley_graph(n, l, alpha)?;
    let numeric = crate::graph::spectral_decompose(&g)?.values;
    let closed = cayley_spectrum(n, l, alpha)?;
    let max_error = closed.iter().zip(&numeric).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(SpectrumCheck { closed, numeric, max_error })
}

/// Which graph a subcube lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Family {
    /// `J|_A`: `l`-subsets containing the set `A`.
    Johnson,
    /// `C|_A`: tuples whose first `|A|` coordinates equal `A`.
    Cayley,
}

/// An `r`-restricted subcube.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SubcubeId {
    pub family: Family,
    pub n: usize,
    pub l: usize,
    pub coords: Vec<usize>,
}

impl SubcubeId {
    pub fn new(family: Family, n: usize, l: usize, coords: Vec<usize>) -> Result<Self> {
        if coords.len() >= l {
            return Err(Error::Parameter(format!("restriction of size {} needs at most l - 1 = {}", coords.len(), l.saturating_sub(1))));
        }
        if let Some(&c) = coords.iter().find(|&&c| c >= n) {
            return Err(Error::Parameter(format!("coordinate {c} not below n = {n}")));
        }
        let mut coords = coords;
        if family == Family::Johnson {
            coords.sort_unstable();
            if coords.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Parameter("restriction set has repeated elements".into()));
            }
        }
        Ok(SubcubeId { family, n, l, coords })
    }

    pub fn whole(family: Family, n: usize, l: usize) -> Self {
        SubcubeId { family, n, l, coords: Vec::new() }
    }

    pub fn order(&self) -> usize {
        self.coords.len()
    }

    /// Vertex indices of the subcube in its graph's vertex order.
    pub fn vertices(&self) -> Vec<usize> {
        match self.family {
            Family::Johnson => {
                let mask = self.coords.iter().fold(0u64, |m, &c| m | 1 << c);
                subsets_of_size(self.n, self.l)
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.iter().fold(0u64, |m, &c| m | 1 << c) & mask == mask)
                    .map(|(i, _)| i)
                    .collect()
            }
            Family::Cayley => {
                let block = self.n.pow((self.l - self.coords.len()) as u32);
                let start = encode_tuple(&self.coords, self.n) * block;
                (start..start + block).collect()
            }
        }
    }
}

impl fmt::Display for SubcubeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body = self.coords.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
        match self.family {
            Family::Johnson => write!(f, "J|{{{body}}}"),
            Family::Cayley => write!(f, "C|({body})"),
        }
    }
}

/// Mean of a function over a subcube.
pub trait SubcubeDensity {
    fn density(&self, a: &SubcubeId) -> Result<f64>;
}

/// `delta_A(F)`; the empty restriction gives the mean of `F`.
pub fn restriction_density<F: SubcubeDensity + ?Sized>(f: &F, a: &SubcubeId) -> Result<f64> {
    f.density(a)
}

/// A real function on `[n]^l`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TupleFunction {
    pub n: usize,
    pub l: usize,
    pub values: Vec<f64>,
}

impl TupleFunction {
    pub fn new(n: usize, l: usize, values: Vec<f64>) -> Result<Self> {
        let size = (n as f64).powi(l as i32);
        if size > TUPLE_CAP as f64 {
            return Err(Error::size("n^l", size as u128, TUPLE_CAP));
        }
        if values.len() != n.pow(l as u32) {
            return Err(Error::Input(format!("expected {} values, got {}", n.pow(l as u32), values.len())));
        }
        Ok(TupleFunction { n, l, values })
    }

    pub fn from_fn(n: usize, l: usize, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let size = (n as f64).powi(l as i32);
        if size > TUPLE_CAP as f64 {
            return Err(Error::size("n^l", size as u128, TUPLE_CAP));
        }
        let values = (0..n.pow(l as u32)).map(|i| f(&decode_tuple(i, n, l))).collect();
        Ok(TupleFunction { n, l, values })
    }

    pub fn at(&self, x: &[usize]) -> f64 {
        self.values[encode_tuple(x, self.n)]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn mean_square(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64
    }

    /// Largest change of `F` under swapping two coordinates.
    pub fn invariance_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, &v) in self.values.iter().enumerate() {
            let x = decode_tuple(i, self.n, self.l);
            for a in 0..self.l.saturating_sub(1) {
                let mut y = x.clone();
                y.swap(a, a + 1);
                worst = worst.max((v - self.at(&y)).abs());
            }
        }
        worst
    }

    pub fn is_permutation_invariant(&self, tol: f64) -> bool {
        self.invariance_residual() <= tol
    }

    /// `F|_A` on `[n]^{l - |A|}`.
    pub fn restrict(&self, prefix: &[usize]) -> Result<TupleFunction> {
        if prefix.len() > self.l {
            return Err(Error::Parameter(format!("prefix of length {} exceeds l = {}", prefix.len(), self.l)));
        }
        if prefix.iter().any(|&c| c >= self.n) {
            return Err(Error::Parameter("prefix coordinate out of range".into()));
        }
        let rest = self.l - prefix.len();
        let block = self.n.pow(rest as u32);
        let start = encode_tuple(prefix, self.n) * block;
        Ok(TupleFunction { n: self.n, l: rest, values: self.values[start..start + block].to_vec() })
    }

    /// `delta_Y(F)` for every `Y in [n]^j`, indexed like tuples.
    pub fn densities(&self, j: usize) -> Vec<f64> {
        let block = self.n.pow((self.l - j) as u32);
        self.values.chunks(block).map(|c| c.iter().sum::<f64>() / block as f64).collect()
    }

    /// `E_{Y in [n]^j} delta_Y(F)^2`.
    pub fn restriction_mass(&self, j: usize) -> f64 {
        let d = self.densities(j);
        d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64
    }
}

impl SubcubeDensity for TupleFunction {
    fn density(&self, a: &SubcubeId) -> Result<f64> {
        if a.family != Family::Cayley || a.n != self.n || a.l != self.l {
            return Err(Error::Input(format!("subcube {a} does not belong to [{}]^{}", self.n, self.l)));
        }
        Ok(self.restrict(&a.coords)?.mean())
    }
}

/// A real function on the `l`-subsets of `[n]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetFunction {
    pub n: usize,
    pub l: usize,
    pub values: Vec<f64>,
}

fn mask_of(s: &[usize]) -> u64 {
    s.iter().fold(0u64, |m, &c| m | 1 << c)
}

impl SetFunction {
    pub fn new(n: usize, l: usize, values: Vec<f64>) -> Result<Self> {
        if n > 63 {
            return Err(Error::size("n", n, 63));
        }
        let count = binom(n, l);
        if values.len() as f64 != count {
            return Err(Error::Input(format!("expected {count} values, got {}", values.len())));
        }
        Ok(SetFunction { n, l, values })
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn mean_square(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64
    }

    /// `delta_Y(F)` for every `j`-subset `Y`, keyed by bitmask.
    pub fn densities(&self, j: usize) -> HashMap<u64, f64> {
        let mut acc: HashMap<u64, (f64, usize)> = HashMap::new();
        for (s, &v) in subsets_of_size(self.n, self.l).iter().zip(&self.values) {
            for pick in subsets_of_size(self.l, j) {
                let m = pick.iter().fold(0u64, |m, &i| m | 1 << s[i]);
                let e = acc.entry(m).or_insert((0.0, 0));
                e.0 += v;
                e.1 += 1;
            }
        }
        acc.into_iter().map(|(m, (s, c))| (m, s / c as f64)).collect()
    }

    /// `E_{Y in C([n], j)} delta_Y(F)^2`.
    pub fn restriction_mass(&self, j: usize) -> f64 {
        let d = self.densities(j);
        d.values().map(|v| v * v).sum::<f64>() / binom(self.n, j)
    }

    /// `G(x) = F({x_1..x_l})` on tuples with distinct entries, 0 elsewhere.
    pub fn lift(&self) -> Result<TupleFunction> {
        let index: HashMap<u64, usize> = subsets_of_size(self.n, self.l).iter().enumerate().map(|(i, s)| (mask_of(s), i)).collect();
        TupleFunction::from_fn(self.n, self.l, |x| {
            let m = mask_of(x);
            if m.count_ones() as usize == self.l {
                self.values[index[&m]]
            } else {
                0.0
            }
        })
    }
}

impl SubcubeDensity for SetFunction {
    fn density(&self, a: &SubcubeId) -> Result<f64> {
        if a.family != Family::Johnson || a.n != self.n || a.l != self.l {
            return Err(Error::Input(format!("subcube {a} does not belong to C([{}], {})", self.n, self.l)));
        }
        let verts = a.vertices();
        Ok(verts.iter().map(|&i| self.values[i]).sum::<f64>() / verts.len() as f64)
    }
}

/// Fourier levels of a function on `[n]^l`.
#[derive(Debug, Clone, Serialize)]
pub struct LevelDecomposition {
    pub n: usize,
    pub l: usize,
    /// `f_{i,F}` on `[n]^i`, from inclusion-exclusion over restriction densities.
    pub reduced: Vec<Vec<f64>>,
    /// `F_i(X) = sum_{|I| = i} f_{i,F}(X|_I)` on `[n]^l`.
    pub levels: Vec<Vec<f64>>,
    /// `eta_i = C(l, i) E[f_{i,F}^2]`.
    pub eta: Vec<f64>,
    /// `E[F_i^2]` computed from the assembled level functions.
    pub eta_direct: Vec<f64>,
    pub invariant: bool,
    pub warnings: Vec<String>,
}

/// `f_{i,F}` for `i = 0..=max_level`.
fn reduced_functions(f: &TupleFunction, max_level: usize) -> Vec<Vec<f64>> {
    let n = f.n;
    let dens: Vec<Vec<f64>> = (0..=max_level).map(|j| f.densities(j)).collect();
    (0..=max_level)
        .map(|i| {
            (0..n.pow(i as u32))
                .map(|xi| {
                    let x = decode_tuple(xi, n, i);
                    let mut s = 0.0;
                    for mask in 0u32..1 << i {
                        let y: Vec<usize> = (0..i).filter(|b| mask >> b & 1 == 1).map(|b| x[b]).collect();
                        let sign = if (i - y.len()) % 2 == 0 { 1.0 } else { -1.0 };
                        s += sign * dens[y.len()][encode_tuple(&y, n)];
                    }
                    s
                })
                .collect()
        })
        .collect()
}

pub fn level_decompose(f: &TupleFunction) -> Result<LevelDecomposition> {
    let (n, l) = (f.n, f.l);
    let work = f.values.len() as f64 * 2f64.powi(l as i32);
    if work > LEVEL_WORK_CAP as f64 {
        return Err(Error::size("n^l 2^l", work as u128, LEVEL_WORK_CAP));
    }
    let invariant = f.is_permutation_invariant(1e-10);
    let mut warnings = Vec::new();
    if !invariant {
        warnings.push("function is not permutation-invariant; level identities do not apply".into());
    }
    let reduced = reduced_functions(f, l);
    let mut levels = vec![vec![0.0; f.values.len()]; l + 1];
    for (xi, _) in f.values.iter().enumerate() {
        let x = decode_tuple(xi, n, l);
        for mask in 0u32..1 << l {
            let y: Vec<usize> = (0..l).filter(|b| mask >> b & 1 == 1).map(|b| x[b]).collect();
            levels[y.len()][xi] += reduced[y.len()][encode_tuple(&y, n)];
        }
    }
    let eta = (0..=l)
        .map(|i| binom(l, i) * reduced[i].iter().map(|v| v * v).sum::<f64>() / reduced[i].len() as f64)
        .collect();
    let eta_direct = levels.iter().map(|g| g.iter().map(|v| v * v).sum::<f64>() / g.len() as f64).collect();
    Ok(LevelDecomposition { n, l, reduced, levels, eta, eta_direct, invariant, warnings })
}

impl LevelDecomposition {
    /// `|sum_i eta_i - E[F^2]|`.
    pub fn parseval_residual(&self, f: &TupleFunction) -> f64 {
        (self.eta.iter().sum::<f64>() - f.mean_square()).abs()
    }

    /// `max_X |F(X) - sum_i F_i(X)|`.
    pub fn reconstruction_residual(&self, f: &TupleFunction) -> f64 {
        (0..f.values.len())
            .map(|x| (f.values[x] - self.levels.iter().map(|g| g[x]).sum::<f64>()).abs())
            .fold(0.0, f64::max)
    }

    /// `max_i |C(l, i) E[f_i^2] - E[F_i^2]|`.
    pub fn weight_identity_residual(&self) -> f64 {
        self.eta.iter().zip(&self.eta_direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// `max |f_{i+1,F}(a, X) - f_{i,F|a}(X) + f_{i,F}(X)|` over `a`, `i < l`, `X`.
    pub fn restriction_recursion_residual(&self, f: &TupleFunction) -> Result<f64> {
        let n = self.n;
        let mut worst = 0.0f64;
        for a in 0..n {
            let sub = reduced_functions(&f.restrict(&[a])?, self.l - 1);
            for i in 0..self.l {
                let block = n.pow(i as u32);
                for x in 0..block {
                    let lhs = self.reduced[i + 1][a * block + x];
                    worst = worst.max((lhs - sub[i][x] + self.reduced[i][x]).abs());
                }
            }
        }
        Ok(worst)
    }

    /// `max |f_{i,F}(X) - f_{i,F}(X_perm)|` over adjacent transpositions.
    pub fn reduced_invariance_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, g) in self.reduced.iter().enumerate() {
            for (xi, &v) in g.iter().enumerate() {
                let x = decode_tuple(xi, self.n, i);
                for a in 0..i.saturating_sub(1) {
                    let mut y = x.clone();
                    y.swap(a, a + 1);
                    worst = worst.max((v - g[encode_tuple(&y, self.n)]).abs());
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LevelWeightRow {
    pub level: usize,
    pub eta: f64,
    pub bound: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelWeightReport {
    pub rows: Vec<LevelWeightRow>,
    pub passed: bool,
}

/// `eta_i <= 2^i C(l, i) sum_{j <= i} C(i, j) E_{Y in [n]^j} delta_Y(F)^2` for `i <= r`.
pub fn level_weight_bound_check(f: &TupleFunction, r: usize) -> Result<LevelWeightReport> {
    if r > f.l {
        return Err(Error::Parameter(format!("level {r} exceeds l = {}", f.l)));
    }
    let dec = level_decompose(f)?;
    let mass: Vec<f64> = (0..=r).map(|j| f.restriction_mass(j)).collect();
    let rows: Vec<LevelWeightRow> = (0..=r)
        .map(|i| {
            let inner: f64 = (0..=i).map(|j| binom(i, j) * mass[j]).sum();
            let bound = 2f64.powi(i as i32) * binom(f.l, i) * inner;
            LevelWeightRow { level: i, eta: dec.eta[i], bound, slack: bound - dec.eta[i] }
        })
        .collect();
    let passed = rows.iter().all(|row| row.slack >= -1e-8);
    Ok(LevelWeightReport { rows, passed })
}

/// A graph on which the structure inequality is evaluated.
#[derive(Debug, Clone)]
pub struct JohnsonFamily {
    pub family: Family,
    pub n: usize,
    pub l: usize,
    pub alpha: f64,
    pub graph: WeightedGraph,
    /// `C_{n,l,alpha}`, kept for the Johnson family to compare lifted functions.
    cayley: Option<WeightedGraph>,
}

impl JohnsonFamily {
    pub fn cayley(n: usize, l: usize, alpha: f64) -> Result<Self> {
        let graph = johnson_cayley_graph(n, l, alpha)?;
        Ok(JohnsonFamily { family: Family::Cayley, n, l, alpha, graph, cayley: None })
    }

    /// `J_{n,l,alpha}`, along with `C_{n,l,alpha}` when `n^l` is within the cap.
    pub fn johnson(n: usize, l: usize, alpha: f64) -> Result<Self> {
        let graph = johnson_graph(n, l, alpha)?;
        let cayley = if (n as f64).powi(l as i32) <= TUPLE_CAP as f64 { Some(johnson_cayley_graph(n, l, alpha)?) } else { None };
        Ok(JohnsonFamily { family: Family::Johnson, n, l, alpha, graph, cayley })
    }

    pub fn num_vertices(&self) -> usize {
        self.graph.num_vertices()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    pub family: Family,
    pub r: usize,
    /// `<F, L F>_pi`
    pub lhs: f64,
    pub mean: f64,
    /// `E[F^2 - F]`
    pub booleanity: f64,
    /// `sum_{j <= r} E_Y delta_Y(F)^2`
    pub restriction_mass: f64,
    /// `1 - (1 - alpha)^{r+1}`
    pub factor: f64,
    pub rhs: f64,
    /// `lhs - rhs`
    pub residual: f64,
    /// First-order correction in `1/n` for the Johnson family, 0 on the Cayley graph.
    pub slack_term: f64,
    pub holds: bool,
    /// The Cayley-side report for the lifted function, on the Johnson family.
    pub lifted: Option<Box<StructureReport>>,
}

fn check_unit_range(values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
        return Err(Error::Input(format!("function value {v} outside [0, 1]")));
    }
    Ok(())
}

fn structure_sides(family: Family, r: usize, alpha: f64, l: usize, lhs: f64, mean: f64, mean_sq: f64, mass: f64) -> StructureReport {
    let factor = 1.0 - (1.0 - alpha).powi(r as i32 + 1);
    let booleanity = mean_sq - mean;
    let penalty = 8f64.powi(r as i32) * binom(l, r);
    let rhs = factor * (mean - penalty * mass + booleanity);
    StructureReport {
        family,
        r,
        lhs,
        mean,
        booleanity,
        restriction_mass: mass,
        factor,
        rhs,
        residual: lhs - rhs,
        slack_term: 0.0,
        holds: lhs - rhs >= -1e-8,
        lifted: None,
    }
}

/// Evaluates both sides of the subcube structure inequality for a `[0, 1]`-valued
/// function given in the family's vertex order.
pub fn structure_inequality_check(values: &[f64], r: usize, family: &JohnsonFamily) -> Result<StructureReport> {
    let (n, l, alpha) = (family.n, family.l, family.alpha);
    if 2 * r > l {
        return Err(Error::Parameter(format!("restriction order {r} exceeds l / 2 = {}", l as f64 / 2.0)));
    }
    check_unit_range(values)?;
    let lhs = laplacian_form(&family.graph, values);
    match family.family {
        Family::Cayley => {
            let f = TupleFunction::new(n, l, values.to_vec())?;
            if !f.is_permutation_invariant(1e-12) {
                return Err(Error::Domain("function is not permutation-invariant".into()));
            }
            let mass: f64 = (0..=r).map(|j| f.restriction_mass(j)).sum();
            Ok(structure_sides(Family::Cayley, r, alpha, l, lhs, f.mean(), f.mean_square(), mass))
        }
        Family::Johnson => {
            let f = SetFunction::new(n, l, values.to_vec())?;
            let mass: f64 = (0..=r).map(|j| f.restriction_mass(j)).sum();
            let mut rep = structure_sides(Family::Johnson, r, alpha, l, lhs, f.mean(), f.mean_square(), mass);
            let (lf, nf) = (l as f64, n as f64);
            rep.slack_term = ((2.0 * lf * lf + lf) / (2.0 * nf) + rep.factor * lf * lf / nf) * rep.mean;
            rep.holds = rep.residual + rep.slack_term >= -1e-8;
            if let Some(c) = &family.cayley {
                let g = f.lift()?;
                let glhs = laplacian_form(c, &g.values);
                let gmass: f64 = (0..=r).map(|j| g.restriction_mass(j)).sum();
                rep.lifted = Some(Box::new(structure_sides(Family::Cayley, r, alpha, l, glhs, g.mean(), g.mean_square(), gmass)));
            }
            Ok(rep)
        }
    }
}

/// One CSV row per report.
pub fn structure_csv(reports: &[StructureReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["family", "r", "mean", "quadratic", "booleanity", "restriction_mass", "factor", "rhs", "residual", "slack_term", "holds"])
        .map_err(|e| Error::Io(e.to_string()))?;
    for rep in reports {
        w.write_record([
            format!("{:?}", rep.family),
            rep.r.to_string(),
            rep.mean.to_string(),
            rep.lhs.to_string(),
            rep.booleanity.to_string(),
            rep.restriction_mass.to_string(),
            rep.factor.to_string(),
            rep.rhs.to_string(),
            rep.residual.to_string(),
            rep.slack_term.to_string(),
            rep.holds.to_string(),
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Closed-form expansion of an `r`-restricted subcube of `J_{n,l,alpha}`:
/// `1 - C(l - r, alpha l) / C(l, alpha l)`.
pub fn subcube_expansion(n: usize, l: usize, alpha: f64, r: usize) -> Result<f64> {
    if l == 0 || r >= l {
        return Err(Error::Parameter(format!("restriction order {r} needs to be below l = {l}")));
    }
    if l >= n {
        return Err(Error::Parameter(format!("need l < n, got l = {l}, n = {n}")));
    }
    let m = moved_count(l, alpha)?;
    Ok(1.0 - binom(l - r, m) / binom(l, m))
}

/// Default restriction order `min(floor(32 eps / alpha), floor(l / 4))`.
pub fn default_order(eps: f64, alpha: f64, l: usize) -> usize {
    ((32.0 * eps / alpha).floor().max(0.0) as usize).min(l / 4)
}

#[derive(Debug, Clone, Serialize)]
pub struct SubcubeClaim {
    pub r: usize,
    /// Whether `floor(32 eps / alpha) < l / 4`, the regime of the claim.
    pub applicable: bool,
    pub max_expansion: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Largest closed-form expansion over `s`-restricted subcubes, `s < r`, against `200 eps`.
pub fn subcube_expansion_claim(n: usize, l: usize, alpha: f64, eps: f64) -> Result<SubcubeClaim> {
    let raw = (32.0 * eps / alpha).floor().max(0.0) as usize;
    let applicable = (raw as f64) < l as f64 / 4.0;
    let r = raw.min(l.saturating_sub(1));
    let mut max_expansion = 0.0f64;
    for s in 0..r {
        max_expansion = max_expansion.max(subcube_expansion(n, l, alpha, s)?);
    }
    let bound = 200.0 * eps;
    Ok(SubcubeClaim { r, applicable, max_expansion, bound, holds: max_expansion <= bound + 1e-12 })
}

/// Parameters of a Johnson-graph instance; vertex `i` is `subsets_of_size(n, l)[i]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JohnsonParams {
    pub n: usize,
    pub l: usize,
    pub alpha: f64,
}

impl JohnsonParams {
    pub fn new(n: usize, l: usize, alpha: f64) -> Result<Self> {
        if l == 0 || l >= n {
            return Err(Error::Parameter(format!("need 0 < l < n, got l = {l}, n = {n}")));
        }
        moved_count(l, alpha)?;
        Ok(JohnsonParams { n, l, alpha })
    }

    pub fn num_vertices(&self) -> usize {
        binom(self.n, self.l) as usize
    }

    pub fn graph(&self) -> Result<WeightedGraph> {
        johnson_graph(self.n, self.l, self.alpha)
    }

    fn check(&self, inst: &UgInstance) -> Result<()> {
        if inst.num_vertices() != self.num_vertices() {
            return Err(Error::Input(format!(
                "instance has {} vertices, J({}, {}) has {}",
                inst.num_vertices(),
                self.n,
                self.l,
                self.num_vertices()
            )));
        }
        Ok(())
    }

    /// Every subcube `J|_A` with `|A| <= r_max`, by size then lexicographically.
    pub fn subcubes(&self, r_max: usize) -> Result<Vec<SubcubeId>> {
        let top = r_max.min(self.l - 1);
        let count: f64 = (0..=top).map(|s| binom(self.n, s)).sum();
        if count > SUBCUBE_CAP as f64 {
            return Err(Error::size("number of subcubes", count as u128, SUBCUBE_CAP));
        }
        let mut out = Vec::new();
        for s in 0..=top {
            for a in subsets_of_size(self.n, s) {
                out.push(SubcubeId { family: Family::Johnson, n: self.n, l: self.l, coords: a });
            }
        }
        Ok(out)
    }
}

/// Subcube of order at most `r_max` with the largest Condition & Round value;
/// ties go to the smaller, then lexicographically first, restriction.
pub fn find_best_subcube(pe: &PseudoExpectation, inst: &UgInstance, params: &JohnsonParams, r_max: usize) -> Result<(SubcubeId, f64)> {
    params.check(inst)?;
    let cubes = params.subcubes(r_max)?;
    let eval = |c: &SubcubeId| match cr_val(pe, inst, &c.vertices()) {
        Ok(v) => Ok(Some(v)),
        Err(Error::Domain(_)) => Ok(None),
        Err(e) => Err(e),
    };
    #[cfg(feature = "parallel")]
    let vals: Vec<Result<Option<f64>>> = {
        use rayon::prelude::*;
        cubes.par_iter().map(eval).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let vals: Vec<Result<Option<f64>>> = cubes.iter().map(eval).collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in vals.into_iter().enumerate() {
        if let Some(v) = v? {
            if best.map_or(true, |(_, b)| v > b + TIE_TOL) {
                best = Some((i, v));
            }
        }
    }
    let (i, v) = best.ok_or_else(|| Error::Domain("no subcube has an internal edge".into()))?;
    Ok((cubes[i].clone(), v))
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub degree: usize,
    pub tol: f64,
    /// Restriction order; defaults to `min(floor(32 eps / alpha), floor(l / 4))`.
    pub r: Option<usize>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions { degree: 4, tol: 1e-7, r: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SubcubeExpansionCheck {
    pub subcube: SubcubeId,
    pub closed_form: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineOutcome {
    pub rounding: RoundingOutcome,
    pub sdp_value: f64,
    pub r: usize,
    pub beta: f64,
    pub beta_clamped: bool,
    pub subcubes: Vec<SubcubeId>,
    pub expansion_checks: Vec<SubcubeExpansionCheck>,
    pub notes: Vec<String>,
}

/// Threshold `min(201 eps, 0.9)` and whether the clamp was active.
pub fn pipeline_beta(eps: f64) -> (f64, bool) {
    let raw = 201.0 * eps;
    if raw > 0.9 {
        (0.9, true)
    } else {
        (raw, false)
    }
}

/// Iterated subcube rounding from an already symmetrized operator.
pub fn johnson_round(pe: &PseudoExpectation, inst: &UgInstance, params: &JohnsonParams, eps: f64, r: usize) -> Result<(RoundingOutcome, Vec<SubcubeId>)> {
    params.check(inst)?;
    let mut found = Vec::new();
    let mut sub = |mu: &PseudoExpectation, _f: &PartialAssignment| -> Result<Option<(Vec<usize>, Option<String>)>> {
        let (cube, _) = find_best_subcube(mu, inst, params, r)?;
        let label = cube.to_string();
        let verts = cube.vertices();
        found.push(cube);
        Ok(Some((verts, Some(label))))
    };
    let out = partial_to_full(inst, pe, &mut sub, eps)?;
    Ok((out, found))
}

/// Solve, symmetrize, and round by subcubes until the operator's value drops below `1 - 2 eps`.
pub fn johnson_pipeline(inst: &UgInstance, params: &JohnsonParams, eps: f64, opts: &PipelineOptions) -> Result<PipelineOutcome> {
    params.check(inst)?;
    if !(eps >= 0.0 && eps < 0.5) {
        return Err(Error::Parameter(format!("eps = {eps} outside [0, 1/2)")));
    }
    let mut notes = Vec::new();
    let r = opts.r.unwrap_or_else(|| default_order(eps, params.alpha, params.l)).min(params.l - 1);
    let (beta, beta_clamped) = pipeline_beta(eps);
    if beta_clamped {
        notes.push(format!("threshold 201 eps = {} clamped to {beta}", 201.0 * eps));
    }
    let problem = build_relaxation(inst, opts.degree)?;
    let sol = solve_sdp(&problem, opts.tol)?;
    if !sol.converged {
        notes.push(format!("solver stopped after {} iterations without reaching tolerance", sol.iterations));
    }
    let pe = sol.pe.symmetrize()?;
    let (rounding, subcubes) = johnson_round(&pe, inst, params, eps, r)?;
    let g = params.graph()?;
    let mut expansion_checks = Vec::new();
    for c in &subcubes {
        if c.order() == 0 || expansion_checks.iter().any(|e: &SubcubeExpansionCheck| &e.subcube == c) {
            continue;
        }
        expansion_checks.push(SubcubeExpansionCheck {
            subcube: c.clone(),
            closed_form: subcube_expansion(params.n, params.l, params.alpha, c.order())?,
            numeric: set_expansion(&g, &c.vertices())?,
        });
    }
    Ok(PipelineOutcome { rounding, sdp_value: sol.value, r, beta, beta_clamped, subcubes, expansion_checks, notes })
}

#[derive(Debug, Clone, Serialize)]
pub struct SubcubePotentialReport {
    pub r: usize,
    pub beta: f64,
    pub nu: f64,
    pub viol: f64,
    /// `sum_{j <= r} E_{Y in C([n], j)} pE[Phi|_{J|_Y}]`
    pub lhs: f64,
    pub k_term: f64,
    pub rhs: f64,
    /// `lhs - rhs`; the unquantified `o_n(1)` term is not subtracted.
    pub residual: f64,
}

/// Averaged global shift-partition potential over subcubes of order at most `r`
/// against its lower bound, on a degree-2 product operator `pe2`.
pub fn subcube_potential_check(
    pe: &PseudoExpectation,
    pe2: &PseudoExpectation,
    p: &StepPolynomial,
    inst: &UgInstance,
    params: &JohnsonParams,
    r: usize,
    nu: f64,
) -> Result<SubcubePotentialReport> {
    params.check(inst)?;
    if r >= params.l {
        return Err(Error::Parameter(format!("restriction order {r} needs to be below l = {}", params.l)));
    }
    let beta = p.threshold();
    let mut lhs = 0.0;
    for j in 0..=r {
        let cubes = subsets_of_size(params.n, j);
        let mut s = 0.0;
        for a in &cubes {
            let c = SubcubeId { family: Family::Johnson, n: params.n, l: params.l, coords: a.clone() };
            s += phi_restricted_global(pe2, p, &c.vertices(), inst)?;
        }
        lhs += s / cubes.len() as f64;
    }
    let viol = 1.0 - pe.objective(inst);
    let factor = 1.0 - (1.0 - params.alpha).powi(r as i32 + 1);
    let spread = 2.0 * viol / (1.0 - beta - nu);
    let k_term = (2.0 * viol + spread + 2.0 * nu) / factor;
    let rhs = (1.0 - spread - 2.0 * nu - k_term) / (8f64.powi(r as i32) * binom(params.l, r));
    Ok(SubcubePotentialReport { r, beta, nu, viol, lhs, k_term, rhs, residual: lhs - rhs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalue_examples() {
        assert_eq!(johnson_eigenvalue(4, 0.5, 0).unwrap(), 1.0);
        assert!((johnson_eigenvalue(4, 0.5, 1).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(johnson_eigenvalue(2, 0.5, 2).unwrap(), 0.0);
        assert!(johnson_eigenvalue(3, 0.5, 1).is_err());
        assert!(johnson_eigenvalue(2, 0.5, 3).is_err());
    }

    #[test]
    fn subcube_vertices() {
        let c = SubcubeId::new(Family::Johnson, 4, 2, vec![1]).unwrap();
        let sets = subsets_of_size(4, 2);
        let v = c.vertices();
        assert_eq!(v.len(), 3);
        assert!(v.iter().all(|&i| sets[i].contains(&1)));
        let t = SubcubeId::new(Family::Cayley, 3, 2, vec![2]).unwrap();
        assert_eq!(t.vertices(), vec![6, 7, 8]);
        assert!(SubcubeId::new(Family::Johnson, 4, 2, vec![0, 1]).is_err());
        assert!(SubcubeId::new(Family::Johnson, 4, 3, vec![1, 1]).is_err());
    }

    #[test]
    fn density_examples() {
        let sets = subsets_of_size(4, 2);
        let values: Vec<f64> = sets.iter().map(|s| if s == &vec![1, 2] { 1.0 } else { 0.0 }).collect();
        let f = SetFunction::new(4, 2, values).unwrap();
        let a = SubcubeId::new(Family::Johnson, 4, 2, vec![1]).unwrap();
        assert!((restriction_density(&f, &a).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let c = TupleFunction::from_fn(3, 2, |_| 0.25).unwrap();
        let b = SubcubeId::new(Family::Cayley, 3, 2, vec![2]).unwrap();
        assert_eq!(restriction_density(&c, &b).unwrap(), 0.25);
    }

    #[test]
    fn expansion_examples() {
        assert_eq!(subcube_expansion(6, 4, 0.5, 0).unwrap(), 0.0);
        assert!((subcube_expansion(6, 4, 0.5, 1).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(default_order(0.05, 0.5, 2), 0);
        assert_eq!(default_order(0.05, 0.5, 16), 3);
    }
}
