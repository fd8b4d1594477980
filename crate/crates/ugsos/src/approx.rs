//! Polynomial approximations to the threshold indicator on [0,1].
//!
//! Polynomials are stored as Chebyshev coefficients in `t = 2x - 1` and
//! evaluated with the Clenshaw recurrence. Monomial coefficients are
//! available for low degrees.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEGREE_CAP: usize = 200;
pub const GRID_POINTS: usize = 10_000;
pub const UNION_GRID: usize = 300;
pub const GRID_SLACK: f64 = 1e-9;

const DEGREE_SCHEDULE: [usize; 6] = [8, 16, 32, 64, 128, 200];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    RampFit,
    SquaredBump,
    Capped,
    Square,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepPolynomial {
    alpha: f64,
    eps: f64,
    delta: f64,
    cheb: Vec<f64>,
    construction: Construction,
}

/// Threshold indicator `s_alpha(x) = [x >= alpha]`.
pub fn step(alpha: f64, x: f64) -> f64 {
    if x >= alpha {
        1.0
    } else {
        0.0
    }
}

pub(crate) fn grid(points: usize) -> impl Iterator<Item = f64> + Clone {
    let last = (points - 1) as f64;
    (0..points).map(move |i| i as f64 / last)
}

fn clenshaw(c: &[f64], t: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &cj in c.iter().skip(1).rev() {
        let b0 = cj + 2.0 * t * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c.first().copied().unwrap_or(0.0) + t * b1 - b2
}

/// Discrete least-squares Chebyshev fit of degree `d` using `4(d+1)` nodes.
fn cheb_fit(f: impl Fn(f64) -> f64, d: usize) -> Vec<f64> {
    let nodes = 4 * (d + 1);
    let vals: Vec<(f64, f64)> = (0..nodes)
        .map(|k| {
            let th = std::f64::consts::PI * (k as f64 + 0.5) / nodes as f64;
            (th, f(th.cos()))
        })
        .collect();
    (0..=d)
        .map(|j| {
            let s: f64 = vals.iter().map(|&(th, v)| v * (j as f64 * th).cos()).sum();
            let c = 2.0 * s / nodes as f64;
            if j == 0 {
                c / 2.0
            } else {
                c
            }
        })
        .collect()
}

/// Coefficients of d/dt.
fn cheb_derivative(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    if n <= 1 {
        return vec![0.0];
    }
    let mut d = vec![0.0; n + 1];
    for j in (1..n).rev() {
        d[j - 1] = d[j + 1] + 2.0 * j as f64 * c[j];
    }
    d[0] /= 2.0;
    d.truncate(n - 1);
    d
}

/// Antiderivative vanishing at t = -1.
fn cheb_integral(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let get = |j: usize| c.get(j).copied().unwrap_or(0.0);
    let mut out = vec![0.0; n + 1];
    for j in 1..=n {
        let prev = if j == 1 { 2.0 * get(0) } else { get(j - 1) };
        out[j] = (prev - get(j + 1)) / (2.0 * j as f64);
    }
    let at_minus_one: f64 = out
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, &v)| if j % 2 == 0 { v } else { -v })
        .sum();
    out[0] = -at_minus_one;
    out
}

fn cheb_product(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            let v = x * y / 2.0;
            out[i + j] += v;
            out[i.abs_diff(j)] += v;
        }
    }
    out
}

fn smooth_ramp(alpha: f64, delta: f64, x: f64) -> f64 {
    let t = ((x - alpha + delta) / (2.0 * delta)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn trim(mut c: Vec<f64>) -> Vec<f64> {
    while c.len() > 1 && c.last() == Some(&0.0) {
        c.pop();
    }
    c
}

impl StepPolynomial {
    pub fn threshold(&self) -> f64 {
        self.alpha
    }

    pub fn deviation(&self) -> f64 {
        self.eps
    }

    pub fn half_width(&self) -> f64 {
        self.delta
    }

    pub fn degree(&self) -> usize {
        self.cheb.len().saturating_sub(1)
    }

    pub fn construction(&self) -> Construction {
        self.construction
    }

    pub fn chebyshev_coefficients(&self) -> &[f64] {
        &self.cheb
    }

    /// Wraps Chebyshev coefficients in `t = 2x - 1` without checking anything.
    pub fn from_chebyshev(alpha: f64, eps: f64, delta: f64, cheb: Vec<f64>) -> Self {
        StepPolynomial { alpha, eps, delta, cheb: trim(cheb), construction: Construction::RampFit }
    }

    /// Value at `x`; inputs outside [0,1] are clamped and flagged.
    pub fn eval_flagged(&self, x: f64) -> (f64, bool) {
        let c = x.clamp(0.0, 1.0);
        (clenshaw(&self.cheb, 2.0 * c - 1.0), c != x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_flagged(x).0
    }

    pub fn derivative_at(&self, x: f64) -> f64 {
        2.0 * clenshaw(&cheb_derivative(&self.cheb), 2.0 * x.clamp(0.0, 1.0) - 1.0)
    }

    /// Coefficients in powers of `x`, ascending. Conditioning is poor beyond
    /// roughly degree 20.
    pub fn monomial_coefficients(&self) -> Vec<f64> {
        let d = self.degree();
        let mut out = vec![0.0; d + 1];
        let mut prev: Vec<f64> = vec![1.0];
        let mut cur: Vec<f64> = vec![-1.0, 2.0];
        for (j, &c) in self.cheb.iter().enumerate() {
            let tj: &[f64] = if j == 0 { &prev } else { &cur };
            for (i, &v) in tj.iter().enumerate() {
                out[i] += c * v;
            }
            if j >= 1 {
                let mut next = vec![0.0; cur.len() + 1];
                for (i, &v) in cur.iter().enumerate() {
                    next[i] -= 2.0 * v;
                    next[i + 1] += 4.0 * v;
                }
                for (i, &v) in prev.iter().enumerate() {
                    next[i] -= v;
                }
                prev = std::mem::replace(&mut cur, next);
            }
        }
        out
    }

    /// `p^2`, which meets the same guarantees with deviation `2 eps`.
    pub fn squared(&self) -> StepPolynomial {
        StepPolynomial {
            alpha: self.alpha,
            eps: (2.0 * self.eps).min(1.0),
            delta: self.delta,
            cheb: cheb_product(&self.cheb, &self.cheb),
            construction: Construction::Square,
        }
    }

    pub fn add(&self, other: &StepPolynomial) -> StepPolynomial {
        let n = self.cheb.len().max(other.cheb.len());
        let cheb = (0..n)
            .map(|j| self.cheb.get(j).unwrap_or(&0.0) + other.cheb.get(j).unwrap_or(&0.0))
            .collect();
        StepPolynomial { cheb, ..self.clone() }
    }

    pub fn check_invariants(&self) -> InvariantReport {
        self.check_invariants_with(self.eps)
    }

    fn check_invariants_with(&self, eps: f64) -> InvariantReport {
        let (a, d) = (self.alpha, self.delta);
        let deriv = cheb_derivative(&self.cheb);
        let mut r = InvariantReport::default();
        for x in grid(GRID_POINTS) {
            let v = self.eval(x);
            if x <= a - d || x >= a + d {
                r.max_deviation = r.max_deviation.max((v - step(a, x)).abs());
            }
            r.min_value = r.min_value.min(v);
            r.max_value = r.max_value.max(v);
            if x > a - d && x < a + d {
                r.min_window_derivative = r.min_window_derivative.min(2.0 * clenshaw(&deriv, 2.0 * x - 1.0));
            }
        }
        r.passed = r.max_deviation <= eps + GRID_SLACK
            && r.min_value >= -GRID_SLACK
            && r.max_value <= 1.0 + GRID_SLACK
            && r.min_window_derivative >= -GRID_SLACK;
        r
    }

    /// Both Markov-type bounds on the grid with slack `1e-9`.
    pub fn check_markov_bounds(&self) -> MarkovReport {
        markov_violations(self, self.alpha, self.delta, self.eps)
    }

    pub fn check_union_bound(&self, points: usize) -> UnionBoundReport {
        let vals: Vec<f64> = grid(points).map(|x| self.eval(x)).collect();
        let mut worst: f64 = 0.0;
        let mut violations = 0;
        for &px in &vals {
            for &py in &vals {
                let gap = px + py - 1.0 - px * py;
                worst = worst.max(gap);
                if gap > GRID_SLACK {
                    violations += 1;
                }
            }
        }
        UnionBoundReport { points, max_violation: worst, violations }
    }

    pub fn to_json(&self) -> String {
        crate::json::to_string(self)
    }

    pub fn from_json(s: &str) -> Result<StepPolynomial> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantReport {
    pub max_deviation: f64,
    pub min_value: f64,
    pub max_value: f64,
    pub min_window_derivative: f64,
    pub passed: bool,
}

impl Default for InvariantReport {
    fn default() -> Self {
        InvariantReport {
            max_deviation: 0.0,
            min_value: f64::INFINITY,
            max_value: f64::NEG_INFINITY,
            min_window_derivative: f64::INFINITY,
            passed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovReport {
    pub upper_violation: f64,
    pub lower_violation: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnionBoundReport {
    pub points: usize,
    pub max_violation: f64,
    pub violations: usize,
}

impl UnionBoundReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn markov_violations(p: &StepPolynomial, alpha: f64, delta: f64, eps: f64) -> MarkovReport {
    let mut up: f64 = f64::NEG_INFINITY;
    let mut lo: f64 = f64::NEG_INFINITY;
    for x in grid(GRID_POINTS) {
        let v = p.eval(x);
        up = up.max(v - (x / (alpha - delta) + eps));
        lo = lo.max((1.0 - (1.0 - x) / (1.0 - alpha - delta) - eps) - v);
    }
    MarkovReport { upper_violation: up, lower_violation: lo, passed: up <= GRID_SLACK && lo <= GRID_SLACK }
}

fn renormalize(cheb: &mut [f64]) {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for x in grid(10 * GRID_POINTS) {
        let v = clenshaw(cheb, 2.0 * x - 1.0);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo < 0.0 || hi > 1.0 {
        // a little headroom for extrema that fall between grid points
        let pad = 1e-8 * (hi - lo);
        let (lo, hi) = (lo - pad, hi + pad);
        let s = 1.0 / (hi - lo);
        for c in cheb.iter_mut() {
            *c *= s;
        }
        cheb[0] -= lo * s;
    }
}

fn ramp_fit(alpha: f64, delta: f64, d: usize) -> Vec<f64> {
    let mut c = cheb_fit(|t| smooth_ramp(alpha, delta, (t + 1.0) / 2.0), d);
    renormalize(&mut c);
    c
}

/// Normalized antiderivative of the square of a smooth bump supported on the
/// transition window. Monotone on all of [0,1] by construction.
fn squared_bump(alpha: f64, delta: f64, d: usize) -> Vec<f64> {
    let m = (d - 1) / 2;
    let g = cheb_fit(
        |t| {
            let u = ((t + 1.0) / 2.0 - alpha) / delta;
            if u.abs() >= 1.0 {
                0.0
            } else {
                (-0.5 / (1.0 - u * u)).exp()
            }
        },
        m,
    );
    let h = cheb_product(&g, &g);
    let mut c = cheb_integral(&h);
    let total = clenshaw(&c, 1.0);
    for v in c.iter_mut() {
        *v /= total;
    }
    renormalize(&mut c);
    c
}

/// Builds a polynomial within `eps` of the step at `alpha` outside the window
/// `(alpha - delta, alpha + delta)`, bounded in [0,1] and monotone in the window.
pub fn build_step_poly(alpha: f64, eps: f64, delta: f64) -> Result<StepPolynomial> {
    build_step_poly_capped(alpha, eps, delta, DEGREE_CAP)
}

pub fn build_step_poly_capped(alpha: f64, eps: f64, delta: f64, degree_cap: usize) -> Result<StepPolynomial> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("threshold {alpha} outside (0,1)")));
    }
    if !(delta > 0.0 && delta < alpha.min(1.0 - alpha)) {
        return Err(Error::Parameter(format!("half-width {delta} must lie in (0, min(alpha, 1 - alpha))")));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Parameter(format!("deviation {eps} must lie in (0, 1/2)")));
    }
    let mut best = f64::INFINITY;
    let mut schedule: Vec<usize> = DEGREE_SCHEDULE.iter().copied().filter(|&d| d < degree_cap).collect();
    schedule.push(degree_cap);
    for d in schedule {
        let attempts = [(Construction::RampFit, ramp_fit(alpha, delta, d)), (Construction::SquaredBump, squared_bump(alpha, delta, d.max(3)))];
        for (construction, cheb) in attempts {
            let p = StepPolynomial { alpha, eps, delta, cheb: trim(cheb), construction };
            let r = p.check_invariants_with(eps / 2.0);
            if r.passed {
                return Ok(p);
            }
            let shape_ok = r.min_value >= 0.0 && r.max_value <= 1.0 && r.min_window_derivative >= -GRID_SLACK;
            if shape_ok {
                best = best.min(r.max_deviation);
            }
        }
    }
    Err(Error::Construction(format!(
        "no polynomial of degree <= {degree_cap} meets the invariants; best deviation {best:e}"
    )))
}

/// Smallest `nu` for which `p` behaves like a member of the family with
/// threshold `beta`, deviation `nu` and half-width `nu`: the deviation bound
/// outside the window together with both Markov-type bounds.
pub fn effective_nu(p: &StepPolynomial, beta: f64) -> f64 {
    let vals: Vec<(f64, f64)> = grid(GRID_POINTS).map(|x| (x, p.eval(x))).collect();
    let ok = |nu: f64| {
        vals.iter().all(|&(x, v)| {
            let outside = x <= beta - nu || x >= beta + nu;
            (!outside || (v - step(beta, x)).abs() <= nu)
                && v <= x / (beta - nu) + nu + GRID_SLACK
                && v >= 1.0 - (1.0 - x) / (1.0 - beta - nu) - nu - GRID_SLACK
        })
    };
    let top = beta.min(1.0 - beta);
    let mut hi = top * (1.0 - 1e-12);
    if !ok(hi) {
        return top;
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CappedStep {
    pub poly: StepPolynomial,
    pub nu_eff: f64,
    pub monotone: bool,
}

/// Best threshold approximation of degree at most `max_degree`, chosen among
/// renormalized ramp fits by smallest effective `nu`.
pub fn build_capped(beta: f64, max_degree: usize) -> Result<CappedStep> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Parameter(format!("threshold {beta} outside (0,1)")));
    }
    let top = beta.min(1.0 - beta);
    let mut candidates: Vec<Vec<f64>> = vec![vec![0.5, 0.5]];
    if max_degree >= 1 {
        let mut w = 0.01;
        while w < top {
            candidates.push(ramp_fit(beta, w, max_degree));
            w += 0.01;
        }
    }
    let mut best: Option<CappedStep> = None;
    for cheb in candidates {
        let mut poly = StepPolynomial::from_chebyshev(beta, 0.0, 0.0, cheb);
        poly.construction = Construction::Capped;
        if poly.degree() > max_degree {
            continue;
        }
        let nu = effective_nu(&poly, beta);
        if best.as_ref().map_or(true, |b| nu < b.nu_eff) {
            poly.eps = nu;
            poly.delta = nu;
            let monotone = grid(GRID_POINTS).all(|x| poly.derivative_at(x) >= -GRID_SLACK);
            best = Some(CappedStep { poly, nu_eff: nu, monotone });
        }
    }
    best.ok_or_else(|| Error::Construction("no capped candidate".into()))
}
