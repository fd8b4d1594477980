//! Operator-splitting solver for the moment relaxation.

use super::fourier::FourierProblem;
use super::monomial::monomials_up_to;
use super::pseudo::PseudoExpectation;
use super::relax::{SdpProblem, ZERO};
use crate::error::Result;
use crate::linalg::{min_eigenvalue, project_psd};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub relaxation: f64,
    pub rho: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-7, max_iter: 100_000, relaxation: 1.6, rho: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub pe: PseudoExpectation,
    /// Reduced moments, indexed like the problem's variables.
    pub y: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
    /// Weight given to the uniform operator to restore positive semidefiniteness.
    pub uniform_weight: f64,
    pub min_eigenvalue: f64,
}

fn frob(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Averages entries within each variable class; `1` is pinned.
fn class_average(p: &SdpProblem, v: &[f64], shift: Option<(&[f64], f64)>) -> Vec<f64> {
    let mut y = vec![0.0; p.classes.len()];
    for (idx, &c) in p.entry_class.iter().enumerate() {
        if c != ZERO {
            y[c] += v[idx];
        }
    }
    for (c, yc) in y.iter_mut().enumerate() {
        let cnt = p.class_count[c];
        if cnt > 0 {
            *yc /= cnt as f64;
            if let Some((obj, rho)) = shift {
                *yc += obj[c] / (rho * cnt as f64);
            }
        }
    }
    y[0] = 1.0;
    y
}

fn uniform_moments(p: &SdpProblem) -> Vec<f64> {
    p.classes.iter().map(|m| (p.k as f64).powi(-(m.degree() as i32))).collect()
}

/// Solves the relaxation to tolerance `tol` with default options.
pub fn solve_sdp(p: &SdpProblem, tol: f64) -> Result<SdpSolution> {
    solve_sdp_with(p, SolverOptions { tol, ..Default::default() })
}

/// Solves the relaxation over shift-invariant operators in the label-Fourier
/// basis, where the moment matrix is block diagonal.
pub fn solve_sdp_with(p: &SdpProblem, opts: SolverOptions) -> Result<SdpSolution> {
    let fp = FourierProblem::new(p);
    let (mut z, stats) = fp.admm(opts.tol, opts.max_iter, opts.relaxation, opts.rho);
    let (uniform_weight, lo) = fp.repair(&mut z);
    let pe = fp.to_pseudo(&z)?;
    let y: Vec<f64> = p.classes.iter().map(|m| pe.get(m)).collect();
    Ok(SdpSolution {
        value: fp.objective(&z),
        pe,
        y,
        iterations: stats.iterations,
        primal_residual: stats.primal_residual,
        dual_residual: stats.dual_residual,
        converged: stats.converged,
        uniform_weight,
        min_eigenvalue: lo,
    })
}

/// Reference solver on the full reduced matrix, without the symmetry reduction.
/// Much slower; kept for cross-checking on small instances.
pub fn solve_sdp_dense(p: &SdpProblem, opts: SolverOptions) -> Result<SdpSolution> {
    let dim = p.reduced_dimension();
    let y_unif = uniform_moments(p);
    let mut z = p.reduced_matrix(&y_unif);
    let mut u = vec![0.0; dim * dim];
    let mut rho = opts.rho;
    let alpha = opts.relaxation;
    let (mut r_norm, mut s_norm) = (f64::INFINITY, f64::INFINITY);
    let mut iterations = 0;
    let mut converged = false;
    let mut v = vec![0.0; dim * dim];
    let mut xh = vec![0.0; dim * dim];
    while iterations < opts.max_iter {
        iterations += 1;
        for i in 0..v.len() {
            v[i] = z[i] - u[i];
        }
        let y = class_average(p, &v, Some((&p.objective, rho)));
        let x = p.reduced_matrix(&y);
        for i in 0..xh.len() {
            xh[i] = alpha * x[i] + (1.0 - alpha) * z[i];
        }
        let z_old = z.clone();
        for i in 0..z.len() {
            z[i] = xh[i] + u[i];
        }
        project_psd(dim, &mut z);
        for i in 0..u.len() {
            u[i] += xh[i] - z[i];
        }
        let r: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a - b).collect();
        let s: Vec<f64> = z.iter().zip(&z_old).map(|(a, b)| rho * (a - b)).collect();
        r_norm = frob(&r) / (1.0 + frob(&x).max(frob(&z)));
        s_norm = frob(&s) / (1.0 + rho * frob(&u));
        if r_norm <= opts.tol && s_norm <= opts.tol {
            converged = true;
            break;
        }
        if iterations % 10 == 0 {
            if r_norm > 10.0 * s_norm {
                rho *= 2.0;
                u.iter_mut().for_each(|x| *x /= 2.0);
            } else if s_norm > 10.0 * r_norm {
                rho /= 2.0;
                u.iter_mut().for_each(|x| *x *= 2.0);
            }
        }
    }
    let mut y = class_average(p, &z, None);
    let mut lo = min_eigenvalue(dim, &p.reduced_matrix(&y));
    let mut uniform_weight = 0.0;
    if lo < 0.0 {
        let lo_unif = min_eigenvalue(dim, &p.reduced_matrix(&y_unif));
        let t = ((-lo) / (lo_unif - lo) * (1.0 + 1e-6)).min(1.0);
        for (a, b) in y.iter_mut().zip(&y_unif) {
            *a = (1.0 - t) * *a + t * b;
        }
        uniform_weight = t;
        lo = min_eigenvalue(dim, &p.reduced_matrix(&y));
    }
    let pe = to_pseudo(p, &y)?;
    Ok(SdpSolution {
        value: p.objective_value(&y),
        pe,
        y,
        iterations,
        primal_residual: r_norm,
        dual_residual: s_norm,
        converged,
        uniform_weight,
        min_eigenvalue: lo,
    })
}

/// Expands reduced moments to a complete table over all labels.
pub fn to_pseudo(p: &SdpProblem, y: &[f64]) -> Result<PseudoExpectation> {
    let mut table = HashMap::new();
    for m in monomials_up_to(p.n, p.k, p.degree) {
        let v = p.moment(y, &m);
        table.insert(m, v);
    }
    PseudoExpectation::from_table(p.n, p.k, p.degree, table)
}
