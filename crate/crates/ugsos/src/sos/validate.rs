use super::monomial::{monomials_up_to, Monomial, Var};
use super::pseudo::PseudoExpectation;
use crate::linalg::min_eigenvalue;
use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct ValidationReport {
    pub min_eigenvalue: f64,
    pub partition_residual: f64,
    pub aliasing_residual: f64,
    pub scaling_deviation: f64,
    pub dimension: usize,
    pub tol: f64,
    pub passed: bool,
}

/// Moment matrix of `pe` over `basis`, column-major.
pub fn moment_matrix(pe: &PseudoExpectation, basis: &[Monomial]) -> Vec<f64> {
    let dim = basis.len();
    let mut m = vec![0.0; dim * dim];
    for j in 0..dim {
        for i in 0..=j {
            if let Some(p) = basis[i].mul(&basis[j]) {
                let v = pe.get(&p);
                m[i + j * dim] = v;
                m[j + i * dim] = v;
            }
        }
    }
    m
}

fn partition_residual(pe: &PseudoExpectation) -> f64 {
    let (n, k, d) = (pe.num_vertices(), pe.alphabet_size(), pe.degree());
    let mut worst: f64 = 0.0;
    for m in monomials_up_to(n, k, d - 1) {
        let base = pe.get(&m);
        for u in 0..n {
            if m.vars().iter().any(|v| v.vertex as usize == u) {
                continue;
            }
            let s: f64 = (0..k).map(|a| pe.get(&m.mul_var(Var::new(u, a)).expect("vertex absent"))).sum();
            worst = worst.max((s - base).abs());
        }
    }
    worst
}

/// Tagged basis for two copies over labels `0..labels`, total degree at most `half`.
pub fn product_basis(n: usize, labels: usize, half: usize) -> Vec<Monomial> {
    let parts = monomials_up_to(n, labels, half);
    let mut out = Vec::new();
    for a in &parts {
        for b in &parts {
            if a.degree() + b.degree() <= half {
                out.push(a.mul(&b.with_copy(1)).expect("copies never conflict"));
            }
        }
    }
    out
}

/// Checks scaling, partition, aliasing and positive semidefiniteness.
///
/// Products are checked on the basis over labels `0..k-1`, which spans every
/// square modulo the partition axiom; that axiom is checked on the base copy.
pub fn validate(pe: &PseudoExpectation, tol: f64) -> ValidationReport {
    let (n, k, half) = (pe.num_vertices(), pe.alphabet_size(), pe.degree() / 2);
    let basis = if pe.copy_count() == 2 {
        product_basis(n, k - 1, half)
    } else {
        monomials_up_to(n, k, half)
    };
    let m = moment_matrix(pe, &basis);
    let dim = basis.len();
    let min_eig = min_eigenvalue(dim, &m);
    let partition = partition_residual(pe.base());
    let scaling = (pe.get(&Monomial::one()) - 1.0).abs();
    let mut aliasing: f64 = 0.0;
    for j in 0..dim {
        for i in 0..j {
            aliasing = aliasing.max((m[i + j * dim] - m[j + i * dim]).abs());
        }
    }
    let passed = min_eig >= -tol && partition <= tol && scaling <= tol && aliasing <= tol;
    ValidationReport {
        min_eigenvalue: min_eig,
        partition_residual: partition,
        aliasing_residual: aliasing,
        scaling_deviation: scaling,
        dimension: dim,
        tol,
        passed,
    }
}
