//! Pseudoexpectation dump format.

use super::monomial::{Monomial, Var};
use super::pseudo::PseudoExpectation;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Serialize, Deserialize)]
struct Dump {
    degree: usize,
    k: usize,
    n: usize,
    moments: Vec<(Vec<[usize; 3]>, f64)>,
}

/// Serializes a single-copy operator's complete moment table.
pub fn dump(pe: &PseudoExpectation) -> String {
    let table = pe.to_table();
    let mut moments: Vec<(Vec<[usize; 3]>, f64)> = table
        .moments()
        .map(|(m, v)| {
            (m.vars().iter().map(|x| [x.vertex as usize, x.label as usize, x.copy as usize]).collect(), v)
        })
        .collect();
    moments.sort_by(|a, b| (a.0.len(), &a.0).cmp(&(b.0.len(), &b.0)));
    crate::json::to_string(&Dump { degree: pe.degree(), k: pe.alphabet_size(), n: pe.num_vertices(), moments })
}

pub fn load(s: &str) -> Result<PseudoExpectation> {
    let d: Dump = serde_json::from_str(s)?;
    let mut table = HashMap::with_capacity(d.moments.len());
    for (key, v) in d.moments {
        for &[u, a, c] in &key {
            if u >= d.n || a >= d.k || c > 1 {
                return Err(Error::Input(format!("bad key entry [{u}, {a}, {c}]")));
            }
        }
        if key.len() > d.degree {
            return Err(Error::Input(format!("key of degree {} exceeds {}", key.len(), d.degree)));
        }
        let m = Monomial::from_vars(key.iter().map(|&[u, a, c]| Var::tagged(u, a, c as u8)))
            .ok_or_else(|| Error::Input("key names two labels for one vertex".into()))?;
        table.insert(m, v);
    }
    PseudoExpectation::from_table(d.n, d.k, d.degree, table)
}
