use super::SpectralData;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand::Rng;

const STEP: f64 = 0.05;
const ITERATIONS: usize = 500;

fn ratio(s: &SpectralData, basis: &[usize], c: &[f64]) -> (f64, Vec<f64>) {
    let n = s.pi.len();
    let mut f = vec![0.0; n];
    for (&i, &ci) in basis.iter().zip(c) {
        for (x, v) in f.iter_mut().zip(&s.vectors[i]) {
            *x += ci * v;
        }
    }
    let norm2: f64 = c.iter().map(|x| x * x).sum();
    let m4: f64 = s.pi.iter().zip(&f).map(|(p, x)| p * x.powi(4)).sum();
    (m4 / (norm2 * norm2), f)
}

fn climb(s: &SpectralData, basis: &[usize], seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = basis.len();
    let mut c: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let normalize = |c: &mut Vec<f64>| {
        let r = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 0.0 {
            c.iter_mut().for_each(|x| *x /= r);
        }
    };
    normalize(&mut c);
    let mut best = ratio(s, basis, &c).0;
    for _ in 0..ITERATIONS {
        let (_, f) = ratio(s, basis, &c);
        // gradient of E f^4 in eigen-coordinates
        let grad: Vec<f64> = basis
            .iter()
            .map(|&i| 4.0 * s.pi.iter().zip(&f).zip(&s.vectors[i]).map(|((p, x), v)| p * x.powi(3) * v).sum::<f64>())
            .collect();
        let dot: f64 = grad.iter().zip(&c).map(|(g, x)| g * x).sum();
        for (x, g) in c.iter_mut().zip(&grad) {
            *x += STEP * (g - dot * *x);
        }
        normalize(&mut c);
        best = best.max(ratio(s, basis, &c).0);
    }
    best
}

/// Lower bound on the 2-to-4 hypercontractivity constant of `Pi_lambda`:
/// best `E f^4 / (E f^2)^2` found by projected gradient ascent from random starts.
pub fn hypercontractivity_search(s: &SpectralData, lambda: f64, restarts: usize, seed: u64) -> f64 {
    let basis = s.low_indices(lambda);
    if basis.len() <= 1 {
        return 1.0;
    }
    let seeds: Vec<u64> = (0..restarts as u64).map(|r| seed ^ r.wrapping_mul(0x9e37_79b9_7f4a_7c15)).collect();
    #[cfg(feature = "parallel")]
    let vals: Vec<f64> = {
        use rayon::prelude::*;
        seeds.par_iter().map(|&sd| climb(s, &basis, sd)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let vals: Vec<f64> = seeds.iter().map(|&sd| climb(s, &basis, sd)).collect();
    vals.into_iter().fold(1.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{noisy_hypercube, spectral_decompose};

    #[test]
    fn constant_only_span() {
        let s = spectral_decompose(&noisy_hypercube(2, 0.25).unwrap()).unwrap();
        assert_eq!(hypercontractivity_search(&s, 0.1, 4, 1), 1.0);
    }

    #[test]
    fn hypercube_degree_one_span_below_nine() {
        let s = spectral_decompose(&noisy_hypercube(2, 0.25).unwrap()).unwrap();
        // walk eigenvalues 1, 0.5, 0.5, 0.25: lambda = 0.6 keeps 1 and the characters
        assert_eq!(s.low_indices(0.6).len(), 3);
        let c = hypercontractivity_search(&s, 0.6, 16, 7);
        assert!(c >= 1.0 && c <= 9.0, "{c}");
        assert_eq!(c, hypercontractivity_search(&s, 0.6, 16, 7));
    }
}
