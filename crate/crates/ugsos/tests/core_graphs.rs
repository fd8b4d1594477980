use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ugsos::graph::{
    inner, johnson_cayley_graph, johnson_graph, laplacian_form, noisy_hypercube, shortcode_graph,
    spectral_decompose, sse_profile, WeightedGraph,
};
use ugsos::instance::{brute_force_opt, plant_instance};
use ugsos::{Edge, UgInstance};

fn random_instance(seed: u64, n: usize, k: usize) -> UgInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(0.6) {
                edges.push(Edge { u, v, w: rng.gen_range(0.1..3.0), shift: rng.gen_range(0..k) });
            }
        }
    }
    if edges.is_empty() {
        edges.push(Edge { u: 0, v: 1, w: 1.0, shift: 0 });
    }
    UgInstance::new(n, k, edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn value_is_shift_invariant(seed in 0u64..1000, k in 2usize..5, s in 0usize..5) {
        let inst = random_instance(seed, 6, k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
        let x: Vec<usize> = (0..6).map(|_| rng.gen_range(0..k)).collect();
        let y: Vec<usize> = x.iter().map(|a| (a + s) % k).collect();
        prop_assert_eq!(inst.value(&x).unwrap(), inst.value(&y).unwrap());
    }

    #[test]
    fn value_is_stationary_average_of_local_values(seed in 0u64..1000, k in 2usize..4) {
        let inst = random_instance(seed, 6, k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 2);
        let x: Vec<usize> = (0..6).map(|_| rng.gen_range(0..k)).collect();
        let pi = inst.stationary();
        let avg: f64 = (0..6)
            .filter(|&u| pi[u] > 0.0)
            .map(|u| pi[u] * inst.local_value(&x, u).unwrap())
            .sum();
        prop_assert!((avg - inst.value(&x).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn brute_force_dominates_samples(seed in 0u64..500, k in 2usize..4) {
        let inst = random_instance(seed, 5, k);
        let (best, opt) = brute_force_opt(&inst, 10_000_000).unwrap();
        prop_assert_eq!(inst.value(&best).unwrap(), opt);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 3);
        for _ in 0..20 {
            let x: Vec<usize> = (0..5).map(|_| rng.gen_range(0..k)).collect();
            prop_assert!(inst.value(&x).unwrap() <= opt);
        }
    }

    #[test]
    fn noiseless_planting_is_satisfiable(seed in 0u64..200, k in 2usize..4) {
        let g = noisy_hypercube(3, 0.3).unwrap();
        let (inst, x) = plant_instance(&g, k, 0.0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(inst.value(&x).unwrap(), 1.0);
        prop_assert_eq!(brute_force_opt(&inst, 10_000_000).unwrap().1, 1.0);
    }
}

#[test]
fn planted_noise_concentrates() {
    // 1000-edge cycle, 200 seeds; binomial(1000, 0.1) leaves [850, 950] with negligible probability
    let g = WeightedGraph::from_edges(1000, (0..1000).map(|u| (u, (u + 1) % 1000, 1.0))).unwrap();
    let mut inside = 0;
    for seed in 0..200 {
        let (inst, x) = plant_instance(&g, 3, 0.1, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let v = inst.value(&x).unwrap();
        inside += (0.85..=0.95).contains(&v) as usize;
    }
    assert!(inside as f64 >= 0.99 * 200.0);
}

#[test]
fn full_noise_breaks_every_edge() {
    let g = noisy_hypercube(3, 0.3).unwrap();
    let (inst, x) = plant_instance(&g, 2, 1.0, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
    assert_eq!(inst.value(&x).unwrap(), 0.0);
}

fn families() -> Vec<(&'static str, WeightedGraph)> {
    vec![
        ("hypercube", noisy_hypercube(3, 0.3).unwrap()),
        ("johnson", johnson_graph(5, 2, 0.5).unwrap()),
        ("cayley", johnson_cayley_graph(4, 2, 0.5).unwrap()),
        ("shortcode", shortcode_graph(1, 2, 2).unwrap()),
    ]
}

#[test]
fn spectral_data_invariants() {
    for (name, g) in families() {
        let s = spectral_decompose(&g).unwrap();
        let n = g.num_vertices();
        assert!((s.pi.iter().sum::<f64>() - 1.0).abs() < 1e-12, "{name}");
        for u in 0..n {
            assert!((s.pi[u] - g.degree(u) / g.total_weight()).abs() < 1e-12, "{name}");
        }
        assert!((s.values[0] - 1.0).abs() < 1e-9, "{name}");
        for w in s.values.windows(2) {
            assert!(w[0] >= w[1] - 1e-12, "{name}: eigenvalues not descending");
        }
        for (i, vi) in s.vectors.iter().enumerate() {
            assert!(s.values[i].abs() <= 1.0 + 1e-9);
            let av = g.apply_walk(vi);
            let res = av.iter().zip(vi).map(|(a, v)| (a - s.values[i] * v).abs()).fold(0.0, f64::max);
            assert!(res < 1e-8, "{name}: eigen residual {res}");
            for (j, vj) in s.vectors.iter().enumerate() {
                let target = (i == j) as u8 as f64;
                assert!((inner(&s.pi, vi, vj) - target).abs() < 1e-8, "{name}: ({i},{j})");
            }
        }
    }
}

#[test]
fn projector_is_idempotent_and_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (name, g) in families() {
        let s = spectral_decompose(&g).unwrap();
        let n = g.num_vertices();
        for lambda in [0.3, 0.6, 1.2] {
            let idx = s.low_indices(lambda);
            let top = idx.iter().map(|&i| s.values[i]).fold(f64::NEG_INFINITY, f64::max);
            for _ in 0..10 {
                let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let pf = s.project(&f, &idx);
                let ppf = s.project(&pf, &idx);
                assert!(pf.iter().zip(&ppf).all(|(a, b)| (a - b).abs() < 1e-8), "{name}");
                let lhs = inner(&s.pi, &f, &g.apply_walk(&pf));
                let rhs = top * inner(&s.pi, &f, &pf);
                assert!(lhs <= rhs + 1e-8, "{name}: {lhs} > {rhs}");
            }
        }
    }
}

#[test]
fn laplacian_split_over_the_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (name, g) in families() {
        let s = spectral_decompose(&g).unwrap();
        let n = g.num_vertices();
        let lambda = 0.5;
        let low = s.low_indices(lambda);
        let high: Vec<usize> = (0..n).filter(|i| !low.contains(i)).collect();
        for _ in 0..20 {
            let f: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
            let fl = s.project(&f, &low);
            let fh = s.project(&f, &high);
            let norm = inner(&s.pi, &f, &f);
            let a_low = inner(&s.pi, &f, &g.apply_walk(&fl));
            let a_high = inner(&s.pi, &f, &g.apply_walk(&fh));
            assert!((laplacian_form(&g, &f) - (norm - a_low - a_high)).abs() < 1e-10, "{name}");
            assert!(a_high <= (1.0 - lambda) * norm + 1e-10, "{name}");
        }
    }
}

#[test]
fn noisy_hypercube_is_vertex_transitive_and_stochastic() {
    for (d, eps) in [(2, 0.25), (3, 0.3), (4, 0.1)] {
        let g = noisy_hypercube(d, eps).unwrap();
        let mut base: Option<Vec<f64>> = None;
        for u in 0..g.num_vertices() {
            let mut w: Vec<f64> = g.row(u).iter().map(|&(_, w)| w).collect();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            w.sort_by(f64::total_cmp);
            match &base {
                None => base = Some(w),
                Some(b) => assert!(b.iter().zip(&w).all(|(x, y)| (x - y).abs() < 1e-14)),
            }
        }
    }
}

#[test]
fn hypercube_pairs_minimized_by_edges() {
    // best pair: a Hamming-distance-1 pair keeps w(u,u) + w(u,v) = 0.7^3 + 0.3 * 0.7^2
    let g = noisy_hypercube(3, 0.3).unwrap();
    let prof = sse_profile(&g, 0.25);
    assert!(prof.exhaustive);
    let expected = 1.0 - (0.7f64.powi(3) + 0.3 * 0.7f64.powi(2));
    assert!((prof.min_expansion[&2] - expected).abs() < 1e-12);
    let singleton = 1.0 - 0.7f64.powi(3);
    assert!((prof.min_expansion[&1] - singleton).abs() < 1e-12);
}

#[test]
fn complete_graph_singletons_fully_expand() {
    let n = 5;
    let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v, 1.0)));
    let g = WeightedGraph::from_edges(n, edges).unwrap();
    let prof = sse_profile(&g, 1.0 / n as f64);
    assert!((prof.min_expansion[&1] - 1.0).abs() < 1e-12);
}
