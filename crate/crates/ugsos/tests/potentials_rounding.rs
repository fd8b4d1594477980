use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ugsos::approx::{build_capped, build_step_poly};
use ugsos::graph::{noisy_hypercube, WeightedGraph};
use ugsos::instance::{brute_force_opt, plant_instance};
use ugsos::potential::{
    claims_report, phi_apx, phi_exact_sampled, phi_local_subgraph, phi_restricted_global, potential_report, psi,
    SseConstants,
};
use ugsos::rounding::{condition_and_round, cr_expected, cr_val, derandomized_round, partial_to_full, CrSampler, PartialAssignment};
use ugsos::sos::{build_relaxation, solve_sdp, Distribution, PseudoExpectation};
use ugsos::{Edge, Result, UgInstance};

/// Unweighted 3-cube: local values lie in {0, 1/3, 2/3, 1}.
fn cube() -> WeightedGraph {
    let edges = (0..8usize).flat_map(|u| (0..3).map(move |b| (u, u ^ (1 << b), 1.0))).filter(|&(u, v, _)| u < v);
    WeightedGraph::from_edges(8, edges).unwrap()
}

fn planted(g: &WeightedGraph, k: usize, eps: f64, seed: u64) -> (UgInstance, Vec<usize>) {
    plant_instance(g, k, eps, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn solved(inst: &UgInstance, degree: usize) -> PseudoExpectation {
    solve_sdp(&build_relaxation(inst, degree).unwrap(), 1e-7).unwrap().pe.symmetrize().unwrap()
}

#[test]
fn point_mass_potential_tracks_exact_indicator() {
    let (beta, nu) = (0.5, 0.1);
    let p = build_step_poly(beta, nu, nu).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for seed in 0..6 {
        let (inst, _) = planted(&cube(), 3, 0.3, seed);
        let x: Vec<usize> = (0..8).map(|_| rng.gen_range(0..3)).collect();
        let pe2 = PseudoExpectation::points(Distribution::point(3, x.clone()), 4).product_copy().unwrap();
        let apx = phi_apx(&pe2, &p, &inst).unwrap();
        let exact = phi_exact_sampled(&inst, &x, &x, beta).unwrap();
        assert!((apx - exact).abs() <= nu * (2.0 + 3.0 * nu), "seed {seed}: {apx} vs {exact}");
    }
}

#[test]
fn exact_potential_of_split_partition() {
    // two triangles joined by nothing, shifted apart by one label
    let e = |u, v| Edge { u, v, w: 1.0, shift: 0 };
    let inst = UgInstance::new(6, 3, [e(0, 1), e(1, 2), e(0, 2), e(3, 4), e(4, 5), e(3, 5)]).unwrap();
    let x = vec![0; 6];
    let y = vec![0, 0, 0, 1, 1, 1];
    assert!((phi_exact_sampled(&inst, &x, &y, 0.5).unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn uniform_operator_potentials() {
    let (inst, _) = planted(&cube(), 3, 0.2, 2);
    let k = 3.0;
    let pe = PseudoExpectation::uniform(8, 3, 4);
    // off-diagonal pairs contribute 1/k^2, the diagonal pairs pE[val_u] = 1/k
    let diag: f64 = inst.stationary().iter().map(|p| p * p).sum();
    let expected = diag / k + (1.0 - diag) / (k * k);
    assert!((psi(&pe, &inst).unwrap() - expected).abs() < 1e-12);
    let step = build_capped(0.5, 1).unwrap();
    let pe2 = pe.product_copy().unwrap();
    let phi = phi_apx(&pe2, &step.poly, &inst).unwrap();
    assert!(phi <= 1.0 / k + 1e-6);
    let all: Vec<usize> = (0..8).collect();
    for h in [vec![0, 1, 3], vec![5], all.clone()] {
        assert!(phi_restricted_global(&pe2, &step.poly, &h, &inst).unwrap() <= 1.0 / k + 1e-6);
    }
    let r = potential_report(&pe, &step.poly, 0.5, step.nu_eff, &inst).unwrap();
    assert!(r.check());
    assert!((cr_expected(&pe, &inst).unwrap() - 1.0 / k).abs() < 1e-12);
}

#[test]
fn restricted_potentials_on_whole_graph() {
    let (inst, _) = planted(&cube(), 3, 0.1, 3);
    let pe = solved(&inst, 4);
    let step = build_capped(0.5, 1).unwrap();
    let pe2 = pe.product_copy().unwrap();
    let all: Vec<usize> = (0..8).collect();
    let phi = phi_apx(&pe2, &step.poly, &inst).unwrap();
    assert!((phi_restricted_global(&pe2, &step.poly, &all, &inst).unwrap() - phi).abs() < 1e-10);
    assert!((phi_local_subgraph(&pe2, &step.poly, &all, &inst).unwrap() - phi).abs() < 1e-10);
    for u in 0..8 {
        assert!(phi_restricted_global(&pe2, &step.poly, &[u], &inst).unwrap() <= 1.0 + 1e-9);
    }
}

#[test]
fn integral_satisfying_potentials() {
    let (inst, x) = planted(&cube(), 3, 0.0, 4);
    let nu = 0.05;
    let p = build_step_poly(0.5, nu, nu).unwrap();
    let pe = PseudoExpectation::points(Distribution::shifts_of(3, &x), 4);
    assert!((psi(&pe, &inst).unwrap() - 1.0).abs() < 1e-12);
    let pe2 = PseudoExpectation::points(Distribution::point(3, x.clone()), 4).product_copy().unwrap();
    let phi = phi_apx(&pe2, &p, &inst).unwrap();
    assert!(phi >= (1.0 - nu) * (1.0 - nu) - 1e-9 && phi <= 1.0 + 1e-9);
    let h = vec![0, 1, 3, 2];
    let local = phi_local_subgraph(&pe2, &p, &h, &inst).unwrap();
    assert!(local >= (1.0 - nu) * (1.0 - nu) - 1e-9 && local <= 1.0 + 1e-9);
}

#[test]
fn planted_noiseless_potential_regression() {
    let g = noisy_hypercube(3, 0.3).unwrap();
    let (inst, _) = planted(&g, 3, 0.0, 5);
    let pe = solved(&inst, 4);
    let step = build_capped(0.5, 1).unwrap();
    let phi = phi_apx(&pe.product_copy().unwrap(), &step.poly, &inst).unwrap();
    assert!(phi >= 0.9, "phi {phi}");
}

#[test]
fn partition_claims_on_planted_hypercubes() {
    let g = noisy_hypercube(3, 0.3).unwrap();
    let step = build_capped(0.5, 1).unwrap();
    for seed in 0..3 {
        let eps = 0.05;
        let (inst, _) = planted(&g, 3, eps, seed);
        let pe = solved(&inst, 4);
        let sse = SseConstants::from_hypercontractivity(0.6, 9.0, eps);
        let r = claims_report(&pe, &step.poly, 0.5, step.nu_eff, &inst, &sse, 1e-5).unwrap();
        assert!(r.cover.holds, "seed {seed}: {:?}", r.cover);
        assert!(r.expansion.holds, "seed {seed}: {:?}", r.expansion);
        assert!(r.b1.holds, "seed {seed}: {:?}", r.b1);
        if let Some(b2) = r.b2 {
            assert!(b2.holds, "seed {seed}: {b2:?}");
        }
        assert!(r.partition_bound.lhs >= r.partition_bound.rhs - 1e-4, "seed {seed}: {:?}", r.partition_bound);
    }
}

#[test]
fn rounding_dominates_conditioned_potential() {
    let g = noisy_hypercube(2, 0.25).unwrap();
    for seed in 0..4 {
        let (inst, _) = planted(&g, 3, 0.2, seed);
        let pe = solved(&inst, 4);
        let cr = cr_expected(&pe, &inst).unwrap();
        assert!(cr >= psi(&pe, &inst).unwrap() - 1e-6);
        let all: Vec<usize> = (0..inst.num_vertices()).collect();
        assert!((cr_val(&pe, &inst, &all).unwrap() - cr).abs() < 1e-9);
        let out = derandomized_round(&pe, &inst, None).unwrap();
        assert!(out.value >= cr - 1e-9);
        let r = condition_and_round(&pe, &inst, seed).unwrap();
        assert!((0.0..=1.0).contains(&r.value));
        assert!((r.expected - cr).abs() < 1e-9);
    }
}

#[test]
fn monte_carlo_matches_closed_form() {
    let (inst, _) = planted(&noisy_hypercube(2, 0.25).unwrap(), 3, 0.3, 9);
    let pe = solved(&inst, 4);
    let sampler = CrSampler::new(&pe, &inst).unwrap();
    let vals: Vec<f64> = (0..10_000u64).map(|s| sampler.sample_value(&mut ChaCha8Rng::seed_from_u64(s))).collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let se = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    // outcomes of probability below 1e-5 are invisible to 10^4 samples
    assert!((mean - sampler.expected).abs() <= 3.0 * se + 1e-5, "{mean} vs {}", sampler.expected);
}

#[test]
fn single_edge_low_degree_rounds_optimally() {
    let inst = UgInstance::new(2, 3, [Edge { u: 0, v: 1, w: 1.0, shift: 2 }]).unwrap();
    let pe = solve_sdp(&build_relaxation(&inst, 2).unwrap(), 1e-7).unwrap().pe.symmetrize().unwrap();
    let out = derandomized_round(&pe, &inst, None).unwrap();
    assert_eq!(out.value, brute_force_opt(&inst, 1000).unwrap().1);
    assert_eq!(out.value, 1.0);
}

#[test]
fn partial_to_full_on_whole_graph() {
    let (inst, _) = planted(&cube(), 3, 0.0, 6);
    let pe = solved(&inst, 4);
    let all: Vec<usize> = (0..8).collect();
    let mut whole = |_: &PseudoExpectation, f: &PartialAssignment| -> Result<Option<(Vec<usize>, Option<String>)>> {
        let free: Vec<usize> = all.iter().copied().filter(|&v| f[v].is_none()).collect();
        Ok((!free.is_empty()).then(|| (free, Some("whole".into()))))
    };
    let out = partial_to_full(&inst, &pe, &mut whole, 0.05).unwrap();
    assert_eq!(out.trace.len(), 1);
    assert_eq!(out.value, 1.0);
    assert!(out.trace.iter().all(|t| t.drop_ok()));
}

#[test]
fn partial_to_full_drop_bound_on_halves() {
    let g = noisy_hypercube(3, 0.3).unwrap();
    let (inst, _) = planted(&g, 3, 0.05, 7);
    let pe = solved(&inst, 4);
    let mut halves = |_: &PseudoExpectation, f: &PartialAssignment| -> Result<Option<(Vec<usize>, Option<String>)>> {
        for part in [[0usize, 1, 2, 3], [4, 5, 6, 7]] {
            if part.iter().any(|&v| f[v].is_none()) {
                return Ok(Some((part.to_vec(), None)));
            }
        }
        Ok(None)
    };
    let out = partial_to_full(&inst, &pe, &mut halves, 0.05).unwrap();
    let mut seen = [false; 8];
    for t in &out.trace {
        assert!(t.drop_ok(), "{t:?}");
        for &v in &t.assigned {
            assert!(!seen[v]);
            seen[v] = true;
        }
    }
    assert!((0.0..=1.0).contains(&out.value));
}
