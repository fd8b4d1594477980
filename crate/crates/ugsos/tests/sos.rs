use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ugsos::graph::noisy_hypercube;
use ugsos::instance::{brute_force_opt, plant_instance, Edge, UgInstance};
use ugsos::sos::io::{dump, load};
use ugsos::sos::{
    build_relaxation, monomials_up_to, solve_sdp, solve_sdp_dense, validate, Distribution, Monomial, Poly,
    PseudoExpectation, SolverOptions, Var,
};

fn edge(u: usize, v: usize, shift: usize) -> Edge {
    Edge { u, v, w: 1.0, shift }
}

fn triangle(shifts: [usize; 3]) -> UgInstance {
    UgInstance::new(3, 2, [edge(0, 1, shifts[0]), edge(1, 2, shifts[1]), edge(0, 2, shifts[2])]).unwrap()
}

fn objective_poly(inst: &UgInstance) -> Poly {
    let k = inst.alphabet_size();
    let mut p = Poly::zero();
    for e in inst.edges() {
        for a in 0..k {
            let m = Monomial::from_vars([Var::new(e.u, a), Var::new(e.v, (a + k - e.shift) % k)]).unwrap();
            p.add_term(m, e.w / inst.total_weight());
        }
    }
    p
}

fn hypercube_instance(seed: u64) -> UgInstance {
    let g = noisy_hypercube(2, 0.25).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    plant_instance(&g, 3, 0.2, &mut rng).unwrap().0
}

#[test]
fn relaxation_dimensions() {
    let e = UgInstance::new(2, 2, [edge(0, 1, 0)]).unwrap();
    assert_eq!(build_relaxation(&e, 2).unwrap().dimension(), 5);
    assert_eq!(build_relaxation(&triangle([0, 0, 0]), 2).unwrap().dimension(), 7);
}

#[test]
fn objective_on_integral_moment_matrix() {
    let inst = triangle([0, 0, 1]);
    let p = build_relaxation(&inst, 2).unwrap();
    let obj = p.full_objective(&inst);
    let dim = p.dimension();
    for code in 0..8usize {
        let x: Vec<usize> = (0..3).map(|i| (code >> i) & 1).collect();
        let d = Distribution::point(2, x.clone());
        let m = p.full_matrix(|mono| d.prob(mono));
        let v: f64 = obj.iter().map(|&(i, j, c)| c * m[i + j * dim]).sum();
        assert_abs_diff_eq!(v, inst.value(&x).unwrap(), epsilon = 1e-12);
    }
}

#[test]
fn full_constraints_hold_on_distributions() {
    let inst = hypercube_instance(3);
    let p = build_relaxation(&inst, 2).unwrap();
    let dim = p.dimension();
    let d = Distribution { k: 3, n: 4, support: vec![(vec![0, 1, 2, 0], 0.3), (vec![2, 2, 1, 0], 0.7)] };
    let m = p.full_matrix(|mono| d.prob(mono));
    for c in p.full_constraints() {
        let lhs: f64 = c.terms.iter().map(|&(i, j, w)| w * m[i + j * dim]).sum();
        assert_abs_diff_eq!(lhs, c.rhs, epsilon = 1e-12);
    }
}

#[test]
fn sdp_examples() {
    let tol = 1e-7;
    let single = UgInstance::new(2, 2, [edge(0, 1, 0)]).unwrap();
    let s = solve_sdp(&build_relaxation(&single, 2).unwrap(), tol).unwrap();
    assert_abs_diff_eq!(s.value, 1.0, epsilon = 1e-5);

    let tri = triangle([0, 0, 1]);
    for d in [2, 4] {
        let s = solve_sdp(&build_relaxation(&tri, d).unwrap(), tol).unwrap();
        assert!(s.value >= 2.0 / 3.0 - 1e-5 && s.value <= 1.0 + 1e-9, "D={d}: {}", s.value);
        assert!(validate(&s.pe, 1e-5).passed);
    }

    let g = noisy_hypercube(2, 0.25).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (planted, _) = plant_instance(&g, 3, 0.0, &mut rng).unwrap();
    let s = solve_sdp(&build_relaxation(&planted, 4).unwrap(), tol).unwrap();
    assert_abs_diff_eq!(s.value, 1.0, epsilon = 1e-5);
}

#[test]
fn relaxation_bounds_brute_force() {
    for seed in 0..4 {
        let inst = hypercube_instance(seed);
        let brute = brute_force_opt(&inst, 10_000_000).unwrap().1;
        for d in [2, 4] {
            let s = solve_sdp(&build_relaxation(&inst, d).unwrap(), 1e-7).unwrap();
            assert!(s.converged);
            assert!(s.value >= brute - 1e-5, "seed {seed} D={d}: {} < {brute}", s.value);
            let rep = validate(&s.pe, 1e-5);
            assert!(rep.passed, "{rep:?}");
        }
    }
}

#[test]
fn evaluate_matches_reported_value() {
    let inst = hypercube_instance(7);
    let s = solve_sdp(&build_relaxation(&inst, 4).unwrap(), 1e-7).unwrap();
    assert_abs_diff_eq!(s.pe.evaluate(&Poly::constant(1.0)).unwrap(), 1.0, epsilon = 1e-12);
    for u in 0..inst.num_vertices() {
        let mut p = Poly::zero();
        for a in 0..3 {
            p.add(&Poly::var(Var::new(u, a)), 1.0);
        }
        assert_abs_diff_eq!(s.pe.evaluate(&p).unwrap(), 1.0, epsilon = 1e-8);
    }
    assert_abs_diff_eq!(s.pe.evaluate(&objective_poly(&inst)).unwrap(), s.value, epsilon = 1e-8);
    let big = Poly::monomial(
        Monomial::from_vars((0..4).map(|u| Var::new(u, 0))).unwrap().mul(&Monomial::one()).unwrap(),
        1.0,
    );
    assert!(s.pe.evaluate(&big).is_ok());
    let deg2 = PseudoExpectation::uniform(4, 3, 2);
    assert!(deg2.evaluate(&big).is_err());
}

#[test]
fn block_solver_agrees_with_dense_solver() {
    let opts = SolverOptions { tol: 1e-8, ..Default::default() };
    for (inst, d) in [(triangle([0, 0, 1]), 2), (triangle([0, 0, 1]), 4), (hypercube_instance(5), 2)] {
        let p = build_relaxation(&inst, d).unwrap();
        let a = ugsos::sos::solve_sdp_with(&p, opts).unwrap();
        let b = solve_sdp_dense(&p, opts).unwrap();
        assert!(a.converged && b.converged);
        assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-5);
    }
}

#[test]
fn symmetrize_examples() {
    let inst = hypercube_instance(2);
    let s = solve_sdp(&build_relaxation(&inst, 4).unwrap(), 1e-7).unwrap();
    // an asymmetric operator: mix the solution with a point mass
    let point = PseudoExpectation::from_distribution(&Distribution::point(3, vec![0, 2, 1, 1]), 4);
    let pe = s.pe.mix(&point, 0.4);
    let sym = pe.symmetrize().unwrap();
    assert_abs_diff_eq!(sym.objective(&inst), pe.objective(&inst), epsilon = 1e-10);
    for u in 0..4 {
        for a in 0..3 {
            assert_abs_diff_eq!(sym.marginal(u, a), 1.0 / 3.0, epsilon = 1e-8);
        }
    }
    let twice = sym.symmetrize().unwrap();
    for (m, v) in sym.moments() {
        assert_abs_diff_eq!(twice.get(m), v, epsilon = 1e-12);
    }
    assert!(validate(&sym, 1e-5).passed);
}

#[test]
fn condition_examples() {
    let inst = hypercube_instance(4);
    let s = solve_sdp(&build_relaxation(&inst, 4).unwrap(), 1e-7).unwrap();
    let sym = s.pe.symmetrize().unwrap();
    let c = sym.condition(&Monomial::var(1, 0)).unwrap();
    assert_eq!(c.degree(), 2);
    assert_abs_diff_eq!(c.marginal(1, 0), 1.0, epsilon = 1e-12);
    for v in [0, 2, 3] {
        for t in 0..3 {
            let shifted: f64 = (0..3).map(|a| sym.pair(1, a, v, (t + a) % 3)).sum();
            assert_abs_diff_eq!(c.marginal(v, t), shifted, epsilon = 1e-8);
        }
    }
    let rep = validate(&c, 1e-5);
    assert!(rep.min_eigenvalue >= -1e-5, "{rep:?}");
    let point = PseudoExpectation::from_distribution(&Distribution::point(3, vec![1, 1, 1, 1]), 4);
    assert!(point.condition(&Monomial::var(0, 0)).is_err());
}

#[test]
fn product_copy_examples() {
    let inst = hypercube_instance(6);
    let s = solve_sdp(&build_relaxation(&inst, 4).unwrap(), 1e-7).unwrap();
    let pe2 = s.pe.product_copy().unwrap();
    assert_eq!(pe2.copy_count(), 2);
    let m = Monomial::from_vars([Var::tagged(2, 1, 0), Var::tagged(2, 1, 1)]).unwrap();
    assert_abs_diff_eq!(pe2.get(&m), s.pe.marginal(2, 1).powi(2), epsilon = 1e-15);
    for u in 0..4 {
        let mut total = 0.0;
        for sh in 0..3 {
            for a in 0..3 {
                let z = Monomial::from_vars([Var::tagged(u, a, 0), Var::tagged(u, (a + sh) % 3, 1)]).unwrap();
                total += pe2.get(&z);
            }
        }
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-8);
    }
    let x = vec![2, 0, 1, 1];
    let point = PseudoExpectation::from_distribution(&Distribution::point(3, x.clone()), 4).product_copy().unwrap();
    for u in 0..4 {
        for sh in 0..3 {
            let z: f64 = (0..3)
                .map(|a| point.get(&Monomial::from_vars([Var::tagged(u, a, 0), Var::tagged(u, (a + sh) % 3, 1)]).unwrap()))
                .sum();
            assert_eq!(z, if sh == 0 { 1.0 } else { 0.0 });
        }
    }
    assert!(validate(&pe2, 1e-5).passed);
    assert!(pe2.product_copy().is_err());
}

#[test]
fn rerandomize_examples() {
    let inst = hypercube_instance(8);
    let s = solve_sdp(&build_relaxation(&inst, 4).unwrap(), 1e-7).unwrap();
    let sym = s.pe.symmetrize().unwrap();
    let same = sym.rerandomize(&[]).unwrap();
    for (m, v) in sym.moments() {
        assert_eq!(same.get(m), v);
    }
    let r = sym.rerandomize(&[0, 3]).unwrap();
    for b in 0..3 {
        for a in 0..3 {
            assert_abs_diff_eq!(r.pair(0, a, 1, b), sym.marginal(1, b) / 3.0, epsilon = 1e-12);
        }
    }
    assert!(r.symmetry_residual() < 1e-8);
    assert!(validate(&r, 1e-5).passed);
    for e in inst.edges().iter().filter(|e| e.u == 0 || e.v == 0) {
        let ind: f64 = (0..3).map(|a| r.marginal(e.u, a) * r.marginal(e.v, (a + 3 - e.shift) % 3)).sum();
        assert_abs_diff_eq!(ind, 1.0 / 3.0, epsilon = 1e-8);
    }
}

#[test]
fn validate_examples() {
    let point = PseudoExpectation::from_distribution(&Distribution::point(3, vec![2, 0, 1]), 4);
    assert!(validate(&point, 1e-12).passed);
    let mut table: std::collections::HashMap<Monomial, f64> = point.moments().map(|(m, v)| (m.clone(), v)).collect();
    table.insert(Monomial::one(), 0.9);
    let bad = PseudoExpectation::from_table(3, 3, 4, table).unwrap();
    let rep = validate(&bad, 1e-6);
    assert!(!rep.passed);
    assert_abs_diff_eq!(rep.scaling_deviation, 0.1, epsilon = 1e-12);
}

#[test]
fn genuine_distributions_validate() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        let support: Vec<(Vec<usize>, f64)> =
            (0..4).map(|_| ((0..4).map(|_| rng.gen_range(0..3)).collect(), 0.25)).collect();
        let d = Distribution { k: 3, n: 4, support };
        let pe = PseudoExpectation::from_distribution(&d, 4);
        assert!(validate(&pe, 1e-12).passed);
    }
}

#[test]
fn dump_round_trip() {
    let inst = hypercube_instance(9);
    let s = solve_sdp(&build_relaxation(&inst, 2).unwrap(), 1e-7).unwrap();
    let back = load(&dump(&s.pe)).unwrap();
    for m in monomials_up_to(4, 3, 2) {
        assert_eq!(back.get(&m), s.pe.get(&m));
    }
    assert!(load("{\"degree\":2,\"k\":2,\"n\":1,\"moments\":[[[[0,5,0]],1.0]]}").is_err());
}

fn random_poly(rng: &mut ChaCha8Rng, n: usize, k: usize, deg: usize) -> Poly {
    let basis = monomials_up_to(n, k, deg);
    let mut p = Poly::zero();
    for m in basis {
        if rng.gen_bool(0.3) {
            p.add_term(m, rng.gen_range(-1.0..1.0));
        }
    }
    p
}

#[test]
fn pseudo_cauchy_schwarz() {
    let inst = hypercube_instance(10);
    let s = solve_sdp(&build_relaxation(&inst, 4).unwrap(), 1e-7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let y = random_poly(&mut rng, 4, 3, 2);
        let z = random_poly(&mut rng, 4, 3, 2);
        let yz = s.pe.evaluate(&y.mul(&z)).unwrap();
        let yy = s.pe.evaluate(&y.mul(&y)).unwrap();
        let zz = s.pe.evaluate(&z.mul(&z)).unwrap();
        assert!(yz * yz <= yy * zz + 1e-7, "{yz} {yy} {zz}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn symmetrize_is_idempotent(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let support: Vec<(Vec<usize>, f64)> = (0..3).map(|_| ((0..3).map(|_| rng.gen_range(0..3)).collect(), 1.0 / 3.0)).collect();
        let pe = PseudoExpectation::from_distribution(&Distribution { k: 3, n: 3, support }, 4);
        let a = pe.symmetrize().unwrap();
        let b = a.symmetrize().unwrap();
        for (m, v) in a.moments() {
            prop_assert!((b.get(m) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_invariance_of_value(seed in 0u64..1000, s in 0usize..3) {
        let inst = hypercube_instance(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
        let x: Vec<usize> = (0..4).map(|_| rng.gen_range(0..3)).collect();
        let y: Vec<usize> = x.iter().map(|a| (a + s) % 3).collect();
        prop_assert_eq!(inst.value(&x).unwrap(), inst.value(&y).unwrap());
    }
}
