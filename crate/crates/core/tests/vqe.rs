use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weylsim::pathsampler::{plan, plan_with, Walk, WalkOptions};
use weylsim::reps::{circuit_norm_bound, Picture};
use weylsim::vqe::*;

fn random_theta(n: usize, depth: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..depth).map(|_| rng.random_range(0.0..2.0 * PI)).collect())
        .collect()
}

fn opts(seed: u64) -> EnergyOptions {
    EnergyOptions {
        seed,
        workers: 1,
        ..Default::default()
    }
}

#[test]
fn depth_zero_is_empty_and_exact() {
    let prob = MaxCutProblem::new(4, vec![(0, 1, 1.5), (1, 2, -0.5), (0, 3, 2.0)]).unwrap();
    let params = AnsatzParams::new(vec![vec![]; 4], 0.9, 0.9).unwrap();
    assert!(build_ansatz_circuit(&prob, &params).unwrap().is_empty());
    let est = estimate_energy(&prob, &params, 0.1, 0.1, &opts(1)).unwrap();
    assert_eq!(est.energy, 3.0);
    assert_eq!(est.stderr, 0.0);
}

#[test]
fn four_qubit_single_layer_structure() {
    let prob = MaxCutProblem::ring(4).unwrap();
    let params = AnsatzParams::new(vec![vec![0.1]; 4], 0.9, 0.95).unwrap();
    let c = build_ansatz_circuit(&prob, &params).unwrap();
    let got: Vec<(String, Vec<usize>)> = c
        .layers()
        .iter()
        .map(|l| (l.label.chars().take(1).collect(), l.support.clone()))
        .collect();
    let mut want: Vec<(String, Vec<usize>)> = Vec::new();
    for q in 0..4 {
        want.push(("Y".into(), vec![q]));
        want.push(("S".into(), vec![q]));
    }
    want.push(("C".into(), vec![1, 2]));
    want.push(("T".into(), vec![1, 2]));
    assert_eq!(got, want);
}

#[test]
fn noiseless_bound_is_product_of_phis() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let prob = MaxCutProblem::ring(4).unwrap();
    let theta = random_theta(4, 2, &mut rng);
    let want: f64 = theta.iter().flatten().map(|&t| phi(t)).product();
    let params = AnsatzParams::new(theta, 1.0, 1.0).unwrap();
    let c = build_ansatz_circuit(&prob, &params).unwrap();
    assert!((circuit_norm_bound(&c) - want).abs() < 1e-10 * want);
    assert!((ansatz_norm_product(&params) - want).abs() < 1e-10 * want);
}

#[test]
fn layer_norm_examples() {
    assert_eq!(layer_norm(0.0, 0.0, 0.9, 0.7), 1.0);
    assert!((layer_norm(FRAC_PI_4, FRAC_PI_4, 1.0, 1.0) - 2.0).abs() < 1e-12);
    assert!((phi(FRAC_PI_4) - 2f64.sqrt()).abs() < 1e-15);
}

proptest! {
    #[test]
    fn layer_norm_matches_sandwich(t1 in -PI..PI, t2 in -PI..PI, pc in 0.0f64..=1.0, py in 0.0f64..=1.0) {
        let closed = layer_norm(t1, t2, pc, py);
        let numeric = layer_norm_numeric(t1, t2, pc, py).unwrap();
        prop_assert!((closed - numeric).abs() < 1e-10, "{} vs {}", closed, numeric);
    }

    #[test]
    fn layer_norms_never_exceed_layerwise_bound(seed in any::<u64>(), pc in 0.0f64..=1.0, py in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prob = MaxCutProblem::ring(4).unwrap();
        let params = AnsatzParams::new(random_theta(4, 2, &mut rng), pc, py).unwrap();
        let c = build_ansatz_circuit(&prob, &params).unwrap();
        prop_assert!(ansatz_norm_product(&params) <= circuit_norm_bound(&c) * (1.0 + 1e-12));
    }

    #[test]
    fn planner_monotone_in_noise(seed in any::<u64>(), a in 0.5f64..=1.0, b in 0.5f64..=1.0, hold_c in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prob = MaxCutProblem::ring(4).unwrap();
        let theta = random_theta(4, 2, &mut rng);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let rates = |p: f64| if hold_c { (0.9, p) } else { (p, 0.9) };
        let m_b = |p: f64| {
            let (pc, py) = rates(p);
            let params = AnsatzParams::new(theta.clone(), pc, py).unwrap();
            let c = build_ansatz_circuit(&prob, &params).unwrap();
            let w = Walk::new(&c, &zero_state(4).unwrap(), &zz_observable(4, 1, 2).unwrap(),
                Picture::Heisenberg, &WalkOptions::default()).unwrap();
            w.m_b()
        };
        prop_assert!(m_b(lo) <= m_b(hi) * (1.0 + 1e-9), "{} > {}", m_b(lo), m_b(hi));
    }
}

#[test]
fn clifford_limit_is_exact() {
    let prob = MaxCutProblem::new(4, vec![(0, 1, 1.0), (1, 2, 0.5), (2, 3, -1.0), (0, 2, 0.25)]).unwrap();
    let theta = vec![vec![0.0, FRAC_PI_2], vec![PI, 0.0], vec![FRAC_PI_2, FRAC_PI_2], vec![0.0, -FRAC_PI_2]];
    let params = AnsatzParams::new(theta, 0.93, 0.97).unwrap();
    let est = estimate_energy(&prob, &params, 0.05, 0.1, &opts(3)).unwrap();
    for t in &est.terms {
        assert!((t.plan.m_b - 1.0).abs() < 1e-12);
        assert_eq!(t.stderr, 0.0);
    }
    let truth = dense_energy(&prob, &params).unwrap();
    assert!((est.energy - truth).abs() < 1e-12, "{} vs {truth}", est.energy);
}

#[test]
fn four_qubit_energy_matches_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let prob = MaxCutProblem::ring(4).unwrap();
    let params = AnsatzParams::new(random_theta(4, 1, &mut rng), 0.98, 0.98).unwrap();
    let est = estimate_energy(&prob, &params, 0.02, 0.05, &opts(5)).unwrap();
    let truth = dense_energy(&prob, &params).unwrap();
    assert!((est.energy - truth).abs() <= 0.02, "{} vs {truth}", est.energy);
}

#[test]
fn brick_wall_energy_matches_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let prob = MaxCutProblem::new(4, vec![(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
    let params = AnsatzParams::new(random_theta(4, 2, &mut rng), 0.95, 0.99)
        .unwrap()
        .with_pairing(EntanglerPairing::BrickWall);
    let est = estimate_energy(&prob, &params, 0.05, 0.05, &opts(7)).unwrap();
    let truth = dense_energy(&prob, &params).unwrap();
    assert!((est.energy - truth).abs() <= 0.05, "{} vs {truth}", est.energy);
}

#[test]
fn energy_is_deterministic_in_seed() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let prob = MaxCutProblem::ring(4).unwrap();
    let params = AnsatzParams::new(random_theta(4, 1, &mut rng), 0.9, 0.9).unwrap();
    let a = estimate_energy(&prob, &params, 0.1, 0.1, &opts(9)).unwrap();
    let b = estimate_energy(&prob, &params, 0.1, 0.1, &opts(9)).unwrap();
    assert_eq!(a.energy.to_bits(), b.energy.to_bits());
}

#[test]
fn sample_complexity_branches() {
    let s = sample_complexity(6, 2, 0.02, 0.05, 0.98, 0.98).unwrap();
    assert!(!s.polynomial && !s.efficient);
    let s = sample_complexity(6, 2, 0.02, 0.05, 0.5, 0.9).unwrap();
    assert!(s.polynomial && s.efficient && s.growth_condition && s.printed_condition);
    let n = 4.0f64;
    assert!(s.growth <= 1.0);
    let base = sample_complexity(4, 0, 0.1, 0.05, 0.9, 0.9).unwrap();
    assert_eq!(base.samples, (2.0 * n * n * 20f64.ln() / 0.01).ceil() as u64);
    assert_eq!(base.growth, 1.0);
    // Just above 1/2: (2p)^{2nD} grows past n²D² only for long circuits.
    let p = 0.5 * (1.0 + 0.01);
    let short = sample_complexity(4, 1, 0.1, 0.1, p, 1.0).unwrap();
    let long = sample_complexity(4, 400, 0.1, 0.1, p, 1.0).unwrap();
    assert!(short.growth_condition && short.printed_condition);
    assert!(!long.growth_condition && long.printed_condition);
}

#[test]
fn graph_file_schema() {
    let p: MaxCutProblem = serde_json::from_str(r#"{"n": 4, "weights": [[0, 1, 1.0], [3, 2, 0.5]]}"#).unwrap();
    assert_eq!(p.weights(), &[(0, 1, 1.0), (2, 3, 0.5)]);
    assert!(serde_json::from_str::<MaxCutProblem>(r#"{"n": 3, "weights": []}"#).is_err());
}

#[test]
fn planned_vqe_fixture_bound() {
    let prob = MaxCutProblem::ring(4).unwrap();
    let params = AnsatzParams::new(vec![vec![FRAC_PI_4]; 4], 1.0, 1.0).unwrap();
    let c = build_ansatz_circuit(&prob, &params).unwrap();
    let (rho, e) = (zero_state(4).unwrap(), zz_observable(4, 0, 1).unwrap());
    // Heisenberg with ‖E‖₁‖ρ‖_∞ = 1: the squared product of four √2 rotations.
    let p = plan_with(&c, &rho, &e, 0.1, 0.1, Picture::Heisenberg, &WalkOptions::layerwise()).unwrap();
    assert!((p.m_b - 16.0).abs() < 1e-9, "{}", p.m_b);
    // The Schrödinger picture pays ‖ρ‖₁² = 2^{2n} for the product state.
    let p = plan_with(&c, &rho, &e, 0.1, 0.1, Picture::Schrodinger, &WalkOptions::layerwise()).unwrap();
    assert!((p.m_b - 16.0 * 256.0).abs() < 1e-6, "{}", p.m_b);
    let p = plan(&c, &rho, &e, 0.1, 0.1, Picture::Heisenberg).unwrap();
    assert!(p.m_b <= 16.0 + 1e-9);
}
