use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use weylsim::dense::{self, c64, DenseOperator};
use weylsim::noise::{depolarizing, CliffordGate, WeylDiagonalChannel};
use weylsim::pathsampler::run_samples;
use weylsim::weyl::WeylIndex;
use weylsim::wrb::*;
use weylsim::Error;

fn idx(d: u32, s: &str) -> WeylIndex {
    WeylIndex::parse(d, s).unwrap()
}

fn depol_liouville(d: u32, n: usize, p: f64) -> DenseOperator {
    let mut ch = depolarizing(d, p, 1).unwrap();
    for _ in 1..n {
        ch = ch.tensor(&depolarizing(d, p, 1).unwrap()).unwrap();
    }
    ch.to_liouville()
}

fn device(d: u32, n: usize, u: DenseOperator, p: f64, t_w: Option<WeylDiagonalChannel>) -> DeviceModel {
    DeviceModel::new(d, n, u, depol_liouville(d, n, p), t_w).unwrap()
}

fn mean_at(dev: &DeviceModel, label: &WeylIndex, m: usize, runs: u64, seed: u64) -> (Complex64, f64, Complex64) {
    let (rho, e, c) = choose_state_povm(label).unwrap();
    let cfg = WRBConfig::new(label.clone(), m, rho, e, runs as usize).unwrap();
    let src = DeviceSource::new(dev, &cfg).unwrap();
    let s = run_samples(runs, seed, 1, |r| src.sample(m, r)).unwrap();
    (s.mean, s.stderr, c)
}

#[test]
fn state_povm_for_zz() {
    let (rho, e, c) = choose_state_povm(&idx(2, "11|00")).unwrap();
    assert!((rho[(0, 0)] - 1.0).norm() < 1e-12);
    let even = DenseOperator::from_diagonal(&nalgebra::DVector::from_vec(vec![
        c64(1.0, 0.0),
        c64(0.0, 0.0),
        c64(0.0, 0.0),
        c64(1.0, 0.0),
    ]));
    assert!(dense::max_abs_diff(&e, &even) < 1e-12);
    assert!((c - 0.5).norm() < 1e-12);
}

#[test]
fn state_povm_sweep_qutrits() {
    for w in WeylIndex::all(3, 2) {
        let (rho, e, c) = choose_state_povm(&w).unwrap();
        dense::check_density(&rho, 1e-10).unwrap();
        assert!(dense::min_eigenvalue(&e) > -1e-10);
        assert!((&e * &e - &e).iter().all(|z| z.norm() < 1e-10), "{w}: not a projector");
        let want = if w.is_identity() { 1.0 } else { 1.0 / 3.0 };
        assert!((c - want).norm() < 1e-10, "{w}: C = {c}");
        let rank = dense::trace(&e).re.round() as usize;
        assert!(rank >= 3);
    }
}

#[test]
fn qubit_y_label_has_real_constant() {
    let (_, _, c) = choose_state_povm(&idx(2, "1|1")).unwrap();
    assert!((c - 0.5).norm() < 1e-12);
}

#[test]
fn noiseless_identity_is_flat_in_m() {
    let dev = device(2, 1, dense::identity(2), 1.0, None);
    let label = idx(2, "1|0");
    for m in [1, 7] {
        let (mean, se, c) = mean_at(&dev, &label, m, 20_000, 5);
        assert!((mean - c).norm() < 4.0 * se + 1e-9, "m = {m}: {mean} vs {c}");
    }
}

#[test]
fn cnot_depolarizing_decay_matches_twirl() {
    let cnot = CliffordGate::parse(2, 2, "CNOT0_1").unwrap().unitary();
    let dev = device(2, 2, cnot, 0.95, None);
    let label = idx(2, "10|00");
    let mu = dev.twirled_eigenvalue(&label).unwrap();
    assert!((mu - 0.95).norm() < 1e-12);
    let m = 3;
    let (mean, se, c) = mean_at(&dev, &label, m, 10_000, 17);
    let want = c * mu.powu(m as u32);
    assert!((mean - want).norm() < 3.0 * se, "{mean} vs {want} ± {se}");
}

#[test]
fn qutrit_phase_gate_decay_is_complex() {
    let s = CliffordGate::parse(3, 1, "Z0").unwrap().unitary();
    let dev = device(3, 1, s, 0.9, None);
    let label = idx(3, "0|1");
    let mu = dev.twirled_eigenvalue(&label).unwrap();
    assert!((mu.norm() - 0.9).abs() < 1e-12);
    assert!(mu.im.abs() > 0.1);
    let (mean, se, c) = mean_at(&dev, &label, 2, 20_000, 3);
    assert!((mean - c * mu * mu).norm() < 4.0 * se);
}

#[test]
fn q2_on_synthetic_outputs() {
    let src = SyntheticDecay {
        mu: c64(1.0, 0.0),
        c: c64(0.5, 0.0),
    };
    let q2 = estimate_q2(&src, 3, 2000, 1, 1).unwrap();
    assert!((q2 - 0.25).abs() < 0.05);
    let perfect = SyntheticDecay {
        mu: c64(1.0, 0.0),
        c: c64(1.0, 0.0),
    };
    assert_eq!(estimate_q2(&perfect, 4, 100, 1, 1).unwrap(), 1.0);
}

#[test]
fn q2_is_unbiased_over_repetitions() {
    let src = SyntheticDecay {
        mu: Complex64::from_polar(0.9, 0.3),
        c: c64(0.5, 0.0),
    };
    let truth = (0.5f64 * 0.9f64.powi(4)).powi(2);
    let est: Vec<f64> = (0..100).map(|s| estimate_q2(&src, 4, 500, s, 1).unwrap()).collect();
    let mean = est.iter().sum::<f64>() / 100.0;
    let sd = (est.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 99.0).sqrt();
    assert!((mean - truth).abs() < 3.0 * sd / 10.0);
}

#[test]
fn adaptive_on_depolarizing_point_nine() {
    let dev = device(2, 1, dense::identity(2), 0.9, None);
    let acfg = AdaptiveConfig {
        epsilon: 0.1,
        delta: 0.1,
        seed: 4,
        workers: 1,
        ..Default::default()
    };
    let label = idx(2, "1|0");
    let (rho, e, _) = choose_state_povm(&label).unwrap();
    let src = DeviceSource::new(&dev, &WRBConfig::new(label.clone(), 1, rho, e, 0).unwrap()).unwrap();
    let est = adaptive_abs_mu(&src, "1|0", &acfg).unwrap();
    assert!(est.m_max <= 33, "m_max = {}", est.m_max);
    assert!((est.abs - 0.9).abs() <= 5.0 * 0.1 * 0.1, "{}", est.abs);
}

#[test]
fn adaptive_without_gap_hits_iteration_cap() {
    let src = SyntheticDecay {
        mu: c64(1.0, 0.0),
        c: c64(0.5, 0.0),
    };
    let cfg = AdaptiveConfig {
        max_iterations: 3,
        workers: 1,
        ..Default::default()
    };
    assert!(matches!(adaptive_abs_mu(&src, "z", &cfg), Err(Error::MaxIterations(3))));
}

#[test]
fn synthetic_phase_recovery() {
    let src = SyntheticDecay {
        mu: Complex64::from_polar(0.95, PI / 7.0),
        c: c64(1.0, 0.0),
    };
    let ph = estimate_phase(&src, &[1, 2, 3, 5, 9], 5000, 0.05, 8, 1).unwrap();
    assert!((ph.theta - PI / 7.0).abs() < 0.02, "{}", ph.theta);
    let real = SyntheticDecay {
        mu: c64(0.9, 0.0),
        c: c64(1.0, 0.0),
    };
    let ph = estimate_phase(&real, &[1, 2, 3], 5000, 0.05, 8, 1).unwrap();
    assert!(ph.theta.abs() < 0.02);
}

#[test]
fn phase_refuses_weak_signal() {
    let src = SyntheticDecay {
        mu: c64(0.5, 0.0),
        c: c64(0.5, 0.0),
    };
    assert!(matches!(
        estimate_phase(&src, &[1, 8], 2000, 0.05, 1, 1),
        Err(Error::MagnitudeFloor { m: 8, .. })
    ));
}

#[test]
fn symmetric_phase_ambiguity() {
    let (t, s) = resolve_symmetric_phase(0.3 + PI, 0.3);
    assert!((t - (0.3 + PI - 2.0 * PI)).abs() < 1e-12 && s == -1.0);
    let (t, s) = resolve_symmetric_phase(0.29, 0.3);
    assert!((t - 0.3).abs() < 1e-12 && s == 1.0);
}

#[test]
fn noisy_weyl_correction() {
    let raw = MuEstimate {
        label: "z".into(),
        abs: 0.99 * 0.99 * 0.95,
        phase: 0.0,
        c: 0.5,
        m_max: 9,
        samples: 0,
        record: BenchmarkRecord {
            label: "z".into(),
            points: vec![],
        },
    };
    let same = correct_for_noisy_weyls(&raw, c64(1.0, 0.0)).unwrap();
    assert_eq!(same, raw);
    let fixed = correct_for_noisy_weyls(&raw, c64(0.99, 0.0)).unwrap();
    assert!((fixed.abs - 0.95).abs() < 1e-12);
    assert!(correct_for_noisy_weyls(&raw, c64(0.0, 0.0)).is_err());
}

#[test]
fn noisy_weyl_device_decays_with_squared_weyl_noise() {
    let t_w = depolarizing(2, 0.99, 1).unwrap();
    let dev = device(2, 1, dense::identity(2), 0.95, Some(t_w));
    let clean = device(2, 1, dense::identity(2), 0.95, None);
    let label = idx(2, "1|0");
    let acfg = AdaptiveConfig {
        epsilon: 0.1,
        seed: 21,
        workers: 1,
        ..Default::default()
    };
    let pcfg = PhaseConfig::default();
    let raw = estimate_mu(&dev, &label, &acfg, &pcfg).unwrap();
    let base = estimate_mu(&clean, &label, &acfg, &pcfg).unwrap();
    let fixed = correct_for_noisy_weyls(&raw, c64(0.99, 0.0)).unwrap();
    assert!((raw.abs - 0.95 * 0.99 * 0.99).abs() < 5.0 * 0.1 * (1.0 - 0.95 * 0.99 * 0.99));
    assert!((fixed.abs - base.abs).abs() < 0.01, "{} vs {}", fixed.abs, base.abs);
}

#[test]
fn eigenvalue_rescaling() {
    let mu = MuEstimate {
        label: "z".into(),
        abs: 0.95,
        phase: 0.0,
        c: 0.5,
        m_max: 9,
        samples: 0,
        record: BenchmarkRecord {
            label: "z".into(),
            points: vec![],
        },
    };
    assert!((mu_to_noise_eigenvalue(&mu, c64(1.0, 0.0)).unwrap() - 0.95).norm() < 1e-12);
    let h = CliffordGate::parse(2, 1, "H0").unwrap().unitary();
    let dev = device(2, 1, h, 1.0, None);
    let u_diag = dev.twirled_eigenvalue(&idx(2, "1|0")).unwrap();
    assert!(u_diag.norm() < 1e-12);
    assert!(matches!(mu_to_noise_eigenvalue(&mu, u_diag), Err(Error::ZeroDiagonal(_))));
}

#[test]
fn offdiagonal_rejects_identity_and_reduces_on_diagonal() {
    let dev = device(2, 1, dense::identity(2), 0.9, None);
    let acfg = AdaptiveConfig {
        seed: 2,
        workers: 1,
        ..Default::default()
    };
    let pcfg = PhaseConfig::default();
    assert!(matches!(
        offdiagonal_mu(&dev, &idx(2, "0|0"), &idx(2, "1|0"), &acfg, &pcfg),
        Err(Error::IdentityLabel(_))
    ));
    let a = offdiagonal_mu(&dev, &idx(2, "1|0"), &idx(2, "1|0"), &acfg, &pcfg).unwrap();
    let b = estimate_mu(&dev, &idx(2, "1|0"), &acfg, &pcfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn fixed_schedule_fit() {
    let src = SyntheticDecay {
        mu: Complex64::from_polar(0.9, 0.2),
        c: c64(0.5, 0.0),
    };
    let est = fixed_schedule_mu(&src, "x", &[1, 2, 4, 8], 20_000, 3, 1).unwrap();
    assert!((est.abs - 0.9).abs() < 0.01);
    assert!((est.c - 0.5).abs() < 0.03);
    assert!((est.phase - 0.2).abs() < 0.03);
}

#[test]
fn runs_are_deterministic() {
    let dev = device(2, 1, dense::identity(2), 0.95, None);
    let label = idx(2, "1|0");
    let (rho, e, _) = choose_state_povm(&label).unwrap();
    let cfg = WRBConfig::new(label, 4, rho, e, 1).unwrap();
    let a: Vec<Complex64> = {
        let mut r = ChaCha8Rng::seed_from_u64(9);
        (0..50).map(|_| run_wrb_once(&dev, &cfg, &mut r).unwrap()).collect()
    };
    let b: Vec<Complex64> = {
        let mut r = ChaCha8Rng::seed_from_u64(9);
        (0..50).map(|_| run_wrb_once(&dev, &cfg, &mut r).unwrap()).collect()
    };
    assert_eq!(a, b);
    assert!(a.iter().all(|y| y.norm() == 0.0 || (y.norm() - 1.0).abs() < 1e-12));
}

#[test]
fn config_validation() {
    let label = idx(2, "1|0");
    let (rho, e, _) = choose_state_povm(&label).unwrap();
    assert!(WRBConfig::new(label.clone(), 0, rho.clone(), e.clone(), 1).is_err());
    let too_big = &e * c64(2.0, 0.0);
    assert!(WRBConfig::new(label, 1, rho, too_big, 1).is_err());
    assert!(matches!(
        DeviceModel::new(2, 7, dense::identity(128), dense::identity(128 * 128), None),
        Err(Error::SizeLimit(_))
    ));
}
