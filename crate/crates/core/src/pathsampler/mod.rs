//! Quasiprobability path sampling. A walk draws an initial label from one
//! boundary vector, moves it through each layer by sampling a column entry
//! with probability proportional to its magnitude, and reweights so the
//! output is an unbiased estimate of `tr(E C(ρ))`.

mod lindblad;
mod runner;

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::reps::{fuse_layers, CircuitDescription, LocalSuperOp, Picture, VectorKind, WeylVector};
use crate::weyl::WeylIndex;

pub use lindblad::{
    enumerate_lindblad_conditioned, estimate_lindblad, lindblad_variance_bound, plan_lindblad, sample_lindblad_path,
    sample_lindblad_path_conditioned, LindbladLayer,
};
pub use runner::{collect_samples, derive_seed, resolve_workers, run_samples, sample_rng, SampleStats};

#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub value: Complex64,
    /// Label after the initial draw and after each applied step.
    pub path: Option<Vec<WeylIndex>>,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SamplingPlan {
    pub m_b: f64,
    pub samples_needed: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub picture: Picture,
    /// Largest magnitude any single sample can take; `m_b` is its square for
    /// the circuit sampler. Unbounded for the Lindblad sampler, whose `m_b`
    /// holds the variance bound instead.
    pub per_sample_bound: Option<f64>,
}

/// How a walk is prepared from a circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct WalkOptions {
    /// Drop identity-fixing layers outside the reachable qudits.
    pub light_cone: bool,
    /// Fuse consecutive layers into blocks and sample the blocks.
    pub fuse: bool,
    pub max_block_qudits: usize,
    pub max_block_dim: usize,
}

impl Default for WalkOptions {
    fn default() -> Self {
        WalkOptions {
            light_cone: true,
            fuse: true,
            max_block_qudits: 3,
            max_block_dim: 1024,
        }
    }
}

impl WalkOptions {
    /// One step per layer, nothing dropped: the bound is `circuit_norm_bound`.
    pub fn layerwise() -> Self {
        WalkOptions {
            light_cone: false,
            fuse: false,
            ..Default::default()
        }
    }
}

/// A circuit prepared for repeated sampling in one picture.
#[derive(Debug, Clone)]
pub struct Walk {
    picture: Picture,
    rho: WeylVector,
    observable: WeylVector,
    steps: Vec<(Arc<LocalSuperOp>, Vec<usize>)>,
    q: usize,
    bound: f64,
}

fn check_inputs(circuit: &CircuitDescription, rho: &WeylVector, e: &WeylVector) -> Result<()> {
    if rho.kind() != VectorKind::State || e.kind() != VectorKind::Observable {
        return Err(Error::InvalidArgument("expected a state and an observable".into()));
    }
    for v in [rho, e] {
        if v.d() != circuit.d() || v.n() != circuit.n() || v.basis() != circuit.basis() {
            return Err(Error::DimensionMismatch(format!(
                "vector on {} qudits at d = {} does not match circuit on {} qudits at d = {}",
                v.n(),
                v.d(),
                circuit.n(),
                circuit.d()
            )));
        }
    }
    Ok(())
}

impl Walk {
    pub fn new(
        circuit: &CircuitDescription,
        rho: &WeylVector,
        e: &WeylVector,
        picture: Picture,
        opts: &WalkOptions,
    ) -> Result<Walk> {
        check_inputs(circuit, rho, e)?;
        let start = match picture {
            Picture::Schrodinger => rho,
            Picture::Heisenberg => e,
        };
        if start.l1_norm() == 0.0 {
            return Err(Error::InvalidArgument(format!("initial {:?} vector is zero", start.kind())));
        }
        let active = start.active_qudits();
        let active = opts.light_cone.then_some(active.as_slice());
        let steps = if opts.fuse {
            fuse_layers(circuit, picture, active, opts.max_block_qudits, opts.max_block_dim)
        } else {
            let mut reach = active.map(|a| a.to_vec());
            circuit
                .walk(picture)
                .into_iter()
                .filter(|(op, sup)| match reach.as_mut() {
                    None => true,
                    Some(r) => {
                        if !op.identity_fixed() || sup.iter().any(|&s| r[s]) {
                            sup.iter().for_each(|&s| r[s] = true);
                            true
                        } else {
                            false
                        }
                    }
                })
                .map(|(op, sup)| (op, sup.to_vec()))
                .collect()
        };
        let norms: f64 = steps.iter().map(|(op, _)| crate::reps::l1_to_l1_norm(op)).product();
        let ends = match picture {
            Picture::Schrodinger => rho.l1_norm() * e.linf_norm(),
            Picture::Heisenberg => e.l1_norm() * rho.linf_norm(),
        };
        Ok(Walk {
            picture,
            rho: rho.clone(),
            observable: e.clone(),
            steps,
            q: (circuit.d() * circuit.d()) as usize,
            bound: ends * norms,
        })
    }

    pub fn picture(&self) -> Picture {
        self.picture
    }

    /// Number of sampled steps after fusion and pruning.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn per_sample_bound(&self) -> f64 {
        self.bound
    }

    pub fn m_b(&self) -> f64 {
        self.bound * self.bound
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        self.run(rng, None)
    }

    pub fn sample_recorded<R: Rng + ?Sized>(&self, rng: &mut R) -> PathSample {
        let mut path = Vec::new();
        let value = self.run(rng, Some(&mut path));
        PathSample { value, path: Some(path) }
    }

    fn run<R: Rng + ?Sized>(&self, rng: &mut R, mut path: Option<&mut Vec<WeylIndex>>) -> Complex64 {
        let zero = Complex64::new(0.0, 0.0);
        let start = match self.picture {
            Picture::Schrodinger => &self.rho,
            Picture::Heisenberg => &self.observable,
        };
        let Some((mut digits, amp)) = start.sample(rng) else {
            return zero;
        };
        let d = self.rho.d();
        let mut v = amp / amp.norm() * start.l1_norm();
        if let Some(p) = path.as_deref_mut() {
            p.push(WeylIndex::from_digits(d, &digits));
        }
        for (op, support) in &self.steps {
            let col = support.iter().fold(0usize, |c, &s| c * self.q + digits[s] as usize);
            if col == 0 && op.identity_fixed() {
                continue;
            }
            let Some((mut row, phase)) = op.sample_code(col, rng) else {
                return zero;
            };
            v *= phase * op.column_l1()[col];
            for &s in support.iter().rev() {
                digits[s] = (row % self.q) as u32;
                row /= self.q;
            }
            if let Some(p) = path.as_deref_mut() {
                p.push(WeylIndex::from_digits(d, &digits));
            }
        }
        let out = match self.picture {
            Picture::Schrodinger => v * self.observable.amplitude_digits(&digits).conj(),
            Picture::Heisenberg => self.rho.amplitude_digits(&digits) * v.conj(),
        };
        debug_assert!(out.norm() <= self.bound * (1.0 + 1e-9) + 1e-12);
        out
    }
}

/// One Schrödinger-picture sample through every layer in order.
pub fn sample_path<R: Rng + ?Sized>(
    circuit: &CircuitDescription,
    rho: &WeylVector,
    e: &WeylVector,
    rng: &mut R,
) -> Result<PathSample> {
    Ok(Walk::new(circuit, rho, e, Picture::Schrodinger, &WalkOptions::layerwise())?.sample_recorded(rng))
}

/// One Heisenberg-picture sample: starts from `E` and applies adjoint layers
/// in reverse order.
pub fn sample_path_heisenberg<R: Rng + ?Sized>(
    circuit: &CircuitDescription,
    rho: &WeylVector,
    e: &WeylVector,
    rng: &mut R,
) -> Result<PathSample> {
    Ok(Walk::new(circuit, rho, e, Picture::Heisenberg, &WalkOptions::layerwise())?.sample_recorded(rng))
}

/// Two-sided Hoeffding count `ceil(2 M_B ln(1/δ) / ε²)`, applied to the real
/// and imaginary parts separately.
pub fn hoeffding_samples(m_b: f64, epsilon: f64, delta: f64) -> Result<u64> {
    check_eps_delta(epsilon, delta)?;
    let n = (2.0 * m_b * (1.0 / delta).ln() / (epsilon * epsilon)).ceil();
    if !n.is_finite() || n > u64::MAX as f64 {
        return Err(Error::SizeLimit(format!("{n:e} samples")));
    }
    Ok((n as u64).max(1))
}

fn check_eps_delta(epsilon: f64, delta: f64) -> Result<()> {
    if !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("need ε > 0 and 0 < δ < 1, got ε = {epsilon}, δ = {delta}")));
    }
    Ok(())
}

pub fn plan(
    circuit: &CircuitDescription,
    rho: &WeylVector,
    e: &WeylVector,
    epsilon: f64,
    delta: f64,
    picture: Picture,
) -> Result<SamplingPlan> {
    plan_with(circuit, rho, e, epsilon, delta, picture, &WalkOptions::default())
}

pub fn plan_with(
    circuit: &CircuitDescription,
    rho: &WeylVector,
    e: &WeylVector,
    epsilon: f64,
    delta: f64,
    picture: Picture,
    opts: &WalkOptions,
) -> Result<SamplingPlan> {
    let walk = Walk::new(circuit, rho, e, picture, opts)?;
    plan_walk(&walk, epsilon, delta)
}

pub fn plan_walk(walk: &Walk, epsilon: f64, delta: f64) -> Result<SamplingPlan> {
    Ok(SamplingPlan {
        m_b: walk.m_b(),
        samples_needed: hoeffding_samples(walk.m_b(), epsilon, delta)?,
        epsilon,
        delta,
        picture: walk.picture,
        per_sample_bound: Some(walk.per_sample_bound()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    pub picture: Picture,
    pub seed: u64,
    /// `0` uses all cores.
    pub workers: usize,
    pub walk: WalkOptions,
    /// Overrides the planned sample count.
    pub samples: Option<u64>,
    /// Refuse plans above this many samples.
    pub max_samples: u64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            picture: Picture::Schrodinger,
            seed: 0,
            workers: 0,
            walk: WalkOptions::default(),
            samples: None,
            max_samples: 1 << 36,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Estimate {
    pub mean: Complex64,
    pub stderr: f64,
    pub plan: SamplingPlan,
    pub stats: SampleStats,
}

/// Runs the planned number of paths and averages them.
pub fn estimate(
    circuit: &CircuitDescription,
    rho: &WeylVector,
    e: &WeylVector,
    epsilon: f64,
    delta: f64,
    opts: &EstimateOptions,
) -> Result<Estimate> {
    let walk = Walk::new(circuit, rho, e, opts.picture, &opts.walk)?;
    let plan = plan_walk(&walk, epsilon, delta)?;
    let n = opts.samples.unwrap_or(plan.samples_needed);
    if n > opts.max_samples {
        return Err(Error::SizeLimit(format!(
            "plan needs {n} samples (M_B = {:.4e}), cap is {}",
            plan.m_b, opts.max_samples
        )));
    }
    log::debug!("sampling {n} paths over {} steps, M_B = {:.4e}", walk.len(), plan.m_b);
    let stats = run_samples(n, opts.seed, opts.workers, |r| walk.sample(r))?;
    Ok(Estimate {
        mean: stats.mean,
        stderr: stats.stderr,
        plan,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{self, c64};
    use crate::noise::CliffordGate;
    use crate::reps::{observable_to_weyl, state_to_weyl, Basis};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero_state(n: usize) -> WeylVector {
        let mut z = dense::DenseOperator::zeros(2, 2);
        z[(0, 0)] = c64(1.0, 0.0);
        state_to_weyl(&vec![z; n], Basis::Weyl).unwrap()
    }

    fn z_obs(n: usize, q: usize) -> WeylVector {
        let z = crate::weyl::materialize(&WeylIndex::parse(2, "1|0").unwrap()).unwrap();
        observable_to_weyl(2, n, &[(vec![q], z)], Basis::Weyl).unwrap()
    }

    #[test]
    fn empty_circuit_z_on_zero() {
        let c = CircuitDescription::new(2, 1, Basis::Weyl);
        let rho = zero_state(1);
        let e = z_obs(1, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen = Vec::new();
        for _ in 0..50 {
            let s = sample_path(&c, &rho, &e, &mut rng).unwrap();
            assert!(s.value == c64(0.0, 0.0) || (s.value - 2.0).norm() < 1e-12);
            seen.push(s.value.re);
        }
        assert!(seen.contains(&0.0) && seen.iter().any(|&x| x > 1.0));
        let h = sample_path_heisenberg(&c, &rho, &e, &mut rng).unwrap();
        assert!((h.value - 1.0).norm() < 1e-12);
    }

    #[test]
    fn clifford_plan_is_one_in_heisenberg() {
        let mut c = CircuitDescription::new(2, 2, Basis::Weyl);
        let g = CliffordGate::parse(2, 2, "H0 CNOT0_1 S1").unwrap();
        c.push(Arc::new(g.superop()), vec![0, 1], "g").unwrap();
        let p = plan(&c, &zero_state(2), &z_obs(2, 1), 0.1, 0.1, Picture::Heisenberg).unwrap();
        assert_eq!(p.m_b, 1.0);
        let est = estimate(
            &c,
            &zero_state(2),
            &z_obs(2, 1),
            0.1,
            0.1,
            &EstimateOptions {
                picture: Picture::Heisenberg,
                workers: 1,
                ..Default::default()
            },
        )
        .unwrap();
        // Z1 pulls back to X0 Z1, whose expectation on |00> vanishes.
        assert_eq!(est.mean, c64(0.0, 0.0));
        assert_eq!(est.stats.max_abs, 0.0);
    }

    #[test]
    fn bad_epsilon_rejected() {
        assert!(hoeffding_samples(1.0, 0.0, 0.1).is_err());
        assert!(hoeffding_samples(1.0, 0.1, 1.0).is_err());
        assert_eq!(hoeffding_samples(1.0, 1.0, (-0.5f64).exp()).unwrap(), 1);
    }
}
