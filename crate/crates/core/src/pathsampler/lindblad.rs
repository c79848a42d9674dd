use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::{run_samples, Estimate, PathSample, SamplingPlan};
use crate::error::{Error, Result};
use crate::reps::{l1_to_l1_norm, LocalSuperOp, Picture, VectorKind, WeylVector};
use crate::weyl::WeylIndex;

/// A generator `L` acting on `support` for time `t`. Generators with
/// ℓ1→ℓ1 norm above 1 are stored as `L / s` with time `s·t`, which leaves
/// `e^{tL}` unchanged.
#[derive(Debug, Clone)]
pub struct LindbladLayer {
    generator: Arc<LocalSuperOp>,
    support: Vec<usize>,
    t: f64,
    scale: f64,
}

impl LindbladLayer {
    pub fn new(generator: LocalSuperOp, support: Vec<usize>, t: f64) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("time must be finite and nonnegative, got {t}")));
        }
        if generator.arity() != support.len() {
            return Err(Error::DimensionMismatch("generator arity does not match support".into()));
        }
        let norm = l1_to_l1_norm(&generator);
        if norm > 1.0 {
            log::warn!("generator norm {norm:.6} exceeds 1; rescaling it and its time by {norm:.6}");
            let m = generator.matrix() / Complex64::from(norm);
            let scaled = LocalSuperOp::from_matrix(generator.basis(), generator.d(), generator.arity(), &m)?;
            return Ok(LindbladLayer {
                generator: Arc::new(scaled),
                support,
                t: t * norm,
                scale: norm,
            });
        }
        Ok(LindbladLayer {
            generator: Arc::new(generator),
            support,
            t,
            scale: 1.0,
        })
    }

    pub fn generator(&self) -> &LocalSuperOp {
        &self.generator
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Effective time after rescaling.
    pub fn t(&self) -> f64 {
        self.t
    }

    /// Factor the generator was divided by (1 if untouched).
    pub fn scale(&self) -> f64 {
        self.scale
    }
}

fn check(layers: &[LindbladLayer], rho: &WeylVector, e: &WeylVector) -> Result<()> {
    if rho.kind() != VectorKind::State || e.kind() != VectorKind::Observable {
        return Err(Error::InvalidArgument("expected a state and an observable".into()));
    }
    if rho.d() != e.d() || rho.n() != e.n() || rho.basis() != e.basis() {
        return Err(Error::DimensionMismatch("state and observable differ in shape".into()));
    }
    if rho.l1_norm() == 0.0 {
        return Err(Error::InvalidArgument("state vector is zero".into()));
    }
    for (i, l) in layers.iter().enumerate() {
        let g = &l.generator;
        if g.d() != rho.d() || g.basis() != rho.basis() || l.support.iter().any(|&s| s >= rho.n()) {
            return Err(Error::DimensionMismatch(format!("layer {i} does not fit the register")));
        }
    }
    Ok(())
}

/// Walks `qs[l]` column draws of each generator; the mean is
/// `tr(E L_n^{q_n} ⋯ L_1^{q_1}(ρ))`.
fn walk<R: Rng + ?Sized>(layers: &[LindbladLayer], rho: &WeylVector, e: &WeylVector, qs: &[u64], rng: &mut R) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    let Some((mut digits, amp)) = rho.sample(rng) else {
        return zero;
    };
    let q = (rho.d() * rho.d()) as usize;
    let mut v = amp / amp.norm() * rho.l1_norm();
    for (layer, &reps) in layers.iter().zip(qs) {
        for _ in 0..reps {
            let col = layer.support.iter().fold(0usize, |c, &s| c * q + digits[s] as usize);
            let Some((mut row, phase)) = layer.generator.sample_code(col, rng) else {
                return zero;
            };
            v *= phase * layer.generator.column_l1()[col];
            for &s in layer.support.iter().rev() {
                digits[s] = (row % q) as u32;
                row /= q;
            }
        }
    }
    v * e.amplitude_digits(&digits).conj()
}

pub fn sample_lindblad_path_conditioned<R: Rng + ?Sized>(
    layers: &[LindbladLayer],
    rho: &WeylVector,
    e: &WeylVector,
    qs: &[u64],
    rng: &mut R,
) -> Result<Complex64> {
    check(layers, rho, e)?;
    if qs.len() != layers.len() {
        return Err(Error::DimensionMismatch("one application count per layer".into()));
    }
    Ok(walk(layers, rho, e, qs, rng))
}

/// Exact expectation of the conditioned sampler, by summing over every path
/// weighted with its probability.
pub fn enumerate_lindblad_conditioned(
    layers: &[LindbladLayer],
    rho: &WeylVector,
    e: &WeylVector,
    qs: &[u64],
) -> Result<Complex64> {
    check(layers, rho, e)?;
    let q = (rho.d() * rho.d()) as usize;
    let l1 = rho.l1_norm();
    let mut dist: HashMap<Vec<u32>, Complex64> = HashMap::new();
    for (w, amp) in rho.entries() {
        // probability |amp|/l1 times value sign(amp)·l1
        *dist.entry(w.digits()).or_default() += amp.norm() / l1 * (amp / amp.norm() * l1);
    }
    for (layer, &reps) in layers.iter().zip(qs) {
        let g = &layer.generator;
        for _ in 0..reps {
            let mut next: HashMap<Vec<u32>, Complex64> = HashMap::new();
            for (dg, w) in dist {
                let col = layer.support.iter().fold(0usize, |c, &s| c * q + dg[s] as usize);
                let norm = g.column_l1()[col];
                for row in 0..g.dim() {
                    let z = g.entry(row, col);
                    if z.norm() == 0.0 {
                        continue;
                    }
                    let mut nd = dg.clone();
                    let mut r = row;
                    for &s in layer.support.iter().rev() {
                        nd[s] = (r % q) as u32;
                        r /= q;
                    }
                    *next.entry(nd).or_default() += w * (z.norm() / norm) * (z / z.norm() * norm);
                }
            }
            dist = next;
        }
    }
    Ok(dist
        .into_iter()
        .map(|(dg, w)| w * e.amplitude(&WeylIndex::from_digits(rho.d(), &dg)).conj())
        .sum())
}

struct Prepared {
    poisson: Vec<Option<Poisson<f64>>>,
    total_t: f64,
}

fn prepare(layers: &[LindbladLayer]) -> Result<Prepared> {
    let poisson = layers
        .iter()
        .map(|l| {
            if l.t > 0.0 {
                Poisson::new(l.t).map(Some).map_err(|e| Error::InvalidArgument(format!("Poisson rate {}: {e}", l.t)))
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;
    Ok(Prepared {
        poisson,
        total_t: layers.iter().map(|l| l.t).sum(),
    })
}

fn draw<R: Rng + ?Sized>(p: &Prepared, layers: &[LindbladLayer], rho: &WeylVector, e: &WeylVector, rng: &mut R) -> Complex64 {
    let qs: Vec<u64> = p
        .poisson
        .iter()
        .map(|d| d.as_ref().map_or(0, |d| d.sample(rng) as u64))
        .collect();
    walk(layers, rho, e, &qs, rng) * p.total_t.exp()
}

/// Draws Poisson(t_l) application counts, walks them, and scales by `e^{Σt}`.
/// The mean is `tr(E e^{t_n L_n} ⋯ e^{t_1 L_1}(ρ))`.
pub fn sample_lindblad_path<R: Rng + ?Sized>(
    layers: &[LindbladLayer],
    rho: &WeylVector,
    e: &WeylVector,
    rng: &mut R,
) -> Result<PathSample> {
    check(layers, rho, e)?;
    let p = prepare(layers)?;
    Ok(PathSample {
        value: draw(&p, layers, rho, e, rng),
        path: None,
    })
}

/// `exp(Σ t_l (‖L_l‖² + 1)) ‖ρ‖²_{ℓ1} ‖E‖²_{ℓ∞}`.
pub fn lindblad_variance_bound(layers: &[LindbladLayer], rho: &WeylVector, e: &WeylVector) -> f64 {
    let expo: f64 = layers
        .iter()
        .map(|l| {
            let n = l1_to_l1_norm(&l.generator);
            l.t * (n * n + 1.0)
        })
        .sum();
    expo.exp() * (rho.l1_norm() * e.linf_norm()).powi(2)
}

/// Chebyshev count `ceil(3 σ² / ε²)` for success probability 2/3. `m_b`
/// holds the variance bound.
pub fn plan_lindblad(layers: &[LindbladLayer], rho: &WeylVector, e: &WeylVector, epsilon: f64) -> Result<SamplingPlan> {
    check(layers, rho, e)?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("need ε > 0, got {epsilon}")));
    }
    let var = lindblad_variance_bound(layers, rho, e);
    let n = (3.0 * var / (epsilon * epsilon)).ceil();
    if !n.is_finite() || n > u64::MAX as f64 {
        return Err(Error::SizeLimit(format!("{n:e} samples")));
    }
    Ok(SamplingPlan {
        m_b: var,
        samples_needed: (n as u64).max(1),
        epsilon,
        delta: 1.0 / 3.0,
        picture: Picture::Schrodinger,
        per_sample_bound: None,
    })
}

pub fn estimate_lindblad(
    layers: &[LindbladLayer],
    rho: &WeylVector,
    e: &WeylVector,
    epsilon: f64,
    seed: u64,
    workers: usize,
    samples: Option<u64>,
) -> Result<Estimate> {
    let plan = plan_lindblad(layers, rho, e, epsilon)?;
    let p = prepare(layers)?;
    let n = samples.unwrap_or(plan.samples_needed);
    let stats = run_samples(n, seed, workers, |r| draw(&p, layers, rho, e, r))?;
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
    use crate::dense::{self, c64, DenseOperator};
    use crate::reps::{observable_to_weyl, state_to_weyl, Basis};
    use crate::weyl::materialize;

    fn plus() -> WeylVector {
        let h = DenseOperator::from_element(2, 2, c64(0.5, 0.0));
        state_to_weyl(&[h], Basis::Weyl).unwrap()
    }

    fn x_obs() -> WeylVector {
        let x = materialize(&WeylIndex::parse(2, "0|1").unwrap()).unwrap();
        observable_to_weyl(2, 1, &[(vec![0], x)], Basis::Weyl).unwrap()
    }

    /// Weyl-basis generator of `γ (Z ρ Z − ρ)`.
    fn dephasing_generator(gamma: f64) -> LocalSuperOp {
        let z = materialize(&WeylIndex::parse(2, "1|0").unwrap()).unwrap();
        let id = dense::identity(2);
        let l = (dense::liouville_from_kraus(&[z]) - dense::liouville_from_kraus(&[id])) * c64(gamma, 0.0);
        crate::reps::channel_to_superop(&crate::reps::Channel::Liouville(l), Basis::Weyl, 2, 3).unwrap()
    }

    #[test]
    fn zero_generator_gives_plain_expectation() {
        let z = LocalSuperOp::from_matrix(Basis::Weyl, 2, 1, &DenseOperator::zeros(4, 4)).unwrap();
        let layers = vec![LindbladLayer::new(z, vec![0], 0.7).unwrap()];
        let est = estimate_lindblad(&layers, &plus(), &x_obs(), 0.05, 3, 1, Some(20000)).unwrap();
        assert!((est.mean - 1.0).norm() < 4.0 * est.stderr + 1e-12);
    }

    #[test]
    fn conditioned_enumeration_matches_taylor_terms() {
        let layers = vec![LindbladLayer::new(dephasing_generator(0.5), vec![0], 0.5).unwrap()];
        let lv = layers[0].generator().to_liouville();
        let rho = plus().to_dense().unwrap();
        let x = x_obs().to_dense().unwrap();
        let mut term = rho.clone();
        for q in 0..3u64 {
            let exact = dense::trace(&(&x * &term));
            let got = enumerate_lindblad_conditioned(&layers, &plus(), &x_obs(), &[q]).unwrap();
            assert!((got - exact).norm() < 1e-12, "q = {q}");
            term = dense::apply_liouville(&lv, &term);
        }
    }

    #[test]
    fn rescales_large_generators() {
        let l = LindbladLayer::new(dephasing_generator(2.0), vec![0], 0.25).unwrap();
        assert!((l.scale() - 4.0).abs() < 1e-12);
        assert!((l.t() - 1.0).abs() < 1e-12);
        assert!((l1_to_l1_norm(l.generator()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_zero_times_bound() {
        let layers = vec![LindbladLayer::new(dephasing_generator(0.5), vec![0], 0.0).unwrap()];
        let v = lindblad_variance_bound(&layers, &plus(), &x_obs());
        assert!((v - (plus().l1_norm() * x_obs().linf_norm()).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn unit_norm_unit_time_bound_is_e_squared() {
        let layers = vec![LindbladLayer::new(dephasing_generator(0.5), vec![0], 1.0).unwrap()];
        let v = lindblad_variance_bound(&layers, &plus(), &x_obs());
        let base = (plus().l1_norm() * x_obs().linf_norm()).powi(2);
        assert!((v / base - 1f64.exp().powi(2)).abs() < 1e-12);
    }
}
