//! MaxCut VQE ansatz: circuit assembly, closed-form norm bounds and noisy
//! energy estimation through the path sampler.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{self, c64, DenseOperator};
use crate::error::{Error, Result};
use crate::noise::{depolarizing, rotation_superop, CliffordGate, RotationGate};
use crate::pathsampler::{derive_seed, estimate, Estimate, EstimateOptions, SamplingPlan, WalkOptions};
use crate::reps::{
    l1_to_l1_norm, observable_to_weyl, state_to_weyl, Basis, CircuitDescription, LocalSuperOp, Picture,
    WeylVector,
};

const TERM_TAG: u64 = 0x7465_726d;

/// `H = Σ_{i<j} w_ij Z_i Z_j` on an even number of qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct MaxCutProblem {
    n: usize,
    weights: Vec<(usize, usize, f64)>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    n: usize,
    weights: Vec<(usize, usize, f64)>,
}

impl TryFrom<GraphFile> for MaxCutProblem {
    type Error = Error;
    fn try_from(g: GraphFile) -> Result<Self> {
        MaxCutProblem::new(g.n, g.weights)
    }
}

impl From<MaxCutProblem> for GraphFile {
    fn from(p: MaxCutProblem) -> Self {
        GraphFile { n: p.n, weights: p.weights }
    }
}

impl MaxCutProblem {
    /// Pairs are stored with `i < j`; zero weights are dropped.
    pub fn new(n: usize, weights: Vec<(usize, usize, f64)>) -> Result<Self> {
        if n == 0 || n % 2 != 0 {
            return Err(Error::InvalidArgument(format!("MaxCut needs an even vertex count, got {n}")));
        }
        let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(weights.len());
        for (i, j, w) in weights {
            let (i, j) = if i < j { (i, j) } else { (j, i) };
            if i == j || j >= n {
                return Err(Error::InvalidArgument(format!("bad edge ({i}, {j}) for n = {n}")));
            }
            if !w.is_finite() {
                return Err(Error::InvalidArgument(format!("weight on ({i}, {j}) is not finite")));
            }
            if out.iter().any(|&(a, b, _)| (a, b) == (i, j)) {
                return Err(Error::InvalidArgument(format!("edge ({i}, {j}) listed twice")));
            }
            if w != 0.0 {
                out.push((i, j, w));
            }
        }
        Ok(MaxCutProblem { n, weights: out })
    }

    /// Unit weights on `(i, i+1 mod n)`.
    pub fn ring(n: usize) -> Result<Self> {
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[(usize, usize, f64)] {
        &self.weights
    }

    pub fn hamiltonian(&self) -> Result<DenseOperator> {
        if self.n > 12 {
            return Err(Error::SizeLimit(format!("dense Hamiltonian on {} qubits", self.n)));
        }
        let dim = 1usize << self.n;
        let diag = (0..dim).map(|x| {
            let bit = |q: usize| if x >> (self.n - 1 - q) & 1 == 1 { -1.0 } else { 1.0 };
            let e: f64 = self.weights.iter().map(|&(i, j, w)| w * bit(i) * bit(j)).sum();
            c64(e, 0.0)
        });
        Ok(DenseOperator::from_diagonal(&nalgebra::DVector::from_iterator(dim, diag)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntanglerPairing {
    /// CNOTs on 1-based pairs `(2i, 2i+1)` for `i = 1..n/2−1`, which are the
    /// 0-based pairs `(1,2), (3,4), …, (n−3, n−2)`.
    #[default]
    AsPrinted,
    /// `(0,1), (2,3), …` on even layers and `(1,2), (3,4), …` on odd ones.
    BrickWall,
}

pub fn entangler_pairs(n: usize, layer: usize, pairing: EntanglerPairing) -> Vec<(usize, usize)> {
    let start = match pairing {
        EntanglerPairing::AsPrinted => 1,
        EntanglerPairing::BrickWall => layer % 2,
    };
    (start..n.saturating_sub(1)).step_by(2).map(|i| (i, i + 1)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzParams {
    /// `theta[i][k]` for qubit `i` and layer `k`.
    pub theta: Vec<Vec<f64>>,
    /// Survival eigenvalue of the two-qubit depolarizing after each CNOT.
    pub p_c: f64,
    /// Survival eigenvalue of the one-qubit depolarizing after each rotation.
    pub p_y: f64,
    #[serde(default)]
    pub pairing: EntanglerPairing,
}

impl AnsatzParams {
    pub fn new(theta: Vec<Vec<f64>>, p_c: f64, p_y: f64) -> Result<Self> {
        let p = AnsatzParams {
            theta,
            p_c,
            p_y,
            pairing: EntanglerPairing::AsPrinted,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_pairing(mut self, pairing: EntanglerPairing) -> Self {
        self.pairing = pairing;
        self
    }

    pub fn depth(&self) -> usize {
        self.theta.first().map_or(0, |r| r.len())
    }

    pub fn n(&self) -> usize {
        self.theta.len()
    }

    pub fn validate(&self) -> Result<()> {
        let depth = self.depth();
        if self.theta.iter().any(|r| r.len() != depth) {
            return Err(Error::DimensionMismatch("theta rows have different lengths".into()));
        }
        if self.theta.iter().flatten().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("rotation angle is not finite".into()));
        }
        for (name, p) in [("p_c", self.p_c), ("p_y", self.p_y)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("{name} = {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// `|cos θ| + |sin θ|`, the ℓ1 norm of a rotated X or Z column.
pub fn phi(theta: f64) -> f64 {
    theta.cos().abs() + theta.sin().abs()
}

/// Per depth step: each `Y(θ_ik)` followed by one-qubit depolarizing `p_y`,
/// then each entangler CNOT followed by two-qubit depolarizing `p_c`.
pub fn build_ansatz_circuit(prob: &MaxCutProblem, params: &AnsatzParams) -> Result<CircuitDescription> {
    params.validate()?;
    let n = prob.n;
    if params.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "theta has {} rows for {n} qubits",
            params.n()
        )));
    }
    let mut c = CircuitDescription::new(2, n, Basis::Weyl);
    let s_y = Arc::new(depolarizing(2, params.p_y, 1)?.to_superop());
    let t_c = Arc::new(depolarizing(2, params.p_c, 2)?.to_superop());
    let cnot = Arc::new(CliffordGate::parse(2, 2, "CNOT0_1")?.superop());
    for k in 0..params.depth() {
        for (i, row) in params.theta.iter().enumerate() {
            let g = RotationGate::new(2, row[k], i)?;
            c.push(Arc::new(rotation_superop(&g, Basis::Weyl)), vec![i], format!("Y({})", row[k]))?;
            c.push(s_y.clone(), vec![i], format!("S_{}", params.p_y))?;
        }
        for (a, b) in entangler_pairs(n, k, params.pairing) {
            c.push(cnot.clone(), vec![a, b], "CNOT")?;
            c.push(t_c.clone(), vec![a, b], format!("T_{}", params.p_c))?;
        }
    }
    Ok(c)
}

/// `max{1, p_y² p_c φ(θ)φ(θ'), p_y p_c φ(θ), p_y p_c φ(θ')}`.
pub fn layer_norm(theta1: f64, theta2: f64, p_c: f64, p_y: f64) -> f64 {
    let (f1, f2) = (phi(theta1), phi(theta2));
    [1.0, p_y * p_y * p_c * f1 * f2, p_y * p_c * f1, p_y * p_c * f2]
        .into_iter()
        .fold(f64::MIN, f64::max)
}

/// `T_{p_c} ∘ (Y(θ1) ⊗ Y(θ2)) ∘ (S_{p_y} ⊗ S_{p_y})` in the Weyl basis.
pub fn layer_sandwich(theta1: f64, theta2: f64, p_c: f64, p_y: f64) -> Result<LocalSuperOp> {
    let y1 = rotation_superop(&RotationGate::new(2, theta1, 0)?, Basis::Weyl);
    let y2 = rotation_superop(&RotationGate::new(2, theta2, 1)?, Basis::Weyl);
    let s = depolarizing(2, p_y, 1)?.to_superop();
    let t = depolarizing(2, p_c, 2)?.to_superop();
    t.compose(&y1.tensor(&y2)?)?.compose(&s.tensor(&s)?)
}

/// `Π_k Π_i layer_norm(θ_{2i,k}, θ_{2i+1,k})`, pairing qubits in order.
pub fn ansatz_norm_product(params: &AnsatzParams) -> f64 {
    let n = params.n();
    (0..params.depth())
        .map(|k| {
            (0..n / 2)
                .map(|i| layer_norm(params.theta[2 * i][k], params.theta[2 * i + 1][k], params.p_c, params.p_y))
                .product::<f64>()
        })
        .product()
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleComplexity {
    pub n: usize,
    pub depth: usize,
    /// `p_c · p_y² · 2`.
    pub base: f64,
    /// `base^{2nD}`.
    pub growth: f64,
    /// `⌈2 n² · growth · ln(1/δ) / ε²⌉`, saturating.
    pub samples: u64,
    /// `base ≤ 1`: the bound is polynomial in `n`.
    pub polynomial: bool,
    /// `p_c p_y² < 1/2`.
    pub efficient: bool,
    /// `p_c p_y² ≤ 1 + ln(nD)/(nD)` as printed.
    pub printed_condition: bool,
    /// `growth ≤ n² D²`.
    pub growth_condition: bool,
}

pub fn sample_complexity(
    n: usize,
    depth: usize,
    epsilon: f64,
    delta: f64,
    p_c: f64,
    p_y: f64,
) -> Result<SampleComplexity> {
    if !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon}, delta {delta}")));
    }
    for p in [p_c, p_y] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("rate {p} outside [0, 1]")));
        }
    }
    let base = p_c * p_y * p_y * 2.0;
    let nd = (n * depth) as f64;
    let growth = base.powf(2.0 * nd);
    let raw = (2.0 * (n * n) as f64 * growth * (1.0 / delta).ln() / (epsilon * epsilon)).ceil();
    let samples = if raw >= u64::MAX as f64 { u64::MAX } else { raw as u64 };
    let printed_condition = nd == 0.0 || p_c * p_y * p_y <= 1.0 + nd.ln() / nd;
    let growth_condition = growth <= nd * nd || depth == 0;
    if printed_condition != growth_condition {
        log::info!(
            "efficiency readings differ: p_c p_y² ≤ 1 + ln(nD)/nD is {printed_condition}, \
             (2 p_c p_y²)^(2nD) ≤ n²D² is {growth_condition}"
        );
    } else {
        log::debug!("efficiency readings agree: {growth_condition}");
    }
    Ok(SampleComplexity {
        n,
        depth,
        base,
        growth,
        samples,
        polynomial: base <= 1.0,
        efficient: p_c * p_y * p_y < 0.5,
        printed_condition,
        growth_condition,
    })
}

/// `|0…0⟩` in the Weyl basis.
pub fn zero_state(n: usize) -> Result<WeylVector> {
    let mut z = DenseOperator::zeros(2, 2);
    z[(0, 0)] = c64(1.0, 0.0);
    state_to_weyl(&vec![z; n], Basis::Weyl)
}

pub fn zz_observable(n: usize, i: usize, j: usize) -> Result<WeylVector> {
    let z = DenseOperator::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(1.0, 0.0), c64(-1.0, 0.0)]));
    observable_to_weyl(2, n, &[(vec![i], z.clone()), (vec![j], z)], Basis::Weyl)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyOptions {
    pub seed: u64,
    /// `0` uses all cores.
    pub workers: usize,
    pub walk: WalkOptions,
    pub max_samples: u64,
}

impl Default for EnergyOptions {
    fn default() -> Self {
        EnergyOptions {
            seed: 0,
            workers: 0,
            walk: WalkOptions::default(),
            max_samples: EstimateOptions::default().max_samples,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TermEstimate {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
    /// Estimate of `⟨Z_i Z_j⟩`.
    pub value: f64,
    pub stderr: f64,
    pub plan: SamplingPlan,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyEstimate {
    pub energy: f64,
    pub stderr: f64,
    pub samples: u64,
    pub terms: Vec<TermEstimate>,
}

/// Heisenberg-picture estimate of every `⟨Z_i Z_j⟩`. Each of the `K` terms
/// gets accuracy `ε/(K|w_ij|)` and failure probability `δ/K`.
pub fn estimate_energy(
    prob: &MaxCutProblem,
    params: &AnsatzParams,
    epsilon: f64,
    delta: f64,
    opts: &EnergyOptions,
) -> Result<EnergyEstimate> {
    if !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon}, delta {delta}")));
    }
    let circuit = build_ansatz_circuit(prob, params)?;
    let rho = zero_state(prob.n)?;
    let k = prob.weights.len().max(1) as f64;
    let terms: Vec<TermEstimate> = prob
        .weights
        .par_iter()
        .enumerate()
        .map(|(t, &(i, j, w))| {
            let e = zz_observable(prob.n, i, j)?;
            let eo = EstimateOptions {
                picture: Picture::Heisenberg,
                seed: derive_seed(opts.seed, TERM_TAG, t as u64),
                workers: opts.workers,
                walk: opts.walk,
                samples: None,
                max_samples: opts.max_samples,
            };
            let est: Estimate = estimate(&circuit, &rho, &e, epsilon / (k * w.abs()), delta / k, &eo)?;
            Ok(TermEstimate {
                i,
                j,
                weight: w,
                value: est.mean.re,
                stderr: est.stderr,
                plan: est.plan,
            })
        })
        .collect::<Result<_>>()?;
    Ok(EnergyEstimate {
        energy: terms.iter().map(|t| t.weight * t.value).sum(),
        stderr: terms.iter().map(|t| (t.weight * t.stderr).powi(2)).sum::<f64>().sqrt(),
        samples: terms.iter().map(|t| t.plan.samples_needed).sum(),
        terms,
    })
}

/// Output state of the noisy ansatz by dense density-matrix simulation.
pub fn dense_ansatz_state(prob: &MaxCutProblem, params: &AnsatzParams) -> Result<DenseOperator> {
    params.validate()?;
    let n = prob.n;
    if n > 10 {
        return Err(Error::SizeLimit(format!("dense simulation of {n} qubits")));
    }
    if params.n() != n {
        return Err(Error::DimensionMismatch(format!("theta has {} rows for {n} qubits", params.n())));
    }
    let dim = 1usize << n;
    let mut rho = DMatrix::<Complex64>::zeros(dim, dim);
    rho[(0, 0)] = c64(1.0, 0.0);
    let s_y = depolarizing(2, params.p_y, 1)?.kraus()?;
    let t_c = depolarizing(2, params.p_c, 2)?.kraus()?;
    let cnot = CliffordGate::parse(2, 2, "CNOT0_1")?.unitary();
    for k in 0..params.depth() {
        for (i, row) in params.theta.iter().enumerate() {
            let u = RotationGate::new(2, row[k], i)?.unitary();
            rho = dense::apply_kraus(&rho, &[u], &[i], 2, n);
            rho = dense::apply_kraus(&rho, &s_y, &[i], 2, n);
        }
        for (a, b) in entangler_pairs(n, k, params.pairing) {
            rho = dense::apply_kraus(&rho, std::slice::from_ref(&cnot), &[a, b], 2, n);
            rho = dense::apply_kraus(&rho, &t_c, &[a, b], 2, n);
        }
    }
    Ok(rho)
}

pub fn dense_energy(prob: &MaxCutProblem, params: &AnsatzParams) -> Result<f64> {
    let rho = dense_ansatz_state(prob, params)?;
    Ok(dense::trace(&(prob.hamiltonian()? * rho)).re)
}

/// Numeric column-sum norm of [`layer_sandwich`].
pub fn layer_norm_numeric(theta1: f64, theta2: f64, p_c: f64, p_y: f64) -> Result<f64> {
    Ok(l1_to_l1_norm(&layer_sandwich(theta1, theta2, p_c, p_y)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_as_printed() {
        assert_eq!(entangler_pairs(4, 0, EntanglerPairing::AsPrinted), vec![(1, 2)]);
        assert_eq!(entangler_pairs(6, 1, EntanglerPairing::AsPrinted), vec![(1, 2), (3, 4)]);
        assert_eq!(entangler_pairs(2, 0, EntanglerPairing::AsPrinted), vec![]);
        assert_eq!(entangler_pairs(4, 0, EntanglerPairing::BrickWall), vec![(0, 1), (2, 3)]);
        assert_eq!(entangler_pairs(4, 1, EntanglerPairing::BrickWall), vec![(1, 2)]);
    }

    #[test]
    fn odd_vertex_count_rejected() {
        assert!(MaxCutProblem::new(3, vec![(0, 1, 1.0)]).is_err());
        assert!(MaxCutProblem::new(4, vec![(1, 1, 1.0)]).is_err());
        assert!(MaxCutProblem::new(4, vec![(0, 1, 1.0), (1, 0, 2.0)]).is_err());
    }
}
