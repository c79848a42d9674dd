use num_complex::Complex64;

use crate::dense::{self, DenseOperator};
use crate::error::{Error, Result};
use crate::reps::{Basis, LocalSuperOp};
use crate::weyl::{check_prime, materialize, weyl_conjugate, WeylIndex};

/// A channel diagonal in the Weyl basis, `W_w ↦ λ(w) W_w`.
#[derive(Debug, Clone)]
pub struct WeylDiagonalChannel {
    d: u32,
    m: usize,
    /// Indexed by label code.
    eigenvalues: Vec<Complex64>,
}

const TOL: f64 = 1e-10;

impl WeylDiagonalChannel {
    pub fn new(d: u32, m: usize, eigenvalues: Vec<Complex64>) -> Result<Self> {
        check_prime(d)?;
        let dim = (d as usize).pow(2 * m as u32);
        if eigenvalues.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "{} eigenvalues for {dim} labels",
                eigenvalues.len()
            )));
        }
        if (eigenvalues[0] - 1.0).norm() > TOL {
            return Err(Error::InvalidArgument(format!(
                "eigenvalue at the identity label is {}, expected 1",
                eigenvalues[0]
            )));
        }
        if let Some(z) = eigenvalues.iter().find(|z| z.norm() > 1.0 + TOL) {
            return Err(Error::InvalidArgument(format!("eigenvalue {z} exceeds 1 in modulus")));
        }
        Ok(WeylDiagonalChannel { d, m, eigenvalues })
    }

    pub fn from_fn(d: u32, m: usize, f: impl Fn(&WeylIndex) -> Complex64) -> Result<Self> {
        check_prime(d)?;
        Self::new(d, m, WeylIndex::all(d, m).map(|w| f(&w)).collect())
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn arity(&self) -> usize {
        self.m
    }

    pub fn eigenvalue(&self, w: &WeylIndex) -> Complex64 {
        self.eigenvalues[w.code()]
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// Inverse character transform `p(x) = d^{-2m} Σ_w λ(w) ν^{-k(x,w)}`, where
    /// `W_x W_w W_x^† = ν^{k(x,w)} W_w`. The channel equals
    /// `ρ ↦ Σ_x p(x) W_x ρ W_x^†`.
    pub fn mixing_probabilities(&self) -> Vec<Complex64> {
        let labels: Vec<WeylIndex> = WeylIndex::all(self.d, self.m).collect();
        let total = labels.len() as f64;
        labels
            .iter()
            .map(|x| {
                labels
                    .iter()
                    .zip(&self.eigenvalues)
                    .map(|(w, lam)| lam * weyl_conjugate(x, w).unwrap().neg().value())
                    .sum::<Complex64>()
                    / total
            })
            .collect()
    }

    /// Mixed-Weyl form has a probability vector.
    pub fn cp_check(&self) -> bool {
        let p = self.mixing_probabilities();
        let sum: Complex64 = p.iter().sum();
        p.iter().all(|z| z.re >= -TOL && z.im.abs() <= 1e-9) && (sum - 1.0).norm() <= 1e-9
    }

    /// Kraus operators `sqrt(p(x)) W_x`; only meaningful when `cp_check` holds.
    pub fn kraus(&self) -> Result<Vec<DenseOperator>> {
        if !self.cp_check() {
            return Err(Error::InvalidArgument("channel is not completely positive".into()));
        }
        let p = self.mixing_probabilities();
        WeylIndex::all(self.d, self.m)
            .zip(p)
            .filter(|(_, z)| z.re > 1e-15)
            .map(|(w, z)| Ok(materialize(&w)? * Complex64::from(z.re.sqrt())))
            .collect()
    }

    pub fn to_superop(&self) -> LocalSuperOp {
        let diag = nalgebra::DVector::from_vec(self.eigenvalues.clone());
        LocalSuperOp::from_matrix(Basis::Weyl, self.d, self.m, &DenseOperator::from_diagonal(&diag))
            .expect("shape fixed at construction")
    }

    /// Dense Liouville matrix `Σ_w λ(w) vec(W_w) vec(W_w)^† / d^m`.
    pub fn to_liouville(&self) -> DenseOperator {
        self.to_superop().to_liouville()
    }

    /// `self ⊗ other`, `self` on the leading qudits.
    pub fn tensor(&self, other: &WeylDiagonalChannel) -> Result<WeylDiagonalChannel> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch("tensor: different d".into()));
        }
        let mut ev = Vec::with_capacity(self.eigenvalues.len() * other.eigenvalues.len());
        for a in &self.eigenvalues {
            for b in &other.eigenvalues {
                ev.push(a * b);
            }
        }
        WeylDiagonalChannel::new(self.d, self.m + other.m, ev)
    }
}

fn check_rate(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("parameter {p} not in [0, 1]")))
    }
}

/// Eigenvalue 1 at the identity label and `p` on every other label of the
/// `m`-qudit support.
pub fn depolarizing(d: u32, p: f64, m: usize) -> Result<WeylDiagonalChannel> {
    check_rate(p)?;
    WeylDiagonalChannel::from_fn(d, m, |w| {
        if w.is_identity() { 1.0 } else { p }.into()
    })
}

/// Survival eigenvalue of `ρ ↦ (1 - q) ρ + q·tr(ρ)·I/d^m`, i.e. `1 - q`.
pub fn survival_from_depolarizing_probability(q: f64) -> f64 {
    1.0 - q
}

/// Dephasing on the `target` qudits of an `m`-qudit support: eigenvalue 1 on
/// labels whose targets carry no X part (`b = 0`), `p` otherwise. For `d > 2`
/// this is `ρ ↦ Σ_z q(z) Z^z ρ Z^{-z}` with `q` uniform on `z ≠ 0`.
pub fn dephasing(d: u32, p: f64, m: usize, target: &[usize]) -> Result<WeylDiagonalChannel> {
    check_rate(p)?;
    if target.is_empty() || target.iter().any(|&t| t >= m) {
        return Err(Error::InvalidArgument("dephasing targets outside the support".into()));
    }
    WeylDiagonalChannel::from_fn(d, m, |w| {
        if target.iter().all(|&t| w.b()[t] == 0) { 1.0 } else { p }.into()
    })
}

/// Tensor product of single-qudit dephasing channels with parameters `ps`.
pub fn local_dephasing(d: u32, ps: &[f64]) -> Result<WeylDiagonalChannel> {
    let mut ch = dephasing(d, *ps.first().ok_or_else(|| Error::InvalidArgument("no rates".into()))?, 1, &[0])?;
    for &p in &ps[1..] {
        ch = ch.tensor(&dephasing(d, p, 1, &[0])?)?;
    }
    Ok(ch)
}

/// Diagonal of a superoperator in the Weyl basis.
pub trait WeylDiagonal {
    fn weyl_diagonal(&self) -> Vec<Complex64>;
}

impl WeylDiagonal for WeylDiagonalChannel {
    fn weyl_diagonal(&self) -> Vec<Complex64> {
        self.eigenvalues.clone()
    }
}

impl WeylDiagonal for LocalSuperOp {
    fn weyl_diagonal(&self) -> Vec<Complex64> {
        assert_eq!(self.basis(), Basis::Weyl, "Weyl diagonal of a non-Weyl representation");
        self.diagonal()
    }
}

/// Weyl twirl: keeps the diagonal of the Weyl-basis matrix.
pub fn twirl(channel: &LocalSuperOp) -> Result<WeylDiagonalChannel> {
    if channel.basis() != Basis::Weyl {
        return Err(Error::InvalidArgument("twirl expects a Weyl-basis superoperator".into()));
    }
    WeylDiagonalChannel::new(channel.d(), channel.arity(), channel.diagonal())
}

/// `1 - max_{w ≠ 0} |λ(w)|`.
pub fn weyl_spectral_gap(channel: &impl WeylDiagonal) -> f64 {
    let diag = channel.weyl_diagonal();
    1.0 - diag.iter().skip(1).map(|z| z.norm()).fold(0.0, f64::max)
}

/// Dense oracle `d^{-2m} Σ_w W_w^† ∘ N ∘ W_w` of the twirl of a Liouville matrix.
pub fn dense_twirl(s: &DenseOperator, d: u32, m: usize) -> DenseOperator {
    let labels: Vec<WeylIndex> = WeylIndex::all(d, m).collect();
    let mut acc = DenseOperator::zeros(s.nrows(), s.ncols());
    for w in &labels {
        let u = materialize(w).unwrap();
        let conj = dense::liouville_unitary(&u);
        let inv = dense::liouville_unitary(&u.adjoint());
        acc += inv * s * conj;
    }
    acc / Complex64::from(labels.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{c64, max_abs_diff, random_kraus};
    use crate::reps::{channel_to_superop, Channel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn depolarizing_examples() {
        let ch = depolarizing(2, 0.7, 2).unwrap();
        assert!(ch.eigenvalues()[1..].iter().all(|z| (z - 0.7).norm() < 1e-15));
        let id = depolarizing(3, 1.0, 1).unwrap();
        assert!(max_abs_diff(&id.to_liouville(), &dense::identity(9)) < 1e-12);
        // p = 0 replaces the state with I/2.
        let full = depolarizing(2, 0.0, 1).unwrap().to_liouville();
        let rho = DenseOperator::from_row_slice(2, 2, &[c64(0.3, 0.0), c64(0.1, 0.2), c64(0.1, -0.2), c64(0.7, 0.0)]);
        let out = dense::apply_liouville(&full, &rho);
        assert!(max_abs_diff(&out, &(dense::identity(2) * c64(0.5, 0.0))) < 1e-12);
        assert!(depolarizing(2, 1.5, 1).is_err());
    }

    #[test]
    fn dephasing_matches_z_kraus_twirl() {
        let p: f64 = 0.8;
        let s = (1.0 - p) / 2.0;
        let z = materialize(&WeylIndex::parse(2, "1|0").unwrap()).unwrap();
        let kraus = vec![dense::identity(2) * c64((1.0 - s).sqrt(), 0.0), z * c64(s.sqrt(), 0.0)];
        let op = channel_to_superop(&Channel::Kraus(kraus), Basis::Weyl, 2, 3).unwrap();
        let ch = dephasing(2, p, 1, &[0]).unwrap();
        // codes: (0,0), (0,1)=X, (1,0)=Z, (1,1)
        let want = [1.0, p, 1.0, p];
        for (k, w) in want.iter().enumerate() {
            assert!((ch.eigenvalues()[k] - w).norm() < 1e-15);
            assert!((op.diagonal()[k] - w).norm() < 1e-12);
        }
        let two = local_dephasing(2, &[0.9, 0.8]).unwrap();
        let w = WeylIndex::parse(2, "11|11").unwrap();
        assert!((two.eigenvalue(&w) - 0.72).norm() < 1e-15);
    }

    #[test]
    fn qutrit_dephasing_is_cp_and_matches_twirl() {
        let ch = dephasing(3, 0.4, 1, &[0]).unwrap();
        assert!(ch.cp_check());
        let s = ch.to_liouville();
        assert!(dense::is_completely_positive(&s, 1e-10));
        assert!(max_abs_diff(&dense_twirl(&s, 3, 1), &s) < 1e-12);
    }

    #[test]
    fn twirl_matches_group_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (d, m) in [(2u32, 1usize), (2, 2), (3, 1)] {
            let k = random_kraus((d as usize).pow(m as u32), 3, &mut rng);
            let ch = Channel::Kraus(k);
            let op = channel_to_superop(&ch, Basis::Weyl, d, 3).unwrap();
            let tw = twirl(&op).unwrap();
            let oracle = dense_twirl(&ch.liouville(), d, m);
            assert!(max_abs_diff(&tw.to_liouville(), &oracle) < 1e-10);
        }
    }

    #[test]
    fn spectral_gap_examples() {
        assert!(weyl_spectral_gap(&depolarizing(2, 1.0, 1).unwrap()).abs() < 1e-15);
        assert!((weyl_spectral_gap(&depolarizing(2, 0.9, 1).unwrap()) - 0.1).abs() < 1e-15);
        assert!(weyl_spectral_gap(&dephasing(2, 0.5, 1, &[0]).unwrap()).abs() < 1e-15);
        assert!((survival_from_depolarizing_probability(0.1) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn cp_check_matches_choi() {
        let good = WeylDiagonalChannel::new(2, 1, vec![c64(1.0, 0.0), c64(0.5, 0.0), c64(0.5, 0.0), c64(0.5, 0.0)]).unwrap();
        assert!(good.cp_check());
        assert!(dense::is_completely_positive(&good.to_liouville(), 1e-8));
        let bad = WeylDiagonalChannel::new(2, 1, vec![c64(1.0, 0.0), c64(-1.0, 0.0), c64(-1.0, 0.0), c64(-1.0, 0.0)]).unwrap();
        assert!(!bad.cp_check());
        assert!(!dense::is_completely_positive(&bad.to_liouville(), 1e-8));
        assert!(WeylDiagonalChannel::new(2, 1, vec![c64(0.9, 0.0); 4]).is_err());
    }
}
