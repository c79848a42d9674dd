use std::collections::HashMap;

use num_complex::Complex64;
use rand::Rng;

use super::Basis;
use crate::alias::AliasTable;
use crate::dense::{self, DenseOperator};
use crate::error::{Error, Result};
use crate::weyl::{check_prime, WeylIndex};

/// States use `ρ(k) = tr(B_k^† ρ)`; observables use `O(k) = tr(B_k^† O) / tr(B_k^† B_k)`,
/// so `tr(O ρ) = Σ_k ρ(k) conj(O(k))` for Hermitian `O`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorKind {
    State,
    Observable,
}

#[derive(Debug, Clone)]
struct Block {
    support: Vec<usize>,
    amps: Vec<Complex64>,
    nonzero: Vec<u32>,
    table: Option<AliasTable>,
    l1: f64,
    linf: f64,
}

impl Block {
    fn new(support: Vec<usize>, amps: Vec<Complex64>) -> Self {
        let nonzero: Vec<u32> = (0..amps.len() as u32)
            .filter(|&i| amps[i as usize].norm() > 0.0)
            .collect();
        let weights: Vec<f64> = nonzero.iter().map(|&i| amps[i as usize].norm()).collect();
        Block {
            support,
            l1: weights.iter().sum(),
            linf: weights.iter().copied().fold(0.0, f64::max),
            table: AliasTable::new(&weights),
            nonzero,
            amps,
        }
    }
}

#[derive(Debug, Clone)]
enum Repr {
    /// Tensor product of blocks on disjoint supports; uncovered qudits carry
    /// the identity label only.
    Product {
        blocks: Vec<Block>,
        uncovered: Vec<usize>,
    },
    Sparse {
        entries: Vec<(Vec<u32>, Complex64)>,
        lookup: HashMap<Vec<u32>, usize>,
        table: Option<AliasTable>,
    },
}

/// Sparse amplitude map over basis labels (digits `a_i·d + b_i` per qudit).
#[derive(Debug, Clone)]
pub struct WeylVector {
    kind: VectorKind,
    basis: Basis,
    d: u32,
    n: usize,
    repr: Repr,
    l1: f64,
    linf: f64,
}

const CHOP: f64 = 1e-14;

fn chop(z: Complex64) -> Complex64 {
    if z.norm() < CHOP {
        Complex64::new(0.0, 0.0)
    } else {
        z
    }
}

fn local_amplitudes(kind: VectorKind, basis: Basis, d: u32, m: usize, x: &DenseOperator) -> Vec<Complex64> {
    let norm = basis.element_norm(d, m);
    WeylIndex::all(d, m)
        .map(|w| {
            let c = basis.coefficient(x, &w);
            chop(match kind {
                VectorKind::State => c * norm,
                VectorKind::Observable => c,
            })
        })
        .collect()
}

fn dim_to_qudits(dim: usize, d: u32) -> Option<usize> {
    let mut m = 0;
    let mut p = 1;
    while p < dim {
        p *= d as usize;
        m += 1;
    }
    (p == dim && m > 0).then_some(m)
}

impl WeylVector {
    fn from_blocks(kind: VectorKind, basis: Basis, d: u32, n: usize, blocks: Vec<Block>) -> Self {
        let l1 = blocks.iter().map(|b| b.l1).product();
        let linf = blocks.iter().map(|b| b.linf).product();
        let mut covered = vec![false; n];
        for b in &blocks {
            for &s in &b.support {
                covered[s] = true;
            }
        }
        let uncovered = (0..n).filter(|&i| !covered[i]).collect();
        WeylVector {
            kind,
            basis,
            d,
            n,
            repr: Repr::Product { blocks, uncovered },
            l1,
            linf,
        }
    }

    /// Arbitrary sparse vector from explicit amplitudes.
    pub fn from_entries(
        kind: VectorKind,
        basis: Basis,
        d: u32,
        n: usize,
        amps: impl IntoIterator<Item = (WeylIndex, Complex64)>,
    ) -> Result<Self> {
        check_prime(d)?;
        let mut merged: HashMap<Vec<u32>, Complex64> = HashMap::new();
        for (w, z) in amps {
            if w.d() != d || w.n() != n {
                return Err(Error::DimensionMismatch(format!("label {w} does not match (d, n) = ({d}, {n})")));
            }
            *merged.entry(w.digits()).or_default() += z;
        }
        let mut entries: Vec<(Vec<u32>, Complex64)> = merged
            .into_iter()
            .map(|(k, z)| (k, chop(z)))
            .filter(|(_, z)| z.norm() > 0.0)
            .collect();
        entries.sort_by(|x, y| x.0.cmp(&y.0));
        let lookup = entries.iter().enumerate().map(|(i, (k, _))| (k.clone(), i)).collect();
        let weights: Vec<f64> = entries.iter().map(|(_, z)| z.norm()).collect();
        Ok(WeylVector {
            kind,
            basis,
            d,
            n,
            l1: weights.iter().sum(),
            linf: weights.iter().copied().fold(0.0, f64::max),
            repr: Repr::Sparse {
                entries,
                lookup,
                table: AliasTable::new(&weights),
            },
        })
    }

    /// Expansion of a dense `n`-qudit operator.
    pub fn from_dense(kind: VectorKind, basis: Basis, d: u32, x: &DenseOperator) -> Result<Self> {
        check_prime(d)?;
        let n = dim_to_qudits(x.nrows(), d)
            .ok_or_else(|| Error::DimensionMismatch(format!("dimension {} is not a power of {d}", x.nrows())))?;
        let amps = local_amplitudes(kind, basis, d, n, x);
        let labels = WeylIndex::all(d, n);
        Self::from_entries(kind, basis, d, n, labels.zip(amps))
    }

    /// A single basis element with amplitude 1 (for observables: the operator
    /// `B_w` itself).
    pub fn basis_element(kind: VectorKind, basis: Basis, w: &WeylIndex) -> Self {
        Self::from_entries(kind, basis, w.d(), w.n(), [(w.clone(), Complex64::new(1.0, 0.0))])
            .expect("valid label")
    }

    pub fn kind(&self) -> VectorKind {
        self.kind
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l1_norm(&self) -> f64 {
        self.l1
    }

    pub fn linf_norm(&self) -> f64 {
        self.linf
    }

    /// Amplitude at per-qudit digits.
    pub fn amplitude_digits(&self, digits: &[u32]) -> Complex64 {
        match &self.repr {
            Repr::Product { blocks, uncovered } => {
                if uncovered.iter().any(|&i| digits[i] != 0) {
                    return Complex64::new(0.0, 0.0);
                }
                let q = (self.d * self.d) as usize;
                let mut acc = Complex64::new(1.0, 0.0);
                for b in blocks {
                    let code = b.support.iter().fold(0usize, |c, &s| c * q + digits[s] as usize);
                    acc *= b.amps[code];
                    if acc == Complex64::new(0.0, 0.0) {
                        return acc;
                    }
                }
                acc
            }
            Repr::Sparse { entries, lookup, .. } => lookup
                .get(digits)
                .map(|&i| entries[i].1)
                .unwrap_or_default(),
        }
    }

    pub fn amplitude(&self, w: &WeylIndex) -> Complex64 {
        self.amplitude_digits(&w.digits())
    }

    /// Draws digits with probability `|amp| / ℓ1`; returns them with the
    /// amplitude. `None` for the zero vector.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<(Vec<u32>, Complex64)> {
        match &self.repr {
            Repr::Product { blocks, .. } => {
                let q = (self.d * self.d) as usize;
                let mut digits = vec![0u32; self.n];
                let mut amp = Complex64::new(1.0, 0.0);
                for b in blocks {
                    let k = b.table.as_ref()?.sample(rng);
                    let mut code = b.nonzero[k] as usize;
                    amp *= b.amps[code];
                    for &s in b.support.iter().rev() {
                        digits[s] = (code % q) as u32;
                        code /= q;
                    }
                }
                Some((digits, amp))
            }
            Repr::Sparse { entries, table, .. } => {
                let k = table.as_ref()?.sample(rng);
                Some(entries[k].clone())
            }
        }
    }

    /// All nonzero amplitudes.
    pub fn entries(&self) -> Vec<(WeylIndex, Complex64)> {
        match &self.repr {
            Repr::Sparse { entries, .. } => entries
                .iter()
                .map(|(dg, z)| (WeylIndex::from_digits(self.d, dg), *z))
                .collect(),
            Repr::Product { blocks, .. } => {
                let q = (self.d * self.d) as usize;
                let mut acc: Vec<(Vec<u32>, Complex64)> = vec![(vec![0; self.n], Complex64::new(1.0, 0.0))];
                for b in blocks {
                    let mut next = Vec::with_capacity(acc.len() * b.nonzero.len());
                    for (dg, z) in &acc {
                        for &c in &b.nonzero {
                            let mut dg = dg.clone();
                            let mut code = c as usize;
                            for &s in b.support.iter().rev() {
                                dg[s] = (code % q) as u32;
                                code /= q;
                            }
                            next.push((dg, z * b.amps[c as usize]));
                        }
                    }
                    acc = next;
                }
                acc.into_iter()
                    .map(|(dg, z)| (WeylIndex::from_digits(self.d, &dg), z))
                    .collect()
            }
        }
    }

    /// Qudits carrying a non-identity label in some nonzero entry.
    pub fn active_qudits(&self) -> Vec<bool> {
        let mut act = vec![false; self.n];
        match &self.repr {
            Repr::Product { blocks, .. } => {
                for b in blocks {
                    if b.nonzero.iter().any(|&c| c != 0) {
                        for &s in &b.support {
                            act[s] = true;
                        }
                    }
                }
                if !self.basis.has_identity_element() {
                    for b in blocks {
                        for &s in &b.support {
                            act[s] = true;
                        }
                    }
                }
            }
            Repr::Sparse { entries, .. } => {
                for (dg, _) in entries {
                    for (i, &x) in dg.iter().enumerate() {
                        if x != 0 || !self.basis.has_identity_element() {
                            act[i] = true;
                        }
                    }
                }
            }
        }
        act
    }

    /// Dense operator represented by this vector.
    pub fn to_dense(&self) -> Result<DenseOperator> {
        let dim = crate::weyl::dense_dim(self.d, self.n)?;
        let norm = self.basis.element_norm(self.d, self.n);
        let mut x = DenseOperator::zeros(dim, dim);
        for (w, z) in self.entries() {
            let scale = match self.kind {
                VectorKind::State => z / norm,
                VectorKind::Observable => z,
            };
            x += self.basis.element(&w) * scale;
        }
        Ok(x)
    }

    /// `Σ_k ρ(k) conj(O(k))`, equal to `tr(O ρ)` for Hermitian `O`.
    pub fn pair(state: &WeylVector, observable: &WeylVector) -> Complex64 {
        state
            .entries()
            .into_iter()
            .map(|(w, z)| z * observable.amplitude(&w).conj())
            .sum()
    }

}

/// Product state from single-qudit density matrices.
pub fn state_to_weyl(factors: &[DenseOperator], basis: Basis) -> Result<WeylVector> {
    let d = factors
        .first()
        .map(|f| f.nrows() as u32)
        .ok_or_else(|| Error::InvalidArgument("no factors".into()))?;
    check_prime(d)?;
    let mut blocks = Vec::with_capacity(factors.len());
    for (i, f) in factors.iter().enumerate() {
        if f.nrows() != d as usize || f.ncols() != d as usize {
            return Err(Error::DimensionMismatch(format!("factor {i} is not {d}x{d}")));
        }
        dense::check_density(f, 1e-10).map_err(|e| Error::InvalidState(format!("factor {i}: {e}")))?;
        blocks.push(Block::new(vec![i], local_amplitudes(VectorKind::State, basis, d, 1, f)));
    }
    Ok(WeylVector::from_blocks(VectorKind::State, basis, d, factors.len(), blocks))
}

/// Product observable from Hermitian blocks on disjoint supports; qudits not
/// covered carry the identity.
pub fn observable_to_weyl(
    d: u32,
    n: usize,
    blocks: &[(Vec<usize>, DenseOperator)],
    basis: Basis,
) -> Result<WeylVector> {
    check_prime(d)?;
    let mut seen = vec![false; n];
    let mut out = Vec::with_capacity(blocks.len());
    for (i, (support, op)) in blocks.iter().enumerate() {
        let m = support.len();
        if m == 0 || op.nrows() != (d as usize).pow(m as u32) || !op.is_square() {
            return Err(Error::DimensionMismatch(format!("block {i} does not match its support")));
        }
        for &s in support {
            if s >= n || seen[s] {
                return Err(Error::InvalidArgument(format!("block {i}: qudit {s} out of range or repeated")));
            }
            seen[s] = true;
        }
        if !dense::is_hermitian(op, 1e-10) {
            return Err(Error::NotHermitian(i));
        }
        out.push(Block::new(
            support.clone(),
            local_amplitudes(VectorKind::Observable, basis, d, m, op),
        ));
    }
    if basis == Basis::Computational {
        // The computational basis has no identity label; cover the rest explicitly.
        for (s, _) in seen.iter().enumerate().filter(|(_, &v)| !v) {
            out.push(Block::new(
                vec![s],
                local_amplitudes(VectorKind::Observable, basis, d, 1, &dense::identity(d as usize)),
            ));
        }
    }
    Ok(WeylVector::from_blocks(VectorKind::Observable, basis, d, n, out))
}
