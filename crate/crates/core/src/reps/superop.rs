use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rand::Rng;

use super::Basis;
use crate::alias::AliasTable;
use crate::dense::{self, DenseOperator};
use crate::error::{Error, Result};
use crate::weyl::{check_prime, WeylIndex};

pub const DEFAULT_ARITY_CAP: usize = 3;

/// Entries below this magnitude are stored as exact zeros.
const CHOP: f64 = 1e-14;

/// A linear map on `m` qudits given densely.
#[derive(Debug, Clone)]
pub enum Channel {
    Kraus(Vec<DenseOperator>),
    /// Column-stacking Liouville matrix.
    Liouville(DenseOperator),
}

impl Channel {
    pub fn liouville(&self) -> DenseOperator {
        match self {
            Channel::Kraus(k) => dense::liouville_from_kraus(k),
            Channel::Liouville(s) => s.clone(),
        }
    }

    /// Hilbert-space dimension of the input.
    pub fn dim(&self) -> usize {
        match self {
            Channel::Kraus(k) => k[0].ncols(),
            Channel::Liouville(s) => (s.ncols() as f64).sqrt().round() as usize,
        }
    }
}

#[derive(Debug, Clone)]
struct SparseColumn {
    rows: Vec<u32>,
    phases: Vec<Complex64>,
    table: Option<AliasTable>,
}

/// A channel's matrix in an operator basis over `m` local qudits, with column
/// ℓ1 norms and alias tables built at construction.
#[derive(Debug, Clone)]
pub struct LocalSuperOp {
    basis: Basis,
    d: u32,
    m: usize,
    dim: usize,
    /// Column-major, `dim × dim`.
    entries: Vec<Complex64>,
    column_l1: Vec<f64>,
    columns: Vec<SparseColumn>,
    identity_fixed: bool,
    warning: Option<String>,
    adjoint: OnceLock<Arc<LocalSuperOp>>,
}

impl LocalSuperOp {
    /// Builds from a dense matrix in the given basis; `entries[(r, c)]` is the
    /// coefficient of basis element `r` in the image of element `c`.
    pub fn from_matrix(basis: Basis, d: u32, m: usize, matrix: &DenseOperator) -> Result<Self> {
        check_prime(d)?;
        let dim = (d as usize).pow(2 * m as u32);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "superoperator is {}x{}, expected {dim}x{dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let entries: Vec<Complex64> = matrix
            .iter()
            .map(|&z| if z.norm() < CHOP { Complex64::new(0.0, 0.0) } else { z })
            .collect();
        let mut column_l1 = Vec::with_capacity(dim);
        let mut columns = Vec::with_capacity(dim);
        for c in 0..dim {
            let col = &entries[c * dim..(c + 1) * dim];
            let mut rows = Vec::new();
            let mut phases = Vec::new();
            let mut weights = Vec::new();
            for (r, z) in col.iter().enumerate() {
                let a = z.norm();
                if a > 0.0 {
                    rows.push(r as u32);
                    phases.push(z / a);
                    weights.push(a);
                }
            }
            column_l1.push(weights.iter().sum());
            columns.push(SparseColumn {
                rows,
                phases,
                table: AliasTable::new(&weights),
            });
        }
        let identity_fixed = basis.has_identity_element()
            && columns[0].rows == [0]
            && (entries[0] - 1.0).norm() < 1e-12;
        Ok(LocalSuperOp {
            basis,
            d,
            m,
            dim,
            entries,
            column_l1,
            columns,
            identity_fixed,
            warning: None,
            adjoint: OnceLock::new(),
        })
    }

    pub fn identity(basis: Basis, d: u32, m: usize) -> Result<Self> {
        let dim = (d as usize).pow(2 * m as u32);
        Self::from_matrix(basis, d, m, &DenseOperator::identity(dim, dim))
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    /// Number of qudits acted on.
    pub fn arity(&self) -> usize {
        self.m
    }

    /// Matrix size `d^{2m}`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[col * self.dim + row]
    }

    pub fn matrix(&self) -> DenseOperator {
        DenseOperator::from_column_slice(self.dim, self.dim, &self.entries)
    }

    pub fn column_l1(&self) -> &[f64] {
        &self.column_l1
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dim).map(|i| self.entry(i, i)).collect()
    }

    /// True when the identity label is a fixed point of this map's columns,
    /// so walks at the identity label may skip the layer.
    pub fn identity_fixed(&self) -> bool {
        self.identity_fixed
    }

    /// Set when the source map failed a CPTP check.
    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }

    pub(crate) fn with_warning(mut self, w: Option<String>) -> Self {
        self.warning = w;
        self
    }

    /// Conjugate transpose, cached.
    pub fn adjoint(&self) -> Arc<LocalSuperOp> {
        self.adjoint
            .get_or_init(|| {
                let m = self.matrix().adjoint();
                Arc::new(
                    LocalSuperOp::from_matrix(self.basis, self.d, self.m, &m)
                        .expect("same shape"),
                )
            })
            .clone()
    }

    /// Draws a row of column `col` with probability `|entry| / column_l1`,
    /// returning the row and the entry's phase.
    #[inline]
    pub fn sample_code<R: Rng + ?Sized>(&self, col: usize, rng: &mut R) -> Option<(usize, Complex64)> {
        let c = &self.columns[col];
        let t = c.table.as_ref()?;
        let k = t.sample(rng);
        Some((c.rows[k] as usize, c.phases[k]))
    }

    /// Dense reconstruction as a Liouville matrix.
    pub fn to_liouville(&self) -> DenseOperator {
        let hd = (self.d as usize).pow(self.m as u32);
        let labels: Vec<WeylIndex> = WeylIndex::all(self.d, self.m).collect();
        let vecs: Vec<DenseOperator> = labels
            .iter()
            .map(|w| dense::vec_op(&self.basis.element(w)))
            .collect();
        let norm = self.basis.element_norm(self.d, self.m);
        let mut s = DenseOperator::zeros(hd * hd, hd * hd);
        for c in 0..self.dim {
            let vc = vecs[c].adjoint() / Complex64::from(norm);
            let c_col = &self.columns[c];
            for (&r, _) in c_col.rows.iter().zip(&c_col.phases) {
                let e = self.entry(r as usize, c);
                s += (&vecs[r as usize] * &vc) * e;
            }
        }
        s
    }

    /// `self ∘ other` on the same qudits.
    pub fn compose(&self, other: &LocalSuperOp) -> Result<LocalSuperOp> {
        if self.d != other.d || self.m != other.m || self.basis != other.basis {
            return Err(Error::DimensionMismatch("compose: incompatible operators".into()));
        }
        LocalSuperOp::from_matrix(self.basis, self.d, self.m, &(self.matrix() * other.matrix()))
    }

    /// `self ⊗ other`, with `self` on the leading qudits.
    pub fn tensor(&self, other: &LocalSuperOp) -> Result<LocalSuperOp> {
        if self.d != other.d || self.basis != other.basis {
            return Err(Error::DimensionMismatch("tensor: incompatible operators".into()));
        }
        LocalSuperOp::from_matrix(
            self.basis,
            self.d,
            self.m + other.m,
            &self.matrix().kronecker(&other.matrix()),
        )
    }
}

/// Matrix of a channel on `m = log_d(dim)` qudits in `basis`.
pub fn channel_to_superop(channel: &Channel, basis: Basis, d: u32, cap: usize) -> Result<LocalSuperOp> {
    check_prime(d)?;
    let hd = channel.dim();
    let mut m = 0;
    let mut p = 1;
    while p < hd {
        p *= d as usize;
        m += 1;
    }
    if p != hd || m == 0 {
        return Err(Error::DimensionMismatch(format!("channel dimension {hd} is not a power of {d}")));
    }
    if m > cap {
        return Err(Error::SizeLimit(format!("channel acts on {m} qudits, cap is {cap}")));
    }
    let s = channel.liouville();
    let labels: Vec<WeylIndex> = WeylIndex::all(d, m).collect();
    let dim = labels.len();
    let mut mat = DenseOperator::zeros(dim, dim);
    for (c, wc) in labels.iter().enumerate() {
        let img = dense::apply_liouville(&s, &basis.element(wc));
        for (r, wr) in labels.iter().enumerate() {
            mat[(r, c)] = basis.coefficient(&img, wr);
        }
    }
    let mut warning = None;
    if !dense::is_trace_preserving(&s, 1e-8) || !dense::is_completely_positive(&s, 1e-8) {
        log::warn!("channel on {m} qudit(s) is not CPTP; sampling treats it as a linear map");
        warning = Some("not CPTP".to_string());
    }
    Ok(LocalSuperOp::from_matrix(basis, d, m, &mat)?.with_warning(warning))
}

/// Row index and phase drawn from column `col`.
pub fn column_sample<R: Rng + ?Sized>(
    op: &LocalSuperOp,
    col: &WeylIndex,
    rng: &mut R,
) -> Result<(WeylIndex, Complex64)> {
    if col.d() != op.d || col.n() != op.m {
        return Err(Error::DimensionMismatch("column label does not match the operator".into()));
    }
    let c = col.code();
    let (r, ph) = op.sample_code(c, rng).ok_or(Error::ZeroColumn(c))?;
    Ok((WeylIndex::from_code(op.d, op.m, r), ph))
}

/// Maximum column ℓ1 norm.
pub fn l1_to_l1_norm(op: &LocalSuperOp) -> f64 {
    op.column_l1.iter().copied().fold(0.0, f64::max)
}

pub fn adjoint_superop(op: &LocalSuperOp) -> LocalSuperOp {
    (*op.adjoint()).clone()
}
