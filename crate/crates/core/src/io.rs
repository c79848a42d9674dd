//! JSON file schemas for circuits, states, observables, devices, Lindblad
//! layers, fit inputs and ansatz angles, plus the decay CSV export.
//!
//! Matrices are nested arrays of `[re, im]` pairs, row major.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dense::{self, c64, DenseOperator};
use crate::error::{Error, Result};
use crate::noise::{
    dephasing, depolarizing, rotation_superop, CliffordGate, RotationGate, WeylDiagonalChannel,
};
use crate::pathsampler::LindbladLayer;
use crate::reps::{
    channel_to_superop, observable_to_weyl, state_to_weyl, Basis, Channel, CircuitDescription, LocalSuperOp,
    VectorKind, WeylVector, DEFAULT_ARITY_CAP,
};
use crate::weyl::{materialize, WeylIndex};
use crate::wrb::{BenchmarkRecord, DecayPoint, DeviceModel};

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_from_json(m: &MatrixJson) -> Result<DenseOperator> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    if rows == 0 || m.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse("matrix rows are empty or ragged".into()));
    }
    Ok(DenseOperator::from_fn(rows, cols, |r, c| c64(m[r][c][0], m[r][c][1])))
}

pub fn matrix_to_json(m: &DenseOperator) -> MatrixJson {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

/// Reads JSON, reporting the file and the offending field on failure.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut de = serde_json::Deserializer::from_reader(BufReader::new(file));
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        Error::Parse(format!("{}: field `{field}`: {}", path.display(), e.into_inner()))
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn parse_err(ctx: &str, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{ctx}: {msg}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Builtin,
    Kraus,
    Matrix,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Builtin name: `depolarizing`, `dephasing`, `clifford:<word>`,
    /// `rotation_y:<θ>` or `weyl_diagonal:<file>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Survival eigenvalue for depolarizing and dephasing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Dephased positions within the support (default: all).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operators: Option<Vec<MatrixJson>>,
    /// Column-stacking Liouville matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub liouville: Option<MatrixJson>,
}

/// One channel entry of a circuit or device file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub kind: LayerKind,
    pub support: Vec<usize>,
    #[serde(default)]
    pub params: ChannelParams,
}

impl ChannelSpec {
    pub fn builtin(name: &str, support: Vec<usize>, p: Option<f64>) -> Self {
        ChannelSpec {
            kind: LayerKind::Builtin,
            support,
            params: ChannelParams {
                name: Some(name.into()),
                p,
                ..Default::default()
            },
        }
    }
}

/// Eigenvalues in label-code order, or keyed by label string.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EigenvalueTable {
    List(Vec<[f64; 2]>),
    Map(std::collections::BTreeMap<String, [f64; 2]>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenvalueFile {
    pub d: u32,
    pub m: usize,
    pub eigenvalues: EigenvalueTable,
}

impl EigenvalueFile {
    pub fn to_channel(&self) -> Result<WeylDiagonalChannel> {
        let len = (self.d as usize).pow(2 * self.m as u32);
        let values = match &self.eigenvalues {
            EigenvalueTable::List(v) => v.iter().map(|z| c64(z[0], z[1])).collect(),
            EigenvalueTable::Map(map) => {
                let mut v = vec![c64(0.0, 0.0); len];
                v[0] = c64(1.0, 0.0);
                for (k, z) in map {
                    let w = WeylIndex::parse(self.d, k)?;
                    if w.n() != self.m {
                        return Err(Error::Parse(format!("label {k} is not on {} qudits", self.m)));
                    }
                    v[w.code()] = c64(z[0], z[1]);
                }
                v
            }
        };
        WeylDiagonalChannel::new(self.d, self.m, values)
    }
}

/// A channel entry after name resolution, on `support`.
#[derive(Debug, Clone)]
pub enum ResolvedChannel {
    Diagonal(WeylDiagonalChannel),
    Clifford(CliffordGate),
    Rotation(RotationGate),
    Kraus(Vec<DenseOperator>),
    Liouville(DenseOperator),
}

impl ResolvedChannel {
    pub fn resolve(spec: &ChannelSpec, d: u32, n: usize, base: &Path, ctx: &str) -> Result<Self> {
        let m = spec.support.len();
        if m == 0 {
            return Err(parse_err(ctx, "support is empty"));
        }
        let mut seen = vec![false; n];
        for &q in &spec.support {
            if q >= n || seen[q] {
                return Err(parse_err(ctx, format!("support qudit {q} out of range or repeated")));
            }
            seen[q] = true;
        }
        let local_dim = (d as usize).pow(m as u32);
        let p = &spec.params;
        let out = match spec.kind {
            LayerKind::Builtin => {
                let name = p.name.as_deref().ok_or_else(|| parse_err(ctx, "params.name is missing"))?;
                let rate = || p.p.ok_or_else(|| parse_err(ctx, "params.p is missing"));
                match name.split_once(':') {
                    None if name == "depolarizing" => ResolvedChannel::Diagonal(depolarizing(d, rate()?, m)?),
                    None if name == "dephasing" => {
                        let all: Vec<usize> = (0..m).collect();
                        let targets = p.targets.as_deref().unwrap_or(&all);
                        ResolvedChannel::Diagonal(dephasing(d, rate()?, m, targets)?)
                    }
                    Some(("clifford", word)) => ResolvedChannel::Clifford(CliffordGate::parse(d, m, word)?),
                    Some(("rotation_y", theta)) => {
                        let theta: f64 = theta
                            .trim()
                            .parse()
                            .map_err(|_| parse_err(ctx, format!("bad angle `{theta}`")))?;
                        if m != 1 {
                            return Err(parse_err(ctx, "rotation_y acts on one qubit"));
                        }
                        ResolvedChannel::Rotation(RotationGate::new(d, theta, 0)?)
                    }
                    Some(("weyl_diagonal", file)) => {
                        let f: EigenvalueFile = read_json(&base.join(file))?;
                        if f.d != d || f.m != m {
                            return Err(parse_err(ctx, "eigenvalue file does not match the support"));
                        }
                        ResolvedChannel::Diagonal(f.to_channel()?)
                    }
                    _ => return Err(parse_err(ctx, format!("unknown builtin `{name}`"))),
                }
            }
            LayerKind::Kraus => {
                let ops = p.operators.as_ref().ok_or_else(|| parse_err(ctx, "params.operators is missing"))?;
                let ops: Vec<DenseOperator> = ops.iter().map(matrix_from_json).collect::<Result<_>>()?;
                if ops.is_empty() || ops.iter().any(|k| k.nrows() != local_dim || k.ncols() != local_dim) {
                    return Err(parse_err(ctx, format!("Kraus operators must be {local_dim}x{local_dim}")));
                }
                ResolvedChannel::Kraus(ops)
            }
            LayerKind::Matrix => {
                let l = p.liouville.as_ref().ok_or_else(|| parse_err(ctx, "params.liouville is missing"))?;
                let l = matrix_from_json(l)?;
                if l.nrows() != local_dim * local_dim || !l.is_square() {
                    return Err(parse_err(ctx, format!("Liouville matrix must be {0}x{0}", local_dim * local_dim)));
                }
                ResolvedChannel::Liouville(l)
            }
        };
        Ok(out)
    }

    pub fn to_superop(&self, basis: Basis, d: u32) -> Result<LocalSuperOp> {
        match (self, basis) {
            (ResolvedChannel::Diagonal(c), Basis::Weyl) => Ok(c.to_superop()),
            (ResolvedChannel::Clifford(g), Basis::Weyl) => Ok(g.superop()),
            (ResolvedChannel::Rotation(g), _) => Ok(rotation_superop(g, basis)),
            _ => channel_to_superop(&Channel::Liouville(self.liouville()), basis, d, DEFAULT_ARITY_CAP),
        }
    }

    /// Liouville matrix on the channel's own support.
    pub fn liouville(&self) -> DenseOperator {
        match self {
            ResolvedChannel::Diagonal(c) => c.to_liouville(),
            ResolvedChannel::Clifford(g) => dense::liouville_unitary(&g.unitary()),
            ResolvedChannel::Rotation(g) => dense::liouville_unitary(&g.unitary()),
            ResolvedChannel::Kraus(k) => dense::liouville_from_kraus(k),
            ResolvedChannel::Liouville(l) => l.clone(),
        }
    }

    pub fn unitary(&self) -> Option<DenseOperator> {
        match self {
            ResolvedChannel::Clifford(g) => Some(g.unitary()),
            ResolvedChannel::Rotation(g) => Some(g.unitary()),
            ResolvedChannel::Kraus(k) if k.len() == 1 => Some(k[0].clone()),
            _ => None,
        }
    }

    /// The channel extended by the identity to all `n` qudits.
    pub fn full_liouville(&self, support: &[usize], d: u32, n: usize) -> Result<DenseOperator> {
        if support.iter().copied().eq(0..n) {
            return Ok(self.liouville());
        }
        let kraus = match self {
            ResolvedChannel::Diagonal(c) => {
                return Ok(extend_diagonal(c, support, n)?.to_liouville());
            }
            ResolvedChannel::Kraus(k) => k.clone(),
            other => vec![other.unitary().ok_or_else(|| {
                Error::InvalidArgument("Liouville entries must cover every qudit of a device".into())
            })?],
        };
        let big: Vec<DenseOperator> = kraus.iter().map(|k| dense::embed(k, support, d as usize, n)).collect();
        Ok(dense::liouville_from_kraus(&big))
    }
}

/// `λ(w) = λ_local(w|_support)` on `n` qudits.
pub fn extend_diagonal(c: &WeylDiagonalChannel, support: &[usize], n: usize) -> Result<WeylDiagonalChannel> {
    if support.iter().copied().eq(0..n) {
        return Ok(c.clone());
    }
    WeylDiagonalChannel::from_fn(c.d(), n, |w| c.eigenvalue(&w.restrict(support)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitFile {
    pub d: u32,
    pub n: usize,
    #[serde(default)]
    pub basis: Basis,
    pub layers: Vec<ChannelSpec>,
}

impl CircuitFile {
    /// `base` resolves relative eigenvalue-file paths.
    pub fn build(&self, base: &Path) -> Result<CircuitDescription> {
        let mut c = CircuitDescription::new(self.d, self.n, self.basis);
        for (i, spec) in self.layers.iter().enumerate() {
            let ctx = format!("layers[{i}]");
            let ch = ResolvedChannel::resolve(spec, self.d, self.n, base, &ctx)?;
            let label = spec.params.name.clone().unwrap_or_else(|| format!("{:?}", spec.kind).to_lowercase());
            c.push(Arc::new(ch.to_superop(self.basis, self.d)?), spec.support.clone(), label)?;
        }
        Ok(c)
    }
}

fn parent(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse(m) if !m.starts_with(&path.display().to_string()) => {
            Error::Parse(format!("{}: {m}", path.display()))
        }
        other => other,
    })
}

pub fn load_circuit(path: &Path) -> Result<CircuitDescription> {
    let f: CircuitFile = read_json(path)?;
    with_path(path, f.build(&parent(path)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StateFile {
    /// Single-qudit density matrices.
    Product { factors: Vec<MatrixJson> },
    /// The basis state `|digits⟩`.
    Basis { d: u32, digits: Vec<u32> },
    Dense { d: u32, matrix: MatrixJson },
}

impl StateFile {
    pub fn to_weyl(&self, basis: Basis) -> Result<WeylVector> {
        match self {
            StateFile::Product { factors } => {
                let f: Vec<DenseOperator> = factors.iter().map(matrix_from_json).collect::<Result<_>>()?;
                state_to_weyl(&f, basis)
            }
            StateFile::Basis { d, digits } => {
                let f: Vec<DenseOperator> = digits
                    .iter()
                    .map(|&x| {
                        if x >= *d {
                            return Err(Error::Parse(format!("digit {x} out of range for d = {d}")));
                        }
                        let mut m = DenseOperator::zeros(*d as usize, *d as usize);
                        m[(x as usize, x as usize)] = c64(1.0, 0.0);
                        Ok(m)
                    })
                    .collect::<Result<_>>()?;
                state_to_weyl(&f, basis)
            }
            StateFile::Dense { d, matrix } => {
                let m = matrix_from_json(matrix)?;
                dense::check_density(&m, 1e-10)?;
                WeylVector::from_dense(VectorKind::State, basis, *d, &m)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableBlock {
    pub support: Vec<usize>,
    pub matrix: MatrixJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeylTerm {
    pub label: String,
    pub coeff: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ObservableFile {
    /// Tensor product of Hermitian blocks on disjoint supports.
    Product { d: u32, n: usize, blocks: Vec<ObservableBlock> },
    /// `Σ coeff · W_label`.
    Weyl { d: u32, n: usize, terms: Vec<WeylTerm> },
    Dense { d: u32, matrix: MatrixJson },
}

impl ObservableFile {
    pub fn to_weyl(&self, basis: Basis) -> Result<WeylVector> {
        match self {
            ObservableFile::Product { d, n, blocks } => {
                let b: Vec<(Vec<usize>, DenseOperator)> = blocks
                    .iter()
                    .map(|b| Ok((b.support.clone(), matrix_from_json(&b.matrix)?)))
                    .collect::<Result<_>>()?;
                observable_to_weyl(*d, *n, &b, basis)
            }
            ObservableFile::Weyl { d, n, terms } => {
                let entries: Vec<(WeylIndex, Complex64)> = terms
                    .iter()
                    .map(|t| Ok((WeylIndex::parse(*d, &t.label)?, c64(t.coeff[0], t.coeff[1]))))
                    .collect::<Result<_>>()?;
                if basis == Basis::Weyl {
                    WeylVector::from_entries(VectorKind::Observable, basis, *d, *n, entries)
                } else {
                    let mut m = DenseOperator::zeros((*d as usize).pow(*n as u32), (*d as usize).pow(*n as u32));
                    for (w, z) in entries {
                        m += materialize(&w)? * z;
                    }
                    WeylVector::from_dense(VectorKind::Observable, basis, *d, &m)
                }
            }
            ObservableFile::Dense { d, matrix } => {
                let m = matrix_from_json(matrix)?;
                if !dense::is_hermitian(&m, 1e-10) {
                    return Err(Error::NotHermitian(0));
                }
                WeylVector::from_dense(VectorKind::Observable, basis, *d, &m)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceFile {
    pub d: u32,
    pub n: usize,
    /// Target gate; must resolve to a unitary.
    pub unitary: ChannelSpec,
    /// Gate-independent noise `T`.
    pub noise: ChannelSpec,
    /// Weyl-diagonal noise on the random Weyl gates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weyl_noise: Option<ChannelSpec>,
}

impl DeviceFile {
    pub fn build(&self, base: &Path) -> Result<DeviceModel> {
        let (d, n) = (self.d, self.n);
        let u = ResolvedChannel::resolve(&self.unitary, d, n, base, "unitary")?;
        let u_local = u
            .unitary()
            .ok_or_else(|| parse_err("unitary", "entry does not describe a unitary"))?;
        let u_full = dense::embed(&u_local, &self.unitary.support, d as usize, n);
        let t = ResolvedChannel::resolve(&self.noise, d, n, base, "noise")?;
        let t_full = t.full_liouville(&self.noise.support, d, n)?;
        let t_w = match &self.weyl_noise {
            None => None,
            Some(spec) => match ResolvedChannel::resolve(spec, d, n, base, "weyl_noise")? {
                ResolvedChannel::Diagonal(c) => Some(extend_diagonal(&c, &spec.support, n)?),
                _ => return Err(parse_err("weyl_noise", "must be a Weyl-diagonal builtin")),
            },
        };
        DeviceModel::new(d, n, u_full, t_full, t_w)
    }
}

pub fn load_device(path: &Path) -> Result<DeviceModel> {
    let f: DeviceFile = read_json(path)?;
    with_path(path, f.build(&parent(path)))
}

fn one() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Measurement {
    pub label: String,
    pub mu: [f64; 2],
    /// `d^{-n} tr(W† U(W))`; defaults to 1.
    #[serde(default = "one")]
    pub u_diag: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementsFile {
    pub d: u32,
    pub n: usize,
    pub measurements: Vec<Measurement>,
}

impl MeasurementsFile {
    /// `(label, μ̂)` pairs and unitary diagonals.
    pub fn resolve(&self) -> Result<(Vec<(WeylIndex, Complex64)>, Vec<Complex64>)> {
        let mut meas = Vec::with_capacity(self.measurements.len());
        let mut us = Vec::with_capacity(self.measurements.len());
        for m in &self.measurements {
            let w = WeylIndex::parse(self.d, &m.label)?;
            if w.n() != self.n {
                return Err(Error::Parse(format!("label {} is not on {} qudits", m.label, self.n)));
            }
            meas.push((w, c64(m.mu[0], m.mu[1])));
            us.push(c64(m.u_diag[0], m.u_diag[1]));
        }
        Ok((meas, us))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// `γ (Z ρ Z† − ρ)`.
    Dephasing { gamma: f64 },
    /// `−i[H, ρ] + Σ_k (L_k ρ L_k† − ½{L_k† L_k, ρ})`.
    Lindblad {
        #[serde(default)]
        hamiltonian: Option<MatrixJson>,
        #[serde(default)]
        jumps: Vec<MatrixJson>,
    },
    /// Column-stacking Liouville matrix of the generator.
    Matrix { liouville: MatrixJson },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LindbladSpec {
    pub support: Vec<usize>,
    pub t: f64,
    pub generator: GeneratorSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LindbladFile {
    pub d: u32,
    pub n: usize,
    pub layers: Vec<LindbladSpec>,
}

/// Column-stacking Liouville matrix of a Lindblad generator.
pub fn lindblad_liouville(h: Option<&DenseOperator>, jumps: &[DenseOperator], dim: usize) -> DenseOperator {
    let id = dense::identity(dim);
    let mut g = DenseOperator::zeros(dim * dim, dim * dim);
    let i = c64(0.0, 1.0);
    if let Some(h) = h {
        g -= (id.kronecker(h) - h.transpose().kronecker(&id)) * i;
    }
    for l in jumps {
        let ll = l.adjoint() * l;
        g += l.conjugate().kronecker(l);
        g -= (id.kronecker(&ll) + ll.transpose().kronecker(&id)) * c64(0.5, 0.0);
    }
    g
}

impl LindbladFile {
    pub fn build(&self) -> Result<Vec<LindbladLayer>> {
        let d = self.d;
        self.layers
            .iter()
            .enumerate()
            .map(|(k, spec)| {
                let ctx = format!("layers[{k}]");
                let m = spec.support.len();
                if m == 0 || spec.support.iter().any(|&q| q >= self.n) {
                    return Err(parse_err(&ctx, "support is empty or out of range"));
                }
                let dim = (d as usize).pow(m as u32);
                let g = match &spec.generator {
                    GeneratorSpec::Dephasing { gamma } => {
                        if !(*gamma >= 0.0) {
                            return Err(parse_err(&ctx, "gamma must be nonnegative"));
                        }
                        let z = materialize(&WeylIndex::new(d, vec![1; m], vec![0; m])?)?;
                        lindblad_liouville(None, &[z * c64(gamma.sqrt(), 0.0)], dim)
                    }
                    GeneratorSpec::Lindblad { hamiltonian, jumps } => {
                        let h = hamiltonian.as_ref().map(matrix_from_json).transpose()?;
                        let js: Vec<DenseOperator> = jumps.iter().map(matrix_from_json).collect::<Result<_>>()?;
                        if h.iter().chain(&js).any(|x| x.nrows() != dim || x.ncols() != dim) {
                            return Err(parse_err(&ctx, format!("operators must be {dim}x{dim}")));
                        }
                        lindblad_liouville(h.as_ref(), &js, dim)
                    }
                    GeneratorSpec::Matrix { liouville } => {
                        let l = matrix_from_json(liouville)?;
                        if l.nrows() != dim * dim || !l.is_square() {
                            return Err(parse_err(&ctx, format!("generator must be {0}x{0}", dim * dim)));
                        }
                        l
                    }
                };
                let op = channel_to_superop(&Channel::Liouville(g), Basis::Weyl, d, DEFAULT_ARITY_CAP)?;
                LindbladLayer::new(op, spec.support.clone(), spec.t)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaFile {
    Wrapped { theta: Vec<Vec<f64>> },
    Bare(Vec<Vec<f64>>),
}

impl ThetaFile {
    pub fn into_theta(self) -> Vec<Vec<f64>> {
        match self {
            ThetaFile::Wrapped { theta } | ThetaFile::Bare(theta) => theta,
        }
    }
}

pub const DECAY_CSV_HEADER: [&str; 7] = ["m", "re", "im", "q2", "stderr", "runs", "q2_stderr"];

/// One row per sequence length. Floats use the shortest representation that
/// parses back to the same value.
pub fn emit_decay_csv(record: &BenchmarkRecord, path: &Path) -> Result<()> {
    if record.points.is_empty() {
        return Err(Error::InvalidArgument("decay record has no points".into()));
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(DECAY_CSV_HEADER).map_err(csv_err)?;
    for p in &record.points {
        w.write_record([
            p.m.to_string(),
            p.q_hat.re.to_string(),
            p.q_hat.im.to_string(),
            p.q2.to_string(),
            p.q_hat_stderr.to_string(),
            p.runs.to_string(),
            p.q2_stderr.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_decay_csv(path: &Path, label: &str) -> Result<BenchmarkRecord> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header != DECAY_CSV_HEADER {
        return Err(Error::Parse(format!("{}: unexpected header {header:?}", path.display())));
    }
    let mut points = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let f = |k: usize| -> Result<f64> {
            row[k]
                .parse()
                .map_err(|_| Error::Parse(format!("{}: row {}: bad `{}`", path.display(), i + 1, DECAY_CSV_HEADER[k])))
        };
        let int = |k: usize| -> Result<u64> {
            row[k]
                .parse()
                .map_err(|_| Error::Parse(format!("{}: row {}: bad `{}`", path.display(), i + 1, DECAY_CSV_HEADER[k])))
        };
        points.push(DecayPoint {
            m: int(0)? as usize,
            q_hat: c64(f(1)?, f(2)?),
            q2: f(3)?,
            q_hat_stderr: f(4)?,
            runs: int(5)?,
            q2_stderr: f(6)?,
        });
    }
    Ok(BenchmarkRecord {
        label: label.into(),
        points,
    })
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_json_round_trip() {
        let m = DenseOperator::from_fn(2, 3, |r, c| c64(r as f64, c as f64 - 0.5));
        assert_eq!(matrix_from_json(&matrix_to_json(&m)).unwrap(), m);
        assert!(matrix_from_json(&vec![vec![[0.0, 0.0]], vec![]]).is_err());
    }

    #[test]
    fn dephasing_generator_matches_hand_form() {
        let f = LindbladFile {
            d: 2,
            n: 1,
            layers: vec![LindbladSpec {
                support: vec![0],
                t: 0.5,
                generator: GeneratorSpec::Dephasing { gamma: 0.5 },
            }],
        };
        let layers = f.build().unwrap();
        let z = materialize(&WeylIndex::parse(2, "1|0").unwrap()).unwrap();
        let want = (dense::liouville_from_kraus(&[z]) - dense::identity(4)) * c64(0.5, 0.0);
        assert!(dense::max_abs_diff(&layers[0].generator().to_liouville(), &want) < 1e-12);
    }
}
