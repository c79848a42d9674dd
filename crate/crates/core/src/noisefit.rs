//! Hypergraph-local Weyl noise and its recovery from benchmarking data.
//!
//! A channel is local with respect to a hypergraph when its Weyl eigenvalue
//! at `w` is `Σ_e f_e(w|_e)`. When hyperedges overlap the tables `f_e` are
//! not unique: any function of the shared qudits can move between edges.
//! Fitting therefore happens in a canonical gauge by default. Every subset `S`
//! of some hyperedge carries a term `φ_S` that is nonzero only on labels that
//! are non-identity at every qudit of `S`, and the eigenvalue is
//! `λ(w) = Σ_{S ⊆ supp w} φ_S(w|_S)`. These terms are uniquely determined by
//! the eigenvalues, so the canonical design matrix has full column rank once
//! enough labels are measured.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dense::c64;
use crate::error::{Error, Result};
use crate::noise::WeylDiagonalChannel;
use crate::weyl::{check_prime, weyl_conjugate, WeylIndex};

const NORMALIZATION_TOL: f64 = 1e-9;
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "HypergraphFile", into = "HypergraphFile")]
pub struct Hypergraph {
    n: usize,
    edges: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct HypergraphFile {
    n: usize,
    edges: Vec<Vec<usize>>,
}

impl TryFrom<HypergraphFile> for Hypergraph {
    type Error = Error;
    fn try_from(f: HypergraphFile) -> Result<Self> {
        Hypergraph::new(f.n, f.edges)
    }
}

impl From<Hypergraph> for HypergraphFile {
    fn from(g: Hypergraph) -> Self {
        HypergraphFile { n: g.n, edges: g.edges }
    }
}

impl Hypergraph {
    /// Vertices inside an edge are sorted; edge order is kept.
    pub fn new(n: usize, edges: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(edges.len());
        for mut e in edges {
            e.sort_unstable();
            e.dedup();
            if e.is_empty() {
                return Err(Error::InvalidArgument("empty hyperedge".into()));
            }
            if let Some(&v) = e.iter().find(|&&v| v >= n) {
                return Err(Error::InvalidArgument(format!("vertex {v} outside [0, {n})")));
            }
            if !seen.insert(e.clone()) {
                return Err(Error::InvalidArgument(format!("duplicate hyperedge {e:?}")));
            }
            out.push(e);
        }
        Ok(Hypergraph { n, edges: out })
    }

    /// Edges `{i, i+1}` for `i < n − 1`.
    pub fn path(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|i| vec![i - 1, i]).collect())
    }

    pub fn circle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!("a circle needs 3 vertices, got {n}")));
        }
        Self::new(n, (0..n).map(|i| vec![i, (i + 1) % n]).collect())
    }

    /// All `k`-subsets of the vertices.
    pub fn complete(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidArgument(format!("edge size {k} for {n} vertices")));
        }
        Self::new(n, k_subsets(n, k))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    /// Every subset of every hyperedge, the empty set included, ordered by
    /// size and then lexicographically.
    pub fn down_closure(&self) -> Vec<Vec<usize>> {
        let mut set = BTreeSet::new();
        set.insert(Vec::new());
        for e in &self.edges {
            for mask in 1u64..(1 << e.len()) {
                set.insert(
                    e.iter()
                        .enumerate()
                        .filter(|(i, _)| mask >> i & 1 == 1)
                        .map(|(_, &v)| v)
                        .collect::<Vec<_>>(),
                );
            }
        }
        let mut v: Vec<_> = set.into_iter().collect();
        v.sort_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.cmp(y)));
        v
    }

    /// Index of the first hyperedge containing `s`.
    fn owner(&self, s: &[usize]) -> usize {
        self.edges
            .iter()
            .position(|e| s.iter().all(|v| e.contains(v)))
            .expect("subset of the down closure")
    }
}

fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            rec(v + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// `Σ_e d^{2|e|}`, the size of the raw `f_e` tables.
pub fn parameter_count(g: &Hypergraph, d: u32) -> usize {
    g.edges.iter().map(|e| (d as usize).pow(2 * e.len() as u32)).sum()
}

/// Number of parameters fixed by the eigenvalues: `Σ_S (d² − 1)^{|S|}` over
/// the down closure.
pub fn identifiable_count(g: &Hypergraph, d: u32) -> usize {
    let q = (d as usize).pow(2) - 1;
    g.down_closure().iter().map(|s| q.pow(s.len() as u32)).sum()
}

/// Label on `n` qudits equal to `v` on `qudits` and identity elsewhere.
fn embed_label(v: &WeylIndex, qudits: &[usize], n: usize) -> WeylIndex {
    let mut a = vec![0; n];
    let mut b = vec![0; n];
    for (i, &q) in qudits.iter().enumerate() {
        a[q] = v.a()[i];
        b[q] = v.b()[i];
    }
    WeylIndex::new(v.d(), a, b).expect("digits in range")
}

/// Labels on `k` qudits that are non-identity at every position, in code order.
fn full_support_labels(d: u32, k: usize) -> Vec<WeylIndex> {
    WeylIndex::all(d, k).filter(|w| w.support().len() == k).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalNoiseModel {
    d: u32,
    graph: Hypergraph,
    /// `tables[e][code]` with the code of the label restricted to edge `e`.
    tables: Vec<Vec<Complex64>>,
}

impl LocalNoiseModel {
    pub fn new(d: u32, graph: Hypergraph, tables: Vec<Vec<Complex64>>) -> Result<Self> {
        check_prime(d)?;
        if tables.len() != graph.edges.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} tables for {} hyperedges",
                tables.len(),
                graph.edges.len()
            )));
        }
        for (e, t) in graph.edges.iter().zip(&tables) {
            let want = (d as usize).pow(2 * e.len() as u32);
            if t.len() != want {
                return Err(Error::DimensionMismatch(format!(
                    "edge {e:?} table has {} entries, expected {want}",
                    t.len()
                )));
            }
        }
        let total: Complex64 = tables.iter().map(|t| t[0]).sum();
        if graph.edges.is_empty() || (total - 1.0).norm() > NORMALIZATION_TOL {
            return Err(Error::InvalidArgument(format!(
                "identity coefficients sum to {total}, expected 1"
            )));
        }
        Ok(LocalNoiseModel { d, graph, tables })
    }

    /// `f(edge, restricted label)` for every edge and restricted label.
    pub fn from_fn(
        d: u32,
        graph: Hypergraph,
        f: impl Fn(usize, &WeylIndex) -> Complex64,
    ) -> Result<Self> {
        check_prime(d)?;
        let tables = graph
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| WeylIndex::all(d, e.len()).map(|v| f(i, &v)).collect())
            .collect();
        Self::new(d, graph, tables)
    }

    /// Convex combination of Weyl conjugations, each acting inside one edge.
    /// `mixtures[e]` lists `(probability, label on e)`; all probabilities
    /// together sum to one.
    pub fn from_weyl_mixture(
        d: u32,
        graph: Hypergraph,
        mixtures: &[Vec<(f64, WeylIndex)>],
    ) -> Result<Self> {
        if mixtures.len() != graph.edges.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} mixtures for {} hyperedges",
                mixtures.len(),
                graph.edges.len()
            )));
        }
        if mixtures.iter().flatten().any(|(p, _)| *p < 0.0) {
            return Err(Error::InvalidArgument("negative mixture probability".into()));
        }
        Self::from_fn(d, graph, |e, v| {
            mixtures[e]
                .iter()
                .map(|(p, u)| *p * weyl_conjugate(u, v).expect("edge-sized label").value())
                .sum()
        })
    }

    /// Random Weyl mixture with weight `1/|E|` per edge, of which a fraction
    /// up to `strength` goes to non-identity conjugations.
    pub fn random<R: Rng + ?Sized>(d: u32, graph: Hypergraph, strength: f64, rng: &mut R) -> Result<Self> {
        if !(0.0..=1.0).contains(&strength) {
            return Err(Error::InvalidArgument(format!("strength {strength} outside [0, 1]")));
        }
        let share = 1.0 / graph.edges.len().max(1) as f64;
        let mixtures: Vec<Vec<(f64, WeylIndex)>> = graph
            .edges
            .iter()
            .map(|e| {
                let labels: Vec<WeylIndex> = WeylIndex::all(d, e.len()).collect();
                let raw: Vec<f64> = labels[1..].iter().map(|_| rng.random::<f64>()).collect();
                let total: f64 = raw.iter().sum();
                let err = strength * rng.random::<f64>();
                let mut out = vec![(share * (1.0 - err), labels[0].clone())];
                out.extend(
                    labels[1..]
                        .iter()
                        .zip(&raw)
                        .map(|(l, r)| (share * err * r / total, l.clone())),
                );
                out
            })
            .collect();
        Self::from_weyl_mixture(d, graph, &mixtures)
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn graph(&self) -> &Hypergraph {
        &self.graph
    }

    pub fn tables(&self) -> &[Vec<Complex64>] {
        &self.tables
    }

    /// `f_e` at a label already restricted to edge `e`.
    pub fn coefficient(&self, e: usize, restricted: &WeylIndex) -> Complex64 {
        self.tables[e][restricted.code()]
    }

    /// Raw parameters flattened in edge order.
    pub fn parameters(&self) -> Vec<Complex64> {
        self.tables.iter().flatten().copied().collect()
    }

    pub fn induced_eigenvalue(&self, label: &WeylIndex) -> Result<Complex64> {
        if label.d() != self.d || label.n() != self.graph.n {
            return Err(Error::DimensionMismatch(format!(
                "label {label} on (d, n) = ({}, {}), model has ({}, {})",
                label.d(),
                label.n(),
                self.d,
                self.graph.n
            )));
        }
        Ok(self
            .graph
            .edges
            .iter()
            .zip(&self.tables)
            .map(|(e, t)| t[label.restrict(e).code()])
            .sum())
    }

    pub fn to_channel(&self) -> Result<WeylDiagonalChannel> {
        let n = self.graph.n;
        WeylDiagonalChannel::new(
            self.d,
            n,
            WeylIndex::all(self.d, n)
                .map(|w| self.induced_eigenvalue(&w))
                .collect::<Result<_>>()?,
        )
    }

    /// Canonical-gauge terms `φ_S(v)` in the column order of
    /// [`canonical_columns`], by Möbius inversion of the eigenvalues.
    pub fn canonical_parameters(&self) -> Vec<Complex64> {
        let n = self.graph.n;
        canonical_columns(&self.graph, self.d)
            .iter()
            .map(|col| {
                let k = col.qudits.len();
                (0u64..(1 << k))
                    .map(|mask| {
                        let keep: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
                        let sub = col.label.restrict(&keep);
                        let qs: Vec<usize> = keep.iter().map(|&i| col.qudits[i]).collect();
                        let sign = if (k - keep.len()) % 2 == 0 { 1.0 } else { -1.0 };
                        sign * self.induced_eigenvalue(&embed_label(&sub, &qs, n)).expect("sized")
                    })
                    .sum()
            })
            .collect()
    }

    /// Same eigenvalues, with each canonical term stored on the first edge
    /// that contains its subset.
    pub fn canonical(&self) -> LocalNoiseModel {
        from_canonical(self.d, &self.graph, &self.canonical_parameters())
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            d: self.d,
            n: self.graph.n,
            edges: self
                .graph
                .edges
                .iter()
                .zip(&self.tables)
                .map(|(e, t)| EdgeTable {
                    edge: e.clone(),
                    f: WeylIndex::all(self.d, e.len())
                        .zip(t)
                        .map(|(w, z)| (w.to_string(), [z.re, z.im]))
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_file(f: &ModelFile) -> Result<Self> {
        let graph = Hypergraph::new(f.n, f.edges.iter().map(|e| e.edge.clone()).collect())?;
        let mut tables = Vec::with_capacity(f.edges.len());
        for t in &f.edges {
            let mut edge = t.edge.clone();
            edge.sort_unstable();
            if edge != t.edge {
                return Err(Error::Parse(format!("edge {:?} is not sorted", t.edge)));
            }
            let mut table = vec![c64(0.0, 0.0); (f.d as usize).pow(2 * edge.len() as u32)];
            for (key, z) in &t.f {
                let w = WeylIndex::parse(f.d, key)?;
                if w.n() != edge.len() {
                    return Err(Error::Parse(format!("label {key} does not fit edge {edge:?}")));
                }
                table[w.code()] = c64(z[0], z[1]);
            }
            tables.push(table);
        }
        Self::new(f.d, graph, tables)
    }
}

/// Serialized model: one table per edge keyed by restricted label strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub d: u32,
    pub n: usize,
    pub edges: Vec<EdgeTable>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeTable {
    pub edge: Vec<usize>,
    pub f: BTreeMap<String, [f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Gauge {
    #[default]
    Canonical,
    /// One column per `f_e` entry. Rank deficient whenever edges overlap.
    Raw,
}

/// A fit parameter: a term on `qudits` at the restricted `label`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FitColumn {
    pub qudits: Vec<usize>,
    pub label: WeylIndex,
}

impl std::fmt::Display for FitColumn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let qs: Vec<String> = self.qudits.iter().map(|q| q.to_string()).collect();
        write!(f, "{{{}}}:{}", qs.join(","), self.label)
    }
}

pub fn canonical_columns(g: &Hypergraph, d: u32) -> Vec<FitColumn> {
    g.down_closure()
        .into_iter()
        .flat_map(|s| {
            full_support_labels(d, s.len())
                .into_iter()
                .map(move |label| FitColumn { qudits: s.clone(), label })
        })
        .collect()
}

pub fn raw_columns(g: &Hypergraph, d: u32) -> Vec<FitColumn> {
    g.edges
        .iter()
        .flat_map(|e| WeylIndex::all(d, e.len()).map(move |label| FitColumn { qudits: e.clone(), label }))
        .collect()
}

fn from_canonical(d: u32, g: &Hypergraph, phi: &[Complex64]) -> LocalNoiseModel {
    let mut tables: Vec<Vec<Complex64>> = g
        .edges
        .iter()
        .map(|e| vec![c64(0.0, 0.0); (d as usize).pow(2 * e.len() as u32)])
        .collect();
    for (col, &x) in canonical_columns(g, d).iter().zip(phi) {
        let owner = g.owner(&col.qudits);
        let e = &g.edges[owner];
        let pos: Vec<usize> = col
            .qudits
            .iter()
            .map(|q| e.iter().position(|v| v == q).expect("owner contains subset"))
            .collect();
        // Every label on the edge that agrees with `label` on the subset's
        // positions picks the term up.
        for v in WeylIndex::all(d, e.len()) {
            if v.restrict(&pos) == col.label {
                tables[owner][v.code()] += x;
            }
        }
    }
    LocalNoiseModel {
        d,
        graph: g.clone(),
        tables,
    }
}

#[derive(Debug, Clone)]
pub struct FitProblem {
    d: u32,
    graph: Hypergraph,
    gauge: Gauge,
    columns: Vec<FitColumn>,
    labels: Vec<WeylIndex>,
    u_diags: Vec<Complex64>,
    a: DMatrix<Complex64>,
    observations: DVector<Complex64>,
}

impl FitProblem {
    pub fn design_matrix(&self) -> &DMatrix<Complex64> {
        &self.a
    }

    pub fn observations(&self) -> &DVector<Complex64> {
        &self.observations
    }

    pub fn columns(&self) -> &[FitColumn] {
        &self.columns
    }

    pub fn labels(&self) -> &[WeylIndex] {
        &self.labels
    }

    pub fn u_diags(&self) -> &[Complex64] {
        &self.u_diags
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    pub fn graph(&self) -> &Hypergraph {
        &self.graph
    }
}

/// One row per measurement, `u(w) · Σ_cols [col hits w] · x_col = μ̂(w)`,
/// with `u(w) = d^{-n} tr(W† U(W))`. The identity row `Σ_e f_e(0) = 1` is
/// added when the identity label is not among the measurements.
pub fn build_fit(
    graph: &Hypergraph,
    d: u32,
    measurements: &[(WeylIndex, Complex64)],
    u_diags: &[Complex64],
    gauge: Gauge,
) -> Result<FitProblem> {
    check_prime(d)?;
    if measurements.len() != u_diags.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} measurements, {} unitary diagonals",
            measurements.len(),
            u_diags.len()
        )));
    }
    let n = graph.n;
    let mut labels = Vec::with_capacity(measurements.len() + 1);
    let mut obs = Vec::with_capacity(measurements.len() + 1);
    let mut us = Vec::with_capacity(measurements.len() + 1);
    if !measurements.iter().any(|(w, _)| w.is_identity()) {
        labels.push(WeylIndex::identity(d, n));
        obs.push(c64(1.0, 0.0));
        us.push(c64(1.0, 0.0));
    }
    for ((w, mu), &u) in measurements.iter().zip(u_diags) {
        if w.d() != d || w.n() != n {
            return Err(Error::DimensionMismatch(format!("label {w} does not match (d, n) = ({d}, {n})")));
        }
        if u.norm() < 1e-12 {
            return Err(Error::ZeroDiagonal(w.to_string()));
        }
        labels.push(w.clone());
        obs.push(*mu);
        us.push(u);
    }
    let columns = match gauge {
        Gauge::Canonical => canonical_columns(graph, d),
        Gauge::Raw => raw_columns(graph, d),
    };
    if labels.len() < columns.len() {
        log::warn!(
            "{} rows for {} parameters; the fit cannot be fully determined",
            labels.len(),
            columns.len()
        );
    }
    let a = DMatrix::from_fn(labels.len(), columns.len(), |r, c| {
        let col = &columns[c];
        let hit = labels[r].restrict(&col.qudits) == col.label;
        if hit {
            us[r]
        } else {
            c64(0.0, 0.0)
        }
    });
    Ok(FitProblem {
        d,
        graph: graph.clone(),
        gauge,
        columns,
        labels,
        u_diags: us,
        a,
        observations: DVector::from_vec(obs),
    })
}

#[derive(Debug, Clone)]
pub struct FitResult {
    /// Solution in the problem's column order.
    pub parameters: Vec<Complex64>,
    /// `‖A f̂ − μ̂‖₂`.
    pub residual: f64,
    pub model: LocalNoiseModel,
}

struct Decomposition {
    rank: usize,
    pinv: DMatrix<Complex64>,
    null_space: Vec<Vec<Complex64>>,
}

fn decompose(a: &DMatrix<Complex64>) -> Decomposition {
    let (rows, cols) = a.shape();
    // Zero padding makes the SVD return a full set of right singular vectors.
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let padded_rows = padded.nrows();
    let svd = padded.svd(true, true);
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    let s = &svd.singular_values;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let tol = RANK_TOL * smax.max(1.0) * (rows.max(cols) as f64);
    let mut pinv = DMatrix::<Complex64>::zeros(cols, padded_rows);
    let mut rank = 0;
    let mut null_space = Vec::new();
    for (k, &sk) in s.iter().enumerate() {
        let v_row = v_t.row(k);
        if sk > tol {
            rank += 1;
            let vk = v_row.adjoint();
            let uk = u.column(k);
            pinv += (vk * uk.adjoint()) * c64(1.0 / sk, 0.0);
        } else {
            null_space.push(v_row.iter().map(|z| z.conj()).collect());
        }
    }
    Decomposition {
        rank,
        pinv: pinv.columns(0, rows).into_owned(),
        null_space,
    }
}

fn full_rank(p: &FitProblem) -> Result<Decomposition> {
    let dec = decompose(&p.a);
    let cols = p.a.ncols();
    if dec.rank < cols {
        return Err(Error::RankDeficient {
            rank: dec.rank,
            cols,
            null_space: dec.null_space,
        });
    }
    Ok(dec)
}

/// Least squares through the pseudo-inverse of `A`.
pub fn solve_fit(p: &FitProblem) -> Result<FitResult> {
    let dec = full_rank(p)?;
    let x = &dec.pinv * &p.observations;
    let residual = (&p.a * &x - &p.observations).norm();
    let parameters: Vec<Complex64> = x.iter().copied().collect();
    let model = match p.gauge {
        Gauge::Canonical => from_canonical(p.d, &p.graph, &parameters),
        Gauge::Raw => {
            let mut tables = Vec::with_capacity(p.graph.edges.len());
            let mut off = 0;
            for e in &p.graph.edges {
                let len = (p.d as usize).pow(2 * e.len() as u32);
                tables.push(parameters[off..off + len].to_vec());
                off += len;
            }
            LocalNoiseModel {
                d: p.d,
                graph: p.graph.clone(),
                tables,
            }
        }
    };
    Ok(FitResult {
        parameters,
        residual,
        model,
    })
}

/// Two norms of `A⁺ = (A†A)^{-1}A†`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PinvNorms {
    /// Largest absolute column sum, the quantity the stability bound uses.
    pub column_sum: f64,
    /// Largest absolute row sum, the induced ∞→∞ operator norm.
    pub row_sum: f64,
}

pub fn pinv_norms(p: &FitProblem) -> Result<PinvNorms> {
    let dec = full_rank(p)?;
    let m = dec.pinv.map(|z| z.norm());
    let column_sum = m.column_iter().map(|c| c.sum()).fold(0.0, f64::max);
    let row_sum = m.row_iter().map(|r| r.sum()).fold(0.0, f64::max);
    Ok(PinvNorms { column_sum, row_sum })
}

/// `ε · |1 − mu_inf|² · ‖A⁺‖` with the column-sum norm. The row-sum
/// variant, which is the one that actually bounds `‖A⁺ x‖_∞`, is logged.
pub fn stability_bound(p: &FitProblem, epsilon: f64, mu_inf: f64) -> Result<f64> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} must be nonnegative")));
    }
    let norms = pinv_norms(p)?;
    let scale = epsilon * (1.0 - mu_inf).abs().powi(2);
    log::debug!(
        "stability: column-sum {:.4e}, row-sum {:.4e}, bounds {:.4e} / {:.4e}",
        norms.column_sum,
        norms.row_sum,
        scale * norms.column_sum,
        scale * norms.row_sum
    );
    Ok(scale * norms.column_sum)
}

/// Per hyperedge, every non-identity label supported inside it, without
/// repeats, in edge order.
pub fn default_schedule(g: &Hypergraph, d: u32) -> Vec<WeylIndex> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for e in &g.edges {
        for v in WeylIndex::all(d, e.len()).skip(1) {
            let w = embed_label(&v, e, g.n);
            if seen.insert(w.code()) {
                out.push(w);
            }
        }
    }
    out
}

/// Largest eigenvalue modulus over non-identity labels.
pub fn max_nonidentity_modulus(values: &[(WeylIndex, Complex64)]) -> f64 {
    values
        .iter()
        .filter(|(w, _)| !w.is_identity())
        .map(|(_, z)| z.norm())
        .fold(0.0, f64::max)
}
