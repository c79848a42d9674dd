use num_complex::Complex64;
use rand::{Rng, RngCore};

use super::BenchmarkSource;
use crate::dense::{self, c64, DenseOperator};
use crate::error::{Error, Result};
use crate::noise::WeylDiagonalChannel;
use crate::weyl::{character, check_prime, root_of_unity, weyl_action_on_basis, WeylIndex};

/// Largest Hilbert-space dimension the dense device simulator accepts.
pub const WRB_MAX_DIM: usize = 64;

const CPTP_TOL: f64 = 1e-8;

/// Dense noisy device: each application of the target is `T ∘ U`, and each
/// Weyl gate is followed by `T_W` when present.
#[derive(Debug, Clone)]
pub struct DeviceModel {
    d: u32,
    n: usize,
    u: DenseOperator,
    t: DenseOperator,
    t_w: Option<WeylDiagonalChannel>,
    /// Noiseless gate applied after every `T ∘ U`.
    inserted: Option<DenseOperator>,
    /// `T ∘ U` (then the inserted gate), as a Liouville matrix.
    round: DenseOperator,
    t_w_liouville: Option<DenseOperator>,
}

impl DeviceModel {
    /// `u` is the target unitary and `t` the noise channel's Liouville matrix.
    pub fn new(d: u32, n: usize, u: DenseOperator, t: DenseOperator, t_w: Option<WeylDiagonalChannel>) -> Result<Self> {
        check_prime(d)?;
        let dim = (d as usize)
            .checked_pow(n as u32)
            .filter(|&x| x <= WRB_MAX_DIM)
            .ok_or_else(|| Error::SizeLimit(format!("dense device on {n} qudits at d = {d}")))?;
        if u.nrows() != dim || !u.is_square() {
            return Err(Error::DimensionMismatch(format!("target unitary must be {dim}x{dim}")));
        }
        if t.nrows() != dim * dim || !t.is_square() {
            return Err(Error::DimensionMismatch(format!("noise Liouville matrix must be {0}x{0}", dim * dim)));
        }
        if dense::max_abs_diff(&(u.adjoint() * &u), &dense::identity(dim)) > CPTP_TOL {
            return Err(Error::InvalidArgument("target is not unitary".into()));
        }
        if !dense::is_trace_preserving(&t, CPTP_TOL) || !dense::is_completely_positive(&t, CPTP_TOL) {
            return Err(Error::InvalidArgument("noise channel is not CPTP".into()));
        }
        let t_w_liouville = match &t_w {
            Some(ch) => {
                if ch.d() != d || ch.arity() != n {
                    return Err(Error::DimensionMismatch("Weyl-gate noise must act on all qudits".into()));
                }
                if !ch.cp_check() {
                    return Err(Error::InvalidArgument("Weyl-gate noise is not CP".into()));
                }
                Some(ch.to_liouville())
            }
            None => None,
        };
        let round = &t * dense::liouville_unitary(&u);
        Ok(DeviceModel {
            d,
            n,
            u,
            t,
            t_w,
            inserted: None,
            round,
            t_w_liouville,
        })
    }

    /// The same device with a noiseless gate `c` after every `T ∘ U`.
    pub fn with_inserted_gate(&self, c: DenseOperator) -> Result<Self> {
        if c.nrows() != self.u.nrows() || !c.is_square() {
            return Err(Error::DimensionMismatch("inserted gate shape".into()));
        }
        let mut out = self.clone();
        out.round = dense::liouville_unitary(&c) * &self.t * dense::liouville_unitary(&self.u);
        out.inserted = Some(c);
        Ok(out)
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn unitary(&self) -> &DenseOperator {
        &self.u
    }

    pub fn noise(&self) -> &DenseOperator {
        &self.t
    }

    pub fn inserted_gate(&self) -> Option<&DenseOperator> {
        self.inserted.as_ref()
    }

    pub fn weyl_noise(&self) -> Option<&WeylDiagonalChannel> {
        self.t_w.as_ref()
    }

    /// Liouville matrix of one round's channel.
    pub fn round_channel(&self) -> &DenseOperator {
        &self.round
    }

    /// `d^{-n} tr(W^† S(W))` for the round channel `S`: the decay base of a
    /// noiseless-Weyl experiment.
    pub fn twirled_eigenvalue(&self, w: &WeylIndex) -> Result<Complex64> {
        let wm = crate::weyl::materialize(w)?;
        let img = dense::apply_liouville(&self.round, &wm);
        crate::weyl::weyl_coefficient(&img, w)
    }
}

/// Settings of one benchmarking experiment.
#[derive(Debug, Clone)]
pub struct WRBConfig {
    pub label: WeylIndex,
    pub m: usize,
    pub rho: DenseOperator,
    pub e: DenseOperator,
    pub runs: usize,
}

impl WRBConfig {
    pub fn new(label: WeylIndex, m: usize, rho: DenseOperator, e: DenseOperator, runs: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("sequence length must be at least 1".into()));
        }
        let dim = rho.nrows();
        dense::check_density(&rho, 1e-8)?;
        if e.nrows() != dim || !e.is_square() {
            return Err(Error::DimensionMismatch("POVM element shape differs from the state".into()));
        }
        if !dense::is_hermitian(&e, 1e-10)
            || dense::min_eigenvalue(&e) < -1e-10
            || dense::min_eigenvalue(&(dense::identity(dim) - &e)) < -1e-10
        {
            return Err(Error::InvalidArgument("POVM element must satisfy 0 ≤ E ≤ 1".into()));
        }
        Ok(WRBConfig { label, m, rho, e, runs })
    }

    /// `d^{-n} tr(W^† ρ) tr(E W)`.
    pub fn spam_constant(&self) -> Result<Complex64> {
        let w = crate::weyl::materialize(&self.label)?;
        let dim = w.nrows() as f64;
        Ok(dense::trace(&(w.adjoint() * &self.rho)) * dense::trace(&(&self.e * &w)) / dim)
    }
}

/// Product eigenstate `ρ` of `W_label`, the projector `E` onto the eigenspace
/// containing it, and the SPAM constant `C = d^{-n} tr(W^† ρ) tr(E W)`.
///
/// Each factor `Z^a X^b` with `b ≠ 0` has an eigenvector built by the
/// recurrence `ψ_k = ν^{ak} ψ_{k-b} / ω`, with `ω = 1` except `ω = i` for the
/// qubit `Y`-type label where `(ZX)^2 = -1`. Then `C = 1/d` for non-identity
/// labels and `C = 1` for the identity.
pub fn choose_state_povm(label: &WeylIndex) -> Result<(DenseOperator, DenseOperator, Complex64)> {
    let d = label.d();
    let du = d as usize;
    let mut factors = Vec::with_capacity(label.n());
    let mut omega = c64(1.0, 0.0);
    for i in 0..label.n() {
        let (a, b) = (label.a()[i] as usize, label.b()[i] as usize);
        let mut psi = vec![c64(0.0, 0.0); du];
        if b == 0 {
            psi[0] = c64(1.0, 0.0);
        } else {
            let w = if d == 2 && a == 1 { c64(0.0, 1.0) } else { c64(1.0, 0.0) };
            omega *= w;
            psi[0] = c64(1.0, 0.0);
            let mut k = 0;
            for _ in 1..du {
                let next = (k + b) % du;
                psi[next] = root_of_unity((a * next) as i64, d) * psi[k] / w;
                k = next;
            }
            let s = 1.0 / (du as f64).sqrt();
            psi.iter_mut().for_each(|z| *z *= s);
        }
        let v = DenseOperator::from_column_slice(du, 1, &psi);
        factors.push(&v * v.adjoint());
    }
    let rho = dense::kron_all(&factors);
    let w = crate::weyl::materialize(label)?;
    let dim = w.nrows();
    let e = if label.is_identity() {
        dense::identity(dim)
    } else {
        let g = &w / omega;
        let mut acc = dense::identity(dim);
        let mut pow = dense::identity(dim);
        for _ in 1..du {
            pow = &pow * &g;
            acc += &pow;
        }
        acc / c64(d as f64, 0.0)
    };
    let c = dense::trace(&(w.adjoint() * &rho)) * dense::trace(&(&e * &w)) / dim as f64;
    Ok((rho, e, c))
}

/// Samples single runs of the protocol on a dense device.
pub struct DeviceSource {
    device: DeviceModel,
    label: WeylIndex,
    rho: DenseOperator,
    e: DenseOperator,
    c: Complex64,
    /// Per label code: image index and phase of each basis vector.
    weyl: Vec<(Vec<usize>, Vec<Complex64>)>,
}

impl DeviceSource {
    pub fn new(device: &DeviceModel, cfg: &WRBConfig) -> Result<Self> {
        if cfg.label.d() != device.d || cfg.label.n() != device.n || cfg.rho.nrows() != device.dim() {
            return Err(Error::DimensionMismatch("configuration does not match the device".into()));
        }
        let dim = device.dim();
        let weyl = WeylIndex::all(device.d, device.n)
            .map(|w| {
                (0..dim)
                    .map(|j| {
                        let (i, ph) = weyl_action_on_basis(&w, j);
                        (i, ph.value())
                    })
                    .unzip()
            })
            .collect();
        Ok(DeviceSource {
            device: device.clone(),
            label: cfg.label.clone(),
            rho: cfg.rho.clone(),
            e: cfg.e.clone(),
            c: cfg.spam_constant()?,
            weyl,
        })
    }

    pub fn device(&self) -> &DeviceModel {
        &self.device
    }

    /// `W ρ W^†` for the label with code `code`.
    fn conjugate(&self, code: usize, x: &DenseOperator) -> DenseOperator {
        let (perm, ph) = &self.weyl[code];
        let dim = x.nrows();
        let mut out = DenseOperator::zeros(dim, dim);
        for j in 0..dim {
            for i in 0..dim {
                out[(perm[i], perm[j])] = ph[i] * ph[j].conj() * x[(i, j)];
            }
        }
        out
    }

    fn weyl_gate(&self, code: usize, x: &DenseOperator) -> DenseOperator {
        let y = self.conjugate(code, x);
        match &self.device.t_w_liouville {
            Some(l) => dense::apply_liouville(l, &y),
            None => y,
        }
    }
}

fn code_neg(code: usize, q: usize, n: usize, d: usize) -> usize {
    // Per-qudit digit a·d + b ↦ (−a)·d + (−b).
    let mut out = 0;
    let mut scale = 1;
    let mut x = code;
    for _ in 0..n {
        let s = x % q;
        x /= q;
        let (a, b) = (s / d, s % d);
        out += (((d - a) % d) * d + (d - b) % d) * scale;
        scale *= q;
    }
    out
}

fn code_add(c1: usize, c2: usize, q: usize, n: usize, d: usize) -> usize {
    let (mut x, mut y) = (c1, c2);
    let mut out = 0;
    let mut scale = 1;
    for _ in 0..n {
        let (s, t) = (x % q, y % q);
        x /= q;
        y /= q;
        let a = (s / d + t / d) % d;
        let b = (s % d + t % d) % d;
        out += (a * d + b) * scale;
        scale *= q;
    }
    out
}

impl BenchmarkSource for DeviceSource {
    /// One run: initial Weyl `W_0`, `m` rounds of a uniformly random Weyl
    /// followed by the noisy target, then the inverse of the accumulated Weyl
    /// word. Without Weyl-gate noise the inverse is one collapsed gate; with
    /// it, `m` separate noisy inverse gates are applied, so the decay base
    /// becomes `μ μ_W²`. Outcome `E` returns `conj χ_label(W_0)`, otherwise 0.
    fn sample(&self, m: usize, rng: &mut dyn RngCore) -> Complex64 {
        let (d, n) = (self.device.d as usize, self.device.n);
        let q = d * d;
        let labels = self.weyl.len();
        let w0 = rng.random_range(0..labels);
        let mut x = self.weyl_gate(w0, &self.rho);
        let mut acc = 0usize;
        let mut word = Vec::with_capacity(if self.device.t_w.is_some() { m } else { 0 });
        for _ in 0..m {
            let w = rng.random_range(0..labels);
            x = self.weyl_gate(w, &x);
            x = dense::apply_liouville(&self.device.round, &x);
            if self.device.t_w.is_some() {
                word.push(w);
            } else {
                acc = code_add(acc, w, q, n, d);
            }
        }
        if self.device.t_w.is_some() {
            for &w in word.iter().rev() {
                x = self.weyl_gate(code_neg(w, q, n, d), &x);
            }
        } else {
            x = self.conjugate(code_neg(acc, q, n, d), &x);
        }
        let p = dense::trace(&(&self.e * &x)).re.clamp(0.0, 1.0);
        if rng.random::<f64>() < p {
            let arg = WeylIndex::from_code(self.device.d, n, w0);
            character(&self.label, &arg).expect("same shape").conj()
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    fn spam_constant(&self) -> Option<Complex64> {
        Some(self.c)
    }
}

/// One simulated run of the protocol.
pub fn run_wrb_once<R: Rng>(device: &DeviceModel, cfg: &WRBConfig, rng: &mut R) -> Result<Complex64> {
    let src = DeviceSource::new(device, cfg)?;
    Ok(src.sample(cfg.m, rng))
}
