//! Weyl randomized benchmarking: a dense device simulator and the estimators
//! for decay bases, their phases and off-diagonal entries.

mod device;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::noise::solve_clifford_mapping;
use crate::pathsampler::{collect_samples, derive_seed};
use crate::weyl::WeylIndex;

pub use device::{choose_state_povm, run_wrb_once, DeviceModel, DeviceSource, WRBConfig, WRB_MAX_DIM};

/// Anything producing single-run outputs `y` with `E[y] = C μ^m`.
pub trait BenchmarkSource: Sync {
    fn sample(&self, m: usize, rng: &mut dyn RngCore) -> Complex64;

    /// The SPAM constant `C`, when known.
    fn spam_constant(&self) -> Option<Complex64> {
        None
    }
}

/// Outputs `q/|q|` with probability `|q|` and 0 otherwise, `q = C μ^m`.
#[derive(Debug, Clone, Copy)]
pub struct SyntheticDecay {
    pub mu: Complex64,
    pub c: Complex64,
}

impl BenchmarkSource for SyntheticDecay {
    fn sample(&self, m: usize, rng: &mut dyn RngCore) -> Complex64 {
        let q = self.c * self.mu.powu(m as u32);
        let a = q.norm().min(1.0);
        if a > 0.0 && rng.random::<f64>() < a {
            q / q.norm()
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    fn spam_constant(&self) -> Option<Complex64> {
        Some(self.c)
    }
}

/// Statistics at one sequence length. `q2` is the mean of
/// `Re(s_k conj(s_{k+l}))` over `l = runs / 2` disjoint pairs.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DecayPoint {
    pub m: usize,
    pub runs: u64,
    pub q_hat: Complex64,
    pub q_hat_stderr: f64,
    pub q2: f64,
    pub q2_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BenchmarkRecord {
    pub label: String,
    pub points: Vec<DecayPoint>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MuEstimate {
    pub label: String,
    pub abs: f64,
    /// Radians in `(-π, π]`.
    pub phase: f64,
    /// `|C|` used to set precisions.
    pub c: f64,
    pub m_max: usize,
    pub samples: u64,
    pub record: BenchmarkRecord,
}

impl MuEstimate {
    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.abs, self.phase)
    }
}

fn mean_and_stderr(xs: impl ExactSizeIterator<Item = Complex64> + Clone) -> (Complex64, f64) {
    let n = xs.len() as f64;
    let mean: Complex64 = xs.clone().sum::<Complex64>() / n;
    let var = if n > 1.0 {
        xs.map(|x| (x - mean).norm_sqr()).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, (var / n).sqrt())
}

/// Runs `2·pairs` independent sequences of length `m`.
pub fn measure_point(src: &dyn BenchmarkSource, m: usize, pairs: u64, seed: u64, workers: usize) -> Result<DecayPoint> {
    if pairs == 0 {
        return Err(Error::InvalidArgument("need at least one pair".into()));
    }
    let ys = collect_samples(2 * pairs, seed, workers, |r| src.sample(m, r))?;
    let (q_hat, q_hat_stderr) = mean_and_stderr(ys.iter().copied());
    let l = pairs as usize;
    let xs = (0..l).map(|k| Complex64::new((ys[k] * ys[k + l].conj()).re, 0.0));
    let (q2, q2_stderr) = mean_and_stderr(xs);
    Ok(DecayPoint {
        m,
        runs: 2 * pairs,
        q_hat,
        q_hat_stderr,
        q2: q2.re,
        q2_stderr,
    })
}

/// Unbiased estimate of `|q(m)|²` from `l` pairs of runs.
pub fn estimate_q2(src: &dyn BenchmarkSource, m: usize, l: u64, seed: u64, workers: usize) -> Result<f64> {
    Ok(measure_point(src, m, l, seed, workers)?.q2)
}

/// Pairs needed so the mean of `l` variables in `[-1, 1]` is within `t` with
/// probability `1 - δ`: `ceil(2 ln(2/δ) / t²)`.
pub fn hoeffding_pairs(t: f64, delta: f64) -> Result<u64> {
    if !(t > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("need t > 0 and 0 < δ < 1, got t = {t}, δ = {delta}")));
    }
    Ok((2.0 * (2.0 / delta).ln() / (t * t)).ceil() as u64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub max_iterations: usize,
    /// Upper bound `u` on `|μ|²`; each `|q(m_i)|²` is estimated to additive
    /// error `ε C² u²`.
    pub mu_sq_bound: f64,
    /// Overrides the source's `|C|`.
    pub spam: Option<f64>,
    /// Cap on pairs per sequence length.
    pub max_pairs: u64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            epsilon: 0.1,
            delta: 0.1,
            max_iterations: 12,
            mu_sq_bound: 1.0,
            spam: None,
            max_pairs: 1 << 24,
            seed: 0,
            workers: 0,
        }
    }
}

const TAG_ADAPTIVE: u64 = 1;
const TAG_PHASE: u64 = 2;
const TAG_FIXED: u64 = 3;

fn spam_abs(src: &dyn BenchmarkSource, spam: Option<f64>) -> Result<f64> {
    let c = spam
        .or_else(|| src.spam_constant().map(|c| c.norm()))
        .ok_or_else(|| Error::InvalidArgument("SPAM constant unknown; set it explicitly".into()))?;
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("SPAM constant {c} must be positive")));
    }
    Ok(c)
}

/// Doubling schedule `m_i = 2^i + 1`, stopping at the first `m_i` with
/// `|q̂(m_i)|² ≤ |q̂(1)|² / 3`. Returns `(|q̂(m_i)|² / |q̂(1)|²)^{1/(2(m_i - 1))}`,
/// since `|q(m)|² = |C|² |μ|^{2m}`.
pub fn adaptive_abs_mu(src: &dyn BenchmarkSource, label: &str, cfg: &AdaptiveConfig) -> Result<MuEstimate> {
    if !(cfg.epsilon > 0.0) || !(cfg.mu_sq_bound > 0.0) {
        return Err(Error::InvalidArgument("ε and the |μ|² bound must be positive".into()));
    }
    let c = spam_abs(src, cfg.spam)?;
    let t = cfg.epsilon * c * c * cfg.mu_sq_bound * cfg.mu_sq_bound;
    let pairs = hoeffding_pairs(t, cfg.delta / (cfg.max_iterations + 1) as f64)?;
    if pairs > cfg.max_pairs {
        return Err(Error::SizeLimit(format!("{pairs} pairs per sequence length, cap is {}", cfg.max_pairs)));
    }
    let point = |m: usize| measure_point(src, m, pairs, derive_seed(cfg.seed, TAG_ADAPTIVE, m as u64), cfg.workers);
    let first = point(1)?;
    if first.q2 <= 0.0 {
        return Err(Error::InvalidState(format!("no signal at m = 1 (|q|² estimate {:.3e})", first.q2)));
    }
    let mut points = vec![first.clone()];
    let mut stop = None;
    for i in 1..=cfg.max_iterations {
        let m = (1usize << i) + 1;
        let p = point(m)?;
        log::debug!("m = {m}: |q|² = {:.6} (m = 1: {:.6})", p.q2, first.q2);
        let done = p.q2 <= first.q2 / 3.0;
        points.push(p.clone());
        if done {
            stop = Some(p);
            break;
        }
    }
    let last = stop.ok_or(Error::MaxIterations(cfg.max_iterations))?;
    let ratio = last.q2.max(0.0) / first.q2;
    let abs = ratio.powf(1.0 / (2.0 * (last.m - 1) as f64)).min(1.0);
    if cfg.epsilon > c * c * abs * abs / 200.0 {
        log::warn!(
            "ε = {} exceeds C²|μ|²/200 = {:.3e}; the multiplicative guarantee may not hold",
            cfg.epsilon,
            c * c * abs * abs / 200.0
        );
    }
    let samples = points.iter().map(|p| p.runs).sum();
    Ok(MuEstimate {
        label: label.to_string(),
        abs,
        phase: 0.0,
        c,
        m_max: last.m,
        samples,
        record: BenchmarkRecord {
            label: label.to_string(),
            points,
        },
    })
}

fn wrap(theta: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t - 2.0 * PI
    } else {
        t
    }
}

/// Unweighted least-squares line `y = a + b x`, returning `(a, b)`.
fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    (my - b * mx, b)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhaseEstimate {
    /// Per-round phase `θ` of `μ`, in `(-π, π]`.
    pub theta: f64,
    /// Fitted phase of `C`.
    pub intercept: f64,
    pub points: Vec<DecayPoint>,
}

/// Phase of `μ` from the angles `arg q̂(m) = arg C + mθ (mod 2π)`. Angles are
/// unwrapped in increasing `m`, each toward the line through the previous two
/// (slope 0 before that), so consecutive lengths must satisfy `|θ Δm| < π`.
pub fn phase_from_points(points: &[DecayPoint]) -> Result<(f64, f64)> {
    let mut pts: Vec<&DecayPoint> = points.iter().collect();
    pts.sort_by_key(|p| p.m);
    if pts.len() < 2 || pts.windows(2).any(|w| w[0].m == w[1].m) {
        return Err(Error::InvalidArgument("need at least two distinct sequence lengths".into()));
    }
    let ms: Vec<f64> = pts.iter().map(|p| p.m as f64).collect();
    let mut ang: Vec<f64> = Vec::with_capacity(pts.len());
    for (j, p) in pts.iter().enumerate() {
        // atan2 resolves the quadrant from the sign of the real part Y_m.
        let raw = p.q_hat.im.atan2(p.q_hat.re);
        if j == 0 {
            ang.push(raw);
            continue;
        }
        let slope = if j >= 2 { (ang[j - 1] - ang[j - 2]) / (ms[j - 1] - ms[j - 2]) } else { 0.0 };
        let pred = ang[j - 1] + slope * (ms[j] - ms[j - 1]);
        let k = ((pred - raw) / (2.0 * PI)).round();
        ang.push(raw + 2.0 * PI * k);
    }
    let (a, b) = line_fit(&ms, &ang);
    Ok((wrap(b), wrap(a)))
}

/// Measures `q̂(m)` for each `m` with `runs` sequences and fits the phase.
/// Refuses lengths where `|q̂(m)|` falls below `floor`, since the angle error
/// grows like `|μ|^{-m}`.
pub fn estimate_phase(
    src: &dyn BenchmarkSource,
    m_list: &[usize],
    runs: u64,
    floor: f64,
    seed: u64,
    workers: usize,
) -> Result<PhaseEstimate> {
    let pairs = runs.div_ceil(2).max(1);
    let mut points = Vec::with_capacity(m_list.len());
    for &m in m_list {
        let p = measure_point(src, m, pairs, derive_seed(seed, TAG_PHASE, m as u64), workers)?;
        if p.q_hat.norm() < floor {
            return Err(Error::MagnitudeFloor {
                m,
                magnitude: p.q_hat.norm(),
                floor,
            });
        }
        points.push(p);
    }
    let (theta, intercept) = phase_from_points(&points)?;
    Ok(PhaseEstimate { theta, intercept, points })
}

/// For a channel known to have real eigenvalue `±|λ|` times a unitary phase
/// `θ'`, picks `θ'` or `θ' + π` by proximity to the fitted phase. Returns the
/// phase and the sign of `λ`.
pub fn resolve_symmetric_phase(theta_fit: f64, theta_prime: f64) -> (f64, f64) {
    let d0 = wrap(theta_fit - theta_prime).abs();
    let d1 = wrap(theta_fit - theta_prime - PI).abs();
    if d0 <= d1 {
        (wrap(theta_prime), 1.0)
    } else {
        (wrap(theta_prime + PI), -1.0)
    }
}

/// Weighted log-linear fit of `|q̂(m)| = |C| |μ|^m` with weights
/// `(|q̂| / stderr)²`. Returns `(|μ|, |C|)`.
pub fn fit_decay(points: &[DecayPoint]) -> Result<(f64, f64)> {
    let usable: Vec<&DecayPoint> = points.iter().filter(|p| p.q_hat.norm() > 0.0).collect();
    if usable.len() < 2 || usable.iter().all(|p| p.m == usable[0].m) {
        return Err(Error::InvalidArgument("need two sequence lengths with nonzero signal".into()));
    }
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in &usable {
        let a = p.q_hat.norm();
        let w = if p.q_hat_stderr > 0.0 { (a / p.q_hat_stderr).powi(2) } else { 1e12 };
        let (x, y) = (p.m as f64, a.ln());
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let b = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
    let a = (sy - b * sx) / sw;
    Ok((b.exp().min(1.0), a.exp()))
}

/// Non-adaptive mode: fixed sequence lengths, exponential fit for `|μ|` and
/// the phase fit for its argument.
pub fn fixed_schedule_mu(
    src: &dyn BenchmarkSource,
    label: &str,
    m_list: &[usize],
    runs: u64,
    seed: u64,
    workers: usize,
) -> Result<MuEstimate> {
    let pairs = runs.div_ceil(2).max(1);
    let points = m_list
        .iter()
        .map(|&m| measure_point(src, m, pairs, derive_seed(seed, TAG_FIXED, m as u64), workers))
        .collect::<Result<Vec<_>>>()?;
    let (abs, c) = fit_decay(&points)?;
    let (phase, _) = phase_from_points(&points)?;
    Ok(MuEstimate {
        label: label.to_string(),
        abs,
        phase,
        c,
        m_max: m_list.iter().copied().max().unwrap_or(0),
        samples: points.iter().map(|p| p.runs).sum(),
        record: BenchmarkRecord {
            label: label.to_string(),
            points,
        },
    })
}

/// Phase-estimation settings used by [`estimate_mu`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseConfig {
    /// Sequences per length.
    pub runs: u64,
    /// Smallest `|q̂(m)|` accepted.
    pub floor: f64,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        PhaseConfig { runs: 20_000, floor: 0.05 }
    }
}

/// Lengths `1, 2, 3, 5, 9, …` up to `m_max` whose predicted signal
/// `|C| |μ|^m` stays at least twice the floor.
fn phase_schedule(abs: f64, c: f64, m_max: usize, floor: f64) -> Vec<usize> {
    let mut out = vec![1, 2];
    let mut m = 3;
    while m <= m_max.max(3) && c * abs.powi(m as i32) >= 2.0 * floor {
        out.push(m);
        m = 2 * m - 1;
    }
    out
}

/// Complex decay base `μ` at `label` on a dense device: adaptive `|μ|`, then
/// the phase.
pub fn estimate_mu(device: &DeviceModel, label: &WeylIndex, acfg: &AdaptiveConfig, pcfg: &PhaseConfig) -> Result<MuEstimate> {
    let (rho, e, _) = choose_state_povm(label)?;
    let cfg = WRBConfig::new(label.clone(), 1, rho, e, 0)?;
    let src = DeviceSource::new(device, &cfg)?;
    let mut est = adaptive_abs_mu(&src, &label.to_string(), acfg)?;
    let ms = phase_schedule(est.abs, est.c, est.m_max, pcfg.floor);
    let ph = estimate_phase(&src, &ms, pcfg.runs, pcfg.floor, acfg.seed, acfg.workers)?;
    est.phase = ph.theta;
    est.samples += ph.points.iter().map(|p| p.runs).sum::<u64>();
    Ok(est)
}

/// Off-diagonal entry `d^{-n} tr(W_{w2}^† (T∘U)(W_{w1}))`. A noiseless
/// Clifford `G` with `G W_{w2} G^† = e^{iφ} W_{w1}` is inserted after every
/// noisy round, making the wanted entry times `e^{iφ}` the diagonal decay
/// base at `w1`.
pub fn offdiagonal_mu(
    device: &DeviceModel,
    w1: &WeylIndex,
    w2: &WeylIndex,
    acfg: &AdaptiveConfig,
    pcfg: &PhaseConfig,
) -> Result<MuEstimate> {
    for w in [w1, w2] {
        if w.is_identity() {
            return Err(Error::IdentityLabel(w.to_string()));
        }
    }
    if w1 == w2 {
        return estimate_mu(device, w1, acfg, pcfg);
    }
    let g = solve_clifford_mapping(w2, w1)?;
    let (ph, img) = g.action(w2)?;
    debug_assert_eq!(&img, w1);
    let dev = device.with_inserted_gate(g.unitary())?;
    let mut est = estimate_mu(&dev, w1, acfg, pcfg)?;
    est.phase = wrap(est.phase - ph.arg());
    est.label = format!("{w1}->{w2}");
    est.record.label = est.label.clone();
    Ok(est)
}

/// Removes Weyl-gate noise: the observed base is `μ μ_W²`.
pub fn correct_for_noisy_weyls(mu_raw: &MuEstimate, mu_w: Complex64) -> Result<MuEstimate> {
    if mu_w.norm() < 1e-12 {
        return Err(Error::InvalidArgument("Weyl-gate noise eigenvalue is zero".into()));
    }
    let mut out = mu_raw.clone();
    out.abs = (mu_raw.abs / mu_w.norm_sqr()).min(1.0);
    out.phase = wrap(mu_raw.phase - 2.0 * mu_w.arg());
    Ok(out)
}

/// `λ = μ / u`, where `u` is the target's diagonal entry at the label. The
/// error of `|λ|` is that of `|μ|` scaled by `|u|^{-1}`.
pub fn mu_to_noise_eigenvalue(mu: &MuEstimate, u_diag: Complex64) -> Result<Complex64> {
    if u_diag.norm() < 1e-12 {
        return Err(Error::ZeroDiagonal(format!(
            "target has zero diagonal at {}; use offdiagonal_mu",
            mu.label
        )));
    }
    Ok(mu.value() / u_diag)
}
