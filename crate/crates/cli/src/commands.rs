use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use weylsim::io::{self, LindbladFile, MeasurementsFile, ObservableFile, StateFile, ThetaFile};
use weylsim::noisefit::{self, Gauge, Hypergraph};
use weylsim::pathsampler::{self, EstimateOptions, Walk, WalkOptions};
use weylsim::reps::{circuit_norm_bound, l1_to_l1_norm, Picture};
use weylsim::vqe::{self, AnsatzParams, EnergyOptions, EntanglerPairing, MaxCutProblem};
use weylsim::weyl::{materialize, weyl_coefficient, WeylIndex};
use weylsim::wrb::{self, AdaptiveConfig, PhaseConfig};
use weylsim::{Error, Result};

use crate::Globals;

/// Parses a flag value with the same spelling the config file uses.
fn serde_enum<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(Value::String(s.into())).map_err(|e| e.to_string())
}

fn default_eps() -> f64 {
    0.05
}

fn default_delta() -> f64 {
    0.05
}

fn default_max_samples() -> u64 {
    EstimateOptions::default().max_samples
}

fn walk_options(layerwise: bool) -> WalkOptions {
    if layerwise {
        WalkOptions::layerwise()
    } else {
        WalkOptions::default()
    }
}

fn load_vectors(state: &Path, observable: &Path, basis: weylsim::reps::Basis) -> Result<(weylsim::reps::WeylVector, weylsim::reps::WeylVector)> {
    let s: StateFile = io::read_json(state)?;
    let o: ObservableFile = io::read_json(observable)?;
    Ok((s.to_weyl(basis)?, o.to_weyl(basis)?))
}

fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    Ok(serde_json::to_value(x)?)
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Circuit JSON.
    #[arg(long)]
    circuit: Option<PathBuf>,
    /// Initial state JSON.
    #[arg(long)]
    state: Option<PathBuf>,
    /// Observable JSON.
    #[arg(long)]
    observable: Option<PathBuf>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_parser = serde_enum::<Picture>)]
    picture: Option<Picture>,
    /// Fixed sample count instead of the planned one.
    #[arg(long)]
    samples: Option<u64>,
    /// Refuse plans needing more samples than this.
    #[arg(long)]
    max_samples: Option<u64>,
    /// Walk layer by layer without fusing or light-cone pruning.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    layerwise: Option<bool>,
}

#[derive(Debug, Deserialize)]
pub struct SimulateConfig {
    circuit: PathBuf,
    state: PathBuf,
    observable: PathBuf,
    #[serde(default = "default_eps")]
    eps: f64,
    #[serde(default = "default_delta")]
    delta: f64,
    #[serde(default)]
    picture: Picture,
    #[serde(default)]
    samples: Option<u64>,
    #[serde(default = "default_max_samples")]
    max_samples: u64,
    #[serde(default)]
    layerwise: bool,
}

pub fn simulate(cfg: &SimulateConfig, g: &Globals) -> Result<(Value, u64)> {
    let circuit = io::load_circuit(&cfg.circuit)?;
    let (rho, e) = load_vectors(&cfg.state, &cfg.observable, circuit.basis())?;
    let opts = EstimateOptions {
        picture: cfg.picture,
        seed: g.seed,
        workers: g.workers,
        walk: walk_options(cfg.layerwise),
        samples: cfg.samples,
        max_samples: cfg.max_samples,
    };
    let est = pathsampler::estimate(&circuit, &rho, &e, cfg.eps, cfg.delta, &opts)?;
    Ok((to_value(&est)?, est.stats.count))
}

#[derive(Debug, Args, Serialize)]
pub struct LindbladArgs {
    /// Lindblad layers JSON.
    #[arg(long)]
    layers: Option<PathBuf>,
    #[arg(long)]
    state: Option<PathBuf>,
    #[arg(long)]
    observable: Option<PathBuf>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    samples: Option<u64>,
}

#[derive(Debug, Deserialize)]
pub struct LindbladConfig {
    layers: PathBuf,
    state: PathBuf,
    observable: PathBuf,
    #[serde(default = "default_eps")]
    eps: f64,
    #[serde(default)]
    samples: Option<u64>,
}

pub fn lindblad(cfg: &LindbladConfig, g: &Globals) -> Result<(Value, u64)> {
    let file: LindbladFile = io::read_json(&cfg.layers)?;
    let layers = file.build()?;
    let (rho, e) = load_vectors(&cfg.state, &cfg.observable, weylsim::reps::Basis::Weyl)?;
    let est = pathsampler::estimate_lindblad(&layers, &rho, &e, cfg.eps, g.seed, g.workers, cfg.samples)?;
    let scales: Vec<f64> = layers.iter().map(|l| l.scale()).collect();
    let mut v = to_value(&est)?;
    v["layer_scales"] = json!(scales);
    Ok((v, est.stats.count))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum WrbMode {
    /// Adaptive |μ| and phase at one label.
    #[default]
    Diag,
    /// Off-diagonal entry between two labels.
    Offdiag,
    /// Phase fit over a fixed list of lengths.
    Phase,
}

#[derive(Debug, Args, Serialize)]
pub struct WrbArgs {
    /// Device JSON.
    #[arg(long)]
    device: Option<PathBuf>,
    /// Weyl label such as `10|01`.
    #[arg(long)]
    label: Option<String>,
    /// Second label for `--mode offdiag`.
    #[arg(long)]
    label2: Option<String>,
    #[arg(long, value_enum)]
    mode: Option<WrbMode>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Sequence lengths for `--mode phase`, comma separated.
    #[arg(long, value_delimiter = ',')]
    m_list: Option<Vec<usize>>,
    /// Sequences per length in the phase fit.
    #[arg(long)]
    runs: Option<u64>,
    /// Smallest |q̂(m)| accepted by the phase fit.
    #[arg(long)]
    floor: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Known |C|, when the state and POVM are not the defaults.
    #[arg(long)]
    spam: Option<f64>,
    /// Also write the decay record as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
pub struct WrbConfig {
    device: PathBuf,
    label: String,
    #[serde(default)]
    label2: Option<String>,
    #[serde(default)]
    mode: WrbMode,
    #[serde(default)]
    eps: Option<f64>,
    #[serde(default)]
    delta: Option<f64>,
    #[serde(default)]
    m_list: Option<Vec<usize>>,
    #[serde(default)]
    runs: Option<u64>,
    #[serde(default)]
    floor: Option<f64>,
    #[serde(default)]
    max_iterations: Option<usize>,
    #[serde(default)]
    spam: Option<f64>,
    #[serde(default)]
    csv: Option<PathBuf>,
}

/// `d^{-n} tr(W† U W U†)`.
fn unitary_diagonal(u: &weylsim::dense::DenseOperator, w: &WeylIndex) -> Result<Complex64> {
    let m = materialize(w)?;
    weyl_coefficient(&(u * m * u.adjoint()), w)
}

pub fn wrb(cfg: &WrbConfig, g: &Globals) -> Result<(Value, u64)> {
    let device = io::load_device(&cfg.device)?;
    let w = WeylIndex::parse(device.d(), &cfg.label)?;
    if w.n() != device.n() {
        return Err(Error::Parse(format!("label {} is not on {} qudits", cfg.label, device.n())));
    }
    let base = AdaptiveConfig::default();
    let acfg = AdaptiveConfig {
        epsilon: cfg.eps.unwrap_or(base.epsilon),
        delta: cfg.delta.unwrap_or(base.delta),
        max_iterations: cfg.max_iterations.unwrap_or(base.max_iterations),
        spam: cfg.spam,
        seed: g.seed,
        workers: g.workers,
        ..base
    };
    let pbase = PhaseConfig::default();
    let pcfg = PhaseConfig {
        runs: cfg.runs.unwrap_or(pbase.runs),
        floor: cfg.floor.unwrap_or(pbase.floor),
    };
    let (value, samples, record) = match cfg.mode {
        WrbMode::Diag | WrbMode::Offdiag => {
            let est = if cfg.mode == WrbMode::Diag {
                wrb::estimate_mu(&device, &w, &acfg, &pcfg)?
            } else {
                let l2 = cfg
                    .label2
                    .as_deref()
                    .ok_or_else(|| Error::Parse("mode offdiag needs `label2`".into()))?;
                wrb::offdiagonal_mu(&device, &w, &WeylIndex::parse(device.d(), l2)?, &acfg, &pcfg)?
            };
            let mut v = to_value(&est)?;
            v["mu"] = to_value(&est.value())?;
            if cfg.mode == WrbMode::Diag {
                let u = unitary_diagonal(device.unitary(), &w)?;
                v["u_diag"] = to_value(&u)?;
                v["noise_eigenvalue"] = match wrb::mu_to_noise_eigenvalue(&est, u) {
                    Ok(l) => to_value(&l)?,
                    Err(_) => Value::Null,
                };
            }
            (v, est.samples, est.record)
        }
        WrbMode::Phase => {
            let ms = cfg
                .m_list
                .clone()
                .ok_or_else(|| Error::Parse("mode phase needs `m_list`".into()))?;
            let (rho, e, _) = weylsim::wrb::choose_state_povm(&w)?;
            let wcfg = weylsim::wrb::WRBConfig::new(w.clone(), 1, rho, e, 0)?;
            let src = weylsim::wrb::DeviceSource::new(&device, &wcfg)?;
            let est = wrb::estimate_phase(&src, &ms, pcfg.runs, pcfg.floor, g.seed, g.workers)?;
            let samples = est.points.iter().map(|p| p.runs).sum();
            let record = wrb::BenchmarkRecord {
                label: w.to_string(),
                points: est.points.clone(),
            };
            (to_value(&est)?, samples, record)
        }
    };
    if let Some(path) = &cfg.csv {
        io::emit_decay_csv(&record, path)?;
    }
    Ok((value, samples))
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    /// Hypergraph JSON `{"n": …, "edges": [[…], …]}`.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Measured decay bases.
    #[arg(long)]
    measurements: Option<PathBuf>,
    #[arg(long, value_parser = serde_enum::<Gauge>)]
    gauge: Option<Gauge>,
    /// Accuracy of the measured bases, for the stability bound.
    #[arg(long)]
    eps: Option<f64>,
    /// Override for max |μ| over non-identity labels.
    #[arg(long)]
    mu_inf: Option<f64>,
}

#[derive(Debug, Deserialize)]
pub struct FitConfig {
    graph: PathBuf,
    measurements: PathBuf,
    #[serde(default)]
    gauge: Gauge,
    #[serde(default)]
    eps: Option<f64>,
    #[serde(default)]
    mu_inf: Option<f64>,
}

pub fn fit(cfg: &FitConfig, _g: &Globals) -> Result<(Value, u64)> {
    let graph: Hypergraph = io::read_json(&cfg.graph)?;
    let m: MeasurementsFile = io::read_json(&cfg.measurements)?;
    if m.n != graph.n() {
        return Err(Error::Parse(format!(
            "{}: n = {} but the graph has {} vertices",
            cfg.measurements.display(),
            m.n,
            graph.n()
        )));
    }
    let (meas, us) = m.resolve()?;
    let problem = noisefit::build_fit(&graph, m.d, &meas, &us, cfg.gauge)?;
    let res = noisefit::solve_fit(&problem)?;
    let norms = noisefit::pinv_norms(&problem)?;
    let mu_inf = cfg.mu_inf.unwrap_or_else(|| noisefit::max_nonidentity_modulus(&meas));
    let stability = match cfg.eps {
        Some(eps) => Some(noisefit::stability_bound(&problem, eps, mu_inf)?),
        None => None,
    };
    let columns: Vec<String> = problem.columns().iter().map(|c| c.to_string()).collect();
    let v = json!({
        "gauge": cfg.gauge,
        "rows": problem.design_matrix().nrows(),
        "columns": columns,
        "parameters": res.parameters,
        "residual": res.residual,
        "model": res.model.to_file(),
        "pinv_norms": norms,
        "mu_inf": mu_inf,
        "stability_bound": stability,
    });
    Ok((v, 0))
}

#[derive(Debug, Args, Serialize)]
pub struct VqeArgs {
    /// MaxCut graph JSON `{"n": …, "weights": [[i, j, w], …]}`.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Angles, `theta[i][k]` for qubit `i` and layer `k`.
    #[arg(long)]
    theta: Option<PathBuf>,
    /// CNOT-layer survival eigenvalue.
    #[arg(long)]
    pc: Option<f64>,
    /// Rotation survival eigenvalue.
    #[arg(long)]
    py: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_parser = serde_enum::<EntanglerPairing>)]
    pairing: Option<EntanglerPairing>,
    #[arg(long)]
    max_samples: Option<u64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    layerwise: Option<bool>,
    /// Also compute the energy by dense simulation (up to 10 qubits).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    dense_check: Option<bool>,
}

#[derive(Debug, Deserialize)]
pub struct VqeConfig {
    graph: PathBuf,
    theta: PathBuf,
    pc: f64,
    py: f64,
    #[serde(default = "default_eps")]
    eps: f64,
    #[serde(default = "default_delta")]
    delta: f64,
    #[serde(default)]
    pairing: EntanglerPairing,
    #[serde(default = "default_max_samples")]
    max_samples: u64,
    #[serde(default)]
    layerwise: bool,
    #[serde(default)]
    dense_check: bool,
}

pub fn vqe(cfg: &VqeConfig, g: &Globals) -> Result<(Value, u64)> {
    let prob: MaxCutProblem = io::read_json(&cfg.graph)?;
    let theta: ThetaFile = io::read_json(&cfg.theta)?;
    let params = AnsatzParams::new(theta.into_theta(), cfg.pc, cfg.py)?.with_pairing(cfg.pairing);
    if params.n() != prob.n() {
        return Err(Error::Parse(format!(
            "{}: {} rows of angles for {} qubits",
            cfg.theta.display(),
            params.n(),
            prob.n()
        )));
    }
    let complexity = vqe::sample_complexity(prob.n(), params.depth(), cfg.eps, cfg.delta, cfg.pc, cfg.py)?;
    let opts = EnergyOptions {
        seed: g.seed,
        workers: g.workers,
        walk: walk_options(cfg.layerwise),
        max_samples: cfg.max_samples,
    };
    let est = vqe::estimate_energy(&prob, &params, cfg.eps, cfg.delta, &opts)?;
    let dense = if cfg.dense_check {
        Some(vqe::dense_energy(&prob, &params)?)
    } else {
        None
    };
    let v = json!({
        "energy": est.energy,
        "stderr": est.stderr,
        "samples": est.samples,
        "terms": est.terms,
        "ansatz_norm_product": vqe::ansatz_norm_product(&params),
        "sample_complexity": complexity,
        "dense_energy": dense,
    });
    Ok((v, est.samples))
}

#[derive(Debug, Args, Serialize)]
pub struct NormsArgs {
    #[arg(long)]
    circuit: Option<PathBuf>,
    /// With `--observable`, also report the planner's M_B.
    #[arg(long)]
    state: Option<PathBuf>,
    #[arg(long)]
    observable: Option<PathBuf>,
    #[arg(long, value_parser = serde_enum::<Picture>)]
    picture: Option<Picture>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Debug, Deserialize)]
pub struct NormsConfig {
    circuit: PathBuf,
    #[serde(default)]
    state: Option<PathBuf>,
    #[serde(default)]
    observable: Option<PathBuf>,
    #[serde(default)]
    picture: Picture,
    #[serde(default = "default_eps")]
    eps: f64,
    #[serde(default = "default_delta")]
    delta: f64,
}

pub fn norms(cfg: &NormsConfig, _g: &Globals) -> Result<(Value, u64)> {
    let circuit = io::load_circuit(&cfg.circuit)?;
    let layers: Vec<Value> = circuit
        .layers()
        .iter()
        .map(|l| {
            json!({
                "label": l.label,
                "support": l.support,
                "norm": l1_to_l1_norm(&l.op),
                "identity_fixed": l.op.identity_fixed(),
            })
        })
        .collect();
    let mut v = json!({
        "layers": layers,
        "circuit_norm_bound": circuit_norm_bound(&circuit),
    });
    match (&cfg.state, &cfg.observable) {
        (Some(s), Some(o)) => {
            let (rho, e) = load_vectors(s, o, circuit.basis())?;
            let mut plans = serde_json::Map::new();
            for (name, opts) in [("default", WalkOptions::default()), ("layerwise", WalkOptions::layerwise())] {
                let walk = Walk::new(&circuit, &rho, &e, cfg.picture, &opts)?;
                plans.insert(name.into(), to_value(&pathsampler::plan_walk(&walk, cfg.eps, cfg.delta)?)?);
            }
            v["plans"] = Value::Object(plans);
        }
        (None, None) => {}
        _ => return Err(Error::Parse("`state` and `observable` go together".into())),
    }
    Ok((v, 0))
}
