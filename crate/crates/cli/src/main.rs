mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Map, Value};
use weylsim::Error;

use commands::{FitArgs, LindbladArgs, NormsArgs, SimulateArgs, VqeArgs, WrbArgs};

/// Path sampling, Weyl randomized benchmarking and noise fitting.
///
/// Every option can also be given in a JSON object passed with `--config`
/// (keys use underscores, e.g. `"max_samples"`). Flags override the file,
/// and the file overrides WEYLSIM_SEED and WEYLSIM_WORKERS.
/// A result envelope is itself a valid config, which replays the run.
#[derive(Debug, Parser)]
#[command(name = "weylsim", version)]
struct Cli {
    /// Base seed for every random stream [fallback: WEYLSIM_SEED, then 0].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads, 0 for all cores [fallback: WEYLSIM_WORKERS, then 0].
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// JSON config or previous result envelope.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the envelope here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate tr(E·N(ρ)) for a noisy circuit by path sampling.
    Simulate(SimulateArgs),
    /// Estimate tr(E·e^{tL}(ρ)) for local Lindblad generators.
    Lindblad(LindbladArgs),
    /// Weyl randomized benchmarking on a simulated device.
    Wrb(WrbArgs),
    /// Fit a hypergraph-local noise model to benchmarking data.
    Fit(FitArgs),
    /// Noisy MaxCut VQE energy.
    Vqe(VqeArgs),
    /// Per-layer ℓ1→ℓ1 norms and the sampling overhead of a circuit.
    Norms(NormsArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Lindblad(_) => "lindblad",
            Command::Wrb(_) => "wrb",
            Command::Fit(_) => "fit",
            Command::Vqe(_) => "vqe",
            Command::Norms(_) => "norms",
        }
    }
}

#[derive(Debug, Serialize)]
struct Provenance {
    seed: u64,
    workers: usize,
    version: &'static str,
    wall_time_s: f64,
    samples: u64,
}

#[derive(Debug, Serialize)]
struct ResultEnvelope {
    command: String,
    config: Value,
    results: Value,
    provenance: Provenance,
}

/// Shared settings after merging flags, environment and config file.
pub struct Globals {
    pub seed: u64,
    pub workers: usize,
}

fn load_config(path: &PathBuf) -> weylsim::Result<Map<String, Value>> {
    let v: Value = weylsim::io::read_json(path)?;
    let v = match v {
        Value::Object(mut o) if o.contains_key("results") && o.contains_key("config") => {
            o.remove("config").unwrap_or(Value::Null)
        }
        other => other,
    };
    match v {
        Value::Object(o) => Ok(o),
        _ => Err(Error::Parse(format!("{}: config must be a JSON object", path.display()))),
    }
}

/// Overlays the set flags onto the config object.
fn merge<T: Serialize>(base: &mut Map<String, Value>, flags: &T) -> weylsim::Result<()> {
    if let Value::Object(o) = serde_json::to_value(flags)? {
        for (k, v) in o {
            if !v.is_null() {
                base.insert(k, v);
            }
        }
    }
    Ok(())
}

fn resolve<T: serde::de::DeserializeOwned>(cfg: &Map<String, Value>) -> weylsim::Result<T> {
    serde_json::from_value(Value::Object(cfg.clone())).map_err(|e| Error::Parse(format!("config: {e}")))
}

/// Flag or config value, else the environment variable, else 0.
fn setting(cfg: &Map<String, Value>, key: &str, var: &str) -> weylsim::Result<u64> {
    if let Some(v) = cfg.get(key) {
        return v
            .as_u64()
            .ok_or_else(|| Error::Parse(format!("config: `{key}` must be a nonnegative integer")));
    }
    match std::env::var(var) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("{var}={s:?} is not a nonnegative integer"))),
        Err(_) => Ok(0),
    }
}

fn run(cli: Cli) -> weylsim::Result<ResultEnvelope> {
    let start = Instant::now();
    let mut cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => Map::new(),
    };
    if let Some(s) = cli.seed {
        cfg.insert("seed".into(), json!(s));
    }
    if let Some(w) = cli.workers {
        cfg.insert("workers".into(), json!(w));
    }
    let seed = setting(&cfg, "seed", "WEYLSIM_SEED")?;
    let workers = setting(&cfg, "workers", "WEYLSIM_WORKERS")? as usize;
    cfg.insert("seed".into(), json!(seed));
    cfg.insert("workers".into(), json!(workers));
    let g = Globals { seed, workers };
    let name = cli.command.name();
    let (results, samples) = match &cli.command {
        Command::Simulate(a) => {
            merge(&mut cfg, a)?;
            commands::simulate(&resolve(&cfg)?, &g)?
        }
        Command::Lindblad(a) => {
            merge(&mut cfg, a)?;
            commands::lindblad(&resolve(&cfg)?, &g)?
        }
        Command::Wrb(a) => {
            merge(&mut cfg, a)?;
            commands::wrb(&resolve(&cfg)?, &g)?
        }
        Command::Fit(a) => {
            merge(&mut cfg, a)?;
            commands::fit(&resolve(&cfg)?, &g)?
        }
        Command::Vqe(a) => {
            merge(&mut cfg, a)?;
            commands::vqe(&resolve(&cfg)?, &g)?
        }
        Command::Norms(a) => {
            merge(&mut cfg, a)?;
            commands::norms(&resolve(&cfg)?, &g)?
        }
    };
    Ok(ResultEnvelope {
        command: name.into(),
        config: Value::Object(cfg),
        results,
        provenance: Provenance {
            seed,
            workers: weylsim::pathsampler::resolve_workers(workers),
            version: env!("CARGO_PKG_VERSION"),
            wall_time_s: start.elapsed().as_secs_f64(),
            samples,
        },
    })
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) => 2,
        Error::SizeLimit(_) => 4,
        _ => 3,
    }
}

fn kind(e: &Error) -> &'static str {
    match e {
        Error::Parse(_) => "parse",
        Error::SizeLimit(_) => "size_limit",
        Error::Io(_) => "io",
        Error::RankDeficient { .. } => "rank_deficient",
        Error::MaxIterations(_) => "max_iterations",
        Error::MagnitudeFloor { .. } => "magnitude_floor",
        Error::ZeroDiagonal(_) => "zero_diagonal",
        _ => "validation",
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let out = cli.out.clone();
    let result = run(cli).and_then(|env| match &out {
        Some(p) => weylsim::io::write_json(p, &env),
        None => {
            println!("{}", serde_json::to_string_pretty(&env)?);
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            let mut err = json!({ "code": code, "kind": kind(&e), "message": e.to_string() });
            if let Error::RankDeficient { null_space, .. } = &e {
                err["null_space"] = serde_json::to_value(null_space).unwrap_or(Value::Null);
            }
            eprintln!("{}", json!({ "error": err }));
            ExitCode::from(code)
        }
    }
}
