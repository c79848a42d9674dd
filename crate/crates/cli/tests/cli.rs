use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_weylsim"));
    c.env_remove("WEYLSIM_SEED").env_remove("WEYLSIM_WORKERS");
    c
}

fn put(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn envelope(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error(out: &Output) -> Value {
    // Log lines may precede the error object.
    let text = String::from_utf8_lossy(&out.stderr);
    let v: Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    v["error"].clone()
}

/// One qubit: `ρ = [[0.7, 0.2−0.1i], [0.2+0.1i, 0.3]]`, `E = Z + 0.5 X`, so
/// `tr(ρE) = 0.4 + 0.5 · 0.4 = 0.6`.
struct Fixture {
    dir: TempDir,
    state: PathBuf,
    observable: PathBuf,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let state = put(
        dir.path(),
        "state.json",
        &json!({"kind": "product", "factors": [[[[0.7, 0], [0.2, -0.1]], [[0.2, 0.1], [0.3, 0]]]]}),
    );
    let observable = put(
        dir.path(),
        "obs.json",
        &json!({"kind": "weyl", "d": 2, "n": 1, "terms": [{"label": "1|0", "coeff": [1, 0]}, {"label": "0|1", "coeff": [0.5, 0]}]}),
    );
    Fixture { dir, state, observable }
}

fn identity_circuit(dir: &Path) -> PathBuf {
    put(
        dir,
        "identity.json",
        &json!({"d": 2, "n": 1, "layers": [
            {"kind": "builtin", "support": [0], "params": {"name": "clifford:W0_0_0"}},
            {"kind": "builtin", "support": [0], "params": {"name": "depolarizing", "p": 1.0}}
        ]}),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn norms_reports_layers_and_bound() {
    let f = fixture();
    let c = put(
        f.dir.path(),
        "c.json",
        &json!({"d": 2, "n": 2, "layers": [
            {"kind": "builtin", "support": [0, 1], "params": {"name": "clifford:H0 CNOT0_1"}},
            {"kind": "builtin", "support": [0], "params": {"name": "rotation_y:0.7853981633974483"}},
            {"kind": "builtin", "support": [1], "params": {"name": "depolarizing", "p": 0.9}}
        ]}),
    );
    let v = envelope(&run(&["norms", "--circuit", s(&c)]));
    assert_eq!(v["command"], "norms");
    let layers = v["results"]["layers"].as_array().unwrap();
    assert_eq!(layers.len(), 3);
    let norms: Vec<f64> = layers.iter().map(|l| l["norm"].as_f64().unwrap()).collect();
    assert!((norms[0] - 1.0).abs() < 1e-12);
    assert!((norms[1] - 2f64.sqrt()).abs() < 1e-12);
    assert!((norms[2] - 1.0).abs() < 1e-12);
    let bound = v["results"]["circuit_norm_bound"].as_f64().unwrap();
    assert!((bound - 2f64.sqrt()).abs() < 1e-12);
    assert!(v["results"].get("plans").is_none());
}

#[test]
fn norms_with_vectors_reports_m_b() {
    let f = fixture();
    let c = identity_circuit(f.dir.path());
    let v = envelope(&run(&[
        "norms",
        "--circuit",
        s(&c),
        "--state",
        s(&f.state),
        "--observable",
        s(&f.observable),
        "--picture",
        "heisenberg",
    ]));
    // ‖E‖₁ = 1.5 in the Weyl basis and ‖ρ‖_∞ = 1.
    let m_b = v["results"]["plans"]["layerwise"]["m_b"].as_f64().unwrap();
    assert!((m_b - 2.25).abs() < 1e-12, "{m_b}");
}

#[test]
fn simulate_identity_circuit_recovers_trace() {
    let f = fixture();
    let c = identity_circuit(f.dir.path());
    for picture in ["schrodinger", "heisenberg"] {
        let v = envelope(&run(&[
            "simulate",
            "--circuit",
            s(&c),
            "--state",
            s(&f.state),
            "--observable",
            s(&f.observable),
            "--picture",
            picture,
            "--eps",
            "0.02",
            "--seed",
            "11",
        ]));
        let r = &v["results"];
        let mean = r["mean"][0].as_f64().unwrap();
        let se = r["stderr"].as_f64().unwrap();
        assert!((mean - 0.6).abs() <= 4.0 * se + 1e-12, "{picture}: {mean} ± {se}");
        assert!(r["mean"][1].as_f64().unwrap().abs() <= 4.0 * se + 1e-12);
        assert_eq!(v["provenance"]["samples"], r["plan"]["samples_needed"]);
        assert!(v["provenance"]["wall_time_s"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn malformed_circuit_exits_2_with_path_and_field() {
    let f = fixture();
    let c = put(
        f.dir.path(),
        "bad.json",
        &json!({"d": 2, "n": 1, "layers": [{"kind": "builtin", "support": [0], "params": {"name": "depolarizing", "p": "high"}}]}),
    );
    let out = run(&["simulate", "--circuit", s(&c), "--state", s(&f.state), "--observable", s(&f.observable)]);
    assert_eq!(out.status.code(), Some(2));
    let e = error(&out);
    assert_eq!(e["kind"], "parse");
    let msg = e["message"].as_str().unwrap();
    assert!(msg.contains("bad.json"), "{msg}");
    assert!(msg.contains("layers[0].params.p"), "{msg}");
}

#[test]
fn missing_builtin_parameter_exits_2() {
    let f = fixture();
    let c = put(
        f.dir.path(),
        "nop.json",
        &json!({"d": 2, "n": 1, "layers": [{"kind": "builtin", "support": [0], "params": {"name": "depolarizing"}}]}),
    );
    let out = run(&["norms", "--circuit", s(&c)]);
    assert_eq!(out.status.code(), Some(2));
    let msg = error(&out)["message"].as_str().unwrap().to_string();
    assert!(msg.contains("nop.json") && msg.contains("layers[0]") && msg.contains("params.p"), "{msg}");
}

#[test]
fn validation_and_size_limit_exit_codes() {
    let f = fixture();
    let c = identity_circuit(f.dir.path());
    let base = ["simulate", "--circuit", s(&c), "--state", s(&f.state), "--observable", s(&f.observable)];
    let mut args = base.to_vec();
    args.push("--eps=-1");
    let out = run(&args);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error(&out)["kind"], "validation");
    let mut args = base.to_vec();
    args.extend(["--eps", "0.001", "--max-samples", "1000"]);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error(&out)["kind"], "size_limit");
}

#[test]
fn envelope_replays_bit_for_bit() {
    let f = fixture();
    let c = identity_circuit(f.dir.path());
    let first = f.dir.path().join("first.json");
    let out = run(&[
        "simulate",
        "--circuit",
        s(&c),
        "--state",
        s(&f.state),
        "--observable",
        s(&f.observable),
        "--eps",
        "0.05",
        "--seed",
        "42",
        "--workers",
        "2",
        "--out",
        s(&first),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a: Value = serde_json::from_str(&fs::read_to_string(&first).unwrap()).unwrap();
    let b = envelope(&run(&["simulate", "--config", s(&first)]));
    assert_eq!(a["results"], b["results"]);
    assert_eq!(a["config"], b["config"]);
    assert_eq!(b["provenance"]["seed"], 42);
}

#[test]
fn flags_override_config_and_env() {
    let f = fixture();
    let c = identity_circuit(f.dir.path());
    let cfg = put(
        f.dir.path(),
        "cfg.json",
        &json!({"circuit": c, "state": f.state, "observable": f.observable, "eps": 0.5, "seed": 3}),
    );
    let v = envelope(&run(&["simulate", "--config", s(&cfg)]));
    assert_eq!(v["results"]["plan"]["epsilon"], 0.5);
    assert_eq!(v["provenance"]["seed"], 3);
    let v = envelope(&run(&["simulate", "--config", s(&cfg), "--eps", "0.25", "--seed", "4"]));
    assert_eq!(v["results"]["plan"]["epsilon"], 0.25);
    assert_eq!(v["config"]["eps"], 0.25);
    assert_eq!(v["provenance"]["seed"], 4);
    let with_env = |args: &[&str]| bin().args(args).env("WEYLSIM_SEED", "9").output().unwrap();
    assert_eq!(envelope(&with_env(&["simulate", "--config", s(&cfg)]))["provenance"]["seed"], 3);
    let bare = ["simulate", "--circuit", s(&c), "--state", s(&f.state), "--observable", s(&f.observable)];
    assert_eq!(envelope(&with_env(&bare))["provenance"]["seed"], 9);
    assert_eq!(envelope(&run(&bare))["provenance"]["seed"], 0);
}

fn depolarizing_device(dir: &Path, p: f64) -> PathBuf {
    put(
        dir,
        "device.json",
        &json!({"d": 2, "n": 1,
            "unitary": {"kind": "builtin", "support": [0], "params": {"name": "clifford:W0_0_0"}},
            "noise": {"kind": "builtin", "support": [0], "params": {"name": "depolarizing", "p": p}}}),
    )
}

#[test]
fn single_length_record_gives_two_line_csv() {
    use weylsim::wrb::{BenchmarkRecord, DecayPoint};
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("one.csv");
    let rec = BenchmarkRecord {
        label: "1|0".into(),
        points: vec![DecayPoint {
            m: 4,
            runs: 100,
            q_hat: num_complex::Complex64::new(0.1 + 0.2, -1.0 / 3.0),
            q_hat_stderr: 0.01,
            q2: 0.123456789012345,
            q2_stderr: 1e-17,
        }],
    };
    weylsim::io::emit_decay_csv(&rec, &csv).unwrap();
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 2, "{text}");
    assert_eq!(weylsim::io::read_decay_csv(&csv, "1|0").unwrap(), rec);
}

#[test]
fn phase_mode_writes_one_row_per_length() {
    let dir = tempfile::tempdir().unwrap();
    let dev = depolarizing_device(dir.path(), 0.9);
    let csv = dir.path().join("decay.csv");
    let v = envelope(&run(&[
        "wrb", "--device", s(&dev), "--label", "1|0", "--mode", "phase", "--m-list", "1,2,3", "--runs", "2000",
        "--csv", s(&csv),
    ]));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 4, "{text}");
    assert_eq!(text.lines().next().unwrap(), "m,re,im,q2,stderr,runs,q2_stderr");
    assert!(v["results"]["theta"].as_f64().unwrap().abs() < 0.1);
}

#[test]
fn decay_csv_round_trip_and_monotone_q2() {
    let dir = tempfile::tempdir().unwrap();
    let dev = depolarizing_device(dir.path(), 0.9);
    let csv = dir.path().join("decay.csv");
    let v = envelope(&run(&[
        "wrb", "--device", s(&dev), "--label", "1|0", "--mode", "diag", "--eps", "0.1", "--seed", "5", "--csv",
        s(&csv),
    ]));
    let est: weylsim::wrb::MuEstimate = serde_json::from_value(v["results"].clone()).unwrap();
    let back = weylsim::io::read_decay_csv(&csv, &est.record.label).unwrap();
    assert_eq!(back, est.record);
    let mut pts = back.points.clone();
    pts.sort_by_key(|p| p.m);
    pts.dedup_by_key(|p| p.m);
    for w in pts.windows(2) {
        let slack = 4.0 * (w[0].q2_stderr + w[1].q2_stderr);
        assert!(w[1].q2 <= w[0].q2 + slack, "q2 rises from m={} to m={}", w[0].m, w[1].m);
    }
    let lambda = v["results"]["noise_eigenvalue"][0].as_f64().unwrap();
    assert!((lambda - 0.9).abs() < 0.05, "{lambda}");
}

#[test]
fn lindblad_dephasing_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let layers = put(
        dir.path(),
        "l.json",
        &json!({"d": 2, "n": 1, "layers": [{"support": [0], "t": 0.5, "generator": {"kind": "dephasing", "gamma": 1.0}}]}),
    );
    let state = put(dir.path(), "plus.json", &json!({"kind": "product", "factors": [[[[0.5, 0], [0.5, 0]], [[0.5, 0], [0.5, 0]]]]}));
    let obs = put(dir.path(), "x.json", &json!({"kind": "weyl", "d": 2, "n": 1, "terms": [{"label": "0|1", "coeff": [1, 0]}]}));
    let v = envelope(&run(&[
        "lindblad", "--layers", s(&layers), "--state", s(&state), "--observable", s(&obs), "--samples", "50000",
        "--seed", "2",
    ]));
    // ⟨X⟩ decays as e^{−2γt}.
    let mean = v["results"]["mean"][0].as_f64().unwrap();
    let se = v["results"]["stderr"].as_f64().unwrap();
    assert!((mean - (-1f64).exp()).abs() <= 4.0 * se, "{mean} ± {se}");
    assert_eq!(v["provenance"]["samples"], 50000);
}

#[test]
fn fit_recovers_single_qubit_depolarizing() {
    let dir = tempfile::tempdir().unwrap();
    let graph = put(dir.path(), "g.json", &json!({"n": 1, "edges": [[0]]}));
    let meas = put(
        dir.path(),
        "m.json",
        &json!({"d": 2, "n": 1, "measurements": [
            {"label": "1|0", "mu": [0.9, 0]},
            {"label": "0|1", "mu": [0.9, 0]},
            {"label": "1|1", "mu": [0.9, 0]}
        ]}),
    );
    let v = envelope(&run(&["fit", "--graph", s(&graph), "--measurements", s(&meas), "--eps", "0.01"]));
    let r = &v["results"];
    assert_eq!(r["rows"], 4);
    assert!(r["residual"].as_f64().unwrap() < 1e-12);
    let f = &r["model"]["edges"][0]["f"];
    // λ(w) = Σ_e f_e(w|_e), so one edge holds the eigenvalues themselves.
    for (label, want) in [("0|0", 1.0), ("1|0", 0.9), ("0|1", 0.9), ("1|1", 0.9)] {
        let got = f[label][0].as_f64().unwrap();
        assert!((got - want).abs() < 1e-12, "{label}: {got}");
    }
    let bound = r["stability_bound"].as_f64().unwrap();
    assert!(bound > 0.0 && bound.is_finite());

    let raw = envelope(&run(&["fit", "--graph", s(&graph), "--measurements", s(&meas), "--gauge", "raw"]));
    assert_eq!(raw["results"]["columns"].as_array().unwrap().len(), 4);
}

#[test]
fn fit_reports_rank_deficiency() {
    let dir = tempfile::tempdir().unwrap();
    let graph = put(dir.path(), "g.json", &json!({"n": 2, "edges": [[0, 1]]}));
    let meas = put(dir.path(), "m.json", &json!({"d": 2, "n": 2, "measurements": [{"label": "10|00", "mu": [0.9, 0]}]}));
    let out = run(&["fit", "--graph", s(&graph), "--measurements", s(&meas)]);
    assert_eq!(out.status.code(), Some(3));
    let e = error(&out);
    assert_eq!(e["kind"], "rank_deficient");
    assert!(!e["null_space"].as_array().unwrap().is_empty());
}

#[test]
fn vqe_energy_agrees_with_dense_check() {
    let dir = tempfile::tempdir().unwrap();
    let graph = put(dir.path(), "g.json", &json!({"n": 4, "weights": [[0, 1, 1], [1, 2, 1], [2, 3, 1], [3, 0, 1]]}));
    let theta = put(dir.path(), "t.json", &json!({"theta": [[0.3], [1.1], [-0.4], [2.0]]}));
    let v = envelope(&run(&[
        "vqe", "--graph", s(&graph), "--theta", s(&theta), "--pc", "0.98", "--py", "0.99", "--eps", "0.05",
        "--dense-check", "--seed", "1",
    ]));
    let r = &v["results"];
    let e = r["energy"].as_f64().unwrap();
    let dense = r["dense_energy"].as_f64().unwrap();
    assert!((e - dense).abs() <= 0.05, "{e} vs {dense}");
    assert_eq!(r["terms"].as_array().unwrap().len(), 4);
    assert_eq!(r["sample_complexity"]["n"], 4);
    assert_eq!(v["provenance"]["samples"], r["samples"]);
}
