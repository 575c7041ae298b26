mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use botnet_mfg::config::{parse_config, parse_config_str, ScenarioConfig};
use botnet_mfg::model::ModelParams;
use botnet_mfg::run::OUT_DIR_ENV;
use serde_json::{json, Value};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_botnet-mfg"));
    c.env_remove(OUT_DIR_ENV);
    c
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn write_config(dir: &Path, value: &Value) -> PathBuf {
    let path = dir.join("scenario.json");
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn p0_json() -> Value {
    serde_json::from_str(include_str!("../fixtures/p0.json")).unwrap()
}

fn solve(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("solve")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn fixture_is_the_reference_set() {
    let p: ModelParams = serde_json::from_str(include_str!("../fixtures/p0.json")).unwrap();
    assert_eq!(p, common::p0());
    assert_eq!(p.q_plus, vec![0.5, 0.6]);
    assert_eq!(p.beta, vec![vec![0.2, 0.05], vec![0.05, 0.05]]);
    assert_eq!(p.w_s, vec![1.0, 2.5]);
}

#[test]
fn configs_round_trip() {
    for name in ["equilibria", "simulate", "turnpike", "nplayer", "sweep"] {
        let cfg = parse_config(&shipped(&format!("{name}.json"))).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let again: ScenarioConfig = parse_config_str(&text).unwrap();
        assert_eq!(cfg, again, "{name}");
        assert_eq!(serde_json::to_string(&again).unwrap(), text);
    }
}

#[test]
fn equilibria_run_writes_table_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = solve(&shipped("equilibria.json"), dir.path(), &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let table: Value =
        serde_json::from_slice(&fs::read(dir.path().join("equilibria.json")).unwrap()).unwrap();
    let first = &table["candidates"][0];
    assert_eq!(first["family"], "Single(1)");
    assert_eq!(first["status"], "equilibrium");
    assert!(
        first["solution"]["stability"]["max_real_part"]
            .as_f64()
            .unwrap()
            < 0.0
    );
    assert!(!first["solution"]["margins"]["exact"]
        .as_array()
        .unwrap()
        .is_empty());

    let manifest: Value =
        serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["tool"], "botnet-mfg");
    assert_eq!(manifest["run"], "equilibria");
    assert_eq!(manifest["config"]["model"], p0_json());
    assert!(manifest["finished_unix"].as_f64() >= manifest["started_unix"].as_f64());
    assert_eq!(
        manifest["artifacts"],
        json!(["equilibria.json", "equilibria.csv"])
    );
}

#[test]
fn trajectory_columns_follow_the_state_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "model": p0_json(), "run": "turnpike",
        "grid": {"t_end": 2.0}, "x0": "uniform",
        "output": {"stride": 50}
    });
    let out = solve(
        &write_config(dir.path(), &cfg),
        &dir.path().join("out"),
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,x_1I,x_1S,x_2I,x_2S,g_1I,g_1S,g_2I,g_2S,cone_ok,argmin_ok"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2000 / 50 + 1);
    let last: Vec<&str> = rows.last().unwrap().split(',').collect();
    assert_eq!(last[0].parse::<f64>().unwrap(), 2.0);
    assert_eq!(&last[9..], ["true", "true"]);
}

#[test]
fn invalid_config_exits_one_and_names_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let mut model = p0_json();
    model["w_S"] = json!([2.0, 2.5]);
    let cfg = json!({"model": model, "run": "equilibria", "colour": "red"});
    let out = solve(
        &write_config(dir.path(), &cfg),
        &dir.path().join("out"),
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("colour"), "{err}");
    assert!(!dir.path().join("out").exists());

    let cfg = json!({"model": model, "run": "equilibria"});
    let out = solve(
        &write_config(dir.path(), &cfg),
        &dir.path().join("out"),
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("better state"));
}

#[test]
fn empty_sweep_axis_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "model": p0_json(), "run": "sweep",
        "sweep": {"axes": [{"path": "beta.1.1", "values": []}]}
    });
    let out = solve(
        &write_config(dir.path(), &cfg),
        &dir.path().join("out"),
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no values"));
}

#[test]
fn failing_every_point_exits_two_with_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut model = p0_json();
    model["q_plus"] = json!([0.5, 0.4]);
    let cfg = json!({"model": model, "run": "turnpike", "grid": {"t_end": 1.0}});
    let out_dir = dir.path().join("out");
    let out = solve(&write_config(dir.path(), &cfg), &out_dir, &[]);
    assert_eq!(out.status.code(), Some(2));
    let manifest: Value =
        serde_json::from_slice(&fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["points_ok"], 0);
    assert!(manifest["errors"][0]
        .as_str()
        .unwrap()
        .contains("rate_ordering_recovery"));
}

#[test]
fn sweep_rows_track_the_infected_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "model": p0_json(), "run": "sweep",
        "sweep": {"axes": [{"path": "beta.1.1", "values": [0.0, 0.1, 0.2]}]}
    });
    let out = solve(
        &write_config(dir.path(), &cfg),
        &dir.path().join("out"),
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let mut r = csv::Reader::from_path(dir.path().join("out/sweep.csv")).unwrap();
    let header = r.headers().unwrap().clone();
    let col = header.iter().position(|h| h == "Single(1):x_star").unwrap();
    let xs: Vec<f64> = r
        .records()
        .map(|rec| rec.unwrap()[col].parse().unwrap())
        .collect();
    assert_eq!(xs.len(), 3);
    // oracle: root of b y² + (q+ - b + q-) y - q- with q± = 0.5
    for (x, b) in xs.iter().zip([0.0, 0.1, 0.2]) {
        assert!((b * x * x + (1.0 - b) * x - 0.5f64).abs() < 1e-14);
    }
    assert!(xs[0] < xs[1] && xs[1] < xs[2]);
}

#[test]
fn validate_only_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = solve(&shipped("turnpike.json"), &out_dir, &["--validate-only"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!out_dir.exists());
}

#[test]
fn environment_supplies_the_default_directory() {
    let dir = tempfile::tempdir().unwrap();
    let env_dir = dir.path().join("from-env");
    let out = bin()
        .env(OUT_DIR_ENV, &env_dir)
        .current_dir(dir.path())
        .arg("solve")
        .arg(shipped("equilibria.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(env_dir.join("manifest.json").exists());
    assert!(!dir.path().join("results").exists());
}

#[test]
fn seed_fixes_the_finite_population_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "model": p0_json(), "run": "nplayer",
        "grid": {"t_end": 1.0}, "x0": "uniform",
        "nplayer": {"n_list": [100, 400], "replications": 4},
        "output": {"stride": 100}
    });
    let path = write_config(dir.path(), &cfg);
    let run = |name: &str, seed: &str| {
        let out_dir = dir.path().join(name);
        let out = solve(&path, &out_dir, &["--seed", seed, "--threads", "2"]);
        assert_eq!(out.status.code(), Some(0));
        (
            fs::read(out_dir.join("lln.csv")).unwrap(),
            fs::read(out_dir.join("ctmc_path.csv")).unwrap(),
        )
    };
    let a = run("a", "11");
    let b = run("b", "11");
    let c = run("c", "12");
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);
}
