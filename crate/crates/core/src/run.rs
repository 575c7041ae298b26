//! Orchestration of configured runs and persistence of their results.
//!
//! Every run writes `manifest.json` (config echo, tool version, unix
//! timestamps, artifact list, per-point errors), even when all points fail.
//! Bulk tables go to CSV with 17 significant digits or to JSON, depending
//! on `output.format`; equilibria tables are always JSON as well.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{
    OutputFormat, ParamPath, RunKind, ScenarioConfig, TerminalPreset, TerminalSpec,
};
use crate::dynamics::{
    check_hypotheses, construct_turnpike, default_step, integrate_forward, solve_turnpike,
    turnpike_metrics, TimeGrid, TrajectorySolution,
};
use crate::finite_n::{lln_error, replication_stream, simulate_stream, CountVector};
use crate::model::{state_label, Compartment, ModelParams, ValueVector};
use crate::stationary::{
    candidate_families, enumerate_equilibria, fixed_point_single, hjb_single_exact, solve_single,
    CandidateReport, EquilibriumSet,
};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "BOTNET_MFG_OUT_DIR";

/// Used when neither the command line, the config nor the environment name
/// a directory.
pub const DEFAULT_OUT_DIR: &str = "results";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("i/o error on {path}: {message}")]
    Io { path: PathBuf, message: String },
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> RunError {
    RunError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// `--out`, then `output.dir`, then the environment, then `results`.
pub fn resolve_output_dir(
    cli_out: Option<&Path>,
    cfg: &ScenarioConfig,
    env_value: Option<&str>,
) -> PathBuf {
    cli_out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.dir.clone())
        .or_else(|| env_value.filter(|s| !s.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub run: RunKind,
    pub out_dir: PathBuf,
    /// File names relative to `out_dir`, manifest excluded.
    pub artifacts: Vec<String>,
    pub points_ok: usize,
    pub points_failed: usize,
    pub errors: Vec<String>,
}

impl RunReport {
    fn new(run: RunKind, out_dir: &Path) -> Self {
        Self {
            run,
            out_dir: out_dir.to_path_buf(),
            artifacts: Vec::new(),
            points_ok: 0,
            points_failed: 0,
            errors: Vec::new(),
        }
    }

    fn fail(&mut self, message: String) {
        self.points_failed += 1;
        self.errors.push(message);
    }

    /// 0 if any point succeeded, 2 if every point failed.
    pub fn exit_code(&self) -> i32 {
        if self.points_ok > 0 {
            0
        } else {
            2
        }
    }
}

/// Runs whatever `cfg.run` selects.
pub fn execute(cfg: &ScenarioConfig, out_dir: &Path) -> Result<RunReport, RunError> {
    match cfg.run {
        RunKind::Equilibria => run_equilibria(cfg, out_dir),
        RunKind::Simulate => run_simulate(cfg, out_dir),
        RunKind::Turnpike => run_turnpike(cfg, out_dir),
        RunKind::Nplayer => run_nplayer(cfg, out_dir),
        RunKind::Sweep => run_sweep(cfg, out_dir),
    }
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Creates the directory, runs `body`, and writes the manifest whatever
/// `body` reported.
fn with_manifest(
    cfg: &ScenarioConfig,
    out_dir: &Path,
    body: impl FnOnce(&mut RunReport) -> Result<(), RunError>,
) -> Result<RunReport, RunError> {
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let started = unix_now();
    let mut report = RunReport::new(cfg.run, out_dir);
    let outcome = body(&mut report);
    if let Err(e) = &outcome {
        report.fail(e.to_string());
    }
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "run": cfg.run,
        "started_unix": started,
        "finished_unix": unix_now(),
        "config": cfg,
        "artifacts": report.artifacts,
        "points_ok": report.points_ok,
        "points_failed": report.points_failed,
        "errors": report.errors,
    });
    write_json(out_dir, "manifest.json", &manifest)?;
    outcome.map(|_| report)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), RunError> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(&path, e))?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| io_err(&path, e))
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => json!(v),
            Cell::Int(v) => json!(v),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

/// 17 significant digits: enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    /// Writes `<stem>.csv` or `<stem>.json`; returns the file name.
    pub fn write(&self, dir: &Path, stem: &str, format: OutputFormat) -> Result<String, RunError> {
        match format {
            OutputFormat::Csv => {
                let name = format!("{stem}.csv");
                let path = dir.join(&name);
                let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
                w.write_record(&self.header).map_err(|e| io_err(&path, e))?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::csv))
                        .map_err(|e| io_err(&path, e))?;
                }
                w.flush().map_err(|e| io_err(&path, e))?;
                Ok(name)
            }
            OutputFormat::Json => {
                let name = format!("{stem}.json");
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
                    .collect();
                write_json(dir, &name, &json!({ "columns": self.header, "rows": rows }))?;
                Ok(name)
            }
        }
    }
}

fn state_columns(prefix: &str, d: usize) -> Vec<String> {
    (0..d)
        .flat_map(|j| Compartment::BOTH.map(|c| format!("{prefix}_{}", state_label(j, c))))
        .collect()
}

fn grid_of(cfg: &ScenarioConfig) -> Result<TimeGrid, String> {
    let g = cfg.grid().ok_or("grid missing")?;
    let step = g.step.unwrap_or_else(|| default_step(&cfg.model));
    TimeGrid::with_max_step(g.t_start, g.t_end, step).map_err(|e| e.to_string())
}

/// Node indices written for a path of `len` nodes: every `stride`-th plus
/// the last.
fn strided(len: usize, stride: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..len).step_by(stride.max(1)).collect();
    if v.last() != Some(&(len - 1)) {
        v.push(len - 1);
    }
    v
}

fn equilibria_table(p: &ModelParams, set: &EquilibriumSet) -> Table {
    let d = p.d;
    let mut header: Vec<String> = ["candidate", "status", "degenerate"]
        .map(String::from)
        .to_vec();
    header.extend(state_columns("x", d));
    header.extend(state_columns("g", d));
    header.extend(
        [
            "min_exact_margin",
            "max_real_part",
            "stable",
            "residual",
            "error",
        ]
        .map(String::from),
    );
    let rows = set
        .candidates
        .iter()
        .map(|c: &CandidateReport| {
            let mut row = vec![Cell::Text(c.family.to_string()), Cell::Text(status_name(c))];
            match &c.solution {
                Some(s) => {
                    row.push(Cell::Bool(s.is_degenerate()));
                    row.extend(s.x_star.as_slice().iter().map(|&v| Cell::Num(v)));
                    row.extend(s.g.as_slice().iter().map(|&v| Cell::Num(v)));
                    row.push(s.margins.min_exact().into());
                    row.push(s.stability.max_real_part.into());
                    row.push(Cell::Bool(s.stability.stable));
                    row.push(s.residual.into());
                }
                None => row.extend(std::iter::repeat_n(Cell::Empty, 1 + 4 * d + 4)),
            }
            row.push(c.error.clone().map_or(Cell::Empty, Cell::Text));
            row
        })
        .collect();
    Table { header, rows }
}

fn status_name(c: &CandidateReport) -> String {
    serde_json::to_value(c.status)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}

pub fn run_equilibria(cfg: &ScenarioConfig, out_dir: &Path) -> Result<RunReport, RunError> {
    with_manifest(cfg, out_dir, |report| {
        match enumerate_equilibria(&cfg.model) {
            Ok(set) => {
                write_json(out_dir, "equilibria.json", &set)?;
                report.artifacts.push("equilibria.json".into());
                if cfg.output.format == OutputFormat::Csv {
                    let name = equilibria_table(&cfg.model, &set).write(
                        out_dir,
                        "equilibria",
                        OutputFormat::Csv,
                    )?;
                    report.artifacts.push(name);
                }
                report.points_ok += 1;
            }
            Err(e) => report.fail(e.to_string()),
        }
        Ok(())
    })
}

pub fn run_simulate(cfg: &ScenarioConfig, out_dir: &Path) -> Result<RunReport, RunError> {
    with_manifest(cfg, out_dir, |report| {
        let p = &cfg.model;
        let u = cfg.control_config().control(p.d);
        let path = grid_of(cfg).and_then(|grid| {
            let x0 = cfg.initial_state()?;
            integrate_forward(p, &x0, &u, &grid)
                .map(|x| (grid, x))
                .map_err(|e| e.to_string())
        });
        match path {
            Ok((grid, x)) => {
                let mut header = vec!["t".to_string()];
                header.extend(state_columns("x", p.d));
                let rows = strided(x.len(), cfg.output.stride)
                    .into_iter()
                    .map(|s| {
                        std::iter::once(Cell::Num(grid.time(s)))
                            .chain(x[s].as_slice().iter().map(|&v| Cell::Num(v)))
                            .collect()
                    })
                    .collect();
                let name = Table { header, rows }.write(out_dir, "path", cfg.output.format)?;
                report.artifacts.push(name);
                report.points_ok += 1;
            }
            Err(e) => report.fail(e),
        }
        Ok(())
    })
}

fn terminal_values(cfg: &ScenarioConfig, i: usize) -> Result<ValueVector, String> {
    let p = &cfg.model;
    match &cfg.turnpike_config().terminal {
        TerminalSpec::Preset(TerminalPreset::Zero) => Ok(ValueVector::zeros(p.d)),
        TerminalSpec::Preset(TerminalPreset::Stationary) => {
            let (x_star, _) = fixed_point_single(p, i).map_err(|e| e.to_string())?;
            hjb_single_exact(p, i, x_star).map_err(|e| e.to_string())
        }
        TerminalSpec::Values(v) => ValueVector::new(v.clone()).map_err(|e| e.to_string()),
    }
}

/// Trajectory columns: `t`, the `2d` x-columns, the `2d` g-columns,
/// `cone_ok`, `argmin_ok`.
pub fn trajectory_table(sol: &TrajectorySolution, stride: usize) -> Table {
    let d = sol.control.strategies();
    let mut header = vec!["t".to_string()];
    header.extend(state_columns("x", d));
    header.extend(state_columns("g", d));
    header.push("cone_ok".into());
    header.push("argmin_ok".into());
    let rows = strided(sol.x_path.len(), stride)
        .into_iter()
        .map(|s| {
            let mut row = vec![Cell::Num(sol.grid.time(s))];
            row.extend(sol.x_path[s].as_slice().iter().map(|&v| Cell::Num(v)));
            row.extend(sol.g_path[s].as_slice().iter().map(|&v| Cell::Num(v)));
            row.push(Cell::Bool(sol.cone_ok[s]));
            row.push(Cell::Bool(sol.argmin_ok[s]));
            row
        })
        .collect();
    Table { header, rows }
}

pub fn run_turnpike(cfg: &ScenarioConfig, out_dir: &Path) -> Result<RunReport, RunError> {
    with_manifest(cfg, out_dir, |report| {
        let p = &cfg.model;
        let tc = cfg.turnpike_config();
        let i = tc.strategy - 1;
        let prepared = (|| {
            let grid = grid_of(cfg)?;
            let x0 = cfg.initial_state()?;
            let g_t = terminal_values(cfg, i)?;
            Ok::<_, String>((grid, x0, g_t))
        })();
        let (grid, x0, g_t) = match prepared {
            Ok(v) => v,
            Err(e) => {
                report.fail(e);
                return Ok(());
            }
        };
        let hypotheses = check_hypotheses(p, i, &g_t);
        let result = if tc.enforce_hypotheses {
            solve_turnpike(p, i, &x0, &g_t, &grid)
        } else {
            construct_turnpike(p, i, &x0, &g_t, &grid)
        };
        match result {
            Ok(sol) => {
                let name = trajectory_table(&sol, cfg.output.stride).write(
                    out_dir,
                    "trajectory",
                    cfg.output.format,
                )?;
                report.artifacts.push(name);
                let metrics = if p.delta > 0.0 {
                    solve_single(p, i)
                        .ok()
                        .map(|eq| turnpike_metrics(&sol, &eq, tc.eps))
                } else {
                    None
                };
                let summary = json!({
                    "strategy": tc.strategy,
                    "certified": sol.certified,
                    "first_violation": sol.first_violation,
                    "gap_discrepancy": sol.gap_discrepancy,
                    "stats": sol.stats,
                    "metrics": metrics,
                    "hypotheses": hypotheses,
                });
                write_json(out_dir, "turnpike.json", &summary)?;
                report.artifacts.push("turnpike.json".into());
                report.points_ok += 1;
            }
            Err(e) => {
                write_json(
                    out_dir,
                    "turnpike.json",
                    &json!({ "strategy": tc.strategy, "error": e.to_string(), "hypotheses": hypotheses }),
                )?;
                report.artifacts.push("turnpike.json".into());
                report.fail(e.to_string());
            }
        }
        Ok(())
    })
}

pub fn run_nplayer(cfg: &ScenarioConfig, out_dir: &Path) -> Result<RunReport, RunError> {
    with_manifest(cfg, out_dir, |report| {
        let p = &cfg.model;
        let u = cfg.control_config().control(p.d);
        let np = cfg.nplayer.clone().expect("validated");
        let prepared = grid_of(cfg).and_then(|g| cfg.initial_state().map(|x| (g, x)));
        let (grid, x0) = match prepared {
            Ok(v) => v,
            Err(e) => {
                report.fail(e);
                return Ok(());
            }
        };
        let rows = match lln_error(p, &u, &x0, &grid, &np.n_list, np.replications, cfg.seed) {
            Ok(rows) => rows,
            Err(e) => {
                report.fail(e.to_string());
                return Ok(());
            }
        };
        let table = Table {
            header: ["n", "replications", "mean_sup_error", "std_error"]
                .map(String::from)
                .to_vec(),
            rows: rows
                .iter()
                .map(|r| {
                    vec![
                        Cell::Int(r.n),
                        Cell::Int(r.replications as u64),
                        Cell::Num(r.mean_error),
                        r.std_error.into(),
                    ]
                })
                .collect(),
        };
        report
            .artifacts
            .push(table.write(out_dir, "lln", cfg.output.format)?);

        // one sample path at the largest population, on its own stream
        let n_max = *np.n_list.iter().max().expect("validated non-empty");
        let n0 = CountVector::from_fractions(&x0, n_max);
        let stream = replication_stream(np.n_list.len(), 0);
        let path = simulate_stream(p, &n0, &u, grid.t_end - grid.t_start, cfg.seed, stream);
        let offsets: Vec<f64> = strided(grid.len(), cfg.output.stride)
            .into_iter()
            .map(|s| grid.time(s) - grid.t_start)
            .collect();
        let counts = path.sample(&offsets);
        let mut header = vec!["t".to_string()];
        header.extend(state_columns("n", p.d));
        let sample = Table {
            header,
            rows: offsets
                .iter()
                .zip(&counts)
                .map(|(t, n)| {
                    std::iter::once(Cell::Num(t + grid.t_start))
                        .chain(n.as_slice().iter().map(|&c| Cell::Int(c)))
                        .collect()
                })
                .collect(),
        };
        report
            .artifacts
            .push(sample.write(out_dir, "ctmc_path", cfg.output.format)?);
        write_json(
            out_dir,
            "nplayer.json",
            &json!({
                "control": u,
                "lln": rows,
                "sample_n": n_max,
                "sample_events": path.events.len(),
                "sample_terminal_fractions": path.terminal().fractions(),
            }),
        )?;
        report.artifacts.push("nplayer.json".into());
        report.points_ok += 1;
        Ok(())
    })
}

/// Cartesian product of the axis values, first axis slowest.
fn sweep_points(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, values| {
        acc.iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

pub fn run_sweep(cfg: &ScenarioConfig, out_dir: &Path) -> Result<RunReport, RunError> {
    with_manifest(cfg, out_dir, |report| {
        let base = &cfg.model;
        let d = base.d;
        let sweep = cfg.sweep.clone().expect("validated");
        let paths: Vec<ParamPath> = sweep
            .axes
            .iter()
            .map(|a| ParamPath::parse(&a.path, d).expect("validated"))
            .collect();
        let values: Vec<Vec<f64>> = sweep.axes.iter().map(|a| a.values.clone()).collect();
        let points = sweep_points(&values);

        let results: Vec<Result<EquilibriumSet, String>> = points
            .par_iter()
            .map(|point| {
                let mut p = base.clone();
                for (path, &v) in paths.iter().zip(point) {
                    path.apply(&mut p, v);
                }
                enumerate_equilibria(&p).map_err(|e| e.to_string())
            })
            .collect();

        let families = candidate_families(d);
        let mut header = vec!["point".to_string()];
        header.extend(sweep.axes.iter().map(|a| a.path.clone()));
        header.push("status".into());
        header.push("equilibria".into());
        for f in &families {
            for col in ["status", "x_star", "min_margin", "max_real_part"] {
                header.push(format!("{f}:{col}"));
            }
        }
        header.push("error".into());

        let mut rows = Vec::with_capacity(points.len());
        for (idx, (point, result)) in points.iter().zip(&results).enumerate() {
            let mut row = vec![Cell::Int(idx as u64)];
            row.extend(point.iter().map(|&v| Cell::Num(v)));
            match result {
                Ok(set) => {
                    report.points_ok += 1;
                    row.push(Cell::Text("ok".into()));
                    let labels: Vec<String> =
                        set.equilibria().map(|e| e.family.to_string()).collect();
                    row.push(Cell::Text(labels.join(";")));
                    for c in &set.candidates {
                        row.push(Cell::Text(status_name(c)));
                        match &c.solution {
                            Some(s) => {
                                let i = s.family.infected_target();
                                row.push(Cell::Num(s.x_star.infected(i)));
                                row.push(Cell::Num(s.margins.min_exact()));
                                row.push(Cell::Num(s.stability.max_real_part));
                            }
                            None => row.extend(std::iter::repeat_n(Cell::Empty, 3)),
                        }
                    }
                    row.push(Cell::Empty);
                }
                Err(e) => {
                    report.fail(format!("point {idx}: {e}"));
                    row.push(Cell::Text("failed".into()));
                    row.push(Cell::Empty);
                    row.extend(std::iter::repeat_n(Cell::Empty, 4 * families.len()));
                    row.push(Cell::Text(e.clone()));
                }
            }
            rows.push(row);
        }
        let name = Table { header, rows }.write(out_dir, "sweep", cfg.output.format)?;
        report.artifacts.push(name);
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_text() {
        for v in [0.1, 1.0 / 3.0, 15.867_382_712_345_678, 1e-300, -2.5e17] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn cartesian_order_is_row_major() {
        let pts = sweep_points(&[vec![1.0, 2.0], vec![10.0, 20.0, 30.0]]);
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[1], vec![1.0, 20.0]);
        assert_eq!(pts[3], vec![2.0, 10.0]);
    }

    #[test]
    fn stride_keeps_the_last_node() {
        assert_eq!(strided(10, 4), vec![0, 4, 8, 9]);
        assert_eq!(strided(9, 4), vec![0, 4, 8]);
    }
}
