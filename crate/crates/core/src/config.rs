//! Scenario files: JSON in, fully validated [`ScenarioConfig`] out.
//!
//! Validation never stops at the first problem. Unknown keys are found by
//! walking the raw JSON, each block is then deserialized on its own, and
//! finally the model and run invariants are checked; every message from
//! every stage is returned together.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::model::{ControlFamily, MixedState, ModelParams, StationaryControl};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("not valid JSON: {0}")]
    Json(String),
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    /// Enumerate and certify all stationary candidates.
    Equilibria,
    /// Forward mean-field path under a fixed control.
    Simulate,
    /// Forward-backward turnpike around `Single(i)`.
    Turnpike,
    /// Finite-N chain against the mean-field path.
    Nplayer,
    /// Equilibria over a cartesian grid of parameter overrides.
    Sweep,
}

impl fmt::Display for RunKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RunKind::Equilibria => "equilibria",
            RunKind::Simulate => "simulate",
            RunKind::Turnpike => "turnpike",
            RunKind::Nplayer => "nplayer",
            RunKind::Sweep => "sweep",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    /// Largest step; defaults to `min(0.01, 0.1 / λ)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

/// Strategies are 1-based in files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlConfig {
    Single { i: usize },
    Mixed { i: usize, k: usize },
}

impl ControlConfig {
    pub fn family(&self) -> ControlFamily {
        match *self {
            ControlConfig::Single { i } => ControlFamily::Single { i: i - 1 },
            ControlConfig::Mixed { i, k } => ControlFamily::Mixed { i: i - 1, k: k - 1 },
        }
    }

    pub fn control(&self, d: usize) -> StationaryControl {
        StationaryControl::from_family(d, self.family())
    }
}

impl Default for ControlConfig {
    fn default() -> Self {
        ControlConfig::Single { i: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatePreset {
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    Preset(StatePreset),
    Values(Vec<f64>),
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Preset(StatePreset::Uniform)
    }
}

impl InitialState {
    pub fn resolve(&self, d: usize) -> Result<MixedState, String> {
        match self {
            InitialState::Preset(StatePreset::Uniform) => Ok(MixedState::uniform(d)),
            InitialState::Values(v) => {
                MixedState::for_model(v.clone(), d).map_err(|e| format!("x0: {e}"))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalPreset {
    /// The stationary values of the `Single(i)` equilibrium.
    Stationary,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TerminalSpec {
    Preset(TerminalPreset),
    Values(Vec<f64>),
}

impl Default for TerminalSpec {
    fn default() -> Self {
        TerminalSpec::Preset(TerminalPreset::Stationary)
    }
}

fn default_strategy() -> usize {
    1
}

fn default_eps() -> f64 {
    crate::dynamics::DEFAULT_TURNPIKE_EPS
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurnpikeConfig {
    #[serde(default = "default_strategy")]
    pub strategy: usize,
    #[serde(default)]
    pub terminal: TerminalSpec,
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Refuse to run when a hypothesis of the construction fails.
    #[serde(default = "yes")]
    pub enforce_hypotheses: bool,
}

impl Default for TurnpikeConfig {
    fn default() -> Self {
        Self {
            strategy: 1,
            terminal: TerminalSpec::default(),
            eps: default_eps(),
            enforce_hypotheses: true,
        }
    }
}

fn default_replications() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NPlayerConfig {
    pub n_list: Vec<u64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// `lambda`, `delta`, `q_plus.j`, `q_minus.j`, `w_I.j`, `w_S.j` or
    /// `beta.k.j` (1-based).
    pub path: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axes: Vec<SweepAxis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    /// Write every `stride`-th node of long paths.
    #[serde(default = "default_stride")]
    pub stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            format: OutputFormat::Csv,
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelParams,
    pub run: RunKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<InitialState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turnpike: Option<TurnpikeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nplayer: Option<NPlayerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

/// Which scalar of [`ModelParams`] a sweep axis overrides (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamPath {
    Lambda,
    Delta,
    QPlus(usize),
    QMinus(usize),
    WI(usize),
    WS(usize),
    Beta(usize, usize),
}

impl ParamPath {
    pub fn parse(path: &str, d: usize) -> Result<Self, String> {
        let parts: Vec<&str> = path.split('.').collect();
        let index = |s: &str| -> Result<usize, String> {
            match s.parse::<usize>() {
                Ok(j) if (1..=d).contains(&j) => Ok(j - 1),
                _ => Err(format!("index `{s}` in `{path}` must be in 1..={d}")),
            }
        };
        match parts.as_slice() {
            ["lambda"] => Ok(ParamPath::Lambda),
            ["delta"] => Ok(ParamPath::Delta),
            ["q_plus", j] => Ok(ParamPath::QPlus(index(j)?)),
            ["q_minus", j] => Ok(ParamPath::QMinus(index(j)?)),
            ["w_I", j] => Ok(ParamPath::WI(index(j)?)),
            ["w_S", j] => Ok(ParamPath::WS(index(j)?)),
            ["beta", k, j] => Ok(ParamPath::Beta(index(k)?, index(j)?)),
            _ => Err(format!("unknown parameter path `{path}`")),
        }
    }

    pub fn apply(&self, p: &mut ModelParams, value: f64) {
        match *self {
            ParamPath::Lambda => p.lambda = value,
            ParamPath::Delta => p.delta = value,
            ParamPath::QPlus(j) => p.q_plus[j] = value,
            ParamPath::QMinus(j) => p.q_minus[j] = value,
            ParamPath::WI(j) => p.w_i[j] = value,
            ParamPath::WS(j) => p.w_s[j] = value,
            ParamPath::Beta(k, j) => p.beta[k][j] = value,
        }
    }
}

impl ScenarioConfig {
    pub fn grid(&self) -> Option<&GridConfig> {
        self.grid.as_ref()
    }

    pub fn control_config(&self) -> ControlConfig {
        self.control.unwrap_or_default()
    }

    pub fn initial_state(&self) -> Result<MixedState, String> {
        self.x0.clone().unwrap_or_default().resolve(self.model.d)
    }

    pub fn turnpike_config(&self) -> TurnpikeConfig {
        self.turnpike.clone().unwrap_or_default()
    }

    /// Every invariant of the model and the selected run.
    pub fn violations(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .model
            .violations()
            .into_iter()
            .map(|m| format!("model: {m}"))
            .collect();
        if !out.is_empty() {
            // run-level checks index into the model
            return out;
        }
        let d = self.model.d;
        let needs_grid = matches!(
            self.run,
            RunKind::Simulate | RunKind::Turnpike | RunKind::Nplayer
        );
        match (&self.grid, needs_grid) {
            (None, true) => out.push(format!("grid: required for run `{}`", self.run)),
            (Some(g), _) => {
                if !(g.t_start.is_finite() && g.t_end.is_finite() && g.t_end > g.t_start) {
                    out.push(format!(
                        "grid: need t_end > t_start (got {}, {})",
                        g.t_start, g.t_end
                    ));
                }
                if let Some(h) = g.step {
                    if !(h.is_finite() && h > 0.0) {
                        out.push(format!("grid.step must be > 0 (got {h})"));
                    }
                }
            }
            _ => {}
        }
        if let Some(c) = &self.control {
            let (i, k) = match *c {
                ControlConfig::Single { i } => (i, i),
                ControlConfig::Mixed { i, k } => {
                    if i == k {
                        out.push(format!("control: mixed needs i != k (got {i} twice)"));
                    }
                    (i, k)
                }
            };
            for s in [i, k] {
                if !(1..=d).contains(&s) {
                    out.push(format!("control: strategy {s} outside 1..={d}"));
                }
            }
        }
        if let Err(e) = self.initial_state() {
            out.push(e);
        }
        if self.model.delta <= 0.0 && matches!(self.run, RunKind::Equilibria | RunKind::Sweep) {
            out.push("model: stationary equilibria need delta > 0".into());
        }
        if self.run == RunKind::Turnpike {
            let t = self.turnpike_config();
            if !(1..=d).contains(&t.strategy) {
                out.push(format!("turnpike.strategy {} outside 1..={d}", t.strategy));
            }
            if t.eps.is_nan() || t.eps <= 0.0 {
                out.push(format!("turnpike.eps must be > 0 (got {})", t.eps));
            }
            match &t.terminal {
                TerminalSpec::Values(v) => {
                    if v.len() != 2 * d {
                        out.push(format!(
                            "turnpike.terminal has {} entries, expected {}",
                            v.len(),
                            2 * d
                        ));
                    } else if v.iter().any(|g| !g.is_finite()) {
                        out.push("turnpike.terminal entries must be finite".into());
                    }
                }
                TerminalSpec::Preset(TerminalPreset::Stationary) if self.model.delta <= 0.0 => {
                    out.push("turnpike.terminal = stationary needs delta > 0".into());
                }
                TerminalSpec::Preset(_) => {}
            }
        }
        if self.run == RunKind::Nplayer {
            match &self.nplayer {
                None => out.push("nplayer: required for run `nplayer`".into()),
                Some(n) => {
                    if n.n_list.is_empty() {
                        out.push("nplayer.n_list must not be empty".into());
                    }
                    if n.n_list.contains(&0) {
                        out.push("nplayer.n_list entries must be >= 1".into());
                    }
                    if n.replications == 0 {
                        out.push("nplayer.replications must be >= 1".into());
                    }
                }
            }
        }
        if self.run == RunKind::Sweep {
            match &self.sweep {
                None => out.push("sweep: required for run `sweep`".into()),
                Some(s) => {
                    if s.axes.is_empty() {
                        out.push("sweep.axes must not be empty".into());
                    }
                    for (a, axis) in s.axes.iter().enumerate() {
                        if let Err(e) = ParamPath::parse(&axis.path, d) {
                            out.push(format!("sweep.axes[{a}]: {e}"));
                        }
                        if axis.values.is_empty() {
                            out.push(format!("sweep axis `{}` has no values", axis.path));
                        }
                        if axis.values.iter().any(|v| !v.is_finite()) {
                            out.push(format!("sweep axis `{}` has non-finite values", axis.path));
                        }
                    }
                }
            }
        }
        if self.output.stride == 0 {
            out.push("output.stride must be >= 1".into());
        }
        out
    }
}

/// Allowed keys per object, by dotted location.
fn allowed_keys(location: &str) -> Option<&'static [&'static str]> {
    Some(match location {
        "" => &[
            "model", "run", "grid", "control", "x0", "turnpike", "nplayer", "sweep", "output",
            "seed",
        ],
        "model" => &[
            "d", "lambda", "delta", "q_plus", "q_minus", "beta", "w_I", "w_S",
        ],
        "grid" => &["t_start", "t_end", "step"],
        "control" => &["kind", "i", "k"],
        "turnpike" => &["strategy", "terminal", "eps", "enforce_hypotheses"],
        "nplayer" => &["n_list", "replications"],
        "sweep" => &["axes"],
        "sweep.axes[]" => &["path", "values"],
        "output" => &["dir", "format", "stride"],
        _ => return None,
    })
}

fn unknown_keys(location: &str, value: &Value, out: &mut Vec<String>) {
    match value {
        Value::Object(map) => {
            if let Some(allowed) = allowed_keys(location) {
                for (key, child) in map {
                    let here = if location.is_empty() {
                        key.clone()
                    } else {
                        format!("{location}.{key}")
                    };
                    if allowed.contains(&key.as_str()) {
                        unknown_keys(&here, child, out);
                    } else {
                        out.push(format!("unknown key `{here}`"));
                    }
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                unknown_keys(&format!("{location}[]"), item, out);
            }
        }
        _ => {}
    }
}

fn block<T: for<'de> Deserialize<'de>>(
    map: &Map<String, Value>,
    key: &str,
    errors: &mut Vec<String>,
) -> Option<T> {
    let v = map.get(key)?;
    match serde_json::from_value::<T>(v.clone()) {
        Ok(t) => Some(t),
        Err(e) => {
            errors.push(format!("{key}: {e}"));
            None
        }
    }
}

/// Parses and validates a scenario from JSON text.
pub fn parse_config_str(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let raw: Value = serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
    let Value::Object(map) = &raw else {
        return Err(ConfigError::Invalid(vec![
            "top level must be a JSON object".into(),
        ]));
    };
    let mut errors = Vec::new();
    unknown_keys("", &raw, &mut errors);
    if !errors.is_empty() {
        return Err(ConfigError::Invalid(errors));
    }

    for required in ["model", "run"] {
        if !map.contains_key(required) {
            errors.push(format!("missing key `{required}`"));
        }
    }
    let model: Option<ModelParams> = block(map, "model", &mut errors);
    let run: Option<RunKind> = block(map, "run", &mut errors);
    let grid: Option<GridConfig> = block(map, "grid", &mut errors);
    let control: Option<ControlConfig> = block(map, "control", &mut errors);
    let x0: Option<InitialState> = block(map, "x0", &mut errors);
    let turnpike: Option<TurnpikeConfig> = block(map, "turnpike", &mut errors);
    let nplayer: Option<NPlayerConfig> = block(map, "nplayer", &mut errors);
    let sweep: Option<SweepConfig> = block(map, "sweep", &mut errors);
    let output: Option<OutputConfig> = block(map, "output", &mut errors);
    let seed: Option<u64> = block(map, "seed", &mut errors);
    if !errors.is_empty() {
        return Err(ConfigError::Invalid(errors));
    }
    let cfg = ScenarioConfig {
        model: model.expect("checked"),
        run: run.expect("checked"),
        grid,
        control,
        x0,
        turnpike,
        nplayer,
        sweep,
        output: output.unwrap_or_default(),
        seed: seed.unwrap_or(0),
    };
    let violations = cfg.violations();
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(violations))
    }
}

/// Reads, parses and validates a scenario file.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_config_str(&text)
}
