//! Time-dependent forward/backward integration and the turnpike
//! construction around a `Single(i)` equilibrium.

pub mod ode;
mod turnpike;

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    control_suboptimality, hjb_field, hjb_field_with_control, kinetic_field, MixedState,
    ModelError, ModelParams, StationaryControl, ValueVector, TIE_TOL,
};

pub use turnpike::{
    check_hypotheses, construct_turnpike, gap_closed_form, in_cone, solve_turnpike,
    turnpike_metrics, HypothesisCheck, TrajectorySolution, TurnpikeMetrics, TurnpikeStats,
    DEFAULT_TURNPIKE_EPS,
};

/// An RK stage may dip below zero by at most this much before the step is
/// halved.
pub const SIMPLEX_VIOLATION_TOL: f64 = 1e-6;

/// Maximum number of step halvings per grid step.
pub const MAX_HALVINGS: u32 = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid time grid: {0}")]
    Grid(String),
    #[error("forward step at t = {t} still leaves the simplex after {MAX_HALVINGS} halvings")]
    StepRejected { t: f64 },
    #[error("path has {found} nodes, grid needs {expected}")]
    PathLength { expected: usize, found: usize },
    #[error("turnpike hypotheses violated: {}", names(.0))]
    Hypothesis(Vec<HypothesisCheck>),
    #[error("turnpike needs a stationary reference: {0}")]
    Stationary(String),
}

fn names(v: &[HypothesisCheck]) -> String {
    v.iter()
        .map(|h| h.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Uniform grid `t_start + s h`, `s = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_steps: usize) -> Result<Self, DynamicsError> {
        if !(t_start.is_finite() && t_end.is_finite()) || t_end <= t_start {
            return Err(DynamicsError::Grid(format!(
                "need t_end > t_start (got {t_start}, {t_end})"
            )));
        }
        if n_steps == 0 {
            return Err(DynamicsError::Grid("need at least one step".into()));
        }
        Ok(Self {
            t_start,
            t_end,
            n_steps,
        })
    }

    /// Finest uniform grid whose step does not exceed `h_max`.
    pub fn with_max_step(t_start: f64, t_end: f64, h_max: f64) -> Result<Self, DynamicsError> {
        if h_max.is_nan() || h_max <= 0.0 {
            return Err(DynamicsError::Grid(format!(
                "step must be positive (got {h_max})"
            )));
        }
        let n = ((t_end - t_start) / h_max * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Self::new(t_start, t_end, n)
    }

    /// Grid with the default step for `p`.
    pub fn for_model(p: &ModelParams, t_start: f64, t_end: f64) -> Result<Self, DynamicsError> {
        Self::with_max_step(t_start, t_end, default_step(p))
    }

    pub fn h(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_steps as f64
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, s: usize) -> f64 {
        if s == self.n_steps {
            self.t_end
        } else {
            self.t_start + s as f64 * self.h()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|s| self.time(s)).collect()
    }
}

/// `min(0.01, 0.1 / λ)`.
pub fn default_step(p: &ModelParams) -> f64 {
    0.01f64.min(0.1 / p.lambda)
}

/// RK4 path of the kinetic equation under a fixed control, one state per
/// grid node. Each node is projected back onto the simplex.
pub fn integrate_forward(
    p: &ModelParams,
    x0: &MixedState,
    u: &StationaryControl,
    grid: &TimeGrid,
) -> Result<Vec<MixedState>, DynamicsError> {
    if x0.as_slice().len() != p.n_states() {
        return Err(ModelError::Dimension {
            expected: p.n_states(),
            found: x0.as_slice().len(),
        }
        .into());
    }
    let field = |_t: f64, y: &[f64]| kinetic_field(p, y, u);
    let on_simplex = |y: &[f64]| y.iter().all(|&v| v >= -SIMPLEX_VIOLATION_TOL);
    let h = grid.h();
    let mut path = Vec::with_capacity(grid.len());
    path.push(x0.clone());
    for s in 0..grid.n_steps {
        let t = grid.time(s);
        let start = path[s].as_slice();
        let mut next = None;
        for halvings in 0..=MAX_HALVINGS {
            let sub = 1usize << halvings;
            let hs = h / sub as f64;
            let mut y = start.to_vec();
            let mut ok = true;
            for m in 0..sub {
                match ode::rk4_step_checked(&field, t + m as f64 * hs, &y, hs, on_simplex) {
                    Some(v) => y = v,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                next = Some(y);
                break;
            }
        }
        let y = next.ok_or(DynamicsError::StepRejected { t })?;
        path.push(MixedState::project(y));
    }
    Ok(path)
}

/// How the decision term of the backward equation is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BackwardMode {
    /// Frozen at the reference control (the equation is then linear in g).
    Fixed,
    /// Explicit minimum at every stage.
    Adaptive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackwardPath {
    pub g_path: Vec<ValueVector>,
    /// Reference control attains the minimum at the node (within the tie
    /// tolerance).
    pub argmin_ok: Vec<bool>,
}

/// Integrates the discounted HJB backward from `g_T` at `grid.t_end`
/// against `x_path`, which is interpolated linearly inside each step.
pub fn integrate_backward(
    p: &ModelParams,
    g_t: &ValueVector,
    x_path: &[MixedState],
    reference: &StationaryControl,
    mode: BackwardMode,
    grid: &TimeGrid,
) -> Result<BackwardPath, DynamicsError> {
    if x_path.len() != grid.len() {
        return Err(DynamicsError::PathLength {
            expected: grid.len(),
            found: x_path.len(),
        });
    }
    let h = grid.h();
    let n = grid.n_steps;
    let mut g_rev: Vec<Vec<f64>> = Vec::with_capacity(grid.len());
    g_rev.push(g_t.as_slice().to_vec());
    for s in (0..n).rev() {
        let late = x_path[s + 1].as_slice();
        let early = x_path[s].as_slice();
        // τ runs from t_{s+1} (τ = 0) back to t_s (τ = h)
        let field = |tau: f64, g: &[f64]| {
            let theta = tau / h;
            let x: Vec<f64> = late
                .iter()
                .zip(early)
                .map(|(a, b)| a + theta * (b - a))
                .collect();
            match mode {
                BackwardMode::Fixed => hjb_field_with_control(p, &x, g, reference),
                BackwardMode::Adaptive => hjb_field(p, &x, g),
            }
        };
        let next = ode::rk4_step(&field, 0.0, g_rev.last().expect("non-empty"), h);
        g_rev.push(next);
    }
    g_rev.reverse();
    let mut g_path = Vec::with_capacity(g_rev.len());
    let mut argmin_ok = Vec::with_capacity(g_rev.len());
    for g in g_rev {
        argmin_ok.push(control_suboptimality(&g, reference) <= TIE_TOL);
        g_path.push(ValueVector::new(g)?);
    }
    Ok(BackwardPath { g_path, argmin_ok })
}
