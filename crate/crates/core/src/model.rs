//! Game data model and the right-hand sides of the kinetic (forward) and
//! discounted HJB (backward) equations.
//!
//! Every vector over the 2d agent states uses the fixed layout
//! `(1I, 1S, 2I, 2S, ..., dI, dS)`. Strategies are 0-based in the Rust API
//! and 1-based in every human-facing label and file format.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance used to decide that two HJB values tie.
pub const TIE_TOL: f64 = 1e-10;

/// Tolerance on the simplex constraint of a [`MixedState`].
pub const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),
    #[error("state has {found} entries, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("state is off the simplex: {0}")]
    OffSimplex(String),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
}

/// Infected (`I`) or susceptible/senior (`S`) half of a strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Compartment {
    I,
    S,
}

impl Compartment {
    pub const BOTH: [Compartment; 2] = [Compartment::I, Compartment::S];

    fn offset(self) -> usize {
        match self {
            Compartment::I => 0,
            Compartment::S => 1,
        }
    }
}

impl fmt::Display for Compartment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Compartment::I => f.write_str("I"),
            Compartment::S => f.write_str("S"),
        }
    }
}

/// Position of `(strategy, compartment)` in a 2d-vector.
#[inline]
pub fn state_index(strategy: usize, c: Compartment) -> usize {
    2 * strategy + c.offset()
}

/// 1-based label such as `2S`.
pub fn state_label(strategy: usize, c: Compartment) -> String {
    format!("{}{}", strategy + 1, c)
}

/// All constants of the game.
///
/// `beta[k][j]` is the rate at which one agent in `kI` infects a given agent
/// in `jS`; the per-agent infection pressure on `jS` is
/// `q_minus[j] + sum_k beta[k][j] * x_kI`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub d: usize,
    pub lambda: f64,
    pub delta: f64,
    pub q_plus: Vec<f64>,
    pub q_minus: Vec<f64>,
    pub beta: Vec<Vec<f64>>,
    #[serde(rename = "w_I")]
    pub w_i: Vec<f64>,
    #[serde(rename = "w_S")]
    pub w_s: Vec<f64>,
}

impl ModelParams {
    /// Collects every violated invariant instead of stopping at the first.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let d = self.d;
        if d == 0 {
            out.push("d must be at least 1".to_string());
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            out.push(format!(
                "lambda must be finite and > 0 (got {})",
                self.lambda
            ));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            out.push(format!(
                "delta must be finite and >= 0 (got {})",
                self.delta
            ));
        }
        for (name, v) in [
            ("q_plus", &self.q_plus),
            ("q_minus", &self.q_minus),
            ("w_I", &self.w_i),
            ("w_S", &self.w_s),
        ] {
            if v.len() != d {
                out.push(format!("{name} has {} entries, expected d = {d}", v.len()));
            }
        }
        for (name, v) in [("q_plus", &self.q_plus), ("q_minus", &self.q_minus)] {
            for (j, &r) in v.iter().enumerate() {
                if !(r.is_finite() && r > 0.0) {
                    out.push(format!(
                        "{name}[{}] must be finite and > 0 (got {r})",
                        j + 1
                    ));
                }
            }
        }
        if self.beta.len() != d {
            out.push(format!(
                "beta has {} rows, expected d = {d}",
                self.beta.len()
            ));
        }
        for (k, row) in self.beta.iter().enumerate() {
            if row.len() != d {
                out.push(format!(
                    "beta row {} has {} entries, expected d = {d}",
                    k + 1,
                    row.len()
                ));
            }
            for (j, &b) in row.iter().enumerate() {
                if !(b.is_finite() && b >= 0.0) {
                    out.push(format!(
                        "beta[{}][{}] must be finite and >= 0 (got {b})",
                        k + 1,
                        j + 1
                    ));
                }
            }
        }
        for (j, (&wi, &ws)) in self.w_i.iter().zip(&self.w_s).enumerate() {
            if !(wi.is_finite() && ws.is_finite()) {
                out.push(format!("w_I[{0}] and w_S[{0}] must be finite", j + 1));
            } else if ws >= wi {
                out.push(format!(
                    "w_S[{0}] = {ws} must be strictly below w_I[{0}] = {wi}: S is the better state",
                    j + 1
                ));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ModelError::InvalidParams(v))
        }
    }

    /// Number of agent states, `2d`.
    pub fn n_states(&self) -> usize {
        2 * self.d
    }

    /// Population-induced infection rate on `jS`: `sum_k beta[k][j] x_kI`.
    pub fn peer_pressure(&self, j: usize, x: &[f64]) -> f64 {
        (0..self.d)
            .map(|k| self.beta[k][j] * x[state_index(k, Compartment::I)])
            .sum()
    }

    pub fn tilde_rates(&self, x: &MixedState) -> TildeRates {
        TildeRates {
            q_tilde_minus: (0..self.d)
                .map(|j| self.q_minus[j] + self.peer_pressure(j, x.as_slice()))
                .collect(),
        }
    }
}

/// Effective infection rates `q_minus[j] + sum_k beta[k][j] x_kI` at a state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TildeRates {
    pub q_tilde_minus: Vec<f64>,
}

/// Population distribution over the 2d states.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct MixedState(Vec<f64>);

impl MixedState {
    pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
        if values.is_empty() || !values.len().is_multiple_of(2) {
            return Err(ModelError::Dimension {
                expected: 2 * values.len().div_ceil(2).max(1),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite(i));
        }
        if let Some(i) = values.iter().position(|&v| v < -SIMPLEX_TOL) {
            return Err(ModelError::OffSimplex(format!(
                "entry {i} is negative ({})",
                values[i]
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(ModelError::OffSimplex(format!("entries sum to {sum}")));
        }
        Ok(Self(values))
    }

    /// Checks the dimension against `d` as well as the simplex.
    pub fn for_model(values: Vec<f64>, d: usize) -> Result<Self, ModelError> {
        if values.len() != 2 * d {
            return Err(ModelError::Dimension {
                expected: 2 * d,
                found: values.len(),
            });
        }
        Self::new(values)
    }

    pub fn uniform(d: usize) -> Self {
        Self(vec![1.0 / (2 * d) as f64; 2 * d])
    }

    pub fn point_mass(d: usize, strategy: usize, c: Compartment) -> Self {
        let mut v = vec![0.0; 2 * d];
        v[state_index(strategy, c)] = 1.0;
        Self(v)
    }

    /// Clips negatives to zero and rescales to unit mass.
    ///
    /// Panics if the vector has no positive mass.
    pub fn project(mut values: Vec<f64>) -> Self {
        for v in values.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let sum: f64 = values.iter().sum();
        assert!(sum > 0.0, "cannot project a vector without positive mass");
        for v in values.iter_mut() {
            *v /= sum;
        }
        Self(values)
    }

    pub fn strategies(&self) -> usize {
        self.0.len() / 2
    }

    pub fn get(&self, strategy: usize, c: Compartment) -> f64 {
        self.0[state_index(strategy, c)]
    }

    pub fn infected(&self, strategy: usize) -> f64 {
        self.get(strategy, Compartment::I)
    }

    pub fn susceptible(&self, strategy: usize) -> f64 {
        self.get(strategy, Compartment::S)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn sup_distance(&self, other: &MixedState) -> f64 {
        sup_distance(&self.0, &other.0)
    }
}

/// Discounted payoff (cost) per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueVector(Vec<f64>);

impl ValueVector {
    pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
        if values.is_empty() || !values.len().is_multiple_of(2) {
            return Err(ModelError::Dimension {
                expected: 2 * values.len().div_ceil(2).max(1),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite(i));
        }
        Ok(Self(values))
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; 2 * d])
    }

    pub fn strategies(&self) -> usize {
        self.0.len() / 2
    }

    pub fn get(&self, strategy: usize, c: Compartment) -> f64 {
        self.0[state_index(strategy, c)]
    }

    pub fn g_i(&self, strategy: usize) -> f64 {
        self.get(strategy, Compartment::I)
    }

    pub fn g_s(&self, strategy: usize) -> f64 {
        self.get(strategy, Compartment::S)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn sup_distance(&self, other: &ValueVector) -> f64 {
        sup_distance(&self.0, &other.0)
    }
}

pub(crate) fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub(crate) fn sup_norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// The two canonical stationary control families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ControlFamily {
    /// Every agent moves to strategy `i`.
    Single { i: usize },
    /// Infected agents move to `i`, susceptible agents to `k`.
    Mixed { i: usize, k: usize },
}

impl ControlFamily {
    /// Strategy targeted from the `I` compartment.
    pub fn infected_target(&self) -> usize {
        match *self {
            ControlFamily::Single { i } | ControlFamily::Mixed { i, .. } => i,
        }
    }

    /// Strategy targeted from the `S` compartment.
    pub fn susceptible_target(&self) -> usize {
        match *self {
            ControlFamily::Single { i } => i,
            ControlFamily::Mixed { k, .. } => k,
        }
    }

    /// Lexicographic key `(i, k)` with `Single(i) = (i, i)`.
    pub fn sort_key(&self) -> (usize, usize) {
        (self.infected_target(), self.susceptible_target())
    }
}

impl fmt::Display for ControlFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ControlFamily::Single { i } => write!(f, "Single({})", i + 1),
            ControlFamily::Mixed { i, k } => write!(f, "Mixed({},{})", i + 1, k + 1),
        }
    }
}

/// Stationary feedback: the strategy each state's agents decide to move to.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StationaryControl {
    target_i: Vec<usize>,
    target_s: Vec<usize>,
}

impl StationaryControl {
    /// Panics when a target is out of range or the lengths differ.
    pub fn new(target_i: Vec<usize>, target_s: Vec<usize>) -> Self {
        let d = target_i.len();
        assert_eq!(d, target_s.len(), "target vectors must have equal length");
        assert!(
            target_i.iter().chain(&target_s).all(|&t| t < d),
            "control target out of range"
        );
        Self { target_i, target_s }
    }

    pub fn single(d: usize, i: usize) -> Self {
        assert!(i < d, "strategy {i} out of range for d = {d}");
        Self::new(vec![i; d], vec![i; d])
    }

    /// Panics if `k == i`.
    pub fn mixed(d: usize, i: usize, k: usize) -> Self {
        assert!(i < d && k < d, "strategy out of range for d = {d}");
        assert_ne!(i, k, "mixed control needs two distinct strategies");
        Self::new(vec![i; d], vec![k; d])
    }

    pub fn from_family(d: usize, family: ControlFamily) -> Self {
        match family {
            ControlFamily::Single { i } => Self::single(d, i),
            ControlFamily::Mixed { i, k } => Self::mixed(d, i, k),
        }
    }

    pub fn strategies(&self) -> usize {
        self.target_i.len()
    }

    pub fn target(&self, strategy: usize, c: Compartment) -> usize {
        match c {
            Compartment::I => self.target_i[strategy],
            Compartment::S => self.target_s[strategy],
        }
    }

    pub fn targets_i(&self) -> &[usize] {
        &self.target_i
    }

    pub fn targets_s(&self) -> &[usize] {
        &self.target_s
    }

    /// `Some` when the control is `Single(i)` or `Mixed(i, k)`.
    pub fn family(&self) -> Option<ControlFamily> {
        let i = self.target_i[0];
        let k = self.target_s[0];
        let uniform =
            self.target_i.iter().all(|&t| t == i) && self.target_s.iter().all(|&t| t == k);
        match (uniform, i == k) {
            (false, _) => None,
            (true, true) => Some(ControlFamily::Single { i }),
            (true, false) => Some(ControlFamily::Mixed { i, k }),
        }
    }

    pub fn label(&self) -> String {
        match self.family() {
            Some(f) => f.to_string(),
            None => {
                let fmt = |v: &[usize]| {
                    v.iter()
                        .map(|t| (t + 1).to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                };
                format!(
                    "Targets(I:[{}],S:[{}])",
                    fmt(&self.target_i),
                    fmt(&self.target_s)
                )
            }
        }
    }
}

impl fmt::Display for StationaryControl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Serialize for StationaryControl {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            label: String,
            #[serde(rename = "target_I")]
            target_i: Vec<usize>,
            #[serde(rename = "target_S")]
            target_s: Vec<usize>,
        }
        Repr {
            label: self.label(),
            target_i: self.target_i.iter().map(|t| t + 1).collect(),
            target_s: self.target_s.iter().map(|t| t + 1).collect(),
        }
        .serialize(serializer)
    }
}

/// Right-hand side of the kinetic equation on an arbitrary vector.
///
/// No simplex check; integrators and finite-difference Jacobians evaluate
/// slightly off-simplex points.
pub fn kinetic_field(p: &ModelParams, x: &[f64], u: &StationaryControl) -> Vec<f64> {
    let d = p.d;
    let mut dx = vec![0.0; 2 * d];
    for j in 0..d {
        for c in Compartment::BOTH {
            let target = u.target(j, c);
            if target != j {
                let flow = p.lambda * x[state_index(j, c)];
                dx[state_index(j, c)] -= flow;
                dx[state_index(target, c)] += flow;
            }
        }
        let xi = x[state_index(j, Compartment::I)];
        let xs = x[state_index(j, Compartment::S)];
        let net = xs * (p.q_minus[j] + p.peer_pressure(j, x)) - xi * p.q_plus[j];
        dx[state_index(j, Compartment::I)] += net;
        dx[state_index(j, Compartment::S)] -= net;
    }
    dx
}

/// Time derivative of the population distribution under control `u`.
pub fn kinetic_rhs(p: &ModelParams, x: &MixedState, u: &StationaryControl) -> Vec<f64> {
    kinetic_field(p, x.as_slice(), u)
}

/// Outcome of minimising the HJB decision term.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub control: StationaryControl,
    /// Set when some argmin is not unique within [`TIE_TOL`].
    pub degenerate: bool,
}

fn argmin_compartment(g: &[f64], d: usize, c: Compartment) -> (usize, bool) {
    let mut best = 0;
    for m in 1..d {
        if g[state_index(m, c)] < g[state_index(best, c)] {
            best = m;
        }
    }
    let gmin = g[state_index(best, c)];
    let tied = (0..d).any(|m| m != best && g[state_index(m, c)] - gmin <= TIE_TOL);
    (best, tied)
}

/// Individually optimal control: from any state in compartment `c`, move to
/// the strategy with the lowest cost in `c`.
pub fn best_response(g: &ValueVector) -> BestResponse {
    let d = g.strategies();
    let (bi, ti) = argmin_compartment(g.as_slice(), d, Compartment::I);
    let (bs, ts) = argmin_compartment(g.as_slice(), d, Compartment::S);
    BestResponse {
        control: StationaryControl::new(vec![bi; d], vec![bs; d]),
        degenerate: ti || ts,
    }
}

/// Backward HJB field with the decision term evaluated for a fixed control:
/// returns `H(g) - delta * g`, which equals `-dg/dt`.
pub fn hjb_field_with_control(
    p: &ModelParams,
    x: &[f64],
    g: &[f64],
    u: &StationaryControl,
) -> Vec<f64> {
    hjb_field_impl(p, x, g, |j, c| {
        g[state_index(u.target(j, c), c)] - g[state_index(j, c)]
    })
}

/// Backward HJB field with the explicit minimum over decisions.
pub fn hjb_field(p: &ModelParams, x: &[f64], g: &[f64]) -> Vec<f64> {
    let d = p.d;
    let min_i = (0..d)
        .map(|m| g[state_index(m, Compartment::I)])
        .fold(f64::INFINITY, f64::min);
    let min_s = (0..d)
        .map(|m| g[state_index(m, Compartment::S)])
        .fold(f64::INFINITY, f64::min);
    hjb_field_impl(p, x, g, |j, c| {
        let m = match c {
            Compartment::I => min_i,
            Compartment::S => min_s,
        };
        m - g[state_index(j, c)]
    })
}

fn hjb_field_impl(
    p: &ModelParams,
    x: &[f64],
    g: &[f64],
    decision: impl Fn(usize, Compartment) -> f64,
) -> Vec<f64> {
    let mut out = vec![0.0; 2 * p.d];
    for j in 0..p.d {
        let ii = state_index(j, Compartment::I);
        let is = state_index(j, Compartment::S);
        let gap = g[ii] - g[is];
        out[ii] =
            p.lambda * decision(j, Compartment::I) - p.q_plus[j] * gap + p.w_i[j] - p.delta * g[ii];
        out[is] = p.lambda * decision(j, Compartment::S)
            + (p.q_minus[j] + p.peer_pressure(j, x)) * gap
            + p.w_s[j]
            - p.delta * g[is];
    }
    out
}

/// `-dg/dt` of the discounted HJB at population `x`; zero at a stationary
/// discounted value vector.
pub fn hjb_rhs(p: &ModelParams, x: &MixedState, g: &ValueVector) -> Vec<f64> {
    hjb_field(p, x.as_slice(), g.as_slice())
}

/// Same as [`hjb_rhs`] with the decision term fixed to `u`.
pub fn hjb_rhs_with_control(
    p: &ModelParams,
    x: &MixedState,
    g: &ValueVector,
    u: &StationaryControl,
) -> Vec<f64> {
    hjb_field_with_control(p, x.as_slice(), g.as_slice(), u)
}

/// How far `u` is from attaining the minimum of the decision term:
/// `max over states of g(target) - min_m g(m)` in the same compartment.
pub fn control_suboptimality(g: &[f64], u: &StationaryControl) -> f64 {
    let d = u.strategies();
    let mut worst: f64 = 0.0;
    for c in Compartment::BOTH {
        let gmin = (0..d)
            .map(|m| g[state_index(m, c)])
            .fold(f64::INFINITY, f64::min);
        for j in 0..d {
            worst = worst.max(g[state_index(u.target(j, c), c)] - gmin);
        }
    }
    worst
}

/// Stationary MFG certificate: the largest of
/// * the suboptimality of `u` against `g`,
/// * the sup-norm of the kinetic right-hand side,
/// * the sup-norm of the stationary HJB residual under `u`.
///
/// Zero exactly when `(x, g, u)` is a stationary equilibrium.
pub fn consistency_residual(
    p: &ModelParams,
    x: &MixedState,
    g: &ValueVector,
    u: &StationaryControl,
) -> f64 {
    let sub = control_suboptimality(g.as_slice(), u);
    let kin = sup_norm(&kinetic_rhs(p, x, u));
    let hjb = sup_norm(&hjb_rhs_with_control(p, x, g, u));
    sub.max(kin).max(hjb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p0() -> ModelParams {
        ModelParams {
            d: 2,
            lambda: 100.0,
            delta: 0.1,
            q_plus: vec![0.5, 0.6],
            q_minus: vec![0.5, 0.3],
            beta: vec![vec![0.2, 0.05], vec![0.05, 0.05]],
            w_i: vec![2.0, 3.0],
            w_s: vec![1.0, 2.5],
        }
    }

    #[test]
    fn absorbing_point_mass_without_pressure() {
        let mut p = p0();
        p.q_minus[0] = 0.0;
        p.beta = vec![vec![0.0; 2]; 2];
        let x = MixedState::point_mass(2, 0, Compartment::S);
        let dx = kinetic_rhs(&p, &x, &StationaryControl::single(2, 0));
        assert!(dx.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn p0_single_one_fixed_point_is_stationary() {
        let x = MixedState::new(vec![0.54951, 0.45049, 0.0, 0.0]).unwrap();
        let dx = kinetic_rhs(&p0(), &x, &StationaryControl::single(2, 0));
        assert!(dx.iter().all(|v| v.abs() < 1e-4), "{dx:?}");
    }

    #[test]
    fn rejects_off_simplex_states() {
        assert!(matches!(
            MixedState::new(vec![0.6, 0.5, 0.0, 0.0]),
            Err(ModelError::OffSimplex(_))
        ));
        assert!(matches!(
            MixedState::new(vec![1.1, -0.1, 0.0, 0.0]),
            Err(ModelError::OffSimplex(_))
        ));
        assert!(matches!(
            MixedState::for_model(vec![0.5, 0.5], 2),
            Err(ModelError::Dimension { .. })
        ));
    }

    #[test]
    fn hjb_constant_values_give_running_cost() {
        let mut p = p0();
        p.beta = vec![vec![0.0; 2]; 2];
        p.delta = 0.0;
        p.w_i = vec![1.5, 1.5];
        p.w_s = vec![1.5, 1.5];
        let x = MixedState::uniform(2);
        let g = ValueVector::new(vec![4.0; 4]).unwrap();
        let r = hjb_rhs(&p, &x, &g);
        assert!(r.iter().all(|v| (v - 1.5).abs() < 1e-15));
        p.w_i = vec![0.0; 2];
        p.w_s = vec![0.0; 2];
        assert!(hjb_rhs(&p, &x, &g).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn hjb_single_strategy_has_no_decision_term() {
        let p = ModelParams {
            d: 1,
            lambda: 50.0,
            delta: 0.2,
            q_plus: vec![0.4],
            q_minus: vec![0.7],
            beta: vec![vec![0.3]],
            w_i: vec![2.0],
            w_s: vec![1.0],
        };
        let x = MixedState::new(vec![0.3, 0.7]).unwrap();
        let g = ValueVector::new(vec![5.0, 3.0]).unwrap();
        let r = hjb_rhs(&p, &x, &g);
        let a = 0.7 + 0.3 * 0.3;
        assert!((r[0] - (-0.4 * 2.0 + 2.0 - 0.2 * 5.0)).abs() < 1e-14);
        assert!((r[1] - (a * 2.0 + 1.0 - 0.2 * 3.0)).abs() < 1e-14);
    }

    #[test]
    fn best_response_examples() {
        let g = ValueVector::new(vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        let br = best_response(&g);
        assert_eq!(
            br.control.family(),
            Some(ControlFamily::Mixed { i: 0, k: 1 })
        );
        assert!(!br.degenerate);

        let g = ValueVector::new(vec![1.0, 2.0, 1.0, 1.0]).unwrap();
        assert!(best_response(&g).degenerate);
    }

    #[test]
    fn labels_are_one_based() {
        assert_eq!(StationaryControl::single(3, 0).label(), "Single(1)");
        assert_eq!(StationaryControl::mixed(3, 2, 1).label(), "Mixed(3,2)");
        assert_eq!(state_label(1, Compartment::S), "2S");
        let general = StationaryControl::new(vec![0, 1], vec![1, 1]);
        assert_eq!(general.family(), None);
        assert_eq!(general.label(), "Targets(I:[1,2],S:[2,2])");
    }

    #[test]
    fn better_state_assumption_is_enforced() {
        let mut p = p0();
        std::mem::swap(&mut p.w_i, &mut p.w_s);
        let v = p.violations();
        assert_eq!(v.len(), 2);
        assert!(v[0].contains("better state"));
    }
}
