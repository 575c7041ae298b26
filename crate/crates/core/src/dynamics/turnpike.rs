use std::fmt;

use serde::Serialize;

use crate::model::{
    sup_distance, Compartment, MixedState, ModelParams, StationaryControl, ValueVector, TIE_TOL,
};
use crate::stationary::{fixed_point_single, hjb_single_exact, EquilibriumSolution};

use super::{integrate_backward, integrate_forward, BackwardMode, DynamicsError, TimeGrid};

/// Default closeness threshold for the turnpike window.
pub const DEFAULT_TURNPIKE_EPS: f64 = 1e-3;

/// Fraction of the horizon trimmed at each end for the mid-window statistics.
const EDGE_FRACTION: f64 = 0.1;

/// One named hypothesis of the turnpike construction, with its slack.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: &'static str,
    /// Competing strategy, 0-based (absent for global conditions).
    pub strategy: Option<usize>,
    pub margin: f64,
    pub satisfied: bool,
}

impl fmt::Display for HypothesisCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        if let Some(j) = self.strategy {
            write!(f, " (strategy {})", j + 1)?;
        }
        write!(f, ": margin {:.6e}", self.margin)
    }
}

/// `g(iI) ≤ g(jI)`, `g(iS) ≤ g(jS)` for `j ≠ i` and `g(jI) ≥ g(jS)` for all
/// `j`, each up to the tie tolerance.
pub fn in_cone(g: &ValueVector, i: usize) -> bool {
    let d = g.strategies();
    (0..d).all(|j| {
        g.g_i(j) >= g.g_s(j) - TIE_TOL
            && (j == i || (g.g_i(i) <= g.g_i(j) + TIE_TOL && g.g_s(i) <= g.g_s(j) + TIE_TOL))
    })
}

/// Evaluates every hypothesis of the `Single(i)` turnpike construction:
/// the strengthened large-λ consistency inequalities, the rate ordering,
/// membership of `g_T` in the cone, and the smallness of the terminal gap
/// (via the worst-case bound `a(t) ≥ q^i_+ + q^i_- + δ`).
pub fn check_hypotheses(p: &ModelParams, i: usize, g_t: &ValueVector) -> Vec<HypothesisCheck> {
    let mut out = Vec::new();
    let mut push = |name, strategy, margin: f64, strict: bool| {
        let satisfied = if strict {
            margin > 0.0
        } else {
            margin >= -TIE_TOL
        };
        out.push(HypothesisCheck {
            name,
            strategy,
            margin,
            satisfied,
        })
    };
    let base = p.w_i[i] - p.w_s[i];
    let slow = p.q_minus[i] + p.q_plus[i] + p.delta;
    let gap_t = g_t.g_i(i) - g_t.g_s(i);
    let gap_bound = gap_t.max(0.0) + base / slow;
    let beta_max_into_i = (0..p.d)
        .map(|k| p.beta[k][i])
        .fold(f64::NEG_INFINITY, f64::max);

    for j in (0..p.d).filter(|&j| j != i) {
        push(
            "strengthened_consistency_I",
            Some(j),
            (p.w_i[j] - p.w_i[i]) / base - (p.q_plus[j] - p.q_plus[i]) / slow,
            true,
        );
        push(
            "strengthened_consistency_S",
            Some(j),
            (p.w_s[j] - p.w_s[i]) / base - (p.q_minus[i] - p.q_minus[j]) / slow,
            true,
        );
        push(
            "rate_ordering_recovery",
            Some(j),
            p.q_plus[j] - p.q_plus[i],
            true,
        );
        push(
            "rate_ordering_pressure",
            Some(j),
            p.q_minus[i] - p.q_minus[j],
            true,
        );
    }
    for j in 0..p.d {
        push(
            "terminal_cone_order",
            Some(j),
            g_t.g_i(j) - g_t.g_s(j),
            false,
        );
    }
    for j in (0..p.d).filter(|&j| j != i) {
        push("terminal_cone_I", Some(j), g_t.g_i(j) - g_t.g_i(i), false);
        push("terminal_cone_S", Some(j), g_t.g_s(j) - g_t.g_s(i), false);
    }
    for j in (0..p.d).filter(|&j| j != i) {
        let beta_min_into_j = (0..p.d).map(|k| p.beta[k][j]).fold(f64::INFINITY, f64::min);
        let beta_spread = (beta_max_into_i - beta_min_into_j).max(0.0);
        push(
            "terminal_gap_smallness_I",
            Some(j),
            (p.w_i[j] - p.w_i[i]) - (p.q_plus[j] - p.q_plus[i]) * gap_bound,
            true,
        );
        push(
            "terminal_gap_smallness_S",
            Some(j),
            (p.w_s[j] - p.w_s[i]) - (p.q_minus[i] - p.q_minus[j] + beta_spread) * gap_bound,
            true,
        );
    }
    out
}

/// `g_t(iI) - g_t(iS)` at every node from its scalar linear equation
/// `d/dt gap = a(t) gap - (w^i_I - w^i_S)`, with
/// `a = q^i_+ + q^i_- + δ + Σ_k β_ki x_kI` interpolated linearly between
/// nodes. The exponent is integrated exactly on each cell, the source
/// term by Simpson's rule.
pub fn gap_closed_form(
    p: &ModelParams,
    i: usize,
    x_path: &[MixedState],
    gap_t: f64,
    grid: &TimeGrid,
) -> Vec<f64> {
    let rate = |x: &MixedState| {
        p.q_plus[i]
            + p.q_minus[i]
            + p.delta
            + (0..p.d).map(|k| p.beta[k][i] * x.infected(k)).sum::<f64>()
    };
    let a: Vec<f64> = x_path.iter().map(rate).collect();
    let h = grid.h();
    let w = p.w_i[i] - p.w_s[i];
    let mut gap = vec![0.0; x_path.len()];
    let last = x_path.len() - 1;
    gap[last] = gap_t;
    for s in (0..last).rev() {
        let slope = (a[s + 1] - a[s]) / h;
        let exponent = |tau: f64| a[s] * tau + 0.5 * slope * tau * tau;
        let decay = (-exponent(h)).exp();
        let source = h / 6.0 * (1.0 + 4.0 * (-exponent(0.5 * h)).exp() + decay);
        gap[s] = decay * gap[s + 1] + w * source;
    }
    gap
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TurnpikeStats {
    /// The middle 80% of the horizon.
    pub window_start: f64,
    pub window_end: f64,
    /// Sup-distance of `x(s)` to `x*` over the window.
    pub x_sup: f64,
    /// Sup-distance of `g(s)` to the stationary values (needs `δ > 0`).
    pub g_sup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySolution {
    pub grid: TimeGrid,
    pub strategy: usize,
    pub control: StationaryControl,
    pub x_path: Vec<MixedState>,
    pub g_path: Vec<ValueVector>,
    pub cone_ok: Vec<bool>,
    pub argmin_ok: Vec<bool>,
    /// Cone and argmin hold at every node.
    pub certified: bool,
    /// Latest node time at which the cone or argmin check fails, i.e. the
    /// first failure met by the backward evolution.
    pub first_violation: Option<f64>,
    /// Terminal gap propagated by [`gap_closed_form`].
    pub gap_closed_form: Vec<f64>,
    /// Sup-distance between the integrated and closed-form gaps.
    pub gap_discrepancy: f64,
    pub stationary_x: MixedState,
    pub stationary_g: Option<ValueVector>,
    pub stats: TurnpikeStats,
    pub hypotheses: Vec<HypothesisCheck>,
}

/// Hypothesis-checked turnpike: rejects inputs violating any hypothesis from
/// [`check_hypotheses`], then builds the pair with [`construct_turnpike`].
pub fn solve_turnpike(
    p: &ModelParams,
    i: usize,
    x0: &MixedState,
    g_t: &ValueVector,
    grid: &TimeGrid,
) -> Result<TrajectorySolution, DynamicsError> {
    p.validate()?;
    check_dims(p, i, g_t)?;
    let checks = check_hypotheses(p, i, g_t);
    let violated: Vec<HypothesisCheck> = checks.iter().filter(|c| !c.satisfied).cloned().collect();
    if !violated.is_empty() {
        return Err(DynamicsError::Hypothesis(violated));
    }
    construct_turnpike(p, i, x0, g_t, grid)
}

fn check_dims(p: &ModelParams, i: usize, g_t: &ValueVector) -> Result<(), DynamicsError> {
    if i >= p.d {
        return Err(DynamicsError::Stationary(format!(
            "strategy {} out of range",
            i + 1
        )));
    }
    if g_t.as_slice().len() != p.n_states() {
        return Err(crate::model::ModelError::Dimension {
            expected: p.n_states(),
            found: g_t.as_slice().len(),
        }
        .into());
    }
    Ok(())
}

/// Forward path under `Single(i)`, backward values against it with the
/// control frozen, and the per-node cone/argmin certificate. No hypothesis
/// gate: a broken cone is reported, not raised.
pub fn construct_turnpike(
    p: &ModelParams,
    i: usize,
    x0: &MixedState,
    g_t: &ValueVector,
    grid: &TimeGrid,
) -> Result<TrajectorySolution, DynamicsError> {
    check_dims(p, i, g_t)?;
    let control = StationaryControl::single(p.d, i);
    let x_path = integrate_forward(p, x0, &control, grid)?;
    let back = integrate_backward(p, g_t, &x_path, &control, BackwardMode::Fixed, grid)?;
    let cone_ok: Vec<bool> = back.g_path.iter().map(|g| in_cone(g, i)).collect();
    let first_violation = (0..grid.len())
        .rev()
        .find(|&s| !(cone_ok[s] && back.argmin_ok[s]))
        .map(|s| grid.time(s));

    let gap_t = g_t.g_i(i) - g_t.g_s(i);
    let gaps = gap_closed_form(p, i, &x_path, gap_t, grid);
    let gap_discrepancy = back
        .g_path
        .iter()
        .zip(&gaps)
        .map(|(g, c)| (g.g_i(i) - g.g_s(i) - c).abs())
        .fold(0.0, f64::max);

    let (_, stationary_x) =
        fixed_point_single(p, i).map_err(|e| DynamicsError::Stationary(e.to_string()))?;
    let stationary_g = if p.delta > 0.0 {
        let x_star = stationary_x.get(i, Compartment::I);
        Some(hjb_single_exact(p, i, x_star).map_err(|e| DynamicsError::Stationary(e.to_string()))?)
    } else {
        None
    };
    let stats = window_stats(
        grid,
        &x_path,
        &back.g_path,
        &stationary_x,
        stationary_g.as_ref(),
    );

    Ok(TrajectorySolution {
        grid: *grid,
        strategy: i,
        certified: first_violation.is_none(),
        first_violation,
        control,
        x_path,
        g_path: back.g_path,
        cone_ok,
        argmin_ok: back.argmin_ok,
        gap_closed_form: gaps,
        gap_discrepancy,
        stationary_x,
        stationary_g,
        stats,
        hypotheses: check_hypotheses(p, i, g_t),
    })
}

fn window_stats(
    grid: &TimeGrid,
    x_path: &[MixedState],
    g_path: &[ValueVector],
    x_star: &MixedState,
    g_star: Option<&ValueVector>,
) -> TurnpikeStats {
    let span = grid.t_end - grid.t_start;
    let window_start = grid.t_start + EDGE_FRACTION * span;
    let window_end = grid.t_end - EDGE_FRACTION * span;
    let inside: Vec<usize> = (0..grid.len())
        .filter(|&s| {
            let t = grid.time(s);
            t >= window_start && t <= window_end
        })
        .collect();
    let x_sup = inside
        .iter()
        .map(|&s| x_path[s].sup_distance(x_star))
        .fold(0.0, f64::max);
    let g_sup = g_star.map(|gs| {
        inside
            .iter()
            .map(|&s| g_path[s].sup_distance(gs))
            .fold(0.0, f64::max)
    });
    TurnpikeStats {
        window_start,
        window_end,
        x_sup,
        g_sup,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TurnpikeMetrics {
    pub eps: f64,
    /// First node time with both `x` and `g` within `eps` of stationary.
    pub entry: Option<f64>,
    /// Last such node time.
    pub exit: Option<f64>,
    /// `(exit - entry) / (T - t)`, zero for an empty window.
    pub inside_fraction: f64,
    pub x_mid_sup: f64,
    pub g_mid_sup: f64,
}

/// Turnpike window of `sol` around the stationary pair of `eq`.
pub fn turnpike_metrics(
    sol: &TrajectorySolution,
    eq: &EquilibriumSolution,
    eps: f64,
) -> TurnpikeMetrics {
    let grid = &sol.grid;
    let close = |s: usize| {
        sol.x_path[s].sup_distance(&eq.x_star) <= eps
            && sup_distance(sol.g_path[s].as_slice(), eq.g.as_slice()) <= eps
    };
    let entry = (0..grid.len()).find(|&s| close(s));
    let exit = (0..grid.len()).rev().find(|&s| close(s));
    let span = grid.t_end - grid.t_start;
    let inside_fraction = match (entry, exit) {
        (Some(a), Some(b)) => (grid.time(b) - grid.time(a)) / span,
        _ => 0.0,
    };
    let stats = window_stats(grid, &sol.x_path, &sol.g_path, &eq.x_star, Some(&eq.g));
    TurnpikeMetrics {
        eps,
        entry: entry.map(|s| grid.time(s)),
        exit: exit.map(|s| grid.time(s)),
        inside_fraction,
        x_mid_sup: stats.x_sup,
        g_mid_sup: stats.g_sup.unwrap_or(f64::NAN),
    }
}
