//! Candidate `Single(i)`: every agent moves to strategy `i`.

use crate::model::{
    state_index, Compartment, ControlFamily, MixedState, ModelParams, StationaryControl,
    ValueVector,
};

use super::spectrum::tangent_spectrum;
use super::{
    assemble, check_discount, check_strategy, stationary_values, unit_interval_root,
    ConsistencyMargins, EquilibriumSolution, Margin, StabilityReport, StationaryError,
    SPECTRAL_MISMATCH_TOL,
};

/// Value of `β_ii y² + y(q^i_+ - β_ii + q^i_-) - q^i_-`.
pub fn single_quadratic(p: &ModelParams, i: usize, y: f64) -> f64 {
    let b = p.beta[i][i];
    b * y * y + y * (p.q_plus[i] - b + p.q_minus[i]) - p.q_minus[i]
}

/// Infected fraction `x*` of the `Single(i)` fixed point and the full state
/// (all mass on strategy `i`).
pub fn fixed_point_single(p: &ModelParams, i: usize) -> Result<(f64, MixedState), StationaryError> {
    check_strategy(p, i)?;
    let b = p.beta[i][i];
    let x_star = unit_interval_root(b, p.q_plus[i] - b + p.q_minus[i], p.q_minus[i]);
    let mut v = vec![0.0; p.n_states()];
    v[state_index(i, Compartment::I)] = x_star;
    v[state_index(i, Compartment::S)] = 1.0 - x_star;
    Ok((x_star, MixedState::new(v)?))
}

fn single_state(p: &ModelParams, i: usize, x_star: f64) -> Result<MixedState, StationaryError> {
    let mut v = vec![0.0; p.n_states()];
    v[state_index(i, Compartment::I)] = x_star;
    v[state_index(i, Compartment::S)] = 1.0 - x_star;
    Ok(MixedState::new(v)?)
}

/// Closed-form spectrum cross-checked against a central-difference
/// Jacobian on the simplex tangent space.
pub fn stability_single(
    p: &ModelParams,
    i: usize,
    x_star: f64,
) -> Result<StabilityReport, StationaryError> {
    check_strategy(p, i)?;
    let xi_principal = (1.0 - 2.0 * x_star) * p.beta[i][i] - p.q_minus[i] - p.q_plus[i];
    let xi_pairs: Vec<(f64, f64)> = (0..p.d)
        .filter(|&j| j != i)
        .map(|j| {
            (
                -p.lambda - (p.q_plus[j] + p.q_minus[j] + x_star * p.beta[i][j]),
                -p.lambda,
            )
        })
        .collect();

    let state = single_state(p, i, x_star)?;
    let u = StationaryControl::single(p.d, i);
    let spectrum = tangent_spectrum(p, &state, &u, state_index(i, Compartment::S));

    let mut report = StabilityReport {
        xi_principal: Some(xi_principal),
        xi_pairs,
        spectrum,
        closed_form_discrepancy: None,
        max_real_part: 0.0,
        stable: false,
    };
    let closed = report.closed_form_sorted();
    let discrepancy = closed
        .iter()
        .zip(&report.spectrum)
        .map(|(c, z)| (c - z.re).abs().max(z.im.abs()))
        .fold(0.0, f64::max);
    if discrepancy > SPECTRAL_MISMATCH_TOL {
        return Err(StationaryError::SpectralMismatch(discrepancy));
    }
    report.closed_form_discrepancy = Some(discrepancy);
    report.max_real_part = closed.last().copied().unwrap_or(f64::NEG_INFINITY);
    report.stable = report.max_real_part < 0.0;
    Ok(report)
}

/// `(g(iI), g(iS))` from the decoupled two-state block.
pub fn single_block_closed_form(p: &ModelParams, i: usize, x_star: f64) -> (f64, f64) {
    let gap = single_gap(p, i, x_star);
    let g_i = (p.w_i[i] - p.q_plus[i] * gap) / p.delta;
    (g_i, g_i - gap)
}

/// `g(iI) - g(iS) = (w^i_I - w^i_S) / (q^i_- + q^i_+ + β_ii x* + δ)`.
pub(crate) fn single_gap(p: &ModelParams, i: usize, x_star: f64) -> f64 {
    (p.w_i[i] - p.w_s[i]) / (p.q_minus[i] + p.q_plus[i] + p.beta[i][i] * x_star + p.delta)
}

/// Exact stationary values under `Single(i)` at its fixed point.
pub fn hjb_single_exact(
    p: &ModelParams,
    i: usize,
    x_star: f64,
) -> Result<ValueVector, StationaryError> {
    check_strategy(p, i)?;
    check_discount(p)?;
    let state = single_state(p, i, x_star)?;
    stationary_values(p, &state, &StationaryControl::single(p.d, i))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleAsymptotic {
    /// Exact `i` block plus first-order values for `j ≠ i`.
    pub values: ValueVector,
    /// Coefficient of `λ⁻¹` in `g(jI)`; zero at `j = i`.
    pub correction_i: Vec<f64>,
    /// Coefficient of `λ⁻¹` in `g(jS)`; zero at `j = i`.
    pub correction_s: Vec<f64>,
}

/// Large-λ expansion of the `Single(i)` values to first order in `λ⁻¹`.
pub fn hjb_single_asymptotic(
    p: &ModelParams,
    i: usize,
    x_star: f64,
) -> Result<SingleAsymptotic, StationaryError> {
    check_strategy(p, i)?;
    check_discount(p)?;
    let (g_ii, g_is) = single_block_closed_form(p, i, x_star);
    let gap = g_ii - g_is;
    let mut values = vec![0.0; p.n_states()];
    let mut correction_i = vec![0.0; p.d];
    let mut correction_s = vec![0.0; p.d];
    for j in 0..p.d {
        if j != i {
            correction_i[j] = p.w_i[j] - p.q_plus[j] * gap - p.delta * g_ii;
            correction_s[j] =
                p.w_s[j] + (p.q_minus[j] + p.beta[i][j] * x_star) * gap - p.delta * g_is;
        }
        values[state_index(j, Compartment::I)] = g_ii + correction_i[j] / p.lambda;
        values[state_index(j, Compartment::S)] = g_is + correction_s[j] / p.lambda;
    }
    Ok(SingleAsymptotic {
        values: ValueVector::new(values)?,
        correction_i,
        correction_s,
    })
}

/// Exact and approximate slacks of `g(iI) ≤ g(jI)`, `g(iS) ≤ g(jS)`.
pub fn consistency_single(
    p: &ModelParams,
    i: usize,
) -> Result<ConsistencyMargins, StationaryError> {
    let (x_star, _) = fixed_point_single(p, i)?;
    let g = hjb_single_exact(p, i, x_star)?;
    Ok(single_margins(p, i, x_star, &g))
}

fn single_margins(p: &ModelParams, i: usize, x_star: f64, g: &ValueVector) -> ConsistencyMargins {
    let gap = single_gap(p, i, x_star);
    let base = p.w_i[i] - p.w_s[i];
    let slow = p.q_minus[i] + p.q_plus[i] + p.delta;
    let mut m = ConsistencyMargins::default();
    for j in (0..p.d).filter(|&j| j != i) {
        let push = |list: &mut Vec<Margin>, condition, compartment, value| {
            list.push(Margin {
                condition,
                compartment,
                strategy: j,
                value,
            })
        };
        push(&mut m.exact, "exact", Compartment::I, g.g_i(j) - g.g_i(i));
        push(&mut m.exact, "exact", Compartment::S, g.g_s(j) - g.g_s(i));
        push(
            &mut m.asymptotic,
            "first_order",
            Compartment::I,
            (p.w_i[j] - p.w_i[i]) - (p.q_plus[j] - p.q_plus[i]) * gap,
        );
        push(
            &mut m.asymptotic,
            "first_order",
            Compartment::S,
            (p.w_s[j] - p.w_s[i])
                - (p.q_minus[i] - p.q_minus[j] + (p.beta[i][i] - p.beta[i][j]) * x_star) * gap,
        );
        push(
            &mut m.small_parameter,
            "small_beta",
            Compartment::I,
            (p.w_i[j] - p.w_i[i]) / base - (p.q_plus[j] - p.q_plus[i]) / slow,
        );
        push(
            &mut m.small_parameter,
            "small_beta",
            Compartment::S,
            (p.w_s[j] - p.w_s[i]) / base - (p.q_minus[i] - p.q_minus[j]) / slow,
        );
    }
    m
}

/// Full pipeline for `Single(i)`: fixed point, spectrum, values, margins.
pub fn solve_single(p: &ModelParams, i: usize) -> Result<EquilibriumSolution, StationaryError> {
    let (x_star, state) = fixed_point_single(p, i)?;
    let stability = stability_single(p, i, x_star)?;
    let g = hjb_single_exact(p, i, x_star)?;
    let margins = single_margins(p, i, x_star, &g);
    Ok(assemble(
        p,
        ControlFamily::Single { i },
        state,
        g,
        stability,
        margins,
    ))
}
