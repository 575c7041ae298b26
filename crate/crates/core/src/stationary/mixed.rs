//! Candidate `Mixed(i, k)`: infected agents move to `i`, susceptible ones to `k`.
//!
//! At the fixed point only the four states `iI, iS, kI, kS` are occupied and
//! the migration balance forces `x_kI = x_iS`. The values of those four
//! states reduce to a 2×2 system in `(g(kS), g(iI))`; every other strategy's
//! pair follows from its own 2×2 system.

use crate::model::{
    kinetic_rhs, state_index, Compartment, ControlFamily, MixedState, ModelParams,
    StationaryControl, ValueVector,
};

use super::spectrum::tangent_spectrum;
use super::{
    assemble, check_discount, check_strategy, unit_interval_root, ConsistencyMargins,
    EquilibriumSolution, Margin, StabilityReport, StationaryError, FIXED_POINT_TOL,
};

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_MAX_HALVINGS: usize = 30;
const NEWTON_TOL: f64 = 1e-12;

fn check_pair(p: &ModelParams, i: usize, k: usize) -> Result<(), StationaryError> {
    check_strategy(p, i)?;
    check_strategy(p, k)?;
    if i == k {
        return Err(StationaryError::SameStrategy(i));
    }
    Ok(())
}

/// Large-λ seed for `x_iI`: root of
/// `β_ik y² + y(q^i_+ - β_ik + q^k_-) - q^k_-` on `(0, 1)`.
pub fn mixed_infected_seed(p: &ModelParams, i: usize, k: usize) -> f64 {
    let b = p.beta[i][k];
    unit_interval_root(b, p.q_plus[i] - b + p.q_minus[k], p.q_minus[k])
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedFixedPoint {
    pub state: MixedState,
    pub iterations: usize,
    /// Sup-norm of the kinetic field at `state`.
    pub residual: f64,
}

/// Reduced balance equations in `(a, b) = (x_iI, x_kI)`.
fn reduced(p: &ModelParams, i: usize, k: usize, a: f64, b: f64) -> [f64; 2] {
    let rest = 1.0 - a - 2.0 * b;
    let f1 = b * p.q_minus[i] - a * p.q_plus[i]
        + a * b * p.beta[i][i]
        + b * b * p.beta[k][i]
        + p.lambda * b;
    let f2 =
        rest * (p.q_minus[k] + b * p.beta[k][k] + a * p.beta[i][k]) - (p.lambda + p.q_plus[k]) * b;
    [f1, f2]
}

fn reduced_jacobian(p: &ModelParams, i: usize, k: usize, a: f64, b: f64) -> [[f64; 2]; 2] {
    let rest = 1.0 - a - 2.0 * b;
    let pressure_k = p.q_minus[k] + b * p.beta[k][k] + a * p.beta[i][k];
    [
        [
            -p.q_plus[i] + b * p.beta[i][i],
            p.q_minus[i] + a * p.beta[i][i] + 2.0 * b * p.beta[k][i] + p.lambda,
        ],
        [
            -pressure_k + rest * p.beta[i][k],
            -2.0 * pressure_k + rest * p.beta[k][k] - (p.lambda + p.q_plus[k]),
        ],
    ]
}

fn admissible(a: f64, b: f64) -> bool {
    a > 0.0 && a < 1.0 && b > 0.0 && 1.0 - a - 2.0 * b > 0.0
}

fn norm(f: [f64; 2]) -> f64 {
    f[0].abs().max(f[1].abs())
}

fn mixed_state(
    p: &ModelParams,
    i: usize,
    k: usize,
    a: f64,
    b: f64,
) -> Result<MixedState, StationaryError> {
    let mut v = vec![0.0; p.n_states()];
    v[state_index(i, Compartment::I)] = a;
    v[state_index(i, Compartment::S)] = b;
    v[state_index(k, Compartment::I)] = b;
    v[state_index(k, Compartment::S)] = 1.0 - a - 2.0 * b;
    Ok(MixedState::new(v)?)
}

/// Damped Newton on the reduced system, seeded from the large-λ limit.
pub fn fixed_point_mixed(
    p: &ModelParams,
    i: usize,
    k: usize,
) -> Result<MixedFixedPoint, StationaryError> {
    check_pair(p, i, k)?;
    let mut a = mixed_infected_seed(p, i, k);
    let mut b = a * p.q_plus[i] / p.lambda;
    // keep the seed strictly inside the admissible region
    if !admissible(a, b) {
        b = 0.25 * (1.0 - a);
    }
    let mut f = reduced(p, i, k, a, b);
    let mut iterations = 0;
    while norm(f) >= NEWTON_TOL {
        if iterations == NEWTON_MAX_ITER {
            return Err(StationaryError::NewtonFailed {
                iterations,
                residual: norm(f),
            });
        }
        iterations += 1;
        let j = reduced_jacobian(p, i, k, a, b);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(StationaryError::Singular("mixed fixed-point Jacobian"));
        }
        let da = -(j[1][1] * f[0] - j[0][1] * f[1]) / det;
        let db = -(-j[1][0] * f[0] + j[0][0] * f[1]) / det;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=NEWTON_MAX_HALVINGS {
            let (na, nb) = (a + t * da, b + t * db);
            if admissible(na, nb) {
                let nf = reduced(p, i, k, na, nb);
                if norm(nf) < norm(f) || norm(nf) < NEWTON_TOL {
                    a = na;
                    b = nb;
                    f = nf;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(StationaryError::NewtonFailed {
                iterations,
                residual: norm(f),
            });
        }
    }
    if !admissible(a, b) {
        return Err(StationaryError::NoAdmissibleFixedPoint {
            infected: a,
            minority: b,
        });
    }
    let state = mixed_state(p, i, k, a, b)?;
    let u = StationaryControl::mixed(p.d, i, k);
    let residual = crate::model::sup_norm(&kinetic_rhs(p, &state, &u));
    if residual > FIXED_POINT_TOL {
        return Err(StationaryError::FixedPointResidual(residual));
    }
    Ok(MixedFixedPoint {
        state,
        iterations,
        residual,
    })
}

/// Numerical tangent-space spectrum at the mixed fixed point.
pub fn stability_mixed(
    p: &ModelParams,
    i: usize,
    k: usize,
    x: &MixedState,
) -> Result<StabilityReport, StationaryError> {
    check_pair(p, i, k)?;
    let u = StationaryControl::mixed(p.d, i, k);
    let spectrum = tangent_spectrum(p, x, &u, state_index(k, Compartment::S));
    let max_real_part = spectrum
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(StabilityReport {
        xi_principal: None,
        xi_pairs: Vec::new(),
        spectrum,
        closed_form_discrepancy: None,
        max_real_part,
        stable: max_real_part < 0.0,
    })
}

/// Solves `[[a11, a12], [a21, a22]] z = r`.
fn solve2(m: [[f64; 2]; 2], r: [f64; 2], what: &'static str) -> Result<[f64; 2], StationaryError> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det == 0.0 || !det.is_finite() {
        return Err(StationaryError::Singular(what));
    }
    Ok([
        (r[0] * m[1][1] - m[0][1] * r[1]) / det,
        (m[0][0] * r[1] - r[0] * m[1][0]) / det,
    ])
}

/// Exact values of a strategy `j ∉ {i, k}` given `g(iI)` and `g(kS)`.
fn residual_pair(
    p: &ModelParams,
    j: usize,
    q_tilde: f64,
    g_ii: f64,
    g_ks: f64,
) -> Result<(f64, f64), StationaryError> {
    let (l, d, qp) = (p.lambda, p.delta, p.q_plus[j]);
    let [gi, gs] = solve2(
        [[l + qp + d, -qp], [-q_tilde, l + q_tilde + d]],
        [p.w_i[j] + l * g_ii, p.w_s[j] + l * g_ks],
        "residual-state block",
    )?;
    Ok((gi, gs))
}

/// Exact stationary values under `Mixed(i, k)` at population `x`.
pub fn hjb_mixed_exact(
    p: &ModelParams,
    i: usize,
    k: usize,
    x: &MixedState,
) -> Result<ValueVector, StationaryError> {
    check_pair(p, i, k)?;
    check_discount(p)?;
    let qt = p.tilde_rates(x).q_tilde_minus;
    let (l, d) = (p.lambda, p.delta);
    let (qp, qpk) = (p.q_plus[i], p.q_plus[k]);
    let (wii, wis, wki, wks) = (p.w_i[i], p.w_s[i], p.w_i[k], p.w_s[k]);
    let [g_ks, g_ii] = solve2(
        [
            [l * qp, -(l * (qp + d) + d * (qp + qt[i] + d))],
            [l * (qt[k] + d) + d * (qt[k] + qpk + d), -l * qt[k]],
        ],
        [
            -wii * (l + d + qt[i]) - wis * qp,
            wki * qt[k] + wks * (l + d + qpk),
        ],
        "mixed (g(kS), g(iI)) block",
    )?;
    let g_is = g_ii + (d * g_ii - wii) / qp;
    let g_ki = g_ks + (d * g_ks - wks) / qt[k];

    let mut g = vec![0.0; p.n_states()];
    g[state_index(i, Compartment::I)] = g_ii;
    g[state_index(i, Compartment::S)] = g_is;
    g[state_index(k, Compartment::I)] = g_ki;
    g[state_index(k, Compartment::S)] = g_ks;
    for j in (0..p.d).filter(|&j| j != i && j != k) {
        let (gi, gs) = residual_pair(p, j, qt[j], g_ii, g_ks)?;
        g[state_index(j, Compartment::I)] = gi;
        g[state_index(j, Compartment::S)] = gs;
    }
    Ok(ValueVector::new(g)?)
}

/// Large-λ expansion of the mixed values at fixed population `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedAsymptotic {
    /// Leading-order `g⁰(kS)`, `g⁰(iI)`.
    pub g0_ks: f64,
    pub g0_ii: f64,
    /// Leading-order `g⁰(iS)`, `g⁰(kI)`; equal to `g0_ks`, `g0_ii`.
    pub g0_is: f64,
    pub g0_ki: f64,
    /// Coefficients of `λ⁻¹`.
    pub g1_ks: f64,
    pub g1_ii: f64,
    pub g1_is: f64,
    pub g1_ki: f64,
    /// `g⁰ + g¹/λ` in every state.
    pub values: ValueVector,
}

/// Ingredients shared by the expansion and its margins.
struct Expansion {
    qt: Vec<f64>,
    sigma: f64,
    /// `δ g⁰(kS)` and `δ g⁰(iI)`, finite at `δ = 0`.
    dg0_ks: f64,
    dg0_ii: f64,
    /// Numerators of `g¹(kS)`, `g¹(iI)` over `δ(q^i_+ + q̃^k_- + δ)`.
    n_ks: f64,
    n_ii: f64,
}

fn expansion(p: &ModelParams, i: usize, k: usize, x: &MixedState) -> Expansion {
    let qt = p.tilde_rates(x).q_tilde_minus;
    let d = p.delta;
    let (qp, qpk) = (p.q_plus[i], p.q_plus[k]);
    let (wii, wis, wki, wks) = (p.w_i[i], p.w_s[i], p.w_i[k], p.w_s[k]);
    let sigma = qt[k] + qp + d;
    let dg0_ks = (qt[k] * wii + qp * wks + d * wks) / sigma;
    let dg0_ii = (qt[k] * wii + qp * wks + d * wii) / sigma;
    let r1 = (qp + qt[i] + d) * dg0_ii - wii * (d + qt[i]) - wis * qp;
    let r2 = -(qt[k] + qpk + d) * dg0_ks + wki * qt[k] + wks * (d + qpk);
    Expansion {
        sigma,
        dg0_ks,
        dg0_ii,
        n_ks: -qt[k] * r1 + (qp + d) * r2,
        n_ii: qp * r2 - (qt[k] + d) * r1,
        qt,
    }
}

pub fn hjb_mixed_asymptotic(
    p: &ModelParams,
    i: usize,
    k: usize,
    x: &MixedState,
) -> Result<MixedAsymptotic, StationaryError> {
    check_pair(p, i, k)?;
    check_discount(p)?;
    let e = expansion(p, i, k, x);
    let (l, d, qp) = (p.lambda, p.delta, p.q_plus[i]);
    let qtk = e.qt[k];
    let det = d * (qp + qtk + d);
    let (g0_ks, g0_ii) = (e.dg0_ks / d, e.dg0_ii / d);
    let (g1_ks, g1_ii) = (e.n_ks / det, e.n_ii / det);

    // substitutions of the iI and kS rows, order by order
    let g0_is = (g0_ii * (qp + d) - p.w_i[i]) / qp;
    let g1_is = g1_ii * (qp + d) / qp;
    let g0_ki = (g0_ks * (qtk + d) - p.w_s[k]) / qtk;
    let g1_ki = g1_ks * (qtk + d) / qtk;

    let mut g = vec![0.0; p.n_states()];
    g[state_index(i, Compartment::I)] = g0_ii + g1_ii / l;
    g[state_index(i, Compartment::S)] = g0_is + g1_is / l;
    g[state_index(k, Compartment::I)] = g0_ki + g1_ki / l;
    g[state_index(k, Compartment::S)] = g0_ks + g1_ks / l;
    for j in (0..p.d).filter(|&j| j != i && j != k) {
        let ci = g1_ii + p.w_i[j] - d * g0_ii + p.q_plus[j] * (g0_ks - g0_ii);
        let cs = g1_ks + p.w_s[j] - d * g0_ks + e.qt[j] * (g0_ii - g0_ks);
        g[state_index(j, Compartment::I)] = g0_ii + ci / l;
        g[state_index(j, Compartment::S)] = g0_ks + cs / l;
    }
    Ok(MixedAsymptotic {
        g0_ks,
        g0_ii,
        g0_is,
        g0_ki,
        g1_ks,
        g1_ii,
        g1_is,
        g1_ki,
        values: ValueVector::new(g)?,
    })
}

/// First-order slacks of `g(iI) ≤ g(kI)` and `g(kS) ≤ g(iS)`, each
/// multiplied by a positive factor so they stay finite down to `δ = 0`
/// (where both vanish identically). Returned as `(I at k, S at i)`.
pub fn mixed_first_order_margins(
    p: &ModelParams,
    i: usize,
    k: usize,
    x: &MixedState,
) -> (f64, f64) {
    let e = expansion(p, i, k, x);
    let d = p.delta;
    let qtk = e.qt[k];
    let qp = p.q_plus[i];
    (
        (qtk + d) * e.n_ks - qtk * e.n_ii,
        (qp + d) * e.n_ii - qp * e.n_ks,
    )
}

pub fn consistency_mixed(
    p: &ModelParams,
    i: usize,
    k: usize,
) -> Result<ConsistencyMargins, StationaryError> {
    let fp = fixed_point_mixed(p, i, k)?;
    let g = hjb_mixed_exact(p, i, k, &fp.state)?;
    Ok(mixed_margins(p, i, k, &fp.state, &g))
}

fn mixed_margins(
    p: &ModelParams,
    i: usize,
    k: usize,
    x: &MixedState,
    g: &ValueVector,
) -> ConsistencyMargins {
    let e = expansion(p, i, k, x);
    let d = p.delta;
    let qp = p.q_plus[i];
    let qtk = e.qt[k];
    let (wii, wks) = (p.w_i[i], p.w_s[k]);
    let (m1, m2) = mixed_first_order_margins(p, i, k, x);
    let det = d * (qp + qtk + d);
    let mut m = ConsistencyMargins::default();
    let margin = |condition, compartment, strategy, value| Margin {
        condition,
        compartment,
        strategy,
        value,
    };

    for j in (0..p.d).filter(|&j| j != i) {
        m.exact
            .push(margin("exact", Compartment::I, j, g.g_i(j) - g.g_i(i)));
    }
    for j in (0..p.d).filter(|&j| j != k) {
        m.exact
            .push(margin("exact", Compartment::S, j, g.g_s(j) - g.g_s(k)));
    }

    // coefficients of λ⁻¹ in the same differences
    for j in (0..p.d).filter(|&j| j != i) {
        let v = if j == k {
            m1 / (qtk * det)
        } else {
            (p.w_i[j] * e.sigma - (qtk * wii + qp * wks + d * wii) + p.q_plus[j] * (wks - wii))
                / e.sigma
        };
        m.asymptotic
            .push(margin("first_order", Compartment::I, j, v));
    }
    for j in (0..p.d).filter(|&j| j != k) {
        let v = if j == i {
            m2 / (qp * det)
        } else {
            (p.w_s[j] * e.sigma - (qtk * wii + qp * wks + d * wks) + e.qt[j] * (wii - wks))
                / e.sigma
        };
        m.asymptotic
            .push(margin("first_order", Compartment::S, j, v));
    }

    // the closed-form sufficient conditions with β → 0, δ → 0
    let (qmk, qpk) = (p.q_minus[k], p.q_plus[k]);
    for j in (0..p.d).filter(|&j| j != k) {
        let v = p.q_plus[j] * (wii - wks) + p.w_i[j] * (qmk + qp);
        m.small_parameter
            .push(margin("small_delta_residual", Compartment::I, j, v));
    }
    for j in (0..p.d).filter(|&j| j != i) {
        let v = p.q_minus[j] * (wii - wks) + p.w_s[j] * (qmk + qp);
        m.small_parameter
            .push(margin("small_delta_residual", Compartment::S, j, v));
    }
    m.small_parameter.push(margin(
        "small_delta",
        Compartment::I,
        k,
        qmk * (p.w_i[k] - wii) + wks * (qpk - qp),
    ));
    m.small_parameter.push(margin(
        "small_delta",
        Compartment::S,
        i,
        qp * (p.w_s[i] - wks) + wii * (p.q_minus[i] - qmk),
    ));
    m
}

pub fn solve_mixed(
    p: &ModelParams,
    i: usize,
    k: usize,
) -> Result<EquilibriumSolution, StationaryError> {
    let fp = fixed_point_mixed(p, i, k)?;
    let stability = stability_mixed(p, i, k, &fp.state)?;
    let g = hjb_mixed_exact(p, i, k, &fp.state)?;
    let margins = mixed_margins(p, i, k, &fp.state, &g);
    Ok(assemble(
        p,
        ControlFamily::Mixed { i, k },
        fp.state,
        g,
        stability,
        margins,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stationary::stationary_values;

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

    fn three() -> ModelParams {
        ModelParams {
            d: 3,
            lambda: 40.0,
            delta: 0.3,
            q_plus: vec![0.5, 0.6, 0.9],
            q_minus: vec![0.5, 0.3, 0.2],
            beta: vec![
                vec![0.2, 0.05, 0.1],
                vec![0.05, 0.05, 0.3],
                vec![0.0, 0.4, 0.1],
            ],
            w_i: vec![2.0, 3.0, 2.5],
            w_s: vec![1.0, 2.5, 0.5],
        }
    }

    #[test]
    fn seed_without_peer_infection() {
        let mut p = p0();
        p.beta = vec![vec![0.0; 2]; 2];
        assert!((mixed_infected_seed(&p, 0, 1) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn migration_balance_is_exact() {
        let p = three();
        for (i, k) in [(0, 1), (2, 0), (1, 2)] {
            let fp = fixed_point_mixed(&p, i, k).unwrap();
            let x = &fp.state;
            assert_eq!(x.get(k, Compartment::I), x.get(i, Compartment::S));
            assert!(fp.residual <= FIXED_POINT_TOL);
        }
    }

    #[test]
    fn two_by_two_route_matches_dense_solve() {
        for p in [p0(), three()] {
            let fp = fixed_point_mixed(&p, 0, 1).unwrap();
            let u = StationaryControl::mixed(p.d, 0, 1);
            let dense = stationary_values(&p, &fp.state, &u).unwrap();
            let g = hjb_mixed_exact(&p, 0, 1, &fp.state).unwrap();
            assert!(g.sup_distance(&dense) < 1e-9 * dense.as_slice()[0].abs());
        }
    }

    #[test]
    fn leading_order_equalities() {
        let p = three();
        let fp = fixed_point_mixed(&p, 1, 2).unwrap();
        let a = hjb_mixed_asymptotic(&p, 1, 2, &fp.state).unwrap();
        assert!((a.g0_is - a.g0_ks).abs() <= 1e-12 * a.g0_ks.abs());
        assert!((a.g0_ki - a.g0_ii).abs() <= 1e-12 * a.g0_ii.abs());
    }

    #[test]
    fn first_order_margins_vanish_without_discount() {
        let mut p = three();
        p.delta = 0.0;
        let fp = fixed_point_mixed(&p, 0, 2).unwrap();
        let (m1, m2) = mixed_first_order_margins(&p, 0, 2, &fp.state);
        assert!(m1.abs() < 1e-12 && m2.abs() < 1e-12, "{m1} {m2}");
    }

    #[test]
    fn prop_line_three_at_reference() {
        let m = consistency_mixed(&p0(), 0, 1).unwrap();
        let line3 = m
            .small_parameter
            .iter()
            .find(|m| m.condition == "small_delta" && m.compartment == Compartment::I)
            .unwrap();
        assert!((line3.value - 0.55).abs() < 1e-12);
    }

    #[test]
    fn equal_pair_is_rejected() {
        assert_eq!(
            fixed_point_mixed(&p0(), 1, 1).unwrap_err(),
            StationaryError::SameStrategy(1)
        );
    }
}
