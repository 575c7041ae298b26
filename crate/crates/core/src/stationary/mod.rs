//! Stationary equilibria of the discounted game.
//!
//! Non-degenerate stationary controls are of the form "move to `i` when
//! infected, to `k` when susceptible". The candidate set is therefore
//! `{Single(i)} ∪ {Mixed(i, k) : k ≠ i}`, `d²` controls in total. Each
//! candidate is solved exactly (closed-form root or damped Newton for the
//! fixed point, a dense linear solve for the values) and accepted only
//! when the exact value ordering confirms the control as the best
//! response. Large-λ and small-parameter formulas are kept as
//! cross-checks and reported as diagnostic margins.

mod mixed;
mod single;
pub mod spectrum;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::model::{
    best_response, consistency_residual, hjb_field_with_control, Compartment, ControlFamily,
    MixedState, ModelError, ModelParams, StationaryControl, ValueVector, TIE_TOL,
};

pub use mixed::{
    consistency_mixed, fixed_point_mixed, hjb_mixed_asymptotic, hjb_mixed_exact,
    mixed_first_order_margins, mixed_infected_seed, solve_mixed, stability_mixed, MixedAsymptotic,
    MixedFixedPoint,
};
pub use single::{
    consistency_single, fixed_point_single, hjb_single_asymptotic, hjb_single_exact,
    single_block_closed_form, single_quadratic, solve_single, stability_single, SingleAsymptotic,
};
pub use spectrum::Eigenvalue;

/// Largest accepted equilibrium certificate.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Largest accepted kinetic residual at a computed fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-10;

/// Closed-form and numerical spectra further apart than this are an error.
pub const SPECTRAL_MISMATCH_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StationaryError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("stationary discounted values need delta > 0 (got {0})")]
    NonPositiveDiscount(f64),
    #[error("strategy {0} out of range")]
    StrategyOutOfRange(usize),
    #[error("mixed control needs two distinct strategies (got {0} twice)")]
    SameStrategy(usize),
    #[error("singular linear system: {0}")]
    Singular(&'static str),
    #[error("Newton iteration for the mixed fixed point did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonFailed { iterations: usize, residual: f64 },
    #[error("mixed fixed point left the simplex (x_iI = {infected}, x_kI = {minority})")]
    NoAdmissibleFixedPoint { infected: f64, minority: f64 },
    #[error("fixed point residual {0:e} exceeds tolerance")]
    FixedPointResidual(f64),
    #[error("closed-form and numerical spectra disagree by {0:e}")]
    SpectralMismatch(f64),
}

fn one_based<S: Serializer>(v: &usize, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u64(*v as u64 + 1)
}

fn family_label<S: Serializer>(f: &ControlFamily, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&f.to_string())
}

/// Spectrum of the linearised kinetic flow at a fixed point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    /// `(1 - 2x*) β_ii - q^i_- - q^i_+` (Single family only).
    pub xi_principal: Option<f64>,
    /// Closed-form pairs `(-λ - q^j_+ - q^j_- - x* β_ij, -λ)` for `j ≠ i`.
    pub xi_pairs: Vec<(f64, f64)>,
    /// Numerical tangent-space spectrum, sorted by real part.
    pub spectrum: Vec<Eigenvalue>,
    /// Elementwise distance between closed-form and numerical spectra.
    pub closed_form_discrepancy: Option<f64>,
    pub max_real_part: f64,
    pub stable: bool,
}

impl StabilityReport {
    /// Closed-form eigenvalues sorted ascending (Single family only).
    pub fn closed_form_sorted(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.xi_principal.into_iter().collect();
        for &(a, b) in &self.xi_pairs {
            v.push(a);
            v.push(b);
        }
        v.sort_by(f64::total_cmp);
        v
    }
}

/// One inequality of the consistency check, as a signed slack
/// (non-negative when satisfied).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Margin {
    /// Which inequality family the slack belongs to.
    pub condition: &'static str,
    pub compartment: Compartment,
    /// The competing strategy the inequality is about.
    #[serde(serialize_with = "one_based")]
    pub strategy: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accepted,
    /// Some exact margin lies within the tie tolerance of zero.
    Boundary,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ConsistencyMargins {
    /// Slack of the exact value ordering, from the solved values.
    pub exact: Vec<Margin>,
    /// First-order large-λ slacks.
    pub asymptotic: Vec<Margin>,
    /// Closed-form small-β / small-δ conditions, diagnostic only.
    pub small_parameter: Vec<Margin>,
}

impl ConsistencyMargins {
    pub fn min_exact(&self) -> f64 {
        self.exact
            .iter()
            .map(|m| m.value)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn verdict(&self) -> Verdict {
        let min = self.min_exact();
        if min < -TIE_TOL {
            Verdict::Rejected
        } else if min <= TIE_TOL {
            Verdict::Boundary
        } else {
            Verdict::Accepted
        }
    }

    pub fn exact_for(&self, c: Compartment, strategy: usize) -> Option<f64> {
        find(&self.exact, c, strategy)
    }

    pub fn asymptotic_for(&self, c: Compartment, strategy: usize) -> Option<f64> {
        find(&self.asymptotic, c, strategy)
    }
}

fn find(list: &[Margin], c: Compartment, strategy: usize) -> Option<f64> {
    list.iter()
        .find(|m| m.compartment == c && m.strategy == strategy)
        .map(|m| m.value)
}

/// A solved stationary candidate with all of its certificates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumSolution {
    #[serde(serialize_with = "family_label")]
    pub family: ControlFamily,
    pub control: StationaryControl,
    pub x_star: MixedState,
    pub g: ValueVector,
    pub stability: StabilityReport,
    pub margins: ConsistencyMargins,
    /// [`consistency_residual`] of `(x_star, g, control)`.
    pub residual: f64,
    pub verdict: Verdict,
}

impl EquilibriumSolution {
    pub fn is_equilibrium(&self) -> bool {
        self.verdict != Verdict::Rejected && self.residual <= RESIDUAL_TOL
    }

    pub fn is_degenerate(&self) -> bool {
        self.verdict == Verdict::Boundary
    }
}

fn assemble(
    p: &ModelParams,
    family: ControlFamily,
    x_star: MixedState,
    g: ValueVector,
    stability: StabilityReport,
    margins: ConsistencyMargins,
) -> EquilibriumSolution {
    let control = StationaryControl::from_family(p.d, family);
    let residual = consistency_residual(p, &x_star, &g, &control);
    let verdict = margins.verdict();
    EquilibriumSolution {
        family,
        control,
        x_star,
        g,
        stability,
        margins,
        residual,
        verdict,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateStatus {
    Equilibrium,
    /// Passes with some margin inside the tie tolerance (bifurcation boundary).
    Degenerate,
    Rejected,
    /// Margins pass but the certificate exceeds [`RESIDUAL_TOL`].
    ResidualTooLarge,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateReport {
    #[serde(serialize_with = "family_label")]
    pub family: ControlFamily,
    pub status: CandidateStatus,
    pub error: Option<String>,
    pub solution: Option<EquilibriumSolution>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumSet {
    /// All `d²` candidates, sorted by `(i, k)` with `Single(i) = (i, i)`.
    pub candidates: Vec<CandidateReport>,
}

impl EquilibriumSet {
    /// Accepted solutions, degenerate ones included.
    pub fn equilibria(&self) -> impl Iterator<Item = &EquilibriumSolution> {
        self.candidates.iter().filter_map(|c| match c.status {
            CandidateStatus::Equilibrium | CandidateStatus::Degenerate => c.solution.as_ref(),
            _ => None,
        })
    }

    pub fn contains(&self, family: ControlFamily) -> bool {
        self.equilibria().any(|e| e.family == family)
    }
}

/// The `d²` candidate controls in output order.
pub fn candidate_families(d: usize) -> Vec<ControlFamily> {
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for k in 0..d {
            out.push(if i == k {
                ControlFamily::Single { i }
            } else {
                ControlFamily::Mixed { i, k }
            });
        }
    }
    out
}

pub fn solve_candidate(
    p: &ModelParams,
    family: ControlFamily,
) -> Result<EquilibriumSolution, StationaryError> {
    match family {
        ControlFamily::Single { i } => solve_single(p, i),
        ControlFamily::Mixed { i, k } => solve_mixed(p, i, k),
    }
}

/// Solves every candidate control and classifies it. Per-candidate solver
/// failures are recorded, never propagated.
pub fn enumerate_equilibria(p: &ModelParams) -> Result<EquilibriumSet, StationaryError> {
    p.validate()?;
    if p.delta <= 0.0 {
        return Err(StationaryError::NonPositiveDiscount(p.delta));
    }
    let mut candidates: Vec<CandidateReport> = candidate_families(p.d)
        .into_par_iter()
        .map(|family| match solve_candidate(p, family) {
            Ok(sol) => {
                let status = match sol.verdict {
                    Verdict::Rejected => CandidateStatus::Rejected,
                    _ if sol.residual > RESIDUAL_TOL => CandidateStatus::ResidualTooLarge,
                    Verdict::Boundary => CandidateStatus::Degenerate,
                    Verdict::Accepted => CandidateStatus::Equilibrium,
                };
                CandidateReport {
                    family,
                    status,
                    error: None,
                    solution: Some(sol),
                }
            }
            Err(e) => CandidateReport {
                family,
                status: CandidateStatus::Failed,
                error: Some(e.to_string()),
                solution: None,
            },
        })
        .collect();
    candidates.sort_by_key(|c| c.family.sort_key());
    Ok(EquilibriumSet { candidates })
}

/// Exact stationary discounted values for a fixed control and population:
/// the HJB with the decision term frozen to `u` is affine in `g`, so the
/// stationary equation is one dense `2d × 2d` solve.
pub fn stationary_values(
    p: &ModelParams,
    x: &MixedState,
    u: &StationaryControl,
) -> Result<ValueVector, StationaryError> {
    if p.delta <= 0.0 {
        return Err(StationaryError::NonPositiveDiscount(p.delta));
    }
    let n = p.n_states();
    let zero = vec![0.0; n];
    let offset = hjb_field_with_control(p, x.as_slice(), &zero, u);
    let mut a = DMatrix::zeros(n, n);
    for col in 0..n {
        let mut e = zero.clone();
        e[col] = 1.0;
        let image = hjb_field_with_control(p, x.as_slice(), &e, u);
        for row in 0..n {
            a[(row, col)] = image[row] - offset[row];
        }
    }
    let rhs = -DVector::from_vec(offset);
    let g = a
        .lu()
        .solve(&rhs)
        .ok_or(StationaryError::Singular("stationary HJB system"))?;
    Ok(ValueVector::new(g.iter().copied().collect())?)
}

/// Root in `(0, 1)` of `a y² + b y - c` with `a ≥ 0`, `c > 0`, `a + b > c`.
///
/// Uses whichever algebraic form avoids cancellation.
pub(crate) fn unit_interval_root(a: f64, b: f64, c: f64) -> f64 {
    let disc = (b * b + 4.0 * a * c).sqrt();
    if b >= 0.0 {
        2.0 * c / (b + disc)
    } else {
        (disc - b) / (2.0 * a)
    }
}

fn check_strategy(p: &ModelParams, i: usize) -> Result<(), StationaryError> {
    if i >= p.d {
        Err(StationaryError::StrategyOutOfRange(i))
    } else {
        Ok(())
    }
}

fn check_discount(p: &ModelParams) -> Result<(), StationaryError> {
    if p.delta > 0.0 {
        Ok(())
    } else {
        Err(StationaryError::NonPositiveDiscount(p.delta))
    }
}

/// `best_response(g)` reproduces `u` (ties allowed) for an accepted solution.
pub fn closes_best_response(sol: &EquilibriumSolution) -> bool {
    let br = best_response(&sol.g);
    br.control == sol.control
        || crate::model::control_suboptimality(sol.g.as_slice(), &sol.control) <= TIE_TOL
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_forms_agree() {
        for &(a, b, c) in &[
            (0.2, 0.8, 0.5),
            (1.0, -0.5, 0.3),
            (0.0, 1.0, 0.5),
            (3.0, -2.9, 0.01),
        ] {
            let y = unit_interval_root(a, b, c);
            assert!(y > 0.0 && y < 1.0);
            assert!((a * y * y + b * y - c).abs() < 1e-15);
        }
    }

    #[test]
    fn candidates_are_sorted_lexicographically() {
        let labels: Vec<String> = candidate_families(2)
            .iter()
            .map(|f| f.to_string())
            .collect();
        assert_eq!(
            labels,
            ["Single(1)", "Mixed(1,2)", "Mixed(2,1)", "Single(2)"]
        );
    }
}
