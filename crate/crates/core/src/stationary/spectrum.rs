//! Numerical linearisation of the kinetic field on the simplex tangent space.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::model::{kinetic_field, MixedState, ModelParams, StationaryControl};

/// Central-difference step used for Jacobians of the kinetic field.
pub const JACOBIAN_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

/// Jacobian of the kinetic field in the chart that drops coordinate
/// `eliminated` and recovers it from the unit-mass constraint.
///
/// The resulting `(2d-1)`-square matrix carries the spectrum of the flow
/// restricted to the simplex tangent space (the zero eigenvalue of mass
/// conservation is removed).
pub fn tangent_jacobian(
    p: &ModelParams,
    x: &MixedState,
    u: &StationaryControl,
    eliminated: usize,
    step: f64,
) -> DMatrix<f64> {
    let n = p.n_states();
    let free: Vec<usize> = (0..n).filter(|&m| m != eliminated).collect();
    let base = x.as_slice();
    let mut jac = DMatrix::zeros(n - 1, n - 1);
    for (col, &m) in free.iter().enumerate() {
        let shifted = |sign: f64| {
            let mut y = base.to_vec();
            y[m] += sign * step;
            y[eliminated] -= sign * step;
            kinetic_field(p, &y, u)
        };
        let plus = shifted(1.0);
        let minus = shifted(-1.0);
        for (row, &r) in free.iter().enumerate() {
            jac[(row, col)] = (plus[r] - minus[r]) / (2.0 * step);
        }
    }
    jac
}

/// Eigenvalues sorted by real part, then imaginary part.
pub fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<Eigenvalue> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<Eigenvalue> = m
        .clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| Eigenvalue { re: z.re, im: z.im })
        .collect();
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    ev
}

pub fn tangent_spectrum(
    p: &ModelParams,
    x: &MixedState,
    u: &StationaryControl,
    eliminated: usize,
) -> Vec<Eigenvalue> {
    sorted_eigenvalues(&tangent_jacobian(p, x, u, eliminated, JACOBIAN_STEP))
}
