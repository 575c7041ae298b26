#![allow(dead_code)]

use botnet_mfg::model::ModelParams;
use proptest::prelude::*;
use rand::Rng;

pub fn p0() -> ModelParams {
    serde_json::from_str(include_str!("../../fixtures/p0.json")).unwrap()
}

/// One admissible draw: d ∈ 1..=4, λ log-uniform on [5, 500], positive
/// rates, non-negative β, and `w_S < w_I` componentwise.
pub fn random_params<R: Rng>(rng: &mut R) -> ModelParams {
    let d = rng.random_range(1..=4);
    let lambda = 10f64.powf(rng.random_range(5f64.log10()..500f64.log10()));
    let rates = |rng: &mut R| {
        (0..d)
            .map(|_| rng.random_range(0.05..2.0))
            .collect::<Vec<f64>>()
    };
    let q_plus = rates(rng);
    let q_minus = rates(rng);
    let beta = (0..d)
        .map(|_| (0..d).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    let w_i: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..5.0)).collect();
    let w_s = w_i
        .iter()
        .map(|w| w * rng.random_range(0.0..0.95))
        .collect();
    ModelParams {
        d,
        lambda,
        delta: rng.random_range(0.01..1.0),
        q_plus,
        q_minus,
        beta,
        w_i,
        w_s,
    }
}

/// Proptest strategy over the same family at fixed `d`.
pub fn params(d: usize) -> impl Strategy<Value = ModelParams> {
    let rates = prop::collection::vec(0.05f64..2.0, d);
    (
        1f64..200.0,
        0.01f64..1.0,
        rates.clone(),
        rates,
        prop::collection::vec(prop::collection::vec(0f64..1.0, d), d),
        prop::collection::vec((0.5f64..5.0, 0f64..0.95), d),
    )
        .prop_map(
            move |(lambda, delta, q_plus, q_minus, beta, w)| ModelParams {
                d,
                lambda,
                delta,
                q_plus,
                q_minus,
                beta,
                w_i: w.iter().map(|&(wi, _)| wi).collect(),
                w_s: w.iter().map(|&(wi, r)| wi * r).collect(),
            },
        )
}
