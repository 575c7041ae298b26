mod common;

use botnet_mfg::model::{best_response, kinetic_rhs, StationaryControl};
use botnet_mfg::stationary::{
    closes_best_response, enumerate_equilibria, fixed_point_single, hjb_single_exact,
    single_quadratic, solve_single, stability_single, CandidateStatus,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn single_fixed_point_is_a_stable_root(p in (1usize..=4).prop_flat_map(common::params)) {
        for i in 0..p.d {
            let (x_star, x) = fixed_point_single(&p, i).unwrap();
            prop_assert!(x_star > 0.0 && x_star < 1.0);
            prop_assert!(single_quadratic(&p, i, x_star).abs() <= 1e-12);
            let rhs = kinetic_rhs(&p, &x, &StationaryControl::single(p.d, i));
            prop_assert!(rhs.iter().all(|v| v.abs() <= 1e-10));
            let r = stability_single(&p, i, x_star).unwrap();
            prop_assert!(r.stable && r.max_real_part < 0.0);
            prop_assert!(r.closed_form_discrepancy.unwrap() <= 1e-8);
        }
    }

    #[test]
    fn infected_costs_more_at_single_equilibria(p in (1usize..=4).prop_flat_map(common::params)) {
        for i in 0..p.d {
            let (x_star, _) = fixed_point_single(&p, i).unwrap();
            let g = hjb_single_exact(&p, i, x_star).unwrap();
            prop_assert!(g.g_i(i) > g.g_s(i));
        }
    }

    #[test]
    fn accepted_candidates_close_the_loop(p in (2usize..=3).prop_flat_map(common::params)) {
        let set = enumerate_equilibria(&p).unwrap();
        prop_assert_eq!(set.candidates.len(), p.d * p.d);
        for eq in set.equilibria() {
            prop_assert!(eq.residual <= 1e-8);
            prop_assert!(closes_best_response(eq));
            if !eq.is_degenerate() {
                prop_assert_eq!(&best_response(&eq.g).control, &eq.control);
            }
        }
    }
}

#[test]
fn reference_set_has_single_one_only() {
    let set = enumerate_equilibria(&common::p0()).unwrap();
    let statuses: Vec<_> = set
        .candidates
        .iter()
        .map(|c| (c.family.to_string(), c.status))
        .collect();
    assert_eq!(
        statuses[0],
        ("Single(1)".to_string(), CandidateStatus::Equilibrium)
    );
    assert!(statuses[1..]
        .iter()
        .all(|(_, s)| *s == CandidateStatus::Rejected));
}

#[test]
fn reference_single_one_by_hand() {
    // x* solves 0.2 y² + 0.8 y - 0.5 = 0
    let p = common::p0();
    let x_star = (-0.8 + (0.64f64 + 0.4).sqrt()) / 0.4;
    let sol = solve_single(&p, 0).unwrap();
    assert!((sol.x_star.infected(0) - x_star).abs() < 1e-15);
    assert!(
        (sol.stability.xi_principal.unwrap() - ((1.0 - 2.0 * x_star) * 0.2 - 1.0)).abs() < 1e-14
    );
    // the 1-block decouples: δ g = w + rate · gap
    let gap = (2.0 - 1.0) / (0.5 + 0.5 + 0.2 * x_star + 0.1);
    assert!((sol.g.g_i(0) - sol.g.g_s(0) - gap).abs() < 1e-12);
}
