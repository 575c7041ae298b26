//! Finite-horizon trajectory under `Single(1)` from a uniform start, with
//! the stationary values as terminal cost: the path enters an
//! ε-neighbourhood of the equilibrium and stays there for most of the
//! horizon.
//!
//!     cargo run --release --example turnpike

use botnet_mfg::dynamics::{solve_turnpike, turnpike_metrics, TimeGrid};
use botnet_mfg::model::{MixedState, ModelParams};
use botnet_mfg::stationary::solve_single;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p: ModelParams = serde_json::from_str(include_str!("../fixtures/p0.json"))?;
    let eq = solve_single(&p, 0)?;
    let grid = TimeGrid::with_max_step(0.0, 50.0, 1e-3)?;

    let sol = solve_turnpike(&p, 0, &MixedState::uniform(p.d), &eq.g, &grid)?;
    println!(
        "certified: {} (gap discrepancy {:.2e})",
        sol.certified, sol.gap_discrepancy
    );
    for h in &sol.hypotheses {
        println!("  {h}");
    }

    let m = turnpike_metrics(&sol, &eq, 1e-3);
    println!(
        "eps = {}: entry {:?}, exit {:?}, inside {:.3}",
        m.eps, m.entry, m.exit, m.inside_fraction
    );
    println!(
        "middle 80%: sup|x - x*| = {:.2e}, sup|g - g*| = {:.2e}",
        m.x_mid_sup, m.g_mid_sup
    );

    for s in (0..grid.len()).step_by(grid.n_steps / 10) {
        println!(
            "t = {:>5.1}  x_1I = {:.6}  g_1I - g_1S = {:.6}",
            grid.time(s),
            sol.x_path[s].infected(0),
            sol.g_path[s].g_i(0) - sol.g_path[s].g_s(0)
        );
    }
    Ok(())
}
