//! Gillespie simulation of the N-agent chain against the mean-field ODE:
//! the mean sup-error halves each time N quadruples.
//!
//!     cargo run --release --example mean_field_limit

use botnet_mfg::dynamics::TimeGrid;
use botnet_mfg::finite_n::{lln_error, simulate_ctmc, CountVector};
use botnet_mfg::model::{MixedState, ModelParams, StationaryControl};
use botnet_mfg::stationary::fixed_point_single;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p: ModelParams = serde_json::from_str(include_str!("../fixtures/p0.json"))?;
    let u = StationaryControl::single(p.d, 0);
    let x0 = MixedState::uniform(p.d);
    let grid = TimeGrid::for_model(&p, 0.0, 5.0)?;

    let rows = lln_error(&p, &u, &x0, &grid, &[250, 1000, 4000, 16000], 50, 42)?;
    println!(
        "{:>6} {:>12} {:>12} {:>8}",
        "N", "mean error", "std error", "ratio"
    );
    for (a, b) in std::iter::once(None)
        .chain(rows.iter().map(Some))
        .zip(&rows)
    {
        let ratio = a.map_or(f64::NAN, |a| a.mean_error / b.mean_error);
        println!(
            "{:>6} {:>12.4e} {:>12.2e} {:>8.3}",
            b.n,
            b.mean_error,
            b.std_error.unwrap_or(f64::NAN),
            ratio
        );
    }

    let (x_star, _) = fixed_point_single(&p, 0)?;
    let path = simulate_ctmc(&p, &CountVector::from_fractions(&x0, 10_000), &u, 50.0, 7);
    println!("\nN = 10000 after t = 50: {} jumps", path.events.len());
    println!("  fractions {:?}", path.terminal().fractions());
    println!("  x_1I* = {x_star:.6}");
    Ok(())
}
