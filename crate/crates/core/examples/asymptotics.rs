//! The first-order large-λ value expansions converge at rate λ⁻²: the error
//! drops by about four each time λ doubles.
//!
//!     cargo run --example asymptotics

use botnet_mfg::model::ModelParams;
use botnet_mfg::stationary::{
    fixed_point_mixed, fixed_point_single, hjb_mixed_asymptotic, hjb_mixed_exact,
    hjb_single_asymptotic, hjb_single_exact,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base: ModelParams = serde_json::from_str(include_str!("../fixtures/p0.json"))?;

    println!(
        "{:>6} {:>12} {:>8} {:>12} {:>8}",
        "lambda", "single err", "ratio", "mixed err", "ratio"
    );
    let mut prev: Option<(f64, f64)> = None;
    for lambda in [25.0, 50.0, 100.0, 200.0, 400.0] {
        let p = ModelParams {
            lambda,
            ..base.clone()
        };

        let (x1, _) = fixed_point_single(&p, 0)?;
        let single =
            hjb_single_exact(&p, 0, x1)?.sup_distance(&hjb_single_asymptotic(&p, 0, x1)?.values);

        let x = fixed_point_mixed(&p, 0, 1)?.state;
        let mixed = hjb_mixed_exact(&p, 0, 1, &x)?
            .sup_distance(&hjb_mixed_asymptotic(&p, 0, 1, &x)?.values);

        let (rs, rm) = prev.map_or((f64::NAN, f64::NAN), |(s, m)| (s / single, m / mixed));
        println!("{lambda:>6} {single:>12.3e} {rs:>8.3} {mixed:>12.3e} {rm:>8.3}");
        prev = Some((single, mixed));
    }
    Ok(())
}
