//! Closed-form eigenvalues of a `Single(i)` fixed point against the
//! numerically computed tangent spectrum, and the spectrum of a mixed
//! fixed point.
//!
//!     cargo run --example stability

use botnet_mfg::model::ModelParams;
use botnet_mfg::stationary::{
    fixed_point_mixed, fixed_point_single, stability_mixed, stability_single,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p: ModelParams = serde_json::from_str(include_str!("../fixtures/p0.json"))?;

    for i in 0..p.d {
        let (x_star, _) = fixed_point_single(&p, i)?;
        let r = stability_single(&p, i, x_star)?;
        println!("Single({}): x* = {x_star:.6}", i + 1);
        println!("  closed form: {:?}", r.closed_form_sorted());
        println!(
            "  numerical:   {:?}",
            r.spectrum.iter().map(|e| e.re).collect::<Vec<_>>()
        );
        println!(
            "  discrepancy {:.2e}, stable = {}",
            r.closed_form_discrepancy.unwrap_or(f64::NAN),
            r.stable
        );
    }

    let fp = fixed_point_mixed(&p, 0, 1)?;
    let r = stability_mixed(&p, 0, 1, &fp.state)?;
    println!(
        "Mixed(1,2): Newton converged in {} iterations",
        fp.iterations
    );
    for e in &r.spectrum {
        println!("  {:+.6} {:+.6}i", e.re, e.im);
    }
    println!("  stable = {}", r.stable);
    Ok(())
}
