//! How the equilibrium set changes with the infected cost on strategy 1 and the
//! discount δ.
//!
//!     cargo run --release --example sweep

use botnet_mfg::model::ModelParams;
use botnet_mfg::stationary::enumerate_equilibria;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base: ModelParams = serde_json::from_str(include_str!("../fixtures/p0.json"))?;
    println!("{:>6} {:>6}  equilibria", "w_1I", "delta");
    for w in [1.5, 2.0, 2.5, 3.0, 3.5, 4.0] {
        for delta in [0.01, 0.1, 1.0] {
            let mut p = ModelParams {
                delta,
                ..base.clone()
            };
            p.w_i[0] = w;
            let set = enumerate_equilibria(&p)?;
            let labels: Vec<String> = set.equilibria().map(|e| e.family.to_string()).collect();
            println!(
                "{w:>6} {delta:>6}  {}",
                if labels.is_empty() {
                    "-".into()
                } else {
                    labels.join(", ")
                }
            );
        }
    }
    Ok(())
}
