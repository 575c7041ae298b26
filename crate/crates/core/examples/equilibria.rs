//! Enumerate every stationary candidate of the reference parameters and
//! print which ones are equilibria.
//!
//!     cargo run --example equilibria

use botnet_mfg::model::ModelParams;
use botnet_mfg::stationary::enumerate_equilibria;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p: ModelParams = serde_json::from_str(include_str!("../fixtures/p0.json"))?;
    let set = enumerate_equilibria(&p)?;

    println!(
        "{:<11} {:<12} {:>12} {:>12} {:>10}",
        "candidate", "status", "min margin", "max Re", "residual"
    );
    for c in &set.candidates {
        match &c.solution {
            Some(s) => println!(
                "{:<11} {:<12} {:>12.4e} {:>12.4e} {:>10.1e}",
                c.family.to_string(),
                format!("{:?}", c.status),
                s.margins.min_exact(),
                s.stability.max_real_part,
                s.residual
            ),
            None => println!(
                "{:<11} {:?}: {}",
                c.family.to_string(),
                c.status,
                c.error.as_deref().unwrap_or("")
            ),
        }
    }

    for eq in set.equilibria() {
        println!("\n{} is an equilibrium", eq.family);
        println!("  x* = {:?}", eq.x_star.as_slice());
        println!("  g  = {:?}", eq.g.as_slice());
    }
    Ok(())
}
