//! Drive a run from a JSON scenario, as the `botnet-mfg solve` binary does.
//!
//!     cargo run --example run_config -- crates/core/configs/sweep.json

use std::path::PathBuf;

use botnet_mfg::config::parse_config;
use botnet_mfg::run::execute;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/equilibria.json")
        });
    let cfg = parse_config(&path)?;
    let out = std::env::temp_dir().join(format!("botnet-mfg-{}", cfg.run));

    let report = execute(&cfg, &out)?;
    println!(
        "{} run: {} ok, {} failed",
        report.run, report.points_ok, report.points_failed
    );
    for a in &report.artifacts {
        println!("  {}", out.join(a).display());
    }
    for e in &report.errors {
        println!("  error: {e}");
    }
    Ok(())
}
