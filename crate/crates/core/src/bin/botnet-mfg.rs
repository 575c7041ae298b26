use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use botnet_mfg::config::parse_config;
use botnet_mfg::run::{execute, resolve_output_dir, OUT_DIR_ENV};

#[derive(Parser)]
#[command(
    name = "botnet-mfg",
    version,
    about = "Botnet-defense mean-field game solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a JSON config.
    Solve {
        config: PathBuf,
        /// Output directory (default: config `output.dir`, then $BOTNET_MFG_OUT_DIR, then ./results).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for parallel sections.
        #[arg(long)]
        threads: Option<usize>,
        /// Parse and validate only; write nothing.
        #[arg(long)]
        validate_only: bool,
    },
}

fn main() -> ExitCode {
    let Command::Solve {
        config,
        out,
        seed,
        threads,
        validate_only,
    } = Cli::parse().command;

    let mut cfg = match parse_config(&config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if validate_only {
        println!("{}: ok ({} run)", config.display(), cfg.run);
        return ExitCode::SUCCESS;
    }
    if let Some(k) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
        {
            eprintln!("warning: cannot size thread pool: {e}");
        }
    }

    let env_dir = std::env::var(OUT_DIR_ENV).ok();
    let out_dir = resolve_output_dir(out.as_deref(), &cfg, env_dir.as_deref());
    match execute(&cfg, &out_dir) {
        Ok(report) => {
            for e in &report.errors {
                eprintln!("error: {e}");
            }
            println!(
                "{}: {} ok, {} failed -> {}",
                cfg.run,
                report.points_ok,
                report.points_failed,
                out_dir.display()
            );
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
