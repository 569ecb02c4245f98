use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gaplab::harness::{run, ExperimentConfig, Subcommand};

/// Seeded verification suites and experiment grids.
#[derive(Parser, Debug)]
#[command(name = "gaplab", version)]
struct Cli {
    /// norm-ratio, linearize-verify, kernel-check, lattice-grow, rate-table or certify-toy.
    #[arg(long)]
    subcommand: Option<String>,
    /// JSON config file; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replaces the config's seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output root; each subcommand writes into its own child directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for trial-level parallelism.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: Cli) -> Result<bool, String> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("config: {}: {e}", p.display()))?;
            ExperimentConfig::from_json(&text).map_err(|e| format!("config: {e}"))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seeds = vec![s];
    }
    let sub: Subcommand = match (&cli.subcommand, cfg.command) {
        (Some(name), _) => name.parse().map_err(|e| format!("subcommand: {e}"))?,
        (None, Some(c)) => c,
        (None, None) => return Err("subcommand: none given on the command line or in the config".into()),
    };
    cfg.command = Some(sub);
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().map_err(|e| format!("threads: {e}"))?;
    }
    let out = cli.out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let outcome = run(sub, &cfg, &out).map_err(|e| e.to_string())?;
    for a in &outcome.manifest.assertions {
        let mark = if a.passed { "ok  " } else { "FAIL" };
        println!("{mark} {}: {}", a.name, a.detail);
    }
    println!("wrote {}", outcome.dir.display());
    if !outcome.passed() {
        eprintln!("error: {sub}: assertion failure");
    }
    Ok(outcome.passed())
}
