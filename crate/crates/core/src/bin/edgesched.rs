use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use edgesched::harness::{
    emit_report, read_runs, required_keys, run_all, run_experiment, train_or_load, write_runs,
    ExperimentConfig,
};

#[derive(Parser)]
#[command(version, about = "Edge QoE scheduling simulator and experiment harness")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// Experiment config (TOML). Built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Added to every evaluation seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed_offset: u64,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Verb {
    /// Collect traces, fit kernels and solve every policy.
    Train,
    /// Evaluate every policy and seed.
    Run,
    /// Aggregate run logs into figure data and a comparison table.
    Report,
    /// Train, run and report.
    All,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    for s in &mut cfg.seeds {
        *s = s
            .checked_add(cli.seed_offset)
            .context("--seed-offset overflows a seed")?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = load(cli)?;
    let report_dir = cfg.out_dir.join("report");
    match cli.verb {
        Verb::Train => {
            let (lib, cached) = train_or_load(&cfg, &required_keys(&cfg))?;
            let verb = if cached { "loaded" } else { "trained" };
            println!("{verb} {} bin load(s) in {}", lib.bins.len(), cfg.out_dir.join("artifacts").display());
        }
        Verb::Run => {
            let (lib, _) = train_or_load(&cfg, &required_keys(&cfg))?;
            let runs = run_experiment(&cfg, &lib)?;
            write_runs(&cfg, &runs)?;
            println!("wrote {} runs to {}", runs.len(), cfg.out_dir.join("runs").display());
        }
        Verb::Report => {
            let runs = read_runs(&cfg)?;
            let report = emit_report(&cfg, &runs, &report_dir)?;
            print!("{}", report.table);
        }
        Verb::All => {
            let report = run_all(&cfg)?;
            print!("{}", report.table);
        }
    }
    Ok(())
}
