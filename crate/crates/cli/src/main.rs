//! Experiment front end: divergence tables, bound sweeps, empirical theorem
//! verification, NPMLE fits, and Monte-Carlo rate studies, driven by flat
//! key=value configs.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use csl_cli::commands;
use csl_cli::config::Config;

#[derive(Parser)]
#[command(name = "csl", about = "channel-smoothing divergence experiments", version)]
struct Cli {
    /// Path to the key=value experiment config.
    #[arg(long, global = true, default_value = "experiment.cfg")]
    config: PathBuf,
    /// Output directory for CSV/SVG artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the config's `seed` key.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for trial-level parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Divergence table between two configured priors.
    Divergence,
    /// Forward-bound pipeline over an epsilon grid.
    Bounds,
    /// Empirical dominance sweep over random prior pairs.
    Verify,
    /// Single NPMLE fit on samples from a configured prior.
    Npmle,
    /// Monte-Carlo NPMLE error decay versus sample size.
    RateStudy,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter("CSL_LOG")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("building the thread pool")?;
    }

    let text = std::fs::read_to_string(&cli.config)
        .with_context(|| format!("reading config {}", cli.config.display()))?;
    let cfg = Config::parse(&text, &cli.config.display().to_string())?;

    let output = match cli.command {
        Command::Divergence => commands::cmd_divergence(&cfg, cli.seed)?,
        Command::Bounds => commands::cmd_bounds(&cfg, cli.seed)?,
        Command::Verify => commands::cmd_verify(&cfg, cli.seed)?,
        Command::Npmle => commands::cmd_npmle(&cfg, cli.seed)?,
        Command::RateStudy => commands::cmd_rate_study(&cfg, cli.seed)?,
    };

    std::fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating output directory {}", cli.out.display()))?;
    for (name, contents) in &output.files {
        let path = cli.out.join(name);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {}", path.display());
    }
    println!("{}", output.summary);
    Ok(())
}
