//! Command-line front end for BD-RIS aided RSMA sum-rate experiments.

use anyhow::{bail, Context};
use bdris_core::config::{RadiationPattern, Scheme, SystemConfig};
use bdris_core::experiment::{self, ExperimentSpec, SweepKind};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "bdris-sim",
    about = "Monte Carlo sum-rate experiments for multi-sector BD-RIS aided RSMA downlink"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep of Monte Carlo sum-rate experiments and write a CSV.
    Simulate(SimulateArgs),
    /// Print a config template (all keys with their default values).
    PrintConfig {
        /// Emit full-scale defaults instead of desk-scale.
        #[arg(long)]
        full_scale: bool,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario config file (flat `key = value` text).
    #[arg(long)]
    config: PathBuf,

    /// Parameter to sweep: power|delta|rth|m|n.
    #[arg(long)]
    sweep: Option<String>,

    /// Comma-separated sweep values (required with --sweep).
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,

    /// Schemes to run.
    #[arg(long, value_delimiter = ',', default_value = "rsma,sdma")]
    schemes: Vec<String>,

    /// Radiation patterns to run.
    #[arg(long, value_delimiter = ',', default_value = "idealized")]
    patterns: Vec<String>,

    /// Independent channel realizations per configuration.
    #[arg(long, default_value_t = 10)]
    realizations: usize,

    /// RNG seed; overrides the config file's seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Start from full-scale defaults instead of desk-scale before applying
    /// the config file.
    #[arg(long)]
    full_scale: bool,

    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Simulate(args) => simulate(args),
        Command::PrintConfig { full_scale } => {
            let cfg = if full_scale {
                SystemConfig::<f64>::full_scale()
            } else {
                SystemConfig::<f64>::desk_scale()
            };
            print!("{}", cfg.to_kv_string());
            Ok(())
        }
    }
}

fn simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("cannot read config {}", args.config.display()))?;
    let mut base = if args.full_scale {
        SystemConfig::<f64>::full_scale()
    } else {
        SystemConfig::<f64>::desk_scale()
    };
    base.apply_kv_text(&text)?;
    if let Some(seed) = args.seed {
        base.seed = seed;
    }
    let seed = base.seed;
    // surface config errors before spending time on the sweep
    base.validate()?;

    let sweep = match &args.sweep {
        Some(s) => SweepKind::parse(s)?,
        None => SweepKind::None,
    };
    let values = if sweep == SweepKind::None {
        if !args.values.is_empty() {
            bail!("--values requires --sweep");
        }
        vec![f64::NAN]
    } else {
        if args.values.is_empty() {
            bail!("--sweep requires --values");
        }
        args.values.clone()
    };

    let schemes = args
        .schemes
        .iter()
        .map(|s| match s.as_str() {
            "rsma" => Ok(Scheme::Rsma),
            "sdma" => Ok(Scheme::Sdma),
            other => bail!("unknown scheme `{other}` (expected rsma|sdma)"),
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let patterns = args
        .patterns
        .iter()
        .map(|s| match s.as_str() {
            "idealized" => Ok(RadiationPattern::Idealized),
            "practical" => Ok(RadiationPattern::Practical),
            other => bail!("unknown pattern `{other}` (expected idealized|practical)"),
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    let spec = ExperimentSpec {
        base,
        sweep,
        values,
        schemes,
        patterns,
        realizations: args.realizations,
        seed,
    };
    let rows = experiment::run(&spec)?;
    experiment::write_csv(&args.out, &rows)?;
    print!("{}", experiment::report(&rows));
    println!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}
