//! Batch pipeline runner: every analysis stage is a subcommand driven by a
//! shared JSON config.
//!
//! Exit codes: 0 success, 2 config error, 3 data validation error,
//! 4 estimation failure.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use cohortkit::Error as CoreError;
use config::PipelineConfig;
use output::{config_hash, write_manifest, Manifest, OutputSink};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cohortkit",
    version,
    about = "Cohort-comparison analysis pipeline: estimation, psychometrics, usage measures, simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Pipeline config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the config's output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Cap the worker-thread count (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output format: csv (always written) or md (additionally).
    #[arg(long, global = true, default_value = "csv", value_parser = ["csv", "md"])]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Per-scale reliability, CFA, item-total correlations, and item selection.
    ItemAnalysis,
    /// Polychoric correlations, KMO/Bartlett/determinant, retention criteria.
    PcaDiagnostics,
    /// Per-student scale-mean scores.
    Score,
    /// OLS (full/means/PCs) and DML (interactive/partially linear) ATEs.
    Estimate,
    /// Cohort mean-comparison (balance) report.
    Balance,
    /// Engagement measures, quartile summary, access-vs-usage series.
    Usage,
    /// Generate a synthetic cohort and export it with its ground truth.
    Simulate,
    /// Replicated estimator comparison with bias/SD/RMSE/coverage.
    Benchmark,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::ItemAnalysis => "item-analysis",
            Command::PcaDiagnostics => "pca-diagnostics",
            Command::Score => "score",
            Command::Estimate => "estimate",
            Command::Balance => "balance",
            Command::Usage => "usage",
            Command::Simulate => "simulate",
            Command::Benchmark => "benchmark",
        }
    }
}

fn exit_code_for(error: &anyhow::Error) -> u8 {
    if let Some(core) = error.downcast_ref::<CoreError>() {
        return match core {
            CoreError::Config(_) | CoreError::Json(_) => 2,
            CoreError::Schema(_)
            | CoreError::Validation(_)
            | CoreError::Io(_)
            | CoreError::Csv(_) => 3,
            CoreError::Estimation(_) => 4,
        };
    }
    // Configuration problems surface before any data is touched.
    let text = error.to_string();
    if text.contains("config") {
        2
    } else {
        3
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| anyhow::anyhow!("config error: cannot set thread count: {e}"))?;
    }

    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("config error: --config <FILE> is required"))?;
    let config = PipelineConfig::load(config_path)?;
    let config_dir = config_path
        .parent()
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| PathBuf::from("."));

    let seed = cli.seed.unwrap_or(config.seed);
    let out_dir = cli.out.clone().unwrap_or_else(|| {
        if config.output_dir.is_absolute() {
            config.output_dir.clone()
        } else {
            config_dir.join(&config.output_dir)
        }
    });
    let markdown = cli.format == "md";
    let mut sink = OutputSink::new(&out_dir, markdown)?;
    let hash = config_hash(config_path)?;

    match cli.command {
        Command::ItemAnalysis => {
            commands::psych_cmd::item_analysis(&config, &config_dir, &mut sink)?
        }
        Command::PcaDiagnostics => {
            commands::psych_cmd::pca_diagnostics(&config, &config_dir, seed, &mut sink)?
        }
        Command::Score => commands::psych_cmd::score(&config, &config_dir, &mut sink)?,
        Command::Estimate => commands::estimate::run(&config, &config_dir, seed, &mut sink)?,
        Command::Balance => commands::balance::run(&config, &config_dir, &mut sink)?,
        Command::Usage => commands::usage_cmd::run(&config, &config_dir, &mut sink)?,
        Command::Simulate => commands::sim_cmd::simulate(&config, seed, &mut sink)?,
        Command::Benchmark => commands::sim_cmd::benchmark(&config, seed, &mut sink)?,
    }

    // Settings snapshot: estimation runs record their tuning geometry.
    let settings = match (&cli.command, &config.estimate) {
        (Command::Estimate, Some(section)) => serde_json::json!({
            "folds": section.dml.folds,
            "repetitions": section.dml.repetitions,
            "clip": section.dml.clip,
            "cv_folds": section.dml.cv_folds,
            "hc": section.ols.hc,
        }),
        (Command::Benchmark, _) => serde_json::json!({
            "replications": config.benchmark.as_ref().map(|b| b.replications),
        }),
        _ => serde_json::json!({}),
    };
    let manifest = Manifest {
        subcommand: cli.command.name().to_string(),
        config_sha256: hash,
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        settings,
        outputs: sink.written.clone(),
    };
    write_manifest(&mut sink, &manifest)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(exit_code_for(&error))
        }
    }
}
