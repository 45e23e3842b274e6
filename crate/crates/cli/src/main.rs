use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use randlen_core::harness::{
    estimate_from_paths, export_paths, import_paths, run_scenario, verify_theorem,
    ExperimentConfig, Method, RunOptions, SeriesKind, TheoremId,
};
use randlen_core::{chi_upper, classify_regime};

#[derive(Parser)]
#[command(
    name = "randlen",
    version,
    about = "Tail and extremal indices of random-length weighted aggregates"
)]
struct Cli {
    /// Override the seed in every configuration file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run replications on a single thread.
    #[arg(long, global = true)]
    serial: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a result's hypotheses, simulate, and compare with its predictions.
    Verify {
        /// T2, T3.1, T3.2, T4, C3, C4, T5i, T5ii or T6.
        theorem: TheoremId,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate a configuration and write the aggregate paths as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an estimator on a path file written by `simulate`.
    Estimate {
        method: MethodArg,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k_order: Option<usize>,
        #[arg(long)]
        u: Option<f64>,
        #[arg(long)]
        block: Option<usize>,
        #[arg(long, value_enum, default_value = "y-star")]
        column: ColumnArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify the regime of (α, χ) and print χ₀ when k1 and k are given.
    Regime {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        chi: f64,
        #[arg(long, requires = "k")]
        k1: Option<f64>,
        #[arg(long, requires = "k1")]
        k: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Hill,
    ThetaDef,
    ThetaIntervals,
    ThetaBlocks,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Hill => Method::Hill,
            MethodArg::ThetaDef => Method::ThetaDef,
            MethodArg::ThetaIntervals => Method::ThetaIntervals,
            MethodArg::ThetaBlocks => Method::ThetaBlocks,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ColumnArg {
    #[value(name = "y_star", alias = "y-star")]
    YStar,
    #[value(name = "y_sum", alias = "y-sum")]
    YSum,
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    let opts = RunOptions {
        parallel: !cli.serial,
        keep_paths: false,
    };
    match cli.command {
        Command::Verify {
            theorem,
            config,
            out,
        } => {
            let cfg = load_config(&config, cli.seed)?;
            let report = verify_theorem(theorem, &cfg, &opts)?;
            write_json(&out, &report)?;
            for c in &report.checks {
                let est = c.estimate.map_or("n/a".to_owned(), |e| format!("{e:.4}"));
                println!(
                    "[{}] {}: estimate {est}, predicted {:.4}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.predicted
                );
            }
            println!(
                "{} {}",
                theorem,
                if report.pass { "passed" } else { "failed" }
            );
            Ok(if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Simulate { config, out } => {
            let cfg = load_config(&config, cli.seed)?;
            let res = run_scenario(
                &cfg,
                &RunOptions {
                    keep_paths: true,
                    ..opts
                },
            )?;
            export_paths(&res.paths, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Estimate {
            method,
            input,
            k_order,
            u,
            block,
            column,
            out,
        } => {
            let paths = import_paths(&input)?;
            let kind = match column {
                ColumnArg::YStar => SeriesKind::YStar,
                ColumnArg::YSum => SeriesKind::YSum,
            };
            let report = estimate_from_paths(method.into(), &paths, kind, k_order, u, block)?;
            write_json(&out, &report)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Regime { alpha, chi, k1, k } => {
            let regime = classify_regime(alpha, chi)?;
            println!("{regime}");
            if let (Some(k1), Some(k)) = (k1, k) {
                println!("chi0 = {}", chi_upper(k1, k)?);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
