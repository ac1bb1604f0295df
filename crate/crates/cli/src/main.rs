use std::path::PathBuf;
use std::process::ExitCode;

use bess_core::commands::{run, Command};
use bess_core::config::RunConfig;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bess", version, about = "Battery storage multi-market simulation and forecast-value evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Gate-closure preset (overrides the config).
    #[arg(long, global = true, value_enum)]
    market: Option<Market>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Weekly allocation, daily schedule and intraday dispatch over the data.
    Simulate,
    /// Decision value of synthetic forecasts across a Kendall tau grid.
    TauScan,
    /// Revenue attribution by system configuration.
    Ablate,
    /// Reservoir anomaly, regimes and reserve revenue statistics.
    Hydro,
    /// Benchmark forecasters by error, rank correlation and value capture.
    Eval,
    /// Write the synthetic market and hydrology data as CSV.
    SynthData,
}

#[derive(Clone, Copy, ValueEnum)]
enum Market {
    #[value(name = "DE")]
    De,
    #[value(name = "CH")]
    Ch,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(p) => match RunConfig::load(p) {
            Ok(c) => c,
            Err(e) => {
                log::error!("{e}");
                return ExitCode::from(1);
            }
        },
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(m) = cli.market {
        cfg.market = match m {
            Market::De => "DE",
            Market::Ch => "CH",
        }
        .into();
    }
    let cmd = match cli.command {
        Cmd::Simulate => Command::Simulate,
        Cmd::TauScan => Command::TauScan,
        Cmd::Ablate => Command::Ablate,
        Cmd::Hydro => Command::Hydro,
        Cmd::Eval => Command::Eval,
        Cmd::SynthData => Command::SynthData,
    };
    let started = std::time::Instant::now();
    match run(cmd, cfg) {
        Ok(m) => {
            log::info!(
                "{}: {} outputs written in {:.1} s",
                m.command,
                m.outputs.len(),
                started.elapsed().as_secs_f64()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
