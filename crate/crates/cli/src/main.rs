//! `ladder`: predicts content-adaptive bitrate ladders from video features.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Failure;
use config::{AppConfig, Overrides};

#[derive(Parser, Debug)]
#[command(name = "ladder", version, about = "Content-adaptive bitrate ladder prediction", long_about = None)]
struct Cli {
    /// TOML config file; flags take precedence over its values
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute content features for Y4M or raw YUV chunks
    ExtractFeatures(commands::ExtractArgs),
    /// Build ground-truth ladders from measured rate-quality points
    BuildGt(commands::BuildGtArgs),
    /// Train the classifier and regressor
    Train(commands::TrainArgs),
    /// Predict the two constituent ladders for every chunk
    Predict(commands::PredictArgs),
    /// Resolve constituent disagreements with encodes
    Aggregate(commands::AggregateArgs),
    /// BD-BR of a test curve against a reference curve
    Bdbr(commands::BdbrArgs),
    /// K-fold cross-validation of all four predictors
    Crossval(commands::CrossvalArgs),
    /// Write a synthetic dataset (features and rate-quality points)
    Synth(commands::SynthArgs),
    /// Print the resolved configuration as TOML
    Config,
}

fn resolve(cli: &Cli) -> Result<AppConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => AppConfig::load(p).map_err(Failure::input)?,
        None => AppConfig::default(),
    };
    cli.overrides.apply(&mut cfg).map_err(Failure::input)?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = resolve(&cli)?;
    match cli.command {
        Command::ExtractFeatures(a) => commands::extract_features(&cfg, a),
        Command::BuildGt(a) => commands::build_gt(&cfg, a),
        Command::Train(a) => commands::train(&cfg, a),
        Command::Predict(a) => commands::predict(&cfg, a),
        Command::Aggregate(a) => commands::aggregate(&cfg, a),
        Command::Bdbr(a) => commands::bdbr(a),
        Command::Crossval(a) => commands::crossval(&cfg, a),
        Command::Synth(a) => commands::synth(&cfg, a),
        Command::Config => {
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
