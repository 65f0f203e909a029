//! fairsense: train small tabular classifiers, measure per-prediction
//! sensitivity to a protected attribute, and run fairness audits, threshold
//! sweeps, and monitors over them.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric
//! failure (non-finite loss).

mod commands;
mod config;
mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_grid_flag, RunConfig};
use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "fairsense",
    version,
    about = "Fairness auditing for small tabular classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a classifier; writes model.json, schema.json, train_trace.json
    Train(TrainArgs),
    /// Fairness report and per-feature sensitivity distribution CSV
    Audit(ModelDataArgs),
    /// Monitor threshold sweep; writes sweep.csv
    Sweep(ModelDataArgs),
    /// Stream verdicts for attribute rows; JSON lines on stdout
    Monitor(MonitorArgs),
    /// Protected-sensitivity stream statistics for a dataset
    Stats(ModelDataArgs),
    /// Generate a synthetic census-style train/test pair
    Synth(SynthArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// JSON config file; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed for anything randomized (no wall-clock seeding)
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: out)
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Protected feature group (default: sex)
    #[arg(long)]
    protected: Option<String>,
    /// Privileged category of the protected group (default: Male)
    #[arg(long)]
    privileged: Option<String>,
    /// Monitor threshold; "inf" disables flagging
    #[arg(long)]
    threshold: Option<f64>,
    /// Sweep grid: "deciles" or comma-separated thresholds (e.g. "0.05,0.1,inf")
    #[arg(long)]
    grid: Option<String>,
}

impl CommonArgs {
    fn resolve(&self) -> CliResult<RunConfig> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let grid = match &self.grid {
            Some(flag) => Some(parse_grid_flag(flag)?),
            None => None,
        };
        Ok(base.merge(RunConfig {
            seed: self.seed,
            out_dir: self.out_dir.clone(),
            protected: self.protected.clone(),
            privileged: self.privileged.clone(),
            threshold: self.threshold,
            grid,
            ..Default::default()
        }))
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Training CSV (attributes + label)
    #[arg(long)]
    train_csv: Option<PathBuf>,
    /// Held-out CSV scored after training
    #[arg(long)]
    test_csv: Option<PathBuf>,
    /// Split the train file instead of using a test file
    #[arg(long)]
    split_fraction: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Hidden layer widths, comma separated (default: 64,32)
    #[arg(long)]
    hidden: Option<String>,
}

#[derive(Args)]
struct ModelDataArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Model file (default: <out-dir>/model.json)
    #[arg(long)]
    model: Option<PathBuf>,
    /// Schema file (default: next to the model file)
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Labeled CSV to evaluate
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct MonitorArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Attribute rows to monitor: a CSV path, or "-" for stdin
    #[arg(long, default_value = "-")]
    input: String,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Training rows to generate
    #[arg(long, default_value_t = 12_000)]
    rows: usize,
    /// Test rows to generate
    #[arg(long, default_value_t = 6_000)]
    test_rows: usize,
    /// Fraction of rows given "?" markers
    #[arg(long, default_value_t = 0.05)]
    missing_rate: f64,
}

fn parse_hidden(flag: &str) -> CliResult<Vec<usize>> {
    let dims: Result<Vec<usize>, _> = flag.split(',').map(|p| p.trim().parse()).collect();
    match dims {
        Ok(d) if !d.is_empty() => Ok(d),
        _ => Err(CliError::usage(format!(
            "cannot parse hidden layout {flag:?}: expected e.g. \"64,32\""
        ))),
    }
}

fn model_data_paths(args: &ModelDataArgs, cfg: &RunConfig) -> CliResult<(PathBuf, PathBuf, PathBuf)> {
    let model = args
        .model
        .clone()
        .unwrap_or_else(|| commands::default_model_path(cfg));
    let schema = args
        .schema
        .clone()
        .unwrap_or_else(|| commands::default_schema_path(&model));
    let data = args
        .data
        .clone()
        .or_else(|| cfg.test_csv.clone())
        .ok_or_else(|| CliError::usage("missing --data (or test_csv in config)"))?;
    Ok((model, schema, data))
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Train(args) => {
            let mut cfg = args.common.resolve()?;
            cfg = cfg.merge(RunConfig {
                train_csv: args.train_csv.clone(),
                test_csv: args.test_csv.clone(),
                split_fraction: args.split_fraction,
                epochs: args.epochs,
                batch_size: args.batch_size,
                learning_rate: args.learning_rate,
                hidden: match &args.hidden {
                    Some(flag) => Some(parse_hidden(flag)?),
                    None => None,
                },
                ..Default::default()
            });
            commands::train::run(&cfg)
        }
        Command::Audit(args) => {
            let cfg = args.common.resolve()?;
            let (model, schema, data) = model_data_paths(&args, &cfg)?;
            commands::audit::run(&cfg, &model, &schema, &data)
        }
        Command::Sweep(args) => {
            let cfg = args.common.resolve()?;
            let (model, schema, data) = model_data_paths(&args, &cfg)?;
            commands::sweep::run(&cfg, &model, &schema, &data)
        }
        Command::Monitor(args) => {
            let cfg = args.common.resolve()?;
            let model = args
                .model
                .clone()
                .unwrap_or_else(|| commands::default_model_path(&cfg));
            let schema = args
                .schema
                .clone()
                .unwrap_or_else(|| commands::default_schema_path(&model));
            commands::monitor::run(&cfg, &model, &schema, &args.input)
        }
        Command::Stats(args) => {
            let cfg = args.common.resolve()?;
            let (model, schema, data) = model_data_paths(&args, &cfg)?;
            commands::stats::run(&cfg, &model, &schema, &data)
        }
        Command::Synth(args) => {
            let cfg = args.common.resolve()?;
            commands::synth::run(&cfg, args.rows, args.test_rows, args.missing_rate)
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are not failures
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = dispatch(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
