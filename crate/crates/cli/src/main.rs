//! `lmm`: generate reference probes, build ground truth, train and evaluate
//! the map-of-Asplund-distances layer.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Config;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "lmm", version, about = "Logarithmic morphology and Asplund distance learning")]
struct Cli {
    /// Flat `key = value` file supplying defaults for flags not given.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

/// Where images come from: IDX files or the seeded synthetic set.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// IDX image file (optionally gzipped) or a directory holding the standard split files.
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,

    /// Split to read when `--data` is a directory: train or test.
    #[arg(long)]
    pub split: Option<String>,

    /// Use COUNT synthetic 28x28 images instead of IDX data.
    #[arg(long, value_name = "COUNT")]
    pub synthetic: Option<usize>,

    /// Seed of the synthetic images.
    #[arg(long)]
    pub data_seed: Option<u64>,

    /// Keep only the first N images.
    #[arg(long, value_name = "N")]
    pub limit: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write reference probe files and height previews for a (beta, c) grid.
    GenProbes {
        /// Comma-separated betas (default 0.2,0.4,...,1.2).
        #[arg(long)]
        beta_list: Option<String>,
        /// Comma-separated c values (default 10,25,...,250).
        #[arg(long)]
        c_list: Option<String>,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Compute (or reuse) the ground-truth distance maps for one probe.
    GroundTruth {
        #[command(flatten)]
        data: DataArgs,
        /// Reference probe file written by gen-probes.
        #[arg(long, value_name = "FILE")]
        probe: PathBuf,
        /// Ground-truth cache file.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Fit the layer's kernels to a ground truth.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_name = "FILE")]
        gt: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        batch: Option<usize>,
        /// mse or lipmse.
        #[arg(long)]
        loss: Option<String>,
        /// adam or sgd.
        #[arg(long)]
        optimizer: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_name = "FILE")]
        checkpoint_out: PathBuf,
        /// Training log CSV (default: <checkpoint-out>.log.csv).
        #[arg(long, value_name = "FILE")]
        log_out: Option<PathBuf>,
    },
    /// Score a checkpoint on the original, darkened and brightened test sets.
    Eval {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_name = "FILE")]
        gt: PathBuf,
        #[arg(long, value_name = "FILE")]
        checkpoint: PathBuf,
        /// LIP constant added (dark set) and subtracted (bright set).
        #[arg(long)]
        shift: Option<f64>,
        /// Report CSV (printed to stdout when omitted).
        #[arg(long, value_name = "FILE")]
        report_out: Option<PathBuf>,
    },
    /// Dump the seven panels: input, dark, bright, ground truth and three predictions.
    Predict {
        /// PGM image, or IDX file together with --index.
        #[arg(long, value_name = "FILE")]
        image: PathBuf,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long, value_name = "FILE")]
        checkpoint: PathBuf,
        /// Reference probe for the ground-truth panel.
        #[arg(long, value_name = "FILE")]
        probe: PathBuf,
        #[arg(long)]
        shift: Option<f64>,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Height and mask error of a checkpoint against its reference probe.
    ProbeError {
        #[arg(long, value_name = "FILE")]
        checkpoint: PathBuf,
        #[arg(long, value_name = "FILE")]
        reference: PathBuf,
        /// CSV output (printed to stdout when omitted).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::GenProbes { beta_list, c_list, out } => commands::gen_probes(&cfg, beta_list, c_list, &out),
        Command::GroundTruth { data, probe, out } => commands::ground_truth(&cfg, &data, &probe, &out),
        Command::Train {
            data,
            gt,
            epochs,
            lr,
            batch,
            loss,
            optimizer,
            seed,
            checkpoint_out,
            log_out,
        } => commands::train(
            &cfg,
            &data,
            &gt,
            commands::TrainFlags {
                epochs,
                lr,
                batch,
                loss,
                optimizer,
                seed,
            },
            &checkpoint_out,
            log_out,
        ),
        Command::Eval {
            data,
            gt,
            checkpoint,
            shift,
            report_out,
        } => commands::eval(&cfg, &data, &gt, &checkpoint, shift, report_out.as_deref()),
        Command::Predict {
            image,
            index,
            checkpoint,
            probe,
            shift,
            out,
        } => commands::predict(&cfg, &image, index, &checkpoint, &probe, shift, &out),
        Command::ProbeError { checkpoint, reference, out } => {
            commands::probe_error(&checkpoint, &reference, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
