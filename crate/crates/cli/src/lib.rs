//! `csi2dig` command-line front end. Every subcommand writes only into the
//! directory given by `--out`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 numeric failure.

mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use csi2dig_core::autoencoder::AeError;
use csi2dig_core::model::CsiError;
use csi2dig_core::neural::NeuralError;
use csi2dig_core::preprocess::PreprocessError;
use csi2dig_core::synth::SynthError;
use csi2dig_core::tsnet::TsNetError;

pub use config::PipelineConfig;

#[derive(Debug, Error, PartialEq)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<CsiError> for CliError {
    fn from(e: CsiError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<NeuralError> for CliError {
    fn from(e: NeuralError) -> Self {
        match e {
            NeuralError::NumericFailure(_) => CliError::Numeric(e.to_string()),
            NeuralError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<PreprocessError> for CliError {
    fn from(e: PreprocessError) -> Self {
        match e {
            PreprocessError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidSpec(_) => CliError::Usage(e.to_string()),
            SynthError::Preprocess(p) => p.into(),
            SynthError::AllWindowsDropped => CliError::Data(e.to_string()),
        }
    }
}

impl From<TsNetError> for CliError {
    fn from(e: TsNetError) -> Self {
        match e {
            TsNetError::Neural(n) => n.into(),
            TsNetError::InvalidConfig(_) | TsNetError::WeightConstraintViolated { .. } | TsNetError::BadN { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<AeError> for CliError {
    fn from(e: AeError) -> Self {
        match e {
            AeError::Neural(n) => n.into(),
            AeError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "csi2dig", version, about = "Digit recovery from WiFi CSI amplitude sequences")]
pub struct Cli {
    /// Seed for every random choice; overrides `seed` in the config file
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all available cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// TOML pipeline configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Suppress progress output on standard error
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LayoutArg {
    /// 20 MHz layout without guards and DC when the input has 64 columns, else all columns
    Auto,
    /// 20 MHz layout without guard bands and DC (56 kept)
    Bw20,
    /// Like bw20 but also without the four pilots (52 kept)
    Bw20NoPilots,
    /// Keep every column
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Corrected,
    Literal,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic CSI capture (csi.csv, ground_truth.csv)
    Synth {
        /// TOML file with synthetic-generator fields; replaces the config's [synth] table
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Parse a CSI CSV, drop unused subcarriers, write csi.csv
    Convert {
        /// Input CSI CSV
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = LayoutArg::Auto)]
        layout: LayoutArg,
    },
    /// Cut a CSI CSV into fixed-length windows and write a sample dataset
    Segment {
        /// Input CSI CSV
        #[arg(long)]
        input: PathBuf,
        /// ground_truth.csv from `synth`; labels windows by index
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = LayoutArg::Auto)]
        layout: LayoutArg,
        /// Wavelet-denoise every column before normalization
        #[arg(long)]
        wavelet: bool,
        /// Skip per-column z-scoring
        #[arg(long)]
        no_normalize: bool,
    },
    /// Correlation matrices, profiles and pairwise similarities of samples
    Analyze {
        /// Dataset directory
        #[arg(long)]
        dataset: PathBuf,
        /// Sample whose correlation matrices are written
        #[arg(long, default_value_t = 0)]
        sample: usize,
        /// Second sample to compare against (DTW distance and cross-mean correlation)
        #[arg(long)]
        against: Option<usize>,
    },
    /// Train the contrastive autoencoder (autoencoder.ckpt)
    TrainAe {
        /// Dataset directory
        #[arg(long)]
        dataset: PathBuf,
        /// Correlation margin for different-class pairs
        #[arg(long)]
        xi: Option<f64>,
        #[arg(long, value_enum)]
        loss_variant: Option<LossArg>,
        /// Weight of the reconstruction term
        #[arg(long)]
        recon_weight: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Train the classifier on a stratified split (tsnet.ckpt, holdout.csv)
    Train {
        /// Dataset directory
        #[arg(long)]
        dataset: PathBuf,
        /// Temporal branch weight
        #[arg(long)]
        alpha: Option<f64>,
        /// Spatial branch weight
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Autoencoder checkpoint used to denoise samples first, or `none`
        #[arg(long, default_value = "none")]
        ae: String,
        /// Fraction of every class held out for evaluation
        #[arg(long, default_value_t = 0.3)]
        holdout_fraction: f64,
    },
    /// Top-N accuracy of a classifier checkpoint (eval.csv)
    Eval {
        /// Dataset directory
        #[arg(long)]
        dataset: PathBuf,
        /// Classifier checkpoint
        #[arg(long)]
        checkpoint: PathBuf,
        /// holdout.csv from `train`; evaluates only those samples
        #[arg(long)]
        holdout: Option<PathBuf>,
        /// Autoencoder checkpoint used to denoise samples first, or `none`
        #[arg(long, default_value = "none")]
        ae: String,
        /// Largest N reported
        #[arg(long, default_value_t = 5)]
        topn: usize,
        /// Add one row per class
        #[arg(long)]
        per_class: bool,
    },
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn dispatch(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    }
    .with_seed(cli.seed);
    cfg.validate()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    pool.install(|| commands::execute(&cli, cfg))
}
