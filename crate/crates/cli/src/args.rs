use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sonobiometry::agreement::IccVariant;
use sonobiometry::config::AnalysisConfig;
use sonobiometry::planes::CompositeWeights;

use crate::Failure;

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (report schema 1)");

#[derive(Debug, Parser)]
#[command(name = "sonobio", version = VERSION, about = "Fetal biometry from scored ultrasound frames")]
pub struct Cli {
    /// Worker threads for frame-level parallelism (default: logical cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,

    /// Suppress progress messages on stdout.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a study, pick the best frame per part and write the report.
    Analyze(AnalyzeArgs),
    /// Write a synthetic study with analytic ground truth.
    Phantom(PhantomArgs),
    /// Observer-agreement statistics from a ratings CSV.
    Agree(AgreeArgs),
    /// Score a backend against reference segmentations and measurements.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Study directory with study.json and frame_NNNNNN.png files.
    #[arg(long)]
    pub input: PathBuf,
    /// `fixture:DIR` or `phantom:SPEC` (a phantom.json path or `default`).
    #[arg(long)]
    pub backend: String,
    /// Report JSON destination.
    #[arg(long)]
    pub output: PathBuf,
    /// Optional per-frame CSV dump.
    #[arg(long)]
    pub frames_csv: Option<PathBuf>,
    /// Phantom backend seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    /// phantom.json to render; the built-in 30-frame study when absent.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Output directory, created if needed.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Mask noise level applied to every frame, overriding the spec.
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AgreeArgs {
    /// CSV with header reader,case,reading,kind,value_cm.
    #[arg(long)]
    pub ratings: PathBuf,
    /// Reader the MAE matrix is measured against.
    #[arg(long)]
    pub reference: String,
    #[arg(long)]
    pub out: PathBuf,
    /// ICC form: 1,1 (one-way), 2,1 (two-way random, absolute agreement) or
    /// 3,1 (two-way mixed, consistency).
    #[arg(long, default_value = "2,1")]
    pub icc: IccVariant,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// `fixture:DIR` or `phantom:SPEC`.
    #[arg(long)]
    pub backend: String,
    /// Directory with ground_truth.json and truth_NNNNNN.png files.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Phantom backend seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub config: ConfigArgs,
}

/// Analysis settings. Flags override the config file, which overrides the
/// defaults.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// JSON file with any subset of the settings below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub gate_threshold: Option<f64>,
    #[arg(long)]
    pub mask_threshold: Option<f64>,
    #[arg(long)]
    pub rdp_eps_rel: Option<f64>,
    #[arg(long)]
    pub dice_eps: Option<f64>,
    /// Femur composite weights: class,measurement.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub femur_weights: Option<Vec<f64>>,
    /// Head/abdomen composite weights: class,measurement,similarity.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub ellipse_weights: Option<Vec<f64>>,
}

impl ConfigArgs {
    /// A broken config file is an input error; a bad resulting value is a
    /// usage error.
    pub fn resolve(&self) -> Result<AnalysisConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => AnalysisConfig::from_json_file(path).map_err(|e| Failure::Input(e.to_string()))?,
            None => AnalysisConfig::default(),
        };
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut cfg.gate_threshold, self.gate_threshold);
        set(&mut cfg.mask_threshold, self.mask_threshold);
        set(&mut cfg.rdp_eps_rel, self.rdp_eps_rel);
        set(&mut cfg.dice_eps, self.dice_eps);
        let weights = CompositeWeights {
            femur: match &self.femur_weights {
                Some(w) => [w[0], w[1]],
                None => cfg.weights.femur,
            },
            ellipse_parts: match &self.ellipse_weights {
                Some(w) => [w[0], w[1], w[2]],
                None => cfg.weights.ellipse_parts,
            },
        };
        cfg.weights = weights;
        cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(cfg)
    }
}
