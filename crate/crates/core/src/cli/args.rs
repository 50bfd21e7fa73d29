use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::solver::{Constraint, InitStrategy, ModelSpec, SolverConfig, Variant};

use super::{
    cmd_biclusters, cmd_compare, cmd_generate, cmd_solve, comparison_table, DataSource,
    ExperimentConfig, GeneratorKind,
};

#[derive(Debug, Parser)]
#[command(
    name = "ssnmf",
    version,
    about = "Structured-sparse non-negative matrix factorization"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset as CSV plus a label sidecar.
    Generate {
        #[arg(value_enum)]
        kind: GeneratorKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one model with several restarts.
    Solve(SolveArgs),
    /// Fit several models on one dataset and tabulate the metrics.
    Compare(SolveArgs),
    /// Extract biclusters from saved W and H factors.
    Biclusters {
        #[arg(long = "w")]
        w: PathBuf,
        #[arg(long = "h")]
        h: PathBuf,
        /// z-score threshold; required, there is no default.
        #[arg(long = "threshold-T", allow_negative_numbers = true)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Random,
    Warm,
}

#[derive(Clone, Debug, Args)]
pub struct SolveArgs {
    /// Matrix file (CSV, TSV or MatrixMarket), features in rows.
    #[arg(
        long,
        conflicts_with = "generate",
        required_unless_present = "generate"
    )]
    pub dataset: Option<PathBuf>,
    /// Use a synthetic dataset instead of a file.
    #[arg(long, value_enum)]
    pub generate: Option<GeneratorKind>,
    /// Dataset seed for generators and base seed for restarts.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model variant; `compare` accepts a comma-separated list.
    #[arg(long, required = true, value_delimiter = ',', value_parser = parse_variant)]
    pub model: Vec<Variant>,
    #[arg(long)]
    pub rank: usize,
    /// Sparsity level; required by the sparse variants.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = ModelSpec::DEFAULT_RHO)]
    pub rho: f64,
    #[arg(long, default_value_t = ModelSpec::DEFAULT_GAMMA)]
    pub gamma: f64,
    #[arg(long, default_value_t = ModelSpec::DEFAULT_STEPS)]
    pub continuation_steps: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value = "on")]
    pub accelerate: Switch,
    #[arg(long, value_enum, default_value = "warm")]
    pub init: InitArg,
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth labels, one per line.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Also extract biclusters at this z-score threshold.
    #[arg(long = "threshold-T", allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    /// Drop features that are zero in more than this fraction of samples and
    /// log-transform the rest.
    #[arg(long, num_args = 0..=1, default_missing_value = "0.7")]
    pub preprocess: Option<f64>,
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    s.parse::<Variant>().map_err(|e| e.to_string())
}

impl SolveArgs {
    /// One config per requested model.
    pub fn configs(&self) -> Result<Vec<ExperimentConfig>> {
        let source = match (&self.dataset, self.generate) {
            (Some(path), None) => DataSource::File { path: path.clone() },
            (None, Some(kind)) => DataSource::Generator {
                kind,
                seed: self.seed,
            },
            _ => {
                return Err(Error::InvalidArgument(
                    "exactly one of --dataset and --generate is required".into(),
                ))
            }
        };
        self.model
            .iter()
            .map(|&variant| {
                let k = match (variant.constraint(), self.k) {
                    (Constraint::NonNegative, k) => k.unwrap_or(0),
                    (_, Some(k)) => k,
                    (_, None) => {
                        return Err(Error::InvalidArgument(format!(
                            "model `{variant}` needs --k"
                        )))
                    }
                };
                Ok(ExperimentConfig {
                    source: source.clone(),
                    labels: self.labels.clone(),
                    preprocess: self.preprocess,
                    model: ModelSpec::new(variant, self.rank, k)
                        .with_rho(self.rho)
                        .with_continuation(self.gamma, self.continuation_steps),
                    solver: SolverConfig {
                        epsilon: self.epsilon,
                        max_iter: self.max_iter,
                        accelerate: self.accelerate == Switch::On,
                        seed: self.seed,
                        init: match self.init {
                            InitArg::Random => InitStrategy::RandomNormalAbs,
                            InitArg::Warm => InitStrategy::NmfWarmStart,
                        },
                    },
                    restarts: self.restarts,
                    threshold: self.threshold,
                    out: self.out.clone(),
                })
            })
            .collect()
    }
}

/// Executes a parsed command line. Returns `Ok(false)` when some restart
/// failed, so the caller can exit non-zero.
pub fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Generate { kind, seed, out } => {
            cmd_generate(kind, seed, &out)?;
            Ok(true)
        }
        Command::Solve(args) => {
            let configs = args.configs()?;
            if configs.len() != 1 {
                return Err(Error::InvalidArgument(
                    "solve takes exactly one --model; use compare for several".into(),
                ));
            }
            let report = cmd_solve(&configs[0])?;
            let a = &report.aggregate;
            match (a.nmi_mean, a.nmi_std) {
                (Some(m), Some(s)) => println!(
                    "{}: {} of {} restarts, NMI {:.4} ± {:.4}",
                    configs[0].model.variant, a.completed, configs[0].restarts, m, s
                ),
                _ => println!(
                    "{}: {} of {} restarts",
                    configs[0].model.variant, a.completed, configs[0].restarts
                ),
            }
            Ok(report.all_completed())
        }
        Command::Compare(args) => {
            let configs = args.configs()?;
            let rows = cmd_compare(&configs, &args.out)?;
            print!("{}", comparison_table(&rows));
            Ok(rows.iter().all(|r| r.completed == r.restarts))
        }
        Command::Biclusters {
            w,
            h,
            threshold,
            out,
        } => {
            let b = cmd_biclusters(&w, &h, threshold, &out)?;
            println!("{} biclusters written to {}", b.len(), out.display());
            Ok(true)
        }
    }
}
