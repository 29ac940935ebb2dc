use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Operator means of positive definite matrices and checks of their properties.
#[derive(Debug, Parser, Serialize)]
#[command(name = "opmeans", version)]
pub struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, global = true, env = "OPMEANS_THREADS")]
    pub threads: Option<usize>,

    /// Print the parsed configuration as JSON and exit.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub dump_config: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Compute a mean of the tuple in a JSON file.
    Compute(ComputeArgs),
    /// Run property suites on seeded random tuples.
    Verify(VerifyArgs),
    /// Run one numerical experiment.
    Lab(LabArgs),
    /// Write a seeded random tuple.
    Rand(RandArgs),
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct SolverArgs {
    /// Thompson-metric stopping threshold.
    #[arg(long, default_value_t = opmeans::tol::SOLVER)]
    pub tol: f64,
    #[arg(long, default_value_t = opmeans::tol::SOLVER_MAX_ITER)]
    pub max_iter: usize,
    /// Initial Karcher gradient step, in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub karcher_step: f64,
}

impl SolverArgs {
    pub fn config(&self) -> opmeans::SolverConfig {
        opmeans::SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            karcher_step: self.karcher_step,
        }
    }
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct OutputArgs {
    /// Output file (default: stdout).
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Write CSV instead of JSON.
    #[arg(long, global = true)]
    pub csv: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ComputeArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// alm, bmp, karcher, log-euclidean, arithmetic, harmonic, power or power:T.
    #[arg(long)]
    pub kind: String,
    /// Exponent for `--kind power`.
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    /// Comma-separated weights; overrides those in the input file.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// p1..p10, sandwich, logmean or all.
    #[arg(long)]
    pub suite: String,
    /// Mean kinds to check (repeatable); defaults depend on the suite.
    #[arg(long = "kind")]
    pub kinds: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random tuples per kind.
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Largest condition number of the sampled matrices.
    #[arg(long, default_value_t = 100.0)]
    pub cond: f64,
    /// Property slack tolerance.
    #[arg(long = "slack-tol", default_value_t = 1e-8)]
    pub slack_tol: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct LabArgs {
    #[command(subcommand)]
    pub experiment: Experiment,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct GridArgs {
    /// Largest grid value is 2^-k-min.
    #[arg(long, default_value_t = 4)]
    pub k_min: i32,
    /// Smallest grid value is 2^-k-max.
    #[arg(long, default_value_t = 20)]
    pub k_max: i32,
    /// "Sufficiently small" means at most 2^-k-threshold.
    #[arg(long, default_value_t = 8)]
    pub k_threshold: i32,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "experiment")]
pub enum Experiment {
    /// Harmonic/arithmetic sandwich of a representing function.
    Lemma2 {
        #[arg(long, default_value = "power:0.5")]
        f: String,
        /// Weights to probe for derivative recovery (repeatable).
        #[arg(long = "probe")]
        probes: Vec<f64>,
    },
    /// Weight criterion for perturbed means on a seeded pair.
    Thm31 {
        #[arg(long, default_value = "power:0.5")]
        f: String,
        #[arg(long, default_value = "geometric")]
        sigma: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Build a pair violating the criterion.
        #[arg(long)]
        violate: bool,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Weight recovery from the scalar probe.
    Converse {
        #[arg(long, default_value = "geometric")]
        sigma: String,
        #[arg(long, default_value_t = 0.3)]
        w: f64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Exponential limit formulas on a seeded instance.
    Limits {
        #[arg(long, default_value = "power:0.5")]
        f: String,
        #[arg(long, default_value_t = 0.5)]
        w: f64,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Extension theorem for one functional on a seeded Hermitian tuple.
    Extension {
        /// power-form:T, norm-product, alm-form, bmp-form, log-euclidean-form or log-karcher-form.
        #[arg(long, default_value = "power-form:0.5")]
        phi: String,
        #[arg(long, default_value = "power:0.5")]
        f: String,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// negative, boundary or positive.
        #[arg(long = "case", default_value = "positive")]
        case: String,
        #[arg(long, default_value_t = 64)]
        x_samples: usize,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Weighted product of forms against the Karcher mean; log order against norms.
    #[command(name = "y2013f1997")]
    Y2013F1997 {
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Randomized search for monotonicity failures.
    P4search {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value = "log-euclidean")]
        kind: String,
        /// Sample only commuting tuples.
        #[arg(long)]
        commuting: bool,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct RandArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub n: usize,
    /// Exact condition number of every matrix.
    #[arg(long, default_value_t = 10.0)]
    pub cond: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}
