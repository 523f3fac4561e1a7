use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lowtail::criteria::DEFAULT_SEED;

#[derive(Debug, Parser)]
#[command(name = "lowtail", version, about = "Lower-tail large deviations of the KPZ equation, numerically")]
pub struct Cli {
    /// Root seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Output format (csv is available for rate-fn only).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the rate function on an evenly spaced grid.
    RateFn(RateFnArgs),
    /// Compare the drift variational problem with its closed form.
    Variational(VariationalArgs),
    /// Spectrum of one Hill operator sample.
    Hill(HillArgs),
    /// Stochastic Airy operator experiments.
    Sao {
        #[command(subcommand)]
        action: SaoAction,
    },
    /// Deformed Airy kernel Fredholm determinant.
    Fredholm(FredholmArgs),
    /// Randomized WKB inequality check.
    Wkb(WkbArgs),
    /// Run the acceptance criteria.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct RateFnArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub z_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub z_max: f64,
    #[arg(long)]
    pub steps: usize,
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
}

#[derive(Debug, Args)]
pub struct VariationalArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub z: f64,
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundaryArg {
    Dirichlet,
    Periodic,
}

#[derive(Debug, Args)]
pub struct HillArgs {
    #[arg(long, default_value_t = 0)]
    pub j: usize,
    #[arg(long, default_value_t = 1.0)]
    pub xi: f64,
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Dirichlet)]
    pub boundary: BoundaryArg,
    #[arg(long, default_value_t = 512)]
    pub grid_n: usize,
    #[arg(long, default_value_t = 50.0, allow_hyphen_values = true)]
    pub cap: f64,
    /// Sample index within the seeded stream.
    #[arg(long, default_value_t = 0)]
    pub index: u64,
}

#[derive(Debug, Args)]
pub struct SaoGrid {
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 4096)]
    pub grid_n: usize,
    #[arg(long, default_value_t = 16.0)]
    pub domain_l: f64,
}

#[derive(Debug, Subcommand)]
pub enum SaoAction {
    /// Eigenvalues below a cap for one sample.
    Spectrum {
        #[command(flatten)]
        grid: SaoGrid,
        #[arg(long, default_value_t = 8.0, allow_hyphen_values = true)]
        cap: f64,
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
    /// Riccati and matrix eigenvalue counts at one level.
    Count {
        #[command(flatten)]
        grid: SaoGrid,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
    /// Lower, middle and upper members of the localization sandwich.
    Sandwich {
        #[command(flatten)]
        grid: SaoGrid,
        #[arg(long, allow_hyphen_values = true)]
        z: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        a: f64,
        /// Number of levels; defaults to the one fixed by z, t and a.
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long, default_value_t = 512)]
        hill_grid_n: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Estimate of (1/t^2) log E[exp(linear statistic)].
    Ldp {
        #[command(flatten)]
        grid: SaoGrid,
        #[arg(long, allow_hyphen_values = true)]
        z: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long)]
        importance: bool,
    },
}

#[derive(Debug, Args)]
pub struct FredholmArgs {
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Outer Gauss-Legendre nodes.
    #[arg(long, default_value_t = 60)]
    pub grid_n: usize,
    #[arg(long, default_value_t = 16.0)]
    pub xmax: f64,
    #[command(subcommand)]
    pub action: Option<FredholmAction>,
}

#[derive(Debug, Subcommand)]
pub enum FredholmAction {
    /// Compare with the Monte-Carlo side over beta = 2 SAO spectra.
    Compare {
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 1 << 14)]
        sao_grid_n: usize,
        #[arg(long, default_value_t = 40.0)]
        domain_l: f64,
    },
}

#[derive(Debug, Args)]
pub struct WkbArgs {
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 512)]
    pub grid_n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Skip {
    Mc,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Leave out a class of criteria.
    #[arg(long, value_enum)]
    pub skip: Option<Skip>,
}
