use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracfit::orthogonal_basis::WeightSpec;

/// Fractional-power least squares: fitting, orthogonal bases, fractional
/// differential equations and American put pricing.
#[derive(Debug, Parser)]
#[command(name = "fracfit", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a fractional polynomial to CSV data or a built-in function.
    Fit(FitArgs),
    /// Build an orthogonal fractional basis and print its recurrence.
    Orthpoly(OrthpolyArgs),
    /// Solve a Caputo fractional differential equation by residual least squares.
    SolveFde(SolveFdeArgs),
    /// Price an American put by least-squares Monte Carlo.
    Price(PriceArgs),
    /// Recompute a reference table and compare figure by figure.
    Reproduce(ReproduceArgs),
    /// Add seeded multiplicative Gaussian noise to a data file.
    Noise(NoiseArgs),
    /// Evaluate a saved fit result at new points.
    Predict(PredictArgs),
}

/// Closed interval written `lo:hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

pub fn parse_interval(s: &str) -> Result<Interval, String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad lower bound {lo:?}"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad upper bound {hi:?}"))?;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
        return Err(format!("need 0 <= lo < hi, got {lo}:{hi}"));
    }
    Ok(Interval { lo, hi })
}

/// `unit` or `jacobi:beta_left:beta_right`.
pub fn parse_weight(s: &str) -> Result<WeightSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["unit"] => Ok(WeightSpec::Unit),
        ["jacobi", bl, br] => {
            let bl: f64 = bl.parse().map_err(|_| format!("bad exponent {bl:?}"))?;
            let br: f64 = br.parse().map_err(|_| format!("bad exponent {br:?}"))?;
            if !(bl > -1.0 && br > -1.0) {
                return Err(format!("Jacobi exponents must exceed -1, got {bl} and {br}"));
            }
            Ok(WeightSpec::Jacobi {
                beta_left: bl,
                beta_right: br,
            })
        }
        _ => Err(format!("expected unit or jacobi:bl:br, got {s:?}")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Normal,
    Projection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrialBasis {
    Monomial,
    MuntzLegendre,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write sampled fitted values as CSV `x,y_fit`.
    #[arg(long)]
    pub curve_out: Option<PathBuf>,
    /// Number of samples in the curve CSV.
    #[arg(long, default_value_t = 101)]
    pub curve_points: usize,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// CSV with header `x,y[,w]`.
    #[arg(long, conflicts_with = "function", required_unless_present = "function")]
    pub data: Option<PathBuf>,
    /// Built-in function (mixed-power, power-1.5, sqrt-shifted, two-term-solution, population).
    #[arg(long)]
    pub function: Option<String>,
    /// Exponent step λ; a comma-separated list runs a sweep.
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambda: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub degree: usize,
    /// Fitting interval for built-in functions.
    #[arg(long, value_parser = parse_interval, default_value = "0:1")]
    pub interval: Interval,
    /// Weight for continuous fits.
    #[arg(long, value_parser = parse_weight, default_value = "unit")]
    pub weight: WeightSpec,
    /// Quadrature points for continuous fits.
    #[arg(long, default_value_t = 64)]
    pub quad_points: usize,
    #[arg(long, value_enum, default_value_t = Method::Normal)]
    pub method: Method,
    /// Abscissae at which to report predictions.
    #[arg(long, value_delimiter = ',')]
    pub predict: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OrthpolyArgs {
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1)]
    pub degree: usize,
    #[arg(long, value_parser = parse_interval, default_value = "0:1")]
    pub interval: Interval,
    #[arg(long, value_parser = parse_weight, default_value = "unit")]
    pub weight: WeightSpec,
    #[arg(long, default_value_t = 64)]
    pub quad_points: usize,
    /// Points file (one abscissa per line, optional `,weight`) for a discrete basis.
    #[arg(long)]
    pub points: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveFdeArgs {
    /// Built-in equation (linear-solution, two-term).
    #[arg(long, conflicts_with_all = ["terms", "rhs"])]
    pub problem: Option<String>,
    /// Derivative terms `order:coefficient`, comma-separated, orders in (0,1).
    #[arg(long, value_delimiter = ',', required_unless_present = "problem")]
    pub terms: Vec<String>,
    /// Coefficient of the undifferentiated term.
    #[arg(long, default_value_t = 0.0)]
    pub reaction: f64,
    /// Right-hand side `coefficient:exponent`, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub rhs: Vec<String>,
    /// Initial value y(0).
    #[arg(long, default_value_t = 0.0)]
    pub y0: f64,
    /// Solution interval `0:b`.
    #[arg(long, value_parser = parse_interval, default_value = "0:1")]
    pub interval: Interval,
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambda: Vec<f64>,
    #[arg(long, default_value_t = 2)]
    pub degree: usize,
    #[arg(long, value_enum, default_value_t = TrialBasis::MuntzLegendre)]
    pub basis: TrialBasis,
    /// Use a fixed Gauss-Jacobi rule of this size instead of the exact substitution rule.
    #[arg(long)]
    pub quad_points: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub predict: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PriceArgs {
    #[arg(long, default_value_t = 38.0)]
    pub s0: f64,
    #[arg(long, default_value_t = 48.0)]
    pub strike: f64,
    #[arg(long, default_value_t = 0.05)]
    pub rate: f64,
    #[arg(long, default_value_t = 0.71)]
    pub sigma: f64,
    /// Maturity in years.
    #[arg(long, default_value_t = 1.0 / 6.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 60)]
    pub steps: usize,
    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 20240601)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75,1")]
    pub lambda: Vec<f64>,
    /// Degree of the regression basis.
    #[arg(long, default_value_t = 2)]
    pub degree: usize,
    /// Cap on steps × paths.
    #[arg(long, default_value_t = fracfit::option_pricing::DEFAULT_PATH_STEP_BUDGET)]
    pub budget: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "UPPER")]
pub enum TableId {
    T1,
    T2,
    T4,
    T6,
    T7,
    T8,
    T9,
    T10,
    #[value(name = "all")]
    All,
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    #[arg(value_enum, ignore_case = true)]
    pub table: TableId,
    /// Include noisy rows, compared by order of magnitude only.
    #[arg(long)]
    pub qualitative: bool,
    /// Seed for Monte Carlo paths and added noise.
    #[arg(long, default_value_t = 20240601)]
    pub seed: u64,
    /// Also write the comparison as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct NoiseArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Standard deviation as a percentage of |y|.
    #[arg(long)]
    pub percent: f64,
    #[arg(long)]
    pub seed: u64,
    /// Output CSV; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    /// JSON document written by `fit` or `solve-fde`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub at: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
