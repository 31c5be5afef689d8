use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ddm_core::{DriftConvention, VarianceFormula};

use crate::config::{BoundarySpec, CommandKind, DeltaStepSpec, Generator, RunConfig, TransformSpec};
use crate::error::Result;

const EXIT_CODES: &str = "\
Exit codes:
  0  success; for `test`, the DDM is not rejected
  1  usage or configuration error
  2  data error (unreadable or malformed input, empty data, too few observations)
  3  `test` rejected the DDM at the chosen alpha
  4  numerical failure (rank-deficient fit, near-zero drift, non-positive-definite variance)

Every flag can also be set through an environment variable named DDMTEST_<FLAG>,
for example DDMTEST_SIMS=5000. Flags override the environment, which overrides
the --config file, which overrides built-in defaults.";

#[derive(Debug, Parser)]
#[command(name = "ddmtest", version, about = "Drift-diffusion model estimation and specification test", after_help = EXIT_CODES)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a `time,choice` dataset and a JSON sidecar with the truth.
    #[command(after_help = EXIT_CODES)]
    Simulate(Overrides),
    /// Estimate drift and boundary from a dataset.
    #[command(after_help = EXIT_CODES)]
    Estimate(Overrides),
    /// Run the simulated-moment specification test on a dataset.
    #[command(after_help = EXIT_CODES)]
    Test(Overrides),
    /// Repeat simulate→test to measure the rejection rate.
    #[command(after_help = EXIT_CODES)]
    Calibrate(Overrides),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML file with any RunConfig fields.
    #[arg(long, env = "DDMTEST_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, short, env = "DDMTEST_INPUT")]
    pub input: Option<PathBuf>,
    /// Report path; reports go to stdout when omitted (except `simulate`).
    #[arg(long, short, env = "DDMTEST_OUTPUT")]
    pub output: Option<PathBuf>,
    /// Observations to simulate.
    #[arg(long, short, env = "DDMTEST_N")]
    pub n: Option<usize>,
    #[arg(long, env = "DDMTEST_DRIFT", allow_negative_numbers = true)]
    pub drift: Option<f64>,
    /// constant:L, hyperbolic:L,R (L/(1+Rt)) or exponential:L,R (L·e^{-Rt}).
    #[arg(long, env = "DDMTEST_BOUNDARY")]
    pub boundary: Option<BoundarySpec>,
    #[arg(long, value_enum, env = "DDMTEST_GENERATOR")]
    pub generator: Option<Generator>,
    /// Spline basis size K.
    #[arg(long, env = "DDMTEST_KNOTS")]
    pub knots: Option<usize>,
    /// Number of moments J.
    #[arg(long, env = "DDMTEST_MOMENTS")]
    pub moments: Option<usize>,
    /// Simulated paths S per moment evaluation.
    #[arg(long, env = "DDMTEST_SIMS")]
    pub sims: Option<usize>,
    /// rule, rule:<factor> or a fixed step.
    #[arg(long, env = "DDMTEST_DELTA_STEP")]
    pub delta_step: Option<DeltaStepSpec>,
    /// exponential or rational, optionally with a fixed parameter (rational:2).
    #[arg(long, env = "DDMTEST_G_TRANSFORM")]
    pub g_transform: Option<TransformSpec>,
    #[arg(long, env = "DDMTEST_TIME_STEP")]
    pub time_step: Option<f64>,
    #[arg(long, env = "DDMTEST_T_MAX")]
    pub t_max: Option<f64>,
    #[arg(long, env = "DDMTEST_ALPHA")]
    pub alpha: Option<f64>,
    #[arg(long, env = "DDMTEST_SEED")]
    pub seed: Option<u64>,
    /// Calibration replications.
    #[arg(long, env = "DDMTEST_REPS")]
    pub reps: Option<usize>,
    #[arg(long, env = "DDMTEST_BRIDGE_CORRECTION")]
    pub bridge_correction: Option<bool>,
    #[arg(long, env = "DDMTEST_CLAMP_EPSILON")]
    pub clamp_epsilon: Option<f64>,
    /// Fraction of G(τ) trimmed at each end before holding p̂ constant.
    #[arg(long, env = "DDMTEST_SUPPORT_TRIM")]
    pub support_trim: Option<f64>,
    #[arg(long, value_enum, env = "DDMTEST_CONVENTION")]
    pub convention: Option<ConventionArg>,
    #[arg(long, value_enum, env = "DDMTEST_VARIANCE")]
    pub variance: Option<VarianceArg>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum ConventionArg {
    Identification,
    Unscaled,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum VarianceArg {
    AsPrinted,
    Consistent,
}

impl Command {
    pub fn kind(&self) -> CommandKind {
        match self {
            Self::Simulate(_) => CommandKind::Simulate,
            Self::Estimate(_) => CommandKind::Estimate,
            Self::Test(_) => CommandKind::Test,
            Self::Calibrate(_) => CommandKind::Calibrate,
        }
    }

    pub fn overrides(&self) -> &Overrides {
        match self {
            Self::Simulate(o) | Self::Estimate(o) | Self::Test(o) | Self::Calibrate(o) => o,
        }
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        let o = self.overrides();
        let mut c = match &o.config {
            Some(path) => RunConfig::from_toml_file(path)?,
            None => RunConfig::default(),
        };
        c.command = self.kind();
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = o.$field.clone() {
                    c.$field = v;
                }
            )*};
        }
        set!(n, drift, boundary, generator, moments, sims, delta_step, g_transform, time_step);
        set!(alpha, seed, reps, bridge_correction, clamp_epsilon, support_trim);
        if o.input.is_some() {
            c.input = o.input.clone();
        }
        if o.output.is_some() {
            c.output = o.output.clone();
        }
        if o.knots.is_some() {
            c.knots = o.knots;
        }
        if o.t_max.is_some() {
            c.t_max = o.t_max;
        }
        if let Some(v) = o.convention {
            c.convention = match v {
                ConventionArg::Identification => DriftConvention::Identification,
                ConventionArg::Unscaled => DriftConvention::Unscaled,
            };
        }
        if let Some(v) = o.variance {
            c.variance = match v {
                VarianceArg::AsPrinted => VarianceFormula::AsPrinted,
                VarianceArg::Consistent => VarianceFormula::Consistent,
            };
        }
        Ok(c)
    }
}
