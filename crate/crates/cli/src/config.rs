//! Resolved run configuration: defaults, then a TOML file, then
//! `DDMTEST_*` environment variables and flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use ddm_core::estimator::DEFAULT_ORDER;
use ddm_core::simulator::DEFAULT_TIME_STEP;
use ddm_core::{
    DdmError, DeltaStep, DriftConvention, EstimatorConfig, ParametricBoundary, TestConfig, TransformFamily,
    VarianceFormula,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Simulate,
    Estimate,
    #[default]
    Test,
    Calibrate,
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Simulate => "simulate",
            Self::Estimate => "estimate",
            Self::Test => "test",
            Self::Calibrate => "calibrate",
        })
    }
}

/// Source of simulated data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// DDM with `--drift` and `--boundary`.
    #[default]
    Ddm,
    /// Log-normal times with choice probability rising in t; not a DDM.
    Lognormal,
}

/// `exponential`, `rational`, or either with a fixed parameter such as
/// `exponential:0.9`. Without a parameter it is fitted to the median time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct TransformSpec {
    pub family: TransformFamily,
    pub parameter: Option<f64>,
}

impl Default for TransformSpec {
    fn default() -> Self {
        Self {
            family: TransformFamily::Exponential,
            parameter: None,
        }
    }
}

impl fmt::Display for TransformSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.parameter {
            Some(p) => write!(f, "{}:{p}", self.family),
            None => write!(f, "{}", self.family),
        }
    }
}

impl FromStr for TransformSpec {
    type Err = DdmError;

    fn from_str(s: &str) -> Result<Self, DdmError> {
        let (family, parameter) = match s.split_once(':') {
            Some((f, p)) => (f, Some(p)),
            None => (s, None),
        };
        let parameter = parameter
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| DdmError::InvalidConfig(format!("bad transform parameter {p:?}")))
            })
            .transpose()?;
        if let Some(p) = parameter {
            if !(p > 0.0 && p.is_finite()) {
                return Err(DdmError::InvalidConfig(format!("transform parameter {p} must be positive")));
            }
        }
        Ok(Self {
            family: family.trim().parse()?,
            parameter,
        })
    }
}

impl From<TransformSpec> for String {
    fn from(t: TransformSpec) -> Self {
        t.to_string()
    }
}

impl TryFrom<String> for TransformSpec {
    type Error = DdmError;

    fn try_from(s: String) -> Result<Self, DdmError> {
        s.parse()
    }
}

/// `rule` (0.5·δ̂·n^{-1/4}), `rule:<factor>`, or a fixed positive number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct DeltaStepSpec(pub DeltaStep);

impl Default for DeltaStepSpec {
    fn default() -> Self {
        Self(DeltaStep::default())
    }
}

impl fmt::Display for DeltaStepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            DeltaStep::Rule { factor } => write!(f, "rule:{factor}"),
            DeltaStep::Fixed { value } => write!(f, "{value}"),
        }
    }
}

impl FromStr for DeltaStepSpec {
    type Err = DdmError;

    fn from_str(s: &str) -> Result<Self, DdmError> {
        let bad = || DdmError::InvalidConfig(format!("bad delta step {s:?}; expected rule, rule:<factor> or a number"));
        let s = s.trim();
        let step = if s == "rule" {
            DeltaStep::default()
        } else if let Some(f) = s.strip_prefix("rule:") {
            DeltaStep::Rule {
                factor: f.trim().parse().map_err(|_| bad())?,
            }
        } else {
            DeltaStep::Fixed {
                value: s.parse().map_err(|_| bad())?,
            }
        };
        let (DeltaStep::Rule { factor: v } | DeltaStep::Fixed { value: v }) = step;
        if !(v > 0.0 && v.is_finite()) {
            return Err(bad());
        }
        Ok(Self(step))
    }
}

impl From<DeltaStepSpec> for String {
    fn from(d: DeltaStepSpec) -> Self {
        d.to_string()
    }
}

impl TryFrom<String> for DeltaStepSpec {
    type Error = DdmError;

    fn try_from(s: String) -> Result<Self, DdmError> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct BoundarySpec(pub ParametricBoundary);

impl Default for BoundarySpec {
    fn default() -> Self {
        Self(ParametricBoundary::Constant { level: 1.0 })
    }
}

impl FromStr for BoundarySpec {
    type Err = DdmError;

    fn from_str(s: &str) -> Result<Self, DdmError> {
        s.parse().map(Self)
    }
}

impl fmt::Display for BoundarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<BoundarySpec> for String {
    fn from(b: BoundarySpec) -> Self {
        b.0.to_string()
    }
}

impl TryFrom<String> for BoundarySpec {
    type Error = DdmError;

    fn try_from(s: String) -> Result<Self, DdmError> {
        s.parse().map(Self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// Observations per simulated dataset.
    pub n: usize,
    pub drift: f64,
    pub boundary: BoundarySpec,
    pub generator: Generator,
    /// Basis size K; `None` uses max(6, ⌊n^{1/5}⌋ + 3).
    pub knots: Option<usize>,
    pub moments: usize,
    pub sims: usize,
    pub delta_step: DeltaStepSpec,
    pub g_transform: TransformSpec,
    pub time_step: f64,
    /// Simulation horizon; `None` means 50 for data and G⁻¹(1 - 1e-6) for
    /// the test.
    pub t_max: Option<f64>,
    pub alpha: f64,
    pub seed: u64,
    /// Calibration replications.
    pub reps: usize,
    pub bridge_correction: bool,
    pub clamp_epsilon: f64,
    pub support_trim: f64,
    pub convention: DriftConvention,
    pub variance: VarianceFormula,
}

impl Default for RunConfig {
    fn default() -> Self {
        let est = EstimatorConfig::default();
        let test = TestConfig::default();
        Self {
            command: CommandKind::default(),
            input: None,
            output: None,
            n: 2_000,
            drift: 0.5,
            boundary: BoundarySpec::default(),
            generator: Generator::default(),
            knots: None,
            moments: test.moments,
            sims: test.simulations,
            delta_step: DeltaStepSpec::default(),
            g_transform: TransformSpec::default(),
            time_step: DEFAULT_TIME_STEP,
            t_max: None,
            alpha: test.alpha,
            seed: 0,
            reps: 1,
            bridge_correction: true,
            clamp_epsilon: est.clamp_epsilon,
            support_trim: est.support_trim,
            convention: est.convention,
            variance: test.variance,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_owned(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_owned(),
            reason: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let needs_n = matches!(self.command, CommandKind::Simulate | CommandKind::Calibrate);
        if needs_n && self.n == 0 {
            return Err(usage("n must be positive"));
        }
        if self.command == CommandKind::Calibrate && self.reps == 0 {
            return Err(usage("reps must be positive"));
        }
        if matches!(self.command, CommandKind::Estimate | CommandKind::Test) && self.input.is_none() {
            return Err(usage(format!("{} needs --input", self.command)));
        }
        if self.command == CommandKind::Simulate && self.output.is_none() {
            return Err(usage("simulate needs --output"));
        }
        if self.moments == 0 {
            return Err(usage("moments must be positive"));
        }
        if self.sims == 0 {
            return Err(usage("sims must be positive"));
        }
        if let Some(k) = self.knots {
            if k < DEFAULT_ORDER {
                return Err(usage(format!("knots must be at least {DEFAULT_ORDER}")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(usage("alpha must lie in (0, 1)"));
        }
        if !(self.time_step > 0.0 && self.time_step.is_finite()) {
            return Err(usage("time step must be positive"));
        }
        if let Some(t) = self.t_max {
            if !(t > self.time_step && t.is_finite()) {
                return Err(usage("t-max must be finite and exceed the time step"));
            }
        }
        if !(self.clamp_epsilon > 0.0 && self.clamp_epsilon < 0.5) {
            return Err(usage("clamp epsilon must lie in (0, 0.5)"));
        }
        if !(0.0..0.5).contains(&self.support_trim) {
            return Err(usage("support trim must lie in [0, 0.5)"));
        }
        if !self.drift.is_finite() {
            return Err(usage("drift must be finite"));
        }
        self.boundary.0.validate()?;
        Ok(())
    }

    pub fn estimator(&self) -> EstimatorConfig {
        EstimatorConfig {
            knots: self.knots,
            order: DEFAULT_ORDER,
            clamp_epsilon: self.clamp_epsilon,
            transform: self.g_transform.family,
            convention: self.convention,
            support_trim: self.support_trim,
            transform_parameter: self.g_transform.parameter,
        }
    }

    pub fn test_config(&self, master_seed: u64) -> TestConfig {
        TestConfig {
            moments: self.moments,
            simulations: self.sims,
            delta_step: self.delta_step.0,
            estimator: self.estimator(),
            time_step: self.time_step,
            t_max: self.t_max,
            bridge_correction: self.bridge_correction,
            alpha: self.alpha,
            master_seed,
            variance: self.variance,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let c = RunConfig {
            knots: Some(8),
            delta_step: "0.02".parse().unwrap(),
            g_transform: "rational:1.5".parse().unwrap(),
            boundary: BoundarySpec("hyperbolic:1.2,0.3".parse().unwrap()),
            t_max: Some(20.0),
            ..Default::default()
        };
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c: RunConfig = toml::from_str("sims = 500\nboundary = \"constant:2\"\n").unwrap();
        assert_eq!(c.sims, 500);
        assert_eq!(c.moments, 5);
        assert_eq!(c.boundary.0, ParametricBoundary::Constant { level: 2.0 });
        assert!(toml::from_str::<RunConfig>("simz = 1").is_err());
    }

    #[test]
    fn spec_strings() {
        assert_eq!("rule".parse::<DeltaStepSpec>().unwrap().to_string(), "rule:0.5");
        assert!("rule:-1".parse::<DeltaStepSpec>().is_err());
        assert!("fast".parse::<DeltaStepSpec>().is_err());
        assert_eq!("exp".parse::<TransformSpec>().unwrap().to_string(), "exponential");
        assert!("rational:0".parse::<TransformSpec>().is_err());
        assert!("gamma".parse::<TransformSpec>().is_err());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig {
            command: CommandKind::Simulate,
            n: 0,
            output: Some("x.csv".into()),
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c.n = 10;
        assert!(c.validate().is_ok());
        c.alpha = 1.0;
        assert!(c.validate().is_err());
    }
}
