//! Reference values for checking the simulator and estimators: closed forms
//! for a constant boundary and a fine-step Monte Carlo reference for
//! anything else. Nothing in the estimation or test pipeline calls into
//! this module.

use serde::{Deserialize, Serialize};

use crate::error::{DdmError, Result};
use crate::model::{Boundary, DdmParameters};
use crate::simulator::{simulate_paths, PathEngine, SimConfig, SimOutcome, DATA_STREAM, DEFAULT_TIME_STEP};

/// DDM with a constant boundary, where the exit probability and mean exit
/// time are known exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantBoundaryOracle {
    pub drift: f64,
    pub level: f64,
}

impl ConstantBoundaryOracle {
    pub fn new(drift: f64, level: f64) -> Result<Self> {
        if !(level > 0.0 && level.is_finite()) {
            return Err(DdmError::Domain {
                what: "boundary level",
                value: level,
                constraint: "finite and > 0",
            });
        }
        if !drift.is_finite() {
            return Err(DdmError::Domain {
                what: "drift",
                value: drift,
                constraint: "finite",
            });
        }
        Ok(Self { drift, level })
    }

    /// exp(2δb) / (1 + exp(2δb)); constant in the stopping time.
    pub fn choice_probability(&self) -> f64 {
        let x = 2.0 * self.drift * self.level;
        if x >= 0.0 {
            1.0 / (1.0 + (-x).exp())
        } else {
            let e = x.exp();
            e / (1.0 + e)
        }
    }

    /// E[τ] = b (2p - 1) / δ, from optional stopping applied to Z_τ.
    pub fn mean_hitting_time(&self) -> Result<f64> {
        if self.drift == 0.0 {
            return Err(DdmError::Domain {
                what: "drift",
                value: 0.0,
                constraint: "nonzero for the optional-stopping identity",
            });
        }
        Ok(self.level * (2.0 * self.choice_probability() - 1.0) / self.drift)
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn from_samples(xs: impl Iterator<Item = f64>) -> Self {
        let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
        for x in xs {
            n += 1.0;
            let d = x - mean;
            mean += d / n;
            m2 += d * (x - mean);
        }
        let var = if n > 1.0 { m2 / (n - 1.0) } else { 0.0 };
        Self {
            value: mean,
            se: (var / n).sqrt(),
        }
    }

    /// |value - target| measured in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.value - target).abs() / self.se
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReference {
    pub paths: usize,
    pub fine_step: f64,
    /// Bin edges e_0 < e_1 < ... ; bins are [e_i, e_{i+1}).
    pub edges: Vec<f64>,
    /// P(τ <= e_i) with standard errors.
    pub cdf: Vec<Estimate>,
    /// P(upper exit | τ in bin i); `None` for empty bins.
    pub conditional_choice: Vec<Option<Estimate>>,
    pub upper_exit: Estimate,
    pub mean_time: Estimate,
    pub median_time: Estimate,
    /// δ E[τ] - E[sgn(Z_τ) b(τ)], which is zero for any boundary.
    pub wald_residual: Estimate,
    pub censored: usize,
    pub outcomes: Vec<SimOutcome>,
}

impl McReference {
    /// Probability that τ falls in [lo, hi), from the stored outcomes.
    pub fn interval_probability(&self, lo: f64, hi: f64) -> Estimate {
        Estimate::from_samples(
            self.outcomes
                .iter()
                .map(|o| f64::from(u8::from(o.hitting_time >= lo && o.hitting_time < hi))),
        )
    }
}

/// Brute-force stopping-time distribution and conditional choice
/// probability at a step at least ten times finer than the default.
pub fn mc_reference_distribution(
    params: DdmParameters,
    boundary: &Boundary,
    paths: usize,
    fine_step: f64,
    master_seed: u64,
    edges: &[f64],
) -> Result<McReference> {
    if !(fine_step > 0.0 && fine_step <= DEFAULT_TIME_STEP / 10.0 * (1.0 + 1e-12)) {
        return Err(DdmError::InvalidConfig(format!(
            "reference step {fine_step} must be at most {}",
            DEFAULT_TIME_STEP / 10.0
        )));
    }
    if paths == 0 {
        return Err(DdmError::InvalidConfig("paths must be positive".into()));
    }
    let config = SimConfig {
        time_step: fine_step,
        master_seed,
        ..SimConfig::default()
    };
    let engine = PathEngine::new(params.drift(), boundary, &config)?;
    let outcomes = simulate_paths(&engine, master_seed, DATA_STREAM, paths);
    let n = paths as f64;

    let mut times: Vec<f64> = outcomes.iter().map(|o| o.hitting_time).collect();
    times.sort_by(f64::total_cmp);
    let cdf = edges
        .iter()
        .map(|&e| {
            let p = times.partition_point(|&t| t <= e) as f64 / n;
            Estimate {
                value: p,
                se: (p * (1.0 - p) / n).sqrt(),
            }
        })
        .collect();
    let conditional_choice = edges
        .windows(2)
        .map(|w| {
            let (hits, total) = outcomes
                .iter()
                .filter(|o| o.hitting_time >= w[0] && o.hitting_time < w[1])
                .fold((0usize, 0usize), |(h, t), o| (h + o.upper_exit as usize, t + 1));
            (total > 0).then(|| {
                let p = hits as f64 / total as f64;
                Estimate {
                    value: p,
                    se: (p * (1.0 - p) / total as f64).sqrt(),
                }
            })
        })
        .collect();

    let quantile = |q: f64| times[((q * n) as usize).min(paths - 1)];
    let h = 0.01;
    let density = 2.0 * h / (quantile(0.5 + h) - quantile(0.5 - h));
    let median_time = Estimate {
        value: quantile(0.5),
        se: (0.25 / n).sqrt() / density,
    };

    let drift = params.drift();
    Ok(McReference {
        paths,
        fine_step,
        edges: edges.to_vec(),
        cdf,
        conditional_choice,
        upper_exit: Estimate::from_samples(outcomes.iter().map(|o| f64::from(u8::from(o.upper_exit)))),
        mean_time: Estimate::from_samples(outcomes.iter().map(|o| o.hitting_time)),
        median_time,
        wald_residual: wald_residual(&outcomes, drift, boundary),
        censored: outcomes.iter().filter(|o| o.censored).count(),
        outcomes,
    })
}

/// δ τ - sgn(Z_τ) b(τ), averaged over paths.
pub fn wald_residual(outcomes: &[SimOutcome], drift: f64, boundary: &Boundary) -> Estimate {
    Estimate::from_samples(outcomes.iter().map(|o| {
        let sign = if o.upper_exit { 1.0 } else { -1.0 };
        drift * o.hitting_time - sign * boundary.eval(o.hitting_time)
    }))
}
