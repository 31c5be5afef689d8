//! First-passage simulation of Z_t = drift·t + B_t against a symmetric
//! boundary, on an Euler grid with a Brownian-bridge crossing correction.

use rand::Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DdmError, Result};
use crate::model::{Boundary, Dataset, DdmParameters, TrialRecord};
use crate::rng::{path_rng, StreamId};
use crate::spectest::{MomentSpec, MomentVector, MomentSource};

/// Stream block used for synthetic datasets.
pub const DATA_STREAM: u64 = 0;
/// Stream block used for model-implied moments.
pub const MODEL_STREAM: u64 = 1;

pub const DEFAULT_TIME_STEP: f64 = 1e-3;
pub const DEFAULT_T_MAX: f64 = 50.0;

const CENSOR_WARN: f64 = 0.01;
const CENSOR_FAIL: f64 = 0.20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub time_step: f64,
    pub t_max: f64,
    pub bridge_correction: bool,
    pub master_seed: u64,
    pub num_paths: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            time_step: DEFAULT_TIME_STEP,
            t_max: DEFAULT_T_MAX,
            bridge_correction: true,
            master_seed: 0,
            num_paths: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.time_step.is_finite() && self.time_step > 0.0) {
            return Err(DdmError::InvalidConfig(format!(
                "time_step must be positive, got {}",
                self.time_step
            )));
        }
        if !(self.t_max.is_finite() && self.t_max >= self.time_step) {
            return Err(DdmError::InvalidConfig(format!(
                "t_max = {} must be finite and at least time_step = {}",
                self.t_max, self.time_step
            )));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub hitting_time: f64,
    /// Exit through +b(τ), i.e. the first alternative was chosen.
    pub upper_exit: bool,
    pub censored: bool,
}

/// Boundary tabulated on the simulation grid, ready to run paths.
#[derive(Debug, Clone)]
pub struct PathEngine {
    drift: f64,
    dt: f64,
    sqrt_dt: f64,
    t_max: f64,
    grid: Vec<f64>,
    bridge: bool,
}

impl PathEngine {
    pub fn new(drift: f64, boundary: &Boundary, config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let b0 = boundary.eval(0.0);
        if b0 <= 0.0 || !b0.is_finite() {
            return Err(DdmError::DegenerateBoundary(b0));
        }
        let steps = (config.t_max / config.time_step).ceil() as usize;
        let dt = config.t_max / steps as f64;
        Ok(Self {
            drift,
            dt,
            sqrt_dt: dt.sqrt(),
            t_max: config.t_max,
            grid: boundary.on_grid(dt, steps),
            bridge: config.bridge_correction,
        })
    }

    /// Tabulated boundary values b(k·dt).
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Runs one path. Draws exactly one normal and one uniform per step so
    /// that two engines fed the same generator see the same increments.
    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> SimOutcome {
        let mean_step = self.drift * self.dt;
        let two_over_dt = 2.0 / self.dt;
        let mut z = 0.0_f64;
        let mut b_prev = self.grid[0];
        for (k, &b) in self.grid[1..].iter().enumerate() {
            let eps: f64 = StandardNormal.sample(rng);
            let u: f64 = rng.random();
            let z_next = z + mean_step + self.sqrt_dt * eps;
            if z_next >= b {
                let d1 = b_prev - z;
                let frac = d1 / (d1 - (b - z_next));
                return self.hit(k, frac, true);
            }
            if z_next <= -b {
                let d1 = z + b_prev;
                let frac = d1 / (d1 - (z_next + b));
                return self.hit(k, frac, false);
            }
            if self.bridge {
                let p_up = bridge_probability(b - z, b - z_next, two_over_dt);
                let p_lo = bridge_probability(z + b, z_next + b, two_over_dt);
                if u < p_up {
                    return self.hit(k, 0.5, true);
                }
                if u < p_up + p_lo {
                    return self.hit(k, 0.5, false);
                }
            }
            z = z_next;
            b_prev = b;
        }
        SimOutcome {
            hitting_time: self.t_max,
            upper_exit: z > 0.0,
            censored: true,
        }
    }

    #[inline]
    fn hit(&self, step: usize, frac: f64, upper_exit: bool) -> SimOutcome {
        let frac = if frac.is_finite() { frac.clamp(0.0, 1.0) } else { 0.5 };
        let t = ((step as f64 + frac) * self.dt).min(self.t_max);
        SimOutcome {
            hitting_time: t.max(f64::MIN_POSITIVE),
            upper_exit,
            censored: false,
        }
    }
}

/// Probability that a Brownian bridge between two points at distances `d1`
/// and `d2` below a level crosses it within one step.
#[inline]
fn bridge_probability(d1: f64, d2: f64, two_over_dt: f64) -> f64 {
    if d1 <= 0.0 {
        return 1.0;
    }
    let exponent = two_over_dt * d1 * d2;
    if exponent > 40.0 {
        0.0
    } else {
        (-exponent).exp()
    }
}

/// One first-passage draw on stream `(DATA_STREAM, stream_index)`.
pub fn sample_hitting(
    params: DdmParameters,
    boundary: &Boundary,
    config: &SimConfig,
    stream_index: u64,
) -> Result<SimOutcome> {
    let engine = PathEngine::new(params.drift(), boundary, config)?;
    let mut rng = path_rng(config.master_seed, StreamId::new(DATA_STREAM, stream_index));
    Ok(engine.run(&mut rng))
}

/// `count` paths on streams `(offset, 0..count)`, in stream order.
pub fn simulate_paths(engine: &PathEngine, master_seed: u64, offset: u64, count: usize) -> Vec<SimOutcome> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| engine.run(&mut path_rng(master_seed, StreamId::new(offset, i))))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedDataset {
    pub dataset: Dataset,
    pub censored: usize,
    /// Set when more than 1% of paths were censored.
    pub censoring_warning: bool,
}

pub fn simulate_dataset(
    params: DdmParameters,
    boundary: &Boundary,
    n: usize,
    config: &SimConfig,
) -> Result<SimulatedDataset> {
    if n == 0 {
        return Err(DdmError::EmptyDataset);
    }
    let engine = PathEngine::new(params.drift(), boundary, config)?;
    let outcomes = simulate_paths(&engine, config.master_seed, DATA_STREAM, n);
    let censored = outcomes.iter().filter(|o| o.censored).count();
    let fraction = censored as f64 / n as f64;
    if fraction > CENSOR_FAIL {
        return Err(DdmError::ExcessiveCensoring {
            censored,
            total: n,
            t_max: config.t_max,
        });
    }
    let records = outcomes
        .into_iter()
        .map(|o| TrialRecord {
            decision_time: o.hitting_time,
            choice: o.upper_exit,
        })
        .collect();
    Ok(SimulatedDataset {
        dataset: Dataset::new(records)?,
        censored,
        censoring_warning: fraction > CENSOR_WARN,
    })
}

/// Interval counts behind a simulated moment vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedMoments {
    pub moments: MomentVector,
    /// Paths per moment interval; index 0 of `interval_counts` is the
    /// excluded first interval.
    pub interval_counts: Vec<u64>,
    pub censored: u64,
    pub paths: usize,
}

impl SimulatedMoments {
    pub fn values(&self) -> &[f64] {
        &self.moments.values
    }
}

/// m̂_S: average of the moment functions over `paths` simulated stopping
/// times, using streams `(stream_offset, 0..paths)`. Censored paths count
/// toward the last, unbounded interval.
pub fn simulate_model_moments(
    drift: f64,
    boundary: &Boundary,
    spec: &MomentSpec,
    paths: usize,
    config: &SimConfig,
    stream_offset: u64,
) -> Result<SimulatedMoments> {
    if paths == 0 {
        return Err(DdmError::InvalidConfig("number of simulations S must be positive".into()));
    }
    let engine = PathEngine::new(drift, boundary, config)?;
    Ok(moments_from_engine(&engine, spec, paths, config.master_seed, stream_offset))
}

pub(crate) fn moments_from_engine(
    engine: &PathEngine,
    spec: &MomentSpec,
    paths: usize,
    master_seed: u64,
    stream_offset: u64,
) -> SimulatedMoments {
    let j = spec.len();
    let (interval_counts, censored) = (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let o = engine.run(&mut path_rng(master_seed, StreamId::new(stream_offset, i)));
            let cell = if o.censored {
                j
            } else {
                spec.interval(o.hitting_time).map_or(0, |k| k + 1)
            };
            (cell, o.censored)
        })
        .fold(
            || (vec![0u64; j + 1], 0u64),
            |(mut counts, c), (cell, censored)| {
                counts[cell] += 1;
                (counts, c + censored as u64)
            },
        )
        .reduce(
            || (vec![0u64; j + 1], 0u64),
            |(mut a, ca), (b, cb)| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                (a, ca + cb)
            },
        );
    let norm = spec.normalization();
    let values = interval_counts[1..]
        .iter()
        .map(|&c| norm * c as f64 / paths as f64)
        .collect();
    SimulatedMoments {
        moments: MomentVector {
            values,
            source: MomentSource::Simulated,
            count: paths,
        },
        interval_counts,
        censored,
        paths,
    }
}

/// Response times and choices that no single DDM can produce: log-normal
/// times independent of the evidence process, with the choice probability
/// rising from `p_early` to `p_late` along the time distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalChoiceGenerator {
    pub log_mean: f64,
    pub log_sd: f64,
    pub p_early: f64,
    pub p_late: f64,
}

impl Default for LogNormalChoiceGenerator {
    fn default() -> Self {
        Self {
            log_mean: -0.3,
            log_sd: 0.5,
            p_early: 0.55,
            p_late: 0.95,
        }
    }
}

impl LogNormalChoiceGenerator {
    pub fn choice_probability(&self, t: f64) -> f64 {
        let z = (t.ln() - self.log_mean) / self.log_sd;
        let cdf = statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2) / 2.0;
        self.p_early + (self.p_late - self.p_early) * cdf
    }

    pub fn generate(&self, n: usize, master_seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(DdmError::EmptyDataset);
        }
        let dist = LogNormal::new(self.log_mean, self.log_sd)
            .map_err(|e| DdmError::InvalidConfig(e.to_string()))?;
        let records = (0..n as u64)
            .map(|i| {
                let mut rng = path_rng(master_seed, StreamId::new(DATA_STREAM, i));
                let t: f64 = dist.sample(&mut rng);
                let u: f64 = rng.random();
                TrialRecord {
                    decision_time: t,
                    choice: u < self.choice_probability(t),
                }
            })
            .collect();
        Dataset::new(records)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(seed: u64) -> SimConfig {
        SimConfig::default().with_seed(seed)
    }

    #[test]
    fn driftless_exits_are_balanced() {
        let b = Boundary::constant(1.0).unwrap();
        let sim = simulate_dataset(DdmParameters::new(0.0).unwrap(), &b, 100_000, &cfg(1)).unwrap();
        let rate = sim.dataset.choice_rate();
        assert!((rate - 0.5).abs() < 0.005, "{rate}");
    }

    #[test]
    fn constant_boundary_matches_log_odds_and_wald() {
        let b = Boundary::constant(1.0).unwrap();
        let sim = simulate_dataset(DdmParameters::new(0.5).unwrap(), &b, 100_000, &cfg(2)).unwrap();
        let rate = sim.dataset.choice_rate();
        let mean = sim.dataset.mean_time();
        assert!((rate - 0.7310586).abs() < 0.005, "{rate}");
        assert!((mean - 0.9242343).abs() < 0.01, "{mean}");
        assert_eq!(sim.censored, 0);
    }

    #[test]
    fn dataset_of_fifty_thousand_has_expected_choice_rate() {
        let b = Boundary::constant(1.0).unwrap();
        let sim = simulate_dataset(DdmParameters::new(0.5).unwrap(), &b, 50_000, &cfg(3)).unwrap();
        assert!((sim.dataset.choice_rate() - 0.731).abs() < 0.01);
    }

    #[test]
    fn same_seed_same_dataset() {
        let b = Boundary::constant(1.0).unwrap();
        let p = DdmParameters::new(0.5).unwrap();
        let a = simulate_dataset(p, &b, 500, &cfg(9)).unwrap();
        let c = simulate_dataset(p, &b, 500, &cfg(9)).unwrap();
        assert_eq!(a, c);
        let d = simulate_dataset(p, &b, 500, &cfg(10)).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn dataset_matches_individual_streams() {
        let b = Boundary::constant(0.8).unwrap();
        let p = DdmParameters::new(0.3).unwrap();
        let config = cfg(4);
        let sim = simulate_dataset(p, &b, 20, &config).unwrap();
        for (i, r) in sim.dataset.records().iter().enumerate() {
            let o = sample_hitting(p, &b, &config, i as u64).unwrap();
            assert_eq!(o.hitting_time, r.decision_time);
            assert_eq!(o.upper_exit, r.choice);
        }
    }

    #[test]
    fn parallelism_does_not_change_results() {
        let b = Boundary::parametric(crate::model::ParametricBoundary::Hyperbolic { level: 1.2, rate: 0.5 }).unwrap();
        let p = DdmParameters::new(0.4).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| simulate_dataset(p, &b, 3000, &cfg(11)).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn errors() {
        let b = Boundary::constant(1.0).unwrap();
        let p = DdmParameters::new(0.5).unwrap();
        assert!(matches!(simulate_dataset(p, &b, 0, &cfg(0)), Err(DdmError::EmptyDataset)));
        let zero = Boundary::from_fn(|_| 0.0);
        assert!(matches!(
            sample_hitting(p, &zero, &cfg(0), 0),
            Err(DdmError::DegenerateBoundary(_))
        ));
        let tight = SimConfig {
            t_max: 0.05,
            ..cfg(0)
        };
        assert!(matches!(
            simulate_dataset(p, &b, 1000, &tight),
            Err(DdmError::ExcessiveCensoring { .. })
        ));
        let bad = SimConfig {
            time_step: 1.0,
            t_max: 0.5,
            ..cfg(0)
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn censored_paths_stop_at_horizon() {
        let b = Boundary::constant(3.0).unwrap();
        let config = SimConfig {
            t_max: 1.0,
            ..cfg(5)
        };
        let engine = PathEngine::new(0.0, &b, &config).unwrap();
        let outcomes = simulate_paths(&engine, 5, DATA_STREAM, 200);
        assert!(outcomes.iter().any(|o| o.censored));
        for o in outcomes {
            assert!(o.hitting_time <= 1.0);
            if o.censored {
                assert_eq!(o.hitting_time, 1.0);
            }
        }
    }

    #[test]
    fn bridge_correction_removes_step_bias() {
        // With the bridge on, halving the step moves the exit probability
        // by less than one Monte Carlo standard error.
        let b = Boundary::constant(1.0).unwrap();
        let p = DdmParameters::new(0.5).unwrap();
        let n = 100_000;
        let rate = |dt| {
            let c = SimConfig {
                time_step: dt,
                ..cfg(6)
            };
            simulate_dataset(p, &b, n, &c).unwrap().dataset.choice_rate()
        };
        let coarse = rate(2e-3);
        let fine = rate(1e-3);
        let se = (0.731 * 0.269 / n as f64).sqrt();
        assert!((coarse - fine).abs() < se, "coarse {coarse} fine {fine} se {se}");
    }

    #[test]
    fn lognormal_generator_has_rising_choice_probability() {
        let g = LogNormalChoiceGenerator::default();
        assert!(g.choice_probability(0.2) < g.choice_probability(0.7));
        assert!(g.choice_probability(1e-6) > 0.549);
        let d = g.generate(1000, 3).unwrap();
        assert_eq!(d.len(), 1000);
        assert_eq!(d, g.generate(1000, 3).unwrap());
    }
}
