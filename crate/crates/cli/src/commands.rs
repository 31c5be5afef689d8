use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ddm_core::rng::derive_seed;
use ddm_core::simulator::{LogNormalChoiceGenerator, DEFAULT_T_MAX};
use ddm_core::{
    estimate, run_test, simulate_dataset, Boundary, Dataset, DdmParameters, SimConfig, TestReport, TimeTransform,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{CommandKind, Generator, RunConfig};
use crate::data::{read_dataset, write_dataset};
use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;
const GRID_POINTS: usize = 101;

/// Whether a command's result should map to the rejection exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Accept,
    Reject,
}

#[derive(Debug, Serialize)]
pub struct Report<'a, T> {
    pub schema_version: u32,
    pub command: CommandKind,
    pub config: &'a RunConfig,
    pub result: T,
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let write_err = |source| CliError::Write {
        path: path.to_owned(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(write_err)?);
    f(&mut out).map_err(write_err)?;
    out.flush().map_err(write_err)
}

fn emit<T: Serialize>(config: &RunConfig, result: T) -> Result<()> {
    emit_to(config, config.output.as_deref(), result)
}

fn emit_to<T: Serialize>(config: &RunConfig, path: Option<&Path>, result: T) -> Result<()> {
    let report = Report {
        schema_version: SCHEMA_VERSION,
        command: config.command,
        config,
        result,
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    match path {
        Some(path) => write_file(path, |w| w.write_all(text.as_bytes())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|()| out.flush())
                .map_err(|source| CliError::Write {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

pub fn run(config: &RunConfig) -> Result<Outcome> {
    config.validate()?;
    match config.command {
        CommandKind::Simulate => simulate(config),
        CommandKind::Estimate => estimate_cmd(config),
        CommandKind::Test => test(config),
        CommandKind::Calibrate => calibrate(config),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSidecar {
    pub generator: Generator,
    /// DDM truth; absent for the log-normal generator.
    pub drift: Option<f64>,
    pub boundary: Option<String>,
    pub lognormal: Option<LogNormalChoiceGenerator>,
    pub n: usize,
    pub censored: usize,
    pub censoring_warning: bool,
    pub t_max: f64,
    pub choice_rate: f64,
    pub mean_time: f64,
}

/// Data for one replication or the `simulate` command.
pub fn generate(config: &RunConfig, seed: u64) -> Result<(Dataset, SimulationSidecar)> {
    let t_max = config.t_max.unwrap_or(DEFAULT_T_MAX);
    let (data, censored, warning) = match config.generator {
        Generator::Ddm => {
            let boundary = Boundary::parametric(config.boundary.0)?;
            let sim = SimConfig {
                time_step: config.time_step,
                t_max,
                bridge_correction: config.bridge_correction,
                master_seed: seed,
                num_paths: config.n,
            };
            let out = simulate_dataset(DdmParameters::new(config.drift)?, &boundary, config.n, &sim)?;
            (out.dataset, out.censored, out.censoring_warning)
        }
        Generator::Lognormal => (LogNormalChoiceGenerator::default().generate(config.n, seed)?, 0, false),
    };
    let ddm = config.generator == Generator::Ddm;
    let sidecar = SimulationSidecar {
        generator: config.generator,
        drift: ddm.then_some(config.drift),
        boundary: ddm.then(|| config.boundary.0.to_string()),
        lognormal: (!ddm).then(LogNormalChoiceGenerator::default),
        n: data.len(),
        censored,
        censoring_warning: warning,
        t_max,
        choice_rate: data.choice_rate(),
        mean_time: data.mean_time(),
    };
    Ok((data, sidecar))
}

fn simulate(config: &RunConfig) -> Result<Outcome> {
    let path = config.output.as_deref().expect("validated");
    let (data, sidecar) = generate(config, config.seed)?;
    write_file(path, |w| write_dataset(&data, w))?;
    emit_to(config, Some(&sidecar_path(path)), sidecar)?;
    Ok(Outcome::Accept)
}

/// `data.csv` → `data.json`.
pub fn sidecar_path(csv: &Path) -> std::path::PathBuf {
    csv.with_extension("json")
}

#[derive(Debug, Clone, Serialize)]
pub struct GridPoint {
    pub g: f64,
    /// `None` at g = 1.
    pub t: Option<f64>,
    pub boundary: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateSummary {
    pub n: usize,
    pub relabeled: bool,
    pub drift_hat: f64,
    pub signed_drift: f64,
    pub mean_imbalance: f64,
    pub mean_time: f64,
    pub knots: usize,
    pub order: usize,
    pub transform: TimeTransform,
    pub coefficients: Vec<f64>,
    pub clamp_epsilon: f64,
    pub clamped_records: usize,
    pub out_of_range_records: usize,
    pub support: (f64, f64),
    pub boundary_grid: Vec<GridPoint>,
}

pub fn summarize_estimate(data: &Dataset, config: &RunConfig) -> Result<EstimateSummary> {
    let (_, est) = estimate(data, &config.estimator())?;
    let model = &est.choice_model;
    let transform = model.transform();
    let boundary_grid = (0..GRID_POINTS)
        .map(|i| {
            let g = i as f64 / (GRID_POINTS - 1) as f64;
            let t = transform.inverse(g);
            GridPoint {
                g,
                t: t.is_finite().then_some(t),
                boundary: est.boundary_hat.eval(t),
            }
        })
        .collect();
    Ok(EstimateSummary {
        n: est.n,
        relabeled: est.relabeled,
        drift_hat: est.drift_hat,
        signed_drift: est.signed_drift(),
        mean_imbalance: est.mean_imbalance_hat,
        mean_time: est.mean_time_hat,
        knots: model.basis().len(),
        order: model.basis().order(),
        transform,
        coefficients: model.coefficients().to_vec(),
        clamp_epsilon: model.clamp_epsilon(),
        clamped_records: est.drift_detail.clamped,
        out_of_range_records: est.fit.out_of_range,
        support: model.support(),
        boundary_grid,
    })
}

fn input(config: &RunConfig) -> Result<Dataset> {
    read_dataset(config.input.as_deref().expect("validated"))
}

fn estimate_cmd(config: &RunConfig) -> Result<Outcome> {
    let summary = summarize_estimate(&input(config)?, config)?;
    let resolved = RunConfig {
        knots: Some(summary.knots),
        ..config.clone()
    };
    emit(&resolved, summary)?;
    Ok(Outcome::Accept)
}

fn test(config: &RunConfig) -> Result<Outcome> {
    let report = run_test(&input(config)?, &config.test_config(config.seed))?;
    let resolved = RunConfig {
        knots: Some(report.diagnostics.knots),
        ..config.clone()
    };
    let reject = report.reject;
    emit(&resolved, report)?;
    Ok(if reject { Outcome::Reject } else { Outcome::Accept })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Replication {
    pub index: usize,
    pub seed: u64,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub reject: Option<bool>,
    pub drift_hat: Option<f64>,
    pub v1_min_eigenvalue: Option<f64>,
    pub v1_symmetric: Option<bool>,
    pub v3_to_v1_trace_ratio: Option<f64>,
    pub censored_data: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationSummary {
    pub reps: usize,
    pub completed: usize,
    pub failed: usize,
    pub rejections: usize,
    pub rejection_rate: f64,
    pub mean_statistic: f64,
    pub variance_statistic: f64,
    pub reference_mean: f64,
    pub reference_variance: f64,
    pub critical_value: f64,
    pub alpha: f64,
    pub replications: Vec<Replication>,
}

fn replicate(config: &RunConfig, index: usize) -> Replication {
    let seed = derive_seed(config.seed, index as u64);
    let mut rep = Replication {
        index,
        seed,
        statistic: None,
        p_value: None,
        reject: None,
        drift_hat: None,
        v1_min_eigenvalue: None,
        v1_symmetric: None,
        v3_to_v1_trace_ratio: None,
        censored_data: 0,
        error: None,
    };
    let outcome = generate(config, seed).and_then(|(data, side)| {
        rep.censored_data = side.censored;
        run_test(&data, &config.test_config(seed)).map_err(CliError::from)
    });
    match outcome {
        Ok(report) => fill(&mut rep, &report),
        Err(e) => rep.error = Some(e.to_string()),
    }
    rep
}

fn fill(rep: &mut Replication, report: &TestReport) {
    let v1 = &report.components.v1;
    let symmetric = (0..v1.len()).all(|i| (0..v1.len()).all(|j| v1[i][j] == v1[j][i]));
    rep.statistic = Some(report.statistic);
    rep.p_value = Some(report.p_value);
    rep.reject = Some(report.reject);
    rep.drift_hat = Some(report.diagnostics.drift_hat);
    rep.v1_min_eigenvalue = Some(report.diagnostics.v1_min_eigenvalue);
    rep.v1_symmetric = Some(symmetric);
    rep.v3_to_v1_trace_ratio = Some(report.diagnostics.v3_to_v1_trace_ratio);
}

/// R simulate→test cycles with seeds derived from the master seed.
pub fn calibration(config: &RunConfig) -> CalibrationSummary {
    let replications: Vec<Replication> = (0..config.reps).into_par_iter().map(|i| replicate(config, i)).collect();
    let stats: Vec<f64> = replications.iter().filter_map(|r| r.statistic).collect();
    let completed = stats.len();
    let rejections = replications.iter().filter(|r| r.reject == Some(true)).count();
    let mean = stats.iter().sum::<f64>() / completed.max(1) as f64;
    let variance = if completed > 1 {
        stats.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (completed - 1) as f64
    } else {
        0.0
    };
    let j = config.moments as f64;
    CalibrationSummary {
        reps: config.reps,
        completed,
        failed: config.reps - completed,
        rejections,
        rejection_rate: rejections as f64 / completed.max(1) as f64,
        mean_statistic: mean,
        variance_statistic: variance,
        reference_mean: j,
        reference_variance: 2.0 * j,
        critical_value: ddm_core::spectest::chi_squared_decision(0.0, config.moments, config.alpha).1,
        alpha: config.alpha,
        replications,
    }
}

fn calibrate(config: &RunConfig) -> Result<Outcome> {
    emit(config, calibration(config))?;
    Ok(Outcome::Accept)
}
