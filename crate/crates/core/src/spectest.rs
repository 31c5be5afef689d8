//! Simulated-moment specification test.
//!
//! Sample frequencies of decision times falling between quantiles of the
//! time transform are compared with the frequencies implied by simulating
//! the estimated drift and boundary. The quadratic form in their difference
//! is asymptotically χ²(J) when the data come from a DDM. Its variance has
//! three independent parts: sampling noise in the times (including their
//! effect on the drift estimate), estimation noise in the spline
//! coefficients, and simulation noise.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{DdmError, Result};
use crate::estimator::{
    estimate, spline_boundary, ChoiceFit, ChoiceProbabilityModel, DriftConvention, EstimationResult, EstimatorConfig,
};
use crate::model::{imbalance_derivative, log_odds_derivative, Dataset, TimeTransform};
use crate::simulator::{moments_from_engine, PathEngine, SimConfig, SimulatedMoments, MODEL_STREAM};

pub const DEFAULT_MOMENTS: usize = 5;
pub const DEFAULT_SIMULATIONS: usize = 20_000;
pub const DEFAULT_ALPHA: f64 = 0.05;
/// Δ = factor · δ̂ · n^{-1/4}.
pub const DEFAULT_DELTA_FACTOR: f64 = 0.5;
/// Simulation horizon as a quantile of the time transform.
pub const HORIZON_QUANTILE: f64 = 1.0 - 1e-6;
const MAX_CONDITION: f64 = 1e10;
const PD_TOLERANCE: f64 = 1e-8;
const V3_WARN_RATIO: f64 = 0.05;

/// J interval indicators m_j(t) = sqrt(J+1)·1(τ_j <= t < τ_{j+1}) with
/// τ_j = G⁻¹(j/(J+1)) and τ_{J+1} = ∞. The interval below τ_1 is left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSpec {
    thresholds: Vec<f64>,
    normalization: f64,
    transform: TimeTransform,
}

pub fn build_moment_spec(j: usize, transform: TimeTransform) -> Result<MomentSpec> {
    if j == 0 {
        return Err(DdmError::InvalidConfig("number of moments J must be at least 1".into()));
    }
    let thresholds = (1..=j)
        .map(|i| transform.inverse(i as f64 / (j + 1) as f64))
        .collect();
    Ok(MomentSpec {
        thresholds,
        normalization: ((j + 1) as f64).sqrt(),
        transform,
    })
}

impl MomentSpec {
    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn transform(&self) -> TimeTransform {
        self.transform
    }

    /// Zero-based moment index whose interval holds `t`, or `None` below τ_1.
    pub fn interval(&self, t: f64) -> Option<usize> {
        let above = self.thresholds.partition_point(|&th| th <= t);
        above.checked_sub(1)
    }

    /// m_J(t).
    pub fn evaluate(&self, t: f64) -> Vec<f64> {
        let mut m = vec![0.0; self.len()];
        if let Some(j) = self.interval(t) {
            m[j] = self.normalization;
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentSource {
    Sample,
    Simulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    pub values: Vec<f64>,
    pub source: MomentSource,
    /// n or S.
    pub count: usize,
}

/// m̄ = (1/n) Σ m_J(τ_i).
pub fn sample_moments(data: &Dataset, spec: &MomentSpec) -> MomentVector {
    let mut counts = vec![0usize; spec.len()];
    for t in data.times() {
        if let Some(j) = spec.interval(t) {
            counts[j] += 1;
        }
    }
    let n = data.len();
    MomentVector {
        values: counts
            .iter()
            .map(|&c| spec.normalization() * c as f64 / n as f64)
            .collect(),
        source: MomentSource::Sample,
        count: n,
    }
}

/// Which delta-method coefficients to use for the drift channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceFormula {
    /// ψ with 1/(2δ̂τ̄) and [Î - Ī - δ̂²(τ - τ̄)], and the β channel with
    /// d(p) = 1/(p(1-p)) on the regression rows, regardless of the drift
    /// convention.
    #[default]
    AsPrinted,
    /// Influence functions differentiated from the drift estimator in use:
    /// dδ̂ = [dĪ - cδ̂² dτ̄] / (2cδ̂τ̄), with dĪ/dβ = (1/n) Σ I'(p̂_i) q_i
    /// taken at the clamped G(τ_i).
    Consistent,
}

/// Finite-difference step for the Jacobians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaStep {
    /// Δ = factor · δ̂ · n^{-1/4}.
    Rule { factor: f64 },
    Fixed { value: f64 },
}

impl Default for DeltaStep {
    fn default() -> Self {
        Self::Rule {
            factor: DEFAULT_DELTA_FACTOR,
        }
    }
}

impl DeltaStep {
    pub fn resolve(self, drift_hat: f64, n: usize) -> f64 {
        match self {
            Self::Rule { factor } => factor * drift_hat * (n as f64).powf(-0.25),
            Self::Fixed { value } => value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub moments: usize,
    pub simulations: usize,
    pub delta_step: DeltaStep,
    pub estimator: EstimatorConfig,
    pub time_step: f64,
    /// `None` uses G⁻¹(1 - 1e-6) of the fitted transform.
    pub t_max: Option<f64>,
    pub bridge_correction: bool,
    pub alpha: f64,
    pub master_seed: u64,
    pub variance: VarianceFormula,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            moments: DEFAULT_MOMENTS,
            simulations: DEFAULT_SIMULATIONS,
            delta_step: DeltaStep::default(),
            estimator: EstimatorConfig::default(),
            time_step: crate::simulator::DEFAULT_TIME_STEP,
            t_max: None,
            bridge_correction: true,
            alpha: DEFAULT_ALPHA,
            master_seed: 0,
            variance: VarianceFormula::default(),
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.moments == 0 {
            return Err(DdmError::InvalidConfig("moments J must be positive".into()));
        }
        if self.simulations == 0 {
            return Err(DdmError::InvalidConfig("simulations S must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(DdmError::InvalidConfig(format!("alpha = {} must lie in (0, 1)", self.alpha)));
        }
        let (DeltaStep::Fixed { value } | DeltaStep::Rule { factor: value }) = self.delta_step;
        if !(value > 0.0 && value.is_finite()) {
            return Err(DdmError::InvalidConfig("delta step must be positive".into()));
        }
        Ok(())
    }

    fn sim_config(&self, transform: TimeTransform) -> SimConfig {
        SimConfig {
            time_step: self.time_step,
            t_max: self.t_max.unwrap_or_else(|| transform.inverse(HORIZON_QUANTILE)),
            bridge_correction: self.bridge_correction,
            master_seed: self.master_seed,
            num_paths: self.simulations,
        }
    }
}

/// Everything needed to simulate τ_s(δ, β) with common random numbers.
#[derive(Debug, Clone)]
pub struct MomentSimulator<'a> {
    pub model: &'a ChoiceProbabilityModel,
    pub convention: DriftConvention,
    pub spec: &'a MomentSpec,
    pub simulations: usize,
    pub config: SimConfig,
}

impl MomentSimulator<'_> {
    /// m̂(δ, β): the boundary is ln-odds(q'β) / (cδ) and the drift is δ.
    pub fn moments(&self, drift: f64, model: &ChoiceProbabilityModel) -> Result<SimulatedMoments> {
        let boundary = spline_boundary(model.clone(), drift, self.convention);
        let engine = PathEngine::new(drift, &boundary, &self.config)?;
        Ok(moments_from_engine(
            &engine,
            self.spec,
            self.simulations,
            self.config.master_seed,
            MODEL_STREAM,
        ))
    }
}

fn quotient(plus: &SimulatedMoments, minus: &SimulatedMoments, step: f64) -> DVector<f64> {
    DVector::from_iterator(
        plus.values().len(),
        plus.values()
            .iter()
            .zip(minus.values())
            .map(|(a, b)| (a - b) / (2.0 * step)),
    )
}

#[derive(Debug, Clone)]
pub struct DriftJacobian {
    /// M̂_δ.
    pub m_delta: DVector<f64>,
    pub censored: u64,
}

/// M̂_δ = [m̂(δ̂+Δ, β̂) - m̂(δ̂-Δ, β̂)] / 2Δ with common random numbers.
pub fn jacobian_drift(sim: &MomentSimulator<'_>, drift_hat: f64, step: f64) -> Result<DriftJacobian> {
    if !(step > 0.0) {
        return Err(DdmError::StepTooLarge {
            step,
            reason: "the difference step must be positive",
        });
    }
    if drift_hat - step <= 0.0 {
        return Err(DdmError::StepTooLarge {
            step,
            reason: "drift minus step must stay positive",
        });
    }
    let plus = sim.moments(drift_hat + step, sim.model)?;
    let minus = sim.moments(drift_hat - step, sim.model)?;
    Ok(DriftJacobian {
        m_delta: quotient(&plus, &minus, step),
        censored: plus.censored + minus.censored,
    })
}

#[derive(Debug, Clone)]
pub struct BetaJacobian {
    /// M̂_β, J × K.
    pub m_beta: DMatrix<f64>,
    /// D̂_β, J × K.
    pub d_beta: DMatrix<f64>,
    pub censored: u64,
}

/// Column k of M̂_β perturbs β̂_k by ±Δ. D̂_β adds the effect of β on δ̂
/// through Ī.
pub fn jacobian_beta(
    sim: &MomentSimulator<'_>,
    data: &Dataset,
    est: &EstimationResult,
    m_delta: &DVector<f64>,
    step: f64,
    formula: VarianceFormula,
) -> Result<BetaJacobian> {
    if !(step > 0.0) || step >= 0.5 {
        return Err(DdmError::StepTooLarge {
            step,
            reason: "coefficient perturbations must stay below one half",
        });
    }
    let beta = est.choice_model.coefficients();
    let k = beta.len();
    let j = m_delta.len();
    let mut m_beta = DMatrix::<f64>::zeros(j, k);
    let mut censored = 0;
    for col in 0..k {
        let shifted = |sign: f64| {
            let mut b = beta.to_vec();
            b[col] += sign * step;
            est.choice_model.with_coefficients(b)
        };
        let plus = sim.moments(est.drift_hat, &shifted(1.0))?;
        let minus = sim.moments(est.drift_hat, &shifted(-1.0))?;
        censored += plus.censored + minus.censored;
        m_beta.set_column(col, &quotient(&plus, &minus, step));
    }
    let d_beta = &m_beta + m_delta * drift_gradient_in_beta(data, est, formula).transpose();
    Ok(BetaJacobian { m_beta, d_beta, censored })
}

/// Row vector multiplying M̂_δ in D̂_β, returned as a K-vector.
fn drift_gradient_in_beta(data: &Dataset, est: &EstimationResult, formula: VarianceFormula) -> DVector<f64> {
    let n = est.n as f64;
    let c = est.convention.factor();
    let detail = &est.drift_detail;
    let model = &est.choice_model;
    let k = model.basis().len();
    let mut grad = DVector::<f64>::zeros(k);
    for (i, (t, &p)) in data.times().zip(&detail.probabilities).enumerate() {
        let q: Vec<f64> = match formula {
            VarianceFormula::AsPrinted => est.fit.design.row(i).iter().copied().collect(),
            // p̂(τ_i) moves with β through the basis at the clamped G(τ_i).
            VarianceFormula::Consistent => model.regressors(t),
        };
        let weight = match formula {
            VarianceFormula::AsPrinted => log_odds_derivative(p),
            VarianceFormula::Consistent => {
                let raw: f64 = q.iter().zip(model.coefficients()).map(|(a, b)| a * b).sum();
                if model.is_clamped(raw) {
                    0.0
                } else {
                    imbalance_derivative(p)
                }
            }
        };
        if weight != 0.0 {
            for (g, v) in grad.iter_mut().zip(&q) {
                *g += weight * v;
            }
        }
    }
    let scale = match formula {
        VarianceFormula::AsPrinted => 1.0 / (2.0 * est.drift_hat * detail.mean_time * n),
        VarianceFormula::Consistent => 1.0 / (2.0 * c * est.drift_hat * detail.mean_time * n),
    };
    grad * scale
}

#[derive(Debug, Clone)]
pub struct VarianceComponents {
    pub v1: DMatrix<f64>,
    pub v2: DMatrix<f64>,
    pub v3: DMatrix<f64>,
    pub m_delta: DVector<f64>,
    pub m_beta: DMatrix<f64>,
    pub d_beta: DMatrix<f64>,
    /// Σ̂ = (1/n) Σ q_i q_i'.
    pub sigma: DMatrix<f64>,
    /// Λ̂ = (1/n) Σ q_i q_i' (γ_i - p̂_i)².
    pub lambda: DMatrix<f64>,
    /// Row i is ψ̂_{i1}'.
    pub psi: DMatrix<f64>,
    pub delta_step: f64,
}

impl VarianceComponents {
    pub fn total(&self) -> DMatrix<f64> {
        &self.v1 + &self.v2 + &self.v3
    }

    pub fn v3_to_v1_trace_ratio(&self) -> f64 {
        self.v3.trace() / self.v1.trace()
    }
}

/// Inputs to [`variance_components`] that come from simulation.
#[derive(Debug, Clone)]
pub struct SimulatedInputs<'a> {
    pub central: &'a SimulatedMoments,
    pub m_delta: &'a DVector<f64>,
    pub m_beta: &'a DMatrix<f64>,
    pub d_beta: &'a DMatrix<f64>,
    pub delta_step: f64,
}

/// V̂ = V̂₁ + V̂₂ + V̂₃ from the influence of τ_i (ψ̂_{i1}), the delta method
/// in β̂, and the spread of the simulated moment draws.
pub fn variance_components(
    data: &Dataset,
    est: &EstimationResult,
    spec: &MomentSpec,
    inputs: SimulatedInputs<'_>,
    formula: VarianceFormula,
) -> Result<VarianceComponents> {
    let n = data.len();
    let nf = n as f64;
    let j = spec.len();
    let detail = &est.drift_detail;
    let drift = est.drift_hat;
    let tau_bar = detail.mean_time;
    let i_bar = detail.mean_imbalance;
    let c = est.convention.factor();
    let (coef, time_weight) = match formula {
        VarianceFormula::AsPrinted => (1.0 / (2.0 * drift * tau_bar), drift * drift),
        VarianceFormula::Consistent => (1.0 / (2.0 * c * drift * tau_bar), c * drift * drift),
    };

    let m_bar = DVector::from_vec(sample_moments(data, spec).values);
    let mut psi = DMatrix::<f64>::zeros(n, j);
    for (i, r) in data.records().iter().enumerate() {
        let influence = coef * (detail.imbalances[i] - i_bar - time_weight * (r.decision_time - tau_bar));
        let m_i = DVector::from_vec(spec.evaluate(r.decision_time));
        let row = m_i - &m_bar - inputs.m_delta * influence;
        psi.set_row(i, &row.transpose());
    }
    let v1 = psi.tr_mul(&psi) / nf;

    let sigma = est.fit.gram.clone();
    let lambda = lambda_hat(data, &est.fit);
    let chol = sigma.clone().cholesky().ok_or(DdmError::RankDeficient { k: sigma.nrows() })?;
    let sigma_inv_dt = chol.solve(&inputs.d_beta.transpose());
    let v2 = sigma_inv_dt.tr_mul(&(&lambda * &sigma_inv_dt));

    let central = inputs.central;
    let s = central.paths as f64;
    let m_hat = DVector::from_column_slice(central.values());
    let mut v3 = -(&m_hat * m_hat.transpose());
    let norm_sq = spec.normalization().powi(2);
    for (jj, &count) in central.interval_counts[1..].iter().enumerate() {
        v3[(jj, jj)] += norm_sq * count as f64 / s;
    }
    v3 *= nf / s;

    Ok(VarianceComponents {
        v1: symmetrize(v1),
        v2: symmetrize(v2),
        v3: symmetrize(v3),
        m_delta: inputs.m_delta.clone(),
        m_beta: inputs.m_beta.clone(),
        d_beta: inputs.d_beta.clone(),
        sigma,
        lambda,
        psi,
        delta_step: inputs.delta_step,
    })
}

/// Λ̂ = (1/n) Σ q_i q_i' (γ_i - p̂_i)² with unclamped fitted values.
pub fn lambda_hat(data: &Dataset, fit: &ChoiceFit) -> DMatrix<f64> {
    let beta = DVector::from_column_slice(fit.model.coefficients());
    let fitted = &fit.design * &beta;
    let mut weighted = fit.design.clone();
    for (i, r) in data.records().iter().enumerate() {
        weighted.row_mut(i).scale_mut(r.gamma() - fitted[i]);
    }
    weighted.tr_mul(&weighted) / data.len() as f64
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Result of solving the quadratic form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticForm {
    pub statistic: f64,
    pub condition_number: f64,
    pub min_eigenvalue: f64,
}

/// n·d'V⁻¹d via Cholesky, refusing matrices that are not positive definite.
pub fn quadratic_form(n: usize, diff: &DVector<f64>, v: &DMatrix<f64>) -> Result<QuadraticForm> {
    let v = symmetrize(v.clone());
    let eig = v.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    let max = eig.eigenvalues.max();
    let trace = v.trace();
    if min < -PD_TOLERANCE * trace.abs() || !(max > 0.0) {
        return Err(DdmError::NotPositiveDefinite {
            min_eigenvalue: min,
            trace,
        });
    }
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if condition > MAX_CONDITION {
        return Err(DdmError::IllConditioned(condition));
    }
    let chol = v.cholesky().ok_or(DdmError::NotPositiveDefinite {
        min_eigenvalue: min,
        trace,
    })?;
    let solved = chol.solve(diff);
    Ok(QuadraticForm {
        statistic: n as f64 * diff.dot(&solved),
        condition_number: condition,
        min_eigenvalue: min,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceSummary {
    pub v1: Vec<Vec<f64>>,
    pub v2: Vec<Vec<f64>>,
    pub v3: Vec<Vec<f64>>,
    pub m_delta: Vec<f64>,
    pub m_beta: Vec<Vec<f64>>,
    pub d_beta: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
    pub lambda: Vec<Vec<f64>>,
    pub delta_step: f64,
    pub trace_v1: f64,
    pub trace_v2: f64,
    pub trace_v3: f64,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl From<&VarianceComponents> for VarianceSummary {
    fn from(v: &VarianceComponents) -> Self {
        Self {
            v1: rows(&v.v1),
            v2: rows(&v.v2),
            v3: rows(&v.v3),
            m_delta: v.m_delta.iter().copied().collect(),
            m_beta: rows(&v.m_beta),
            d_beta: rows(&v.d_beta),
            sigma: rows(&v.sigma),
            lambda: rows(&v.lambda),
            delta_step: v.delta_step,
            trace_v1: v.v1.trace(),
            trace_v2: v.v2.trace(),
            trace_v3: v.v3.trace(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestDiagnostics {
    pub n: usize,
    pub knots: usize,
    pub drift_hat: f64,
    pub mean_imbalance: f64,
    pub mean_time: f64,
    pub relabeled: bool,
    pub thresholds: Vec<f64>,
    pub sample_moments: Vec<f64>,
    pub simulated_moments: Vec<f64>,
    /// Censored paths in the central simulation.
    pub censored_central: u64,
    /// Censored paths across all perturbed simulations.
    pub censored_perturbed: u64,
    pub t_max: f64,
    pub clamped_records: usize,
    pub out_of_range_records: usize,
    pub v3_to_v1_trace_ratio: f64,
    pub v3_warning: bool,
    pub condition_number: f64,
    pub min_eigenvalue: f64,
    pub v1_min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub critical_value: f64,
    pub alpha_level: f64,
    pub reject: bool,
    pub components: VarianceSummary,
    pub diagnostics: TestDiagnostics,
}

/// χ²(J) upper tail and critical value.
pub fn chi_squared_decision(statistic: f64, dof: usize, alpha: f64) -> (f64, f64) {
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    (dist.sf(statistic), dist.inverse_cdf(1.0 - alpha))
}

/// Estimation, simulated moments, Jacobians, variance and statistic.
pub fn run_test(data: &Dataset, config: &TestConfig) -> Result<TestReport> {
    config.validate()?;
    let (data, est) = estimate(data, &config.estimator).map_err(DdmError::at("estimate"))?;
    let data = &data;
    let transform = est.choice_model.transform();
    let spec = build_moment_spec(config.moments, transform)?;
    let sim_config = config.sim_config(transform);
    sim_config.validate()?;
    let sim = MomentSimulator {
        model: &est.choice_model,
        convention: est.convention,
        spec: &spec,
        simulations: config.simulations,
        config: sim_config,
    };
    let central = sim
        .moments(est.drift_hat, &est.choice_model)
        .map_err(DdmError::at("simulate"))?;
    let step = config.delta_step.resolve(est.drift_hat, est.n);
    let dj = jacobian_drift(&sim, est.drift_hat, step).map_err(DdmError::at("drift jacobian"))?;
    let bj = jacobian_beta(&sim, data, &est, &dj.m_delta, step, config.variance).map_err(DdmError::at("beta jacobian"))?;
    let components = variance_components(
        data,
        &est,
        &spec,
        SimulatedInputs {
            central: &central,
            m_delta: &dj.m_delta,
            m_beta: &bj.m_beta,
            d_beta: &bj.d_beta,
            delta_step: step,
        },
        config.variance,
    )
    .map_err(DdmError::at("variance"))?;

    let m_bar = sample_moments(data, &spec);
    let diff = DVector::from_iterator(
        spec.len(),
        m_bar.values.iter().zip(central.values()).map(|(a, b)| a - b),
    );
    let qf = quadratic_form(data.len(), &diff, &components.total()).map_err(DdmError::at("statistic"))?;
    let (p_value, critical_value) = chi_squared_decision(qf.statistic, spec.len(), config.alpha);
    let ratio = components.v3_to_v1_trace_ratio();

    Ok(TestReport {
        statistic: qf.statistic,
        dof: spec.len(),
        p_value,
        critical_value,
        alpha_level: config.alpha,
        reject: qf.statistic >= critical_value,
        diagnostics: TestDiagnostics {
            n: est.n,
            knots: est.choice_model.basis().len(),
            drift_hat: est.drift_hat,
            mean_imbalance: est.mean_imbalance_hat,
            mean_time: est.mean_time_hat,
            relabeled: est.relabeled,
            thresholds: spec.thresholds().to_vec(),
            sample_moments: m_bar.values.clone(),
            simulated_moments: central.values().to_vec(),
            censored_central: central.censored,
            censored_perturbed: dj.censored + bj.censored,
            t_max: sim_config.t_max,
            clamped_records: est.drift_detail.clamped,
            out_of_range_records: est.fit.out_of_range,
            v3_to_v1_trace_ratio: ratio,
            v3_warning: ratio > V3_WARN_RATIO,
            condition_number: qf.condition_number,
            min_eigenvalue: qf.min_eigenvalue,
            v1_min_eigenvalue: components.v1.clone().symmetric_eigen().eigenvalues.min(),
        },
        components: VarianceSummary::from(&components),
    })
}
