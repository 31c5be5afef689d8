//! Finite-sample estimation: a B-spline linear probability model for the
//! conditional choice probability in transformed time, and plug-in drift and
//! boundary estimates built on it.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use crate::basis::SplineBasis;
use crate::error::{DdmError, Result};
use crate::model::{
    imbalance_unchecked, log_odds_unchecked, Boundary, Dataset, SplineBoundary, TimeTransform,
    TransformFamily,
};

pub const DEFAULT_ORDER: usize = 4;
pub const DEFAULT_CLAMP_EPSILON: f64 = 1e-3;
/// Drift estimates below this are treated as zero.
/// Below the 1% and above the 99% sample quantile of G(τ) the fitted
/// probability is held constant.
pub const DEFAULT_SUPPORT_TRIM: f64 = 0.01;
pub const MIN_DRIFT: f64 = 1e-4;

/// K = max(6, ⌊n^{1/5}⌋ + 3).
pub fn default_knots(n: usize) -> usize {
    let root = (n as f64).powf(0.2);
    // Guard against powf landing just below an exact integer root.
    let floor = (root + 1e-12).floor() as usize;
    (floor + 3).max(6)
}

/// How the drift and boundary are scaled from imbalance, mean time and
/// log-odds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftConvention {
    /// δ = sqrt(Ī / (2τ̄)), b = ln-odds / (2δ). Exact for a unit-volatility DDM.
    #[default]
    Identification,
    /// δ = sqrt(Ī / τ̄), b = ln-odds / δ. Kept for comparison only.
    Unscaled,
}

impl DriftConvention {
    /// c in δ = sqrt(Ī / (c τ̄)) and b = ln-odds / (c δ).
    pub fn factor(self) -> f64 {
        match self {
            Self::Identification => 2.0,
            Self::Unscaled => 1.0,
        }
    }
}

/// Median of the decision times, mapped to one half by the fitted transform.
pub fn fit_time_transform(data: &Dataset, family: TransformFamily) -> Result<TimeTransform> {
    let mut times: Vec<f64> = data.times().collect();
    times.sort_by(f64::total_cmp);
    let n = times.len();
    let median = if n % 2 == 1 {
        times[n / 2]
    } else {
        0.5 * (times[n / 2 - 1] + times[n / 2])
    };
    TimeTransform::with_median(family, median)
}

/// p̂(t) = q^K(G(t))'β̂.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceProbabilityModel {
    basis: SplineBasis,
    transform: TimeTransform,
    coefficients: Vec<f64>,
    clamp_epsilon: f64,
    /// G-range over which the spline is evaluated; outside it the value at
    /// the nearest edge is used.
    support: (f64, f64),
}

impl ChoiceProbabilityModel {
    pub fn new(
        basis: SplineBasis,
        transform: TimeTransform,
        coefficients: Vec<f64>,
        clamp_epsilon: f64,
    ) -> Result<Self> {
        if coefficients.len() != basis.len() {
            return Err(DdmError::InvalidConfig(format!(
                "{} coefficients for {} basis functions",
                coefficients.len(),
                basis.len()
            )));
        }
        if !(clamp_epsilon > 0.0 && clamp_epsilon < 0.5) {
            return Err(DdmError::Domain {
                what: "clamp_epsilon",
                value: clamp_epsilon,
                constraint: "0 < epsilon < 0.5",
            });
        }
        Ok(Self {
            basis,
            transform,
            coefficients,
            clamp_epsilon,
            support: (0.0, 1.0),
        })
    }

    pub fn with_support(mut self, lo: f64, hi: f64) -> Self {
        self.support = (lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0).max(lo));
        self
    }

    pub fn with_coefficients(&self, coefficients: Vec<f64>) -> Self {
        assert_eq!(coefficients.len(), self.coefficients.len());
        Self {
            coefficients,
            ..self.clone()
        }
    }

    pub fn basis(&self) -> &SplineBasis {
        &self.basis
    }

    pub fn transform(&self) -> TimeTransform {
        self.transform
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn clamp_epsilon(&self) -> f64 {
        self.clamp_epsilon
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    fn g(&self, t: f64) -> f64 {
        self.transform.forward(t).clamp(self.support.0, self.support.1)
    }

    /// Unclamped q^K(G(t))'β̂; may leave [0, 1].
    pub fn raw_probability(&self, t: f64) -> f64 {
        self.basis.evaluate(self.g(t), &self.coefficients)
    }

    /// p̂(t) clamped into [ε, 1 - ε].
    pub fn clamped_probability(&self, t: f64) -> f64 {
        self.clamp(self.raw_probability(t))
    }

    pub fn clamp(&self, p: f64) -> f64 {
        p.clamp(self.clamp_epsilon, 1.0 - self.clamp_epsilon)
    }

    pub fn is_clamped(&self, raw: f64) -> bool {
        raw < self.clamp_epsilon || raw > 1.0 - self.clamp_epsilon
    }

    /// q^K(G(t)) as a dense vector.
    pub fn regressors(&self, t: f64) -> Vec<f64> {
        self.basis.values(self.g(t))
    }
}

/// Least-squares fit plus the pieces later variance calculations reuse.
#[derive(Debug, Clone)]
pub struct ChoiceFit {
    pub model: ChoiceProbabilityModel,
    /// Σ̂ = (1/n) Σ q_i q_i'.
    pub gram: DMatrix<f64>,
    /// (1/n) Σ q_i γ_i.
    pub cross: DVector<f64>,
    /// Row i is q^K(G(τ_i)).
    pub design: DMatrix<f64>,
    /// Records whose raw fitted probability left [0, 1].
    pub out_of_range: usize,
}

/// OLS of γ_i on q^K(G(τ_i)).
pub fn fit_choice_probability(
    data: &Dataset,
    basis: &SplineBasis,
    transform: TimeTransform,
    clamp_epsilon: f64,
) -> Result<ChoiceFit> {
    let n = data.len();
    let k = basis.len();
    if n < k {
        return Err(DdmError::TooFewObservations { n, k });
    }
    let gs: Vec<f64> = data.times().map(|t| transform.forward(t)).collect();
    let lo = gs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = gs.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut design = DMatrix::<f64>::zeros(n, k);
    let mut row = vec![0.0; k];
    for (i, &g) in gs.iter().enumerate() {
        basis.values_into(g, &mut row);
        for (c, v) in row.iter().enumerate() {
            design[(i, c)] = *v;
        }
    }
    let gamma = DVector::from_iterator(n, data.records().iter().map(|r| r.gamma()));
    let gram = design.tr_mul(&design) / n as f64;
    let cross = design.tr_mul(&gamma) / n as f64;

    let eig = gram.clone().symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || min <= max * 1e-12 {
        return Err(DdmError::RankDeficient { k });
    }
    let beta = gram
        .clone()
        .cholesky()
        .ok_or(DdmError::RankDeficient { k })?
        .solve(&cross);

    let model = ChoiceProbabilityModel::new(basis.clone(), transform, beta.iter().copied().collect(), clamp_epsilon)?
        .with_support(lo, hi);
    let fitted = &design * &beta;
    let out_of_range = fitted.iter().filter(|&&p| !(0.0..=1.0).contains(&p)).count();
    Ok(ChoiceFit {
        model,
        gram,
        cross,
        design,
        out_of_range,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEstimate {
    pub drift: f64,
    pub mean_imbalance: f64,
    pub mean_time: f64,
    /// Î(τ_i) per record.
    pub imbalances: Vec<f64>,
    /// Clamped p̂(τ_i) per record.
    pub probabilities: Vec<f64>,
    /// Records where clamping changed p̂(τ_i).
    pub clamped: usize,
}

/// δ̂ = sqrt(Ī / (c τ̄)) with Î evaluated at the clamped fitted probabilities.
pub fn estimate_drift(
    data: &Dataset,
    model: &ChoiceProbabilityModel,
    convention: DriftConvention,
) -> Result<DriftEstimate> {
    let mut clamped = 0;
    let probabilities: Vec<f64> = data
        .times()
        .map(|t| {
            let raw = model.raw_probability(t);
            if model.is_clamped(raw) {
                clamped += 1;
            }
            model.clamp(raw)
        })
        .collect();
    let imbalances: Vec<f64> = probabilities.iter().map(|&p| imbalance_unchecked(p)).collect();
    let n = data.len() as f64;
    let mean_imbalance = imbalances.iter().sum::<f64>() / n;
    let mean_time = data.mean_time();
    let drift = (mean_imbalance / (convention.factor() * mean_time)).sqrt();
    if !(drift >= MIN_DRIFT) {
        return Err(DdmError::NearZeroDrift(drift));
    }
    Ok(DriftEstimate {
        drift,
        mean_imbalance,
        mean_time,
        imbalances,
        probabilities,
        clamped,
    })
}

/// b̂(t) = ln-odds(p̂(t)) / (c δ̂).
pub fn estimate_boundary(
    drift_hat: f64,
    model: &ChoiceProbabilityModel,
    convention: DriftConvention,
) -> Result<Boundary> {
    if !(drift_hat > 0.0 && drift_hat.is_finite()) {
        return Err(DdmError::UndefinedBoundary);
    }
    Ok(spline_boundary(model.clone(), drift_hat, convention))
}

pub(crate) fn spline_boundary(
    model: ChoiceProbabilityModel,
    drift: f64,
    convention: DriftConvention,
) -> Boundary {
    Boundary::Spline(Arc::new(SplineBoundary {
        model,
        drift,
        scale: 2.0 / convention.factor(),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Number of basis functions; `None` uses [`default_knots`].
    pub knots: Option<usize>,
    pub order: usize,
    pub clamp_epsilon: f64,
    pub transform: TransformFamily,
    pub convention: DriftConvention,
    /// Fraction of G(τ_i) trimmed from each end when setting the range
    /// outside which the fitted probability is held constant.
    #[serde(default)]
    pub support_trim: f64,
    /// Fixed rate (exponential) or scale (rational) instead of the
    /// median-based fit.
    #[serde(default)]
    pub transform_parameter: Option<f64>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            knots: None,
            order: DEFAULT_ORDER,
            clamp_epsilon: DEFAULT_CLAMP_EPSILON,
            transform: TransformFamily::Exponential,
            convention: DriftConvention::Identification,
            support_trim: DEFAULT_SUPPORT_TRIM,
            transform_parameter: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EstimationResult {
    pub drift_hat: f64,
    pub boundary_hat: Boundary,
    pub choice_model: ChoiceProbabilityModel,
    pub mean_imbalance_hat: f64,
    pub mean_time_hat: f64,
    pub gram_matrix: DMatrix<f64>,
    pub n: usize,
    pub fit: ChoiceFit,
    pub drift_detail: DriftEstimate,
    /// True when the alternatives were swapped so that the first is chosen
    /// at least half the time.
    pub relabeled: bool,
    pub convention: DriftConvention,
}

impl EstimationResult {
    /// Drift with the sign of the original labelling.
    pub fn signed_drift(&self) -> f64 {
        if self.relabeled {
            -self.drift_hat
        } else {
            self.drift_hat
        }
    }
}

/// Full estimation pipeline. Returns the relabelled dataset actually used
/// alongside the estimates.
pub fn estimate(data: &Dataset, config: &EstimatorConfig) -> Result<(Dataset, EstimationResult)> {
    let relabeled = data.choice_rate() < 0.5;
    let data = if relabeled { data.relabeled() } else { data.clone() };
    let k = config.knots.unwrap_or_else(|| default_knots(data.len()));
    let basis = SplineBasis::new(k, config.order)?;
    let transform = match config.transform_parameter {
        Some(v) => TimeTransform::from_parameter(config.transform, v)?,
        None => fit_time_transform(&data, config.transform)?,
    };
    let mut fit = fit_choice_probability(&data, &basis, transform, config.clamp_epsilon)?;
    if config.support_trim > 0.0 {
        if !(config.support_trim < 0.5) {
            return Err(DdmError::InvalidConfig(format!(
                "support trim {} must lie in [0, 0.5)",
                config.support_trim
            )));
        }
        let mut gs: Vec<f64> = data.times().map(|t| transform.forward(t)).collect();
        gs.sort_by(f64::total_cmp);
        let cut = (config.support_trim * gs.len() as f64) as usize;
        fit.model = fit.model.with_support(gs[cut], gs[gs.len() - 1 - cut]);
    }
    let detail = estimate_drift(&data, &fit.model, config.convention)?;
    let boundary = estimate_boundary(detail.drift, &fit.model, config.convention)?;
    let result = EstimationResult {
        drift_hat: detail.drift,
        boundary_hat: boundary,
        choice_model: fit.model.clone(),
        mean_imbalance_hat: detail.mean_imbalance,
        mean_time_hat: detail.mean_time,
        gram_matrix: fit.gram.clone(),
        n: data.len(),
        fit,
        drift_detail: detail,
        relabeled,
        convention: config.convention,
    };
    Ok((data, result))
}

/// Log-odds of the clamped fitted probability at `t`.
pub fn fitted_log_odds(model: &ChoiceProbabilityModel, t: f64) -> f64 {
    log_odds_unchecked(model.clamped_probability(t))
}
