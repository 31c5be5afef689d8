//! Domain types shared across the crate: observed trials, model parameters,
//! time transforms and stopping boundaries, plus the scalar transforms
//! (log-odds and choice imbalance) everything else is built from.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{DdmError, Result};
use crate::estimator::ChoiceProbabilityModel;

/// One observed decision: the time it took and which alternative won.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub decision_time: f64,
    /// `true` when the first alternative (x) was chosen.
    pub choice: bool,
}

impl TrialRecord {
    pub fn new(decision_time: f64, choice: bool) -> Result<Self> {
        if !(decision_time.is_finite() && decision_time > 0.0) {
            return Err(DdmError::Domain {
                what: "decision_time",
                value: decision_time,
                constraint: "finite and > 0",
            });
        }
        Ok(Self {
            decision_time,
            choice,
        })
    }

    pub fn gamma(&self) -> f64 {
        if self.choice {
            1.0
        } else {
            0.0
        }
    }
}

/// Observations for a single pair of alternatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    records: Vec<TrialRecord>,
    label: Option<(String, String)>,
}

impl Dataset {
    pub fn new(records: Vec<TrialRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(DdmError::EmptyDataset);
        }
        for (index, r) in records.iter().enumerate() {
            if !(r.decision_time.is_finite() && r.decision_time > 0.0) {
                return Err(DdmError::InvalidRecord {
                    index,
                    reason: format!("decision time {} is not finite and positive", r.decision_time),
                });
            }
        }
        Ok(Self {
            records,
            label: None,
        })
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, bool)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(decision_time, choice)| TrialRecord {
                    decision_time,
                    choice,
                })
                .collect(),
        )
    }

    pub fn with_label(mut self, x: impl Into<String>, y: impl Into<String>) -> Self {
        self.label = Some((x.into(), y.into()));
        self
    }

    pub fn label(&self) -> Option<&(String, String)> {
        self.label.as_ref()
    }

    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.decision_time)
    }

    pub fn mean_time(&self) -> f64 {
        self.times().sum::<f64>() / self.len() as f64
    }

    pub fn choice_rate(&self) -> f64 {
        self.records.iter().map(TrialRecord::gamma).sum::<f64>() / self.len() as f64
    }

    /// Swaps the roles of the two alternatives.
    pub fn relabeled(&self) -> Self {
        Self {
            records: self
                .records
                .iter()
                .map(|r| TrialRecord {
                    decision_time: r.decision_time,
                    choice: !r.choice,
                })
                .collect(),
            label: self.label.as_ref().map(|(x, y)| (y.clone(), x.clone())),
        }
    }
}

/// Drift of the evidence process. Volatility is normalized to one; use
/// [`DdmParameters::normalize`] to fold a different volatility into the
/// drift and boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DdmParameters {
    drift: f64,
}

impl DdmParameters {
    pub const VOLATILITY: f64 = 1.0;

    pub fn new(drift: f64) -> Result<Self> {
        if !drift.is_finite() {
            return Err(DdmError::Domain {
                what: "drift",
                value: drift,
                constraint: "finite",
            });
        }
        Ok(Self { drift })
    }

    /// Rescales `(drift, volatility, boundary)` to the unit-volatility
    /// model that produces the same choices and stopping times.
    pub fn normalize(drift: f64, volatility: f64, boundary: &Boundary) -> Result<(Self, Boundary)> {
        if !(volatility.is_finite() && volatility > 0.0) {
            return Err(DdmError::Domain {
                what: "volatility",
                value: volatility,
                constraint: "finite and > 0",
            });
        }
        Ok((Self::new(drift / volatility)?, boundary.scaled(1.0 / volatility)))
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn volatility(&self) -> f64 {
        Self::VOLATILITY
    }
}

/// ln(p / (1 - p)).
pub fn log_odds(p: f64) -> Result<f64> {
    check_probability(p)?;
    Ok(log_odds_unchecked(p))
}

/// Choice imbalance (2p - 1) ln(p / (1 - p)), the KL divergence between
/// (p, 1 - p) and its permutation.
pub fn imbalance(p: f64) -> Result<f64> {
    check_probability(p)?;
    Ok(imbalance_unchecked(p))
}

#[inline]
pub(crate) fn log_odds_unchecked(p: f64) -> f64 {
    p.ln() - (-p).ln_1p()
}

#[inline]
pub(crate) fn imbalance_unchecked(p: f64) -> f64 {
    (2.0 * p - 1.0) * log_odds_unchecked(p)
}

/// dI/dp = 2 ln(p/(1-p)) + (2p - 1) / (p (1 - p)).
pub(crate) fn imbalance_derivative(p: f64) -> f64 {
    2.0 * log_odds_unchecked(p) + (2.0 * p - 1.0) / (p * (1.0 - p))
}

/// d ln(p/(1-p)) / dp.
pub(crate) fn log_odds_derivative(p: f64) -> f64 {
    1.0 / (p * (1.0 - p))
}

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(DdmError::Domain {
            what: "probability",
            value: p,
            constraint: "0 < p < 1",
        })
    }
}

/// Monotone map of decision times onto the unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TimeTransform {
    /// G(t) = 1 - exp(-rate t).
    Exponential { rate: f64 },
    /// G(t) = c t / (1 + c t).
    Rational { scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformFamily {
    Exponential,
    Rational,
}

impl fmt::Display for TransformFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exponential => "exponential",
            Self::Rational => "rational",
        })
    }
}

impl FromStr for TransformFamily {
    type Err = DdmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential" | "exp" => Ok(Self::Exponential),
            "rational" => Ok(Self::Rational),
            other => Err(DdmError::InvalidConfig(format!(
                "unknown transform family {other:?}; expected exponential or rational"
            ))),
        }
    }
}

impl TimeTransform {
    pub fn exponential(rate: f64) -> Result<Self> {
        positive("rate", rate)?;
        Ok(Self::Exponential { rate })
    }

    pub fn rational(scale: f64) -> Result<Self> {
        positive("scale", scale)?;
        Ok(Self::Rational { scale })
    }

    /// The member of `family` that sends `t` to one half.
    pub fn with_median(family: TransformFamily, median: f64) -> Result<Self> {
        positive("median", median)?;
        match family {
            TransformFamily::Exponential => Self::exponential(std::f64::consts::LN_2 / median),
            TransformFamily::Rational => Self::rational(1.0 / median),
        }
    }

    /// Rate for the exponential family, scale for the rational one.
    pub fn from_parameter(family: TransformFamily, value: f64) -> Result<Self> {
        match family {
            TransformFamily::Exponential => Self::exponential(value),
            TransformFamily::Rational => Self::rational(value),
        }
    }

    pub fn parameter(&self) -> f64 {
        match *self {
            Self::Exponential { rate } => rate,
            Self::Rational { scale } => scale,
        }
    }

    pub fn family(&self) -> TransformFamily {
        match self {
            Self::Exponential { .. } => TransformFamily::Exponential,
            Self::Rational { .. } => TransformFamily::Rational,
        }
    }

    /// G(t); t <= 0 maps to 0.
    pub fn forward(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            Self::Exponential { rate } => -(-rate * t).exp_m1(),
            Self::Rational { scale } => {
                let x = scale * t;
                if x.is_infinite() {
                    1.0
                } else {
                    x / (1.0 + x)
                }
            }
        }
    }

    /// G⁻¹(g); g >= 1 maps to infinity.
    pub fn inverse(&self, g: f64) -> f64 {
        if g <= 0.0 {
            return 0.0;
        }
        if g >= 1.0 {
            return f64::INFINITY;
        }
        match *self {
            Self::Exponential { rate } => -(-g).ln_1p() / rate,
            Self::Rational { scale } => g / (scale * (1.0 - g)),
        }
    }
}

fn positive(what: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(DdmError::Domain {
            what,
            value,
            constraint: "finite and > 0",
        })
    }
}

/// Closed-form boundary shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParametricBoundary {
    Constant { level: f64 },
    /// level / (1 + rate t)
    Hyperbolic { level: f64, rate: f64 },
    /// level exp(-rate t)
    Exponential { level: f64, rate: f64 },
}

impl ParametricBoundary {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Constant { level } => positive("boundary level", level),
            Self::Hyperbolic { level, rate } | Self::Exponential { level, rate } => {
                positive("boundary level", level)?;
                if rate.is_finite() && rate >= 0.0 {
                    Ok(())
                } else {
                    Err(DdmError::Domain {
                        what: "boundary rate",
                        value: rate,
                        constraint: "finite and >= 0",
                    })
                }
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Self::Constant { level } => level,
            Self::Hyperbolic { level, rate } => level / (1.0 + rate * t),
            Self::Exponential { level, rate } => level * (-rate * t).exp(),
        }
    }

    fn scaled(&self, factor: f64) -> Self {
        match *self {
            Self::Constant { level } => Self::Constant {
                level: level * factor,
            },
            Self::Hyperbolic { level, rate } => Self::Hyperbolic {
                level: level * factor,
                rate,
            },
            Self::Exponential { level, rate } => Self::Exponential {
                level: level * factor,
                rate,
            },
        }
    }
}

impl fmt::Display for ParametricBoundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant { level } => write!(f, "constant:{level}"),
            Self::Hyperbolic { level, rate } => write!(f, "hyperbolic:{level},{rate}"),
            Self::Exponential { level, rate } => write!(f, "exponential:{level},{rate}"),
        }
    }
}

/// Parses `constant:LEVEL`, `hyperbolic:LEVEL,RATE` or `exponential:LEVEL,RATE`.
/// An `UPPER/LOWER` pair is accepted only when both sides agree.
impl FromStr for ParametricBoundary {
    type Err = DdmError;

    fn from_str(s: &str) -> Result<Self> {
        if let Some((upper, lower)) = s.split_once('/') {
            let upper: Self = upper.trim().parse()?;
            let lower: Self = lower.trim().parse()?;
            return if upper == lower {
                Ok(upper)
            } else {
                Err(DdmError::AsymmetricBoundary)
            };
        }
        let bad = || DdmError::InvalidConfig(format!("cannot parse boundary {s:?}"));
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        let nums = args
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let parsed = match (kind.trim(), nums.as_slice()) {
            ("constant", [level]) => Self::Constant { level: *level },
            ("hyperbolic", [level, rate]) => Self::Hyperbolic {
                level: *level,
                rate: *rate,
            },
            ("exponential", [level, rate]) => Self::Exponential {
                level: *level,
                rate: *rate,
            },
            _ => return Err(bad()),
        };
        parsed.validate()?;
        Ok(parsed)
    }
}

/// b(t) = ln(p̂(t) / (1 - p̂(t))) / (2 drift) with p̂ a fitted spline in G(t).
///
/// Outside `support` (a range of G values, normally the span of the data)
/// the boundary continues at its value on the nearest edge.
#[derive(Debug, Clone)]
pub struct SplineBoundary {
    pub model: ChoiceProbabilityModel,
    pub drift: f64,
    pub scale: f64,
}

impl SplineBoundary {
    pub fn raw(&self, t: f64) -> f64 {
        let p = self.model.clamped_probability(t);
        self.scale * log_odds_unchecked(p) / (2.0 * self.drift)
    }
}

/// A boundary given by an arbitrary function of time.
#[derive(Clone)]
pub struct FnBoundary(Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl FnBoundary {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }
}

impl fmt::Debug for FnBoundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnBoundary(..)")
    }
}

/// Symmetric stopping boundary: the process stops once |Z_t| >= b(t).
#[derive(Debug, Clone)]
pub enum Boundary {
    Parametric(ParametricBoundary),
    Spline(Arc<SplineBoundary>),
    Function(FnBoundary),
}

impl Boundary {
    pub fn constant(level: f64) -> Result<Self> {
        Self::parametric(ParametricBoundary::Constant { level })
    }

    pub fn parametric(p: ParametricBoundary) -> Result<Self> {
        p.validate()?;
        Ok(Self::Parametric(p))
    }

    pub fn from_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Function(FnBoundary::new(f))
    }

    /// Signed value before the nonnegativity clip. Only boundaries built
    /// from log-odds can go negative.
    pub fn raw(&self, t: f64) -> f64 {
        match self {
            Self::Parametric(p) => p.eval(t),
            Self::Spline(s) => s.raw(t),
            Self::Function(f) => (f.0)(t),
        }
    }

    /// b(t), clipped at zero.
    pub fn eval(&self, t: f64) -> f64 {
        self.raw(t).max(0.0)
    }

    /// b(k dt) for k = 0..=steps.
    pub fn on_grid(&self, dt: f64, steps: usize) -> Vec<f64> {
        (0..=steps).map(|k| self.eval(k as f64 * dt)).collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Self::Parametric(p) => Self::Parametric(p.scaled(factor)),
            Self::Spline(s) => {
                let mut s = (**s).clone();
                s.scale *= factor;
                Self::Spline(Arc::new(s))
            }
            Self::Function(f) => {
                let f = f.clone();
                Self::from_fn(move |t| factor * (f.0)(t))
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Parametric(p) => p.to_string(),
            Self::Spline(s) => format!("spline(K = {}, drift = {})", s.model.basis().len(), s.drift),
            Self::Function(_) => "function".to_string(),
        }
    }
}

impl From<ParametricBoundary> for Boundary {
    fn from(p: ParametricBoundary) -> Self {
        Self::Parametric(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LOGISTIC_ONE: f64 = 0.731_058_578_630_004_9;

    #[test]
    fn log_odds_examples() {
        assert_eq!(log_odds(0.5).unwrap(), 0.0);
        assert!((log_odds(0.7310586).unwrap() - 1.0).abs() < 1e-6);
        assert!((log_odds(0.2).unwrap() + log_odds(0.8).unwrap()).abs() < 1e-15);
        assert!(log_odds(0.0).is_err());
        assert!(log_odds(1.0).is_err());
        assert!(log_odds(f64::NAN).is_err());
    }

    #[test]
    fn imbalance_examples() {
        assert_eq!(imbalance(0.5).unwrap(), 0.0);
        assert!((imbalance(0.7310586).unwrap() - 0.4621172).abs() < 1e-6);
        assert!((imbalance(0.3).unwrap() - imbalance(0.7).unwrap()).abs() < 1e-15);
        assert!(imbalance(1.2).is_err());
    }

    #[test]
    fn imbalance_matches_kl_form_on_grid() {
        for i in 1..100 {
            let p = i as f64 / 100.0;
            let kl = p * (p / (1.0 - p)).ln() + (1.0 - p) * ((1.0 - p) / p).ln();
            let i_p = imbalance(p).unwrap();
            assert!((i_p - (2.0 * p - 1.0) * log_odds(p).unwrap()).abs() < 1e-12);
            assert!((i_p - kl).abs() < 1e-12);
            assert!((i_p - imbalance(1.0 - p).unwrap()).abs() < 1e-12);
            assert!((log_odds(p).unwrap() + log_odds(1.0 - p).unwrap()).abs() < 1e-12);
            assert!(i_p >= 0.0);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for &p in &[0.1, 0.35, 0.5, 0.62, 0.9] {
            let h = 1e-6;
            let fd = (imbalance_unchecked(p + h) - imbalance_unchecked(p - h)) / (2.0 * h);
            assert!((imbalance_derivative(p) - fd).abs() < 1e-6);
            let fd = (log_odds_unchecked(p + h) - log_odds_unchecked(p - h)) / (2.0 * h);
            assert!((log_odds_derivative(p) - fd).abs() < 1e-5);
        }
    }

    #[test]
    fn transform_round_trip_across_twelve_decades() {
        // Scale parameters keep 1 - G(t) representable over the whole range.
        let transforms = [
            TimeTransform::rational(1e-6).unwrap(),
            TimeTransform::exponential(1e-5).unwrap(),
        ];
        for g in transforms {
            for i in 0..=120 {
                let t = 10f64.powf(-6.0 + i as f64 * 0.1);
                let back = g.inverse(g.forward(t));
                assert!(((back - t) / t).abs() <= 1e-12, "{g:?} t={t} back={back}");
            }
        }
    }

    #[test]
    fn transform_round_trip_at_data_scale() {
        // 1 - G(t) loses relative precision once it nears 1e-4 for the
        // exponential family, so its range stops at ten times the median.
        for (g, top) in [
            (TimeTransform::with_median(TransformFamily::Exponential, 0.8).unwrap(), 70),
            (TimeTransform::with_median(TransformFamily::Rational, 0.8).unwrap(), 80),
        ] {
            for i in 0..=top {
                let t = 10f64.powf(-6.0 + i as f64 * 0.1);
                let back = g.inverse(g.forward(t));
                assert!(((back - t) / t).abs() <= 1e-12, "{g:?} t={t}");
            }
            assert!((g.forward(0.8) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn transform_limits() {
        let g = TimeTransform::exponential(2.0).unwrap();
        assert_eq!(g.forward(0.0), 0.0);
        assert_eq!(g.inverse(0.0), 0.0);
        assert!(g.inverse(1.0).is_infinite());
        assert!(TimeTransform::exponential(0.0).is_err());
        assert!(TimeTransform::rational(-1.0).is_err());
    }

    #[test]
    fn boundary_examples() {
        assert_eq!(Boundary::constant(1.0).unwrap().eval(3.7), 1.0);
        let revealed = Boundary::from_fn(|_| log_odds_unchecked(0.7310586) / (2.0 * 0.5));
        assert!((revealed.eval(2.0) - 1.0).abs() < 1e-6);
        assert!(Boundary::constant(0.0).is_err());
        let negative = Boundary::from_fn(|_| -0.5);
        assert_eq!(negative.eval(1.0), 0.0);
        assert_eq!(negative.raw(1.0), -0.5);
    }

    #[test]
    fn parse_boundary() {
        assert_eq!(
            "constant:1.5".parse::<ParametricBoundary>().unwrap(),
            ParametricBoundary::Constant { level: 1.5 }
        );
        assert_eq!(
            "hyperbolic:2,0.5".parse::<ParametricBoundary>().unwrap(),
            ParametricBoundary::Hyperbolic { level: 2.0, rate: 0.5 }
        );
        assert!(matches!(
            "constant:1/constant:2".parse::<ParametricBoundary>(),
            Err(DdmError::AsymmetricBoundary)
        ));
        assert!("constant:1/constant:1".parse::<ParametricBoundary>().is_ok());
        assert!("constant:-1".parse::<ParametricBoundary>().is_err());
        assert!("wavy:1".parse::<ParametricBoundary>().is_err());
        let b = ParametricBoundary::Exponential { level: 1.25, rate: 0.1 };
        assert_eq!(b.to_string().parse::<ParametricBoundary>().unwrap(), b);
    }

    #[test]
    fn normalization_rescales_drift_and_boundary() {
        let b = Boundary::constant(2.0).unwrap();
        let (params, nb) = DdmParameters::normalize(1.0, 2.0, &b).unwrap();
        assert_eq!(params.drift(), 0.5);
        assert_eq!(params.volatility(), 1.0);
        assert_eq!(nb.eval(0.3), 1.0);
        assert!(DdmParameters::normalize(1.0, 0.0, &b).is_err());
    }

    #[test]
    fn dataset_invariants() {
        assert!(matches!(Dataset::new(vec![]), Err(DdmError::EmptyDataset)));
        assert!(Dataset::from_pairs([(1.0, true), (0.0, false)]).is_err());
        assert!(Dataset::from_pairs([(f64::INFINITY, true)]).is_err());
        assert!(TrialRecord::new(-1.0, true).is_err());
        let d = Dataset::from_pairs([(1.0, true), (2.0, false)]).unwrap();
        assert_eq!(d.mean_time(), 1.5);
        assert_eq!(d.relabeled().choice_rate(), 0.5);
    }

    proptest! {
        #[test]
        fn log_odds_is_antisymmetric(p in 0.001f64..0.999) {
            prop_assert!((log_odds(p).unwrap() + log_odds(1.0 - p).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn logistic_inverts(x in -20f64..20.0) {
            let p = 1.0 / (1.0 + (-x).exp());
            prop_assert!((log_odds(p).unwrap() - x).abs() < 1e-7 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn logistic_constant() {
        assert!((log_odds(LOGISTIC_ONE).unwrap() - 1.0).abs() < 1e-12);
    }
}
