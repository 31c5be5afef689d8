//! Population-level identification: average imbalance, time and choice
//! probability; the revealed drift and boundary they determine; and
//! cross-menu consistency checks for several pairs of alternatives.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{DdmError, Result};
use crate::estimator::EstimationResult;
use crate::model::{imbalance_unchecked, log_odds_unchecked, Boundary};

pub type ProbabilityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Distribution of decision times to integrate against.
#[derive(Debug, Clone)]
pub enum TimeDistribution {
    /// Sample of observed times, each with weight 1/n.
    Empirical(Vec<f64>),
    /// Point masses `(t, weight)`; weights are normalized.
    Discrete(Vec<(f64, f64)>),
    /// Density on [lo, hi], integrated by composite Simpson's rule.
    Density {
        pdf: fn(f64) -> f64,
        lo: f64,
        hi: f64,
        intervals: usize,
    },
}

impl TimeDistribution {
    pub fn point_mass(t: f64) -> Self {
        Self::Discrete(vec![(t, 1.0)])
    }

    fn nodes(&self) -> Vec<(f64, f64)> {
        match self {
            Self::Empirical(ts) => {
                let w = 1.0 / ts.len() as f64;
                ts.iter().map(|&t| (t, w)).collect()
            }
            Self::Discrete(pts) => {
                let total: f64 = pts.iter().map(|p| p.1).sum();
                pts.iter().map(|&(t, w)| (t, w / total)).collect()
            }
            Self::Density {
                pdf,
                lo,
                hi,
                intervals,
            } => {
                let m = (*intervals).max(2) & !1;
                let h = (hi - lo) / m as f64;
                (0..=m)
                    .map(|i| {
                        let t = lo + i as f64 * h;
                        let c = if i == 0 || i == m {
                            1.0
                        } else if i % 2 == 1 {
                            4.0
                        } else {
                            2.0
                        };
                        (t, c * h / 3.0 * pdf(t))
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub mean_imbalance: f64,
    pub mean_time: f64,
    pub mean_choice_prob: f64,
}

/// (Ī, T̄, p̄) = (∫ I(p(t)) dF, ∫ t dF, ∫ p(t) dF).
pub fn average_quantities(p: &dyn Fn(f64) -> f64, dist: &TimeDistribution) -> Result<Averages> {
    let nodes = dist.nodes();
    if nodes.is_empty() {
        return Err(DdmError::EmptyDataset);
    }
    let mut acc = Averages {
        mean_imbalance: 0.0,
        mean_time: 0.0,
        mean_choice_prob: 0.0,
    };
    for (t, w) in nodes {
        if w == 0.0 {
            continue;
        }
        let pt = p(t);
        let it = if pt > 0.0 && pt < 1.0 {
            imbalance_unchecked(pt)
        } else {
            f64::NAN
        };
        for value in [pt, it, t] {
            if !value.is_finite() {
                return Err(DdmError::NonFinite { t, value });
            }
        }
        acc.mean_imbalance += w * it;
        acc.mean_time += w * t;
        acc.mean_choice_prob += w * pt;
    }
    Ok(acc)
}

/// δ̃ = sqrt(Ī / (2T̄)).
pub fn revealed_drift(mean_imbalance: f64, mean_time: f64) -> Result<f64> {
    if !(mean_time > 0.0 && mean_time.is_finite()) {
        return Err(DdmError::Domain {
            what: "mean_time",
            value: mean_time,
            constraint: "> 0",
        });
    }
    if !(mean_imbalance >= 0.0) {
        return Err(DdmError::Domain {
            what: "mean_imbalance",
            value: mean_imbalance,
            constraint: ">= 0",
        });
    }
    Ok((mean_imbalance / (2.0 * mean_time)).sqrt())
}

/// Where on a grid the revealed boundary went negative.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundarySign {
    pub negative_at: Vec<f64>,
}

impl BoundarySign {
    pub fn is_nonnegative(&self) -> bool {
        self.negative_at.is_empty()
    }
}

/// b̃(t) = ln(p(t)/(1 - p(t))) / (2δ̃). Negative values are kept in
/// [`Boundary::raw`] and listed for the points of `grid` where they occur.
pub fn revealed_boundary(p: ProbabilityFn, drift: f64, grid: &[f64]) -> Result<(Boundary, BoundarySign)> {
    if !(drift > 0.0 && drift.is_finite()) {
        return Err(DdmError::UndefinedBoundary);
    }
    let boundary = Boundary::from_fn(move |t| log_odds_unchecked(p(t)) / (2.0 * drift));
    let negative_at = grid.iter().copied().filter(|&t| boundary.raw(t) < 0.0).collect();
    Ok((boundary, BoundarySign { negative_at }))
}

#[derive(Debug, Clone)]
pub struct RevealedQuantities {
    pub revealed_drift: f64,
    pub revealed_boundary: Boundary,
    pub mean_imbalance: f64,
    pub mean_time: f64,
    /// Under the labelling where the first alternative is chosen weakly
    /// more often.
    pub mean_choice_prob: f64,
    /// True when the input had p̄ < 1/2 and the alternatives were swapped.
    pub relabeled: bool,
    pub sign: BoundarySign,
}

impl RevealedQuantities {
    pub fn signed_drift(&self) -> f64 {
        if self.relabeled {
            -self.revealed_drift
        } else {
            self.revealed_drift
        }
    }
}

/// Revealed drift and boundary of a stochastic choice function (p, F).
pub fn reveal(p: ProbabilityFn, dist: &TimeDistribution, grid: &[f64]) -> Result<RevealedQuantities> {
    let averages = average_quantities(p.as_ref(), dist)?;
    let relabeled = averages.mean_choice_prob < 0.5;
    let p: ProbabilityFn = if relabeled {
        Arc::new(move |t| 1.0 - p(t))
    } else {
        p
    };
    let drift = revealed_drift(averages.mean_imbalance, averages.mean_time)?;
    let (boundary, sign) = revealed_boundary(p, drift, grid)?;
    Ok(RevealedQuantities {
        revealed_drift: drift,
        revealed_boundary: boundary,
        mean_imbalance: averages.mean_imbalance,
        mean_time: averages.mean_time,
        mean_choice_prob: if relabeled {
            1.0 - averages.mean_choice_prob
        } else {
            averages.mean_choice_prob
        },
        relabeled,
        sign,
    })
}

/// Drift (signed under the key's labelling) and boundary of one pair.
#[derive(Debug, Clone)]
pub struct PairEstimate {
    pub signed_drift: f64,
    pub boundary: Boundary,
}

impl From<&RevealedQuantities> for PairEstimate {
    fn from(r: &RevealedQuantities) -> Self {
        Self {
            signed_drift: r.signed_drift(),
            boundary: r.revealed_boundary.clone(),
        }
    }
}

impl From<&EstimationResult> for PairEstimate {
    fn from(r: &EstimationResult) -> Self {
        Self {
            signed_drift: r.signed_drift(),
            boundary: r.boundary_hat.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleDiagnostic {
    /// (x, y, z); drifts are read as δ^{xy}, δ^{yz}, δ^{xz}.
    pub alternatives: (String, String, String),
    /// δ^{xy} + δ^{yz} - δ^{xz}.
    pub drift_residual: f64,
    pub drift_flagged: bool,
    /// Largest sup-norm distance between any two of the three boundaries.
    pub boundary_discrepancy: f64,
    pub boundary_flagged: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MenuReport {
    pub triples: Vec<TripleDiagnostic>,
    /// Triples skipped because one of their pairs is missing.
    pub skipped: Vec<String>,
}

fn lookup<'a>(
    pairs: &'a BTreeMap<(String, String), PairEstimate>,
    a: &str,
    b: &str,
) -> Option<(f64, &'a Boundary)> {
    if let Some(p) = pairs.get(&(a.to_string(), b.to_string())) {
        return Some((p.signed_drift, &p.boundary));
    }
    pairs
        .get(&(b.to_string(), a.to_string()))
        .map(|p| (-p.signed_drift, &p.boundary))
}

/// Checks that all pairs share one boundary and that drifts are additive
/// across every triple of alternatives. Descriptive only.
pub fn menu_consistency(
    pairs: &BTreeMap<(String, String), PairEstimate>,
    grid: &[f64],
    tol_boundary: f64,
    tol_drift: f64,
) -> MenuReport {
    let alternatives: BTreeSet<&str> = pairs
        .keys()
        .flat_map(|(a, b)| [a.as_str(), b.as_str()])
        .collect();
    let alts: Vec<&str> = alternatives.into_iter().collect();
    let mut report = MenuReport::default();
    for i in 0..alts.len() {
        for j in i + 1..alts.len() {
            for k in j + 1..alts.len() {
                let (x, y, z) = (alts[i], alts[j], alts[k]);
                let present = [(x, y), (y, z), (x, z)].map(|(a, b)| lookup(pairs, a, b));
                let [Some(xy), Some(yz), Some(xz)] = present else {
                    let any = present.iter().filter(|p| p.is_some()).count();
                    if any >= 2 {
                        report.skipped.push(format!("({x}, {y}, {z}): missing pair"));
                    }
                    continue;
                };
                let drift_residual = xy.0 + yz.0 - xz.0;
                let boundaries = [xy.1, yz.1, xz.1];
                let mut discrepancy = 0.0_f64;
                for &t in grid {
                    let v = boundaries.map(|b| b.raw(t));
                    for a in 0..3 {
                        for b in a + 1..3 {
                            discrepancy = discrepancy.max((v[a] - v[b]).abs());
                        }
                    }
                }
                report.triples.push(TripleDiagnostic {
                    alternatives: (x.to_string(), y.to_string(), z.to_string()),
                    drift_residual,
                    drift_flagged: drift_residual.abs() > tol_drift,
                    boundary_discrepancy: discrepancy,
                    boundary_flagged: discrepancy > tol_boundary,
                });
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::ConstantBoundaryOracle;

    fn constant_p(p: f64) -> ProbabilityFn {
        Arc::new(move |_| p)
    }

    #[test]
    fn average_examples() {
        let a = average_quantities(&|_| 0.5, &TimeDistribution::Empirical(vec![0.3, 1.0, 2.0])).unwrap();
        assert_eq!(a.mean_imbalance, 0.0);

        let a = average_quantities(&|_| 0.7310586, &TimeDistribution::point_mass(0.9242343)).unwrap();
        assert!((a.mean_imbalance - 0.4621172).abs() < 1e-6);
        assert!((a.mean_time - 0.9242343).abs() < 1e-12);
        assert!((a.mean_choice_prob - 0.7310586).abs() < 1e-12);

        let a = average_quantities(&|_| 0.5, &TimeDistribution::Empirical(vec![1.0, 2.0])).unwrap();
        assert_eq!(a.mean_time, 1.5);
        assert_eq!(a.mean_choice_prob, 0.5);
    }

    #[test]
    fn nonfinite_integrand_reports_time() {
        let err = average_quantities(&|t| if t > 1.5 { 1.0 } else { 0.6 }, &TimeDistribution::Empirical(vec![1.0, 2.0]))
            .unwrap_err();
        assert!(matches!(err, DdmError::NonFinite { t, .. } if t == 2.0));
    }

    #[test]
    fn density_quadrature() {
        fn exp_pdf(t: f64) -> f64 {
            (-t).exp()
        }
        let d = TimeDistribution::Density {
            pdf: exp_pdf,
            lo: 0.0,
            hi: 40.0,
            intervals: 4000,
        };
        let a = average_quantities(&|_| 0.6, &d).unwrap();
        assert!((a.mean_time - 1.0).abs() < 1e-8);
        assert!((a.mean_choice_prob - 0.6).abs() < 1e-8);
    }

    #[test]
    fn revealed_drift_examples() {
        assert_eq!(revealed_drift(0.0, 1.0).unwrap(), 0.0);
        assert!((revealed_drift(0.4621172, 0.9242343).unwrap() - 0.5).abs() < 1e-6);
        let a = revealed_drift(0.3, 0.7).unwrap();
        let b = revealed_drift(0.3, 2.8).unwrap();
        assert!((a - 2.0 * b).abs() < 1e-15);
        assert!(revealed_drift(0.3, 0.0).is_err());
    }

    #[test]
    fn revealed_boundary_examples() {
        let grid = [0.1, 1.0, 5.0];
        let (b, sign) = revealed_boundary(constant_p(0.7310586), 0.5, &grid).unwrap();
        assert!((b.eval(1.0) - 1.0).abs() < 1e-6);
        assert!(sign.is_nonnegative());

        let p: ProbabilityFn = Arc::new(|t| 0.4 + 0.1 * t);
        let (b, sign) = revealed_boundary(p.clone(), 0.3, &[0.5, 1.0, 2.0]).unwrap();
        assert!(b.raw(1.0).abs() < 1e-12);
        assert_eq!(sign.negative_at, vec![0.5]);
        let (b2, _) = revealed_boundary(p, 0.6, &[]).unwrap();
        assert!((b.raw(2.0) - 2.0 * b2.raw(2.0)).abs() < 1e-12);

        assert!(matches!(
            revealed_boundary(constant_p(0.6), 0.0, &grid),
            Err(DdmError::UndefinedBoundary)
        ));
    }

    #[test]
    fn population_round_trip_recovers_constant_ddm() {
        for &drift in &[0.1, 0.25, 0.5, 1.0, 2.0] {
            for &level in &[0.25, 0.5, 1.0, 2.0, 3.0] {
                let o = ConstantBoundaryOracle::new(drift, level).unwrap();
                let p = o.choice_probability();
                let mean_time = o.mean_hitting_time().unwrap();
                let r = reveal(constant_p(p), &TimeDistribution::point_mass(mean_time), &[1.0]).unwrap();
                assert!((r.revealed_drift - drift).abs() < 1e-9, "δ={drift} b={level}");
                assert!((r.revealed_boundary.eval(0.7) - level).abs() < 1e-9);
                assert!(!r.relabeled);
            }
        }
    }

    #[test]
    fn relabels_when_second_alternative_dominates() {
        let o = ConstantBoundaryOracle::new(0.5, 1.0).unwrap();
        let p = 1.0 - o.choice_probability();
        let r = reveal(constant_p(p), &TimeDistribution::point_mass(o.mean_hitting_time().unwrap()), &[]).unwrap();
        assert!(r.relabeled);
        assert!(r.mean_choice_prob >= 0.5);
        assert!((r.signed_drift() + 0.5).abs() < 1e-9);
    }

    fn pair(drift: f64, level: f64) -> PairEstimate {
        let o = ConstantBoundaryOracle::new(drift.abs(), level).unwrap();
        let p = o.choice_probability();
        let p = if drift < 0.0 { 1.0 - p } else { p };
        let r = reveal(constant_p(p), &TimeDistribution::point_mass(o.mean_hitting_time().unwrap()), &[]).unwrap();
        PairEstimate::from(&r)
    }

    fn key(a: &str, b: &str) -> (String, String) {
        (a.to_string(), b.to_string())
    }

    #[test]
    fn menu_single_pair_is_empty() {
        let mut pairs = BTreeMap::new();
        pairs.insert(key("x", "y"), pair(0.3, 1.0));
        let r = menu_consistency(&pairs, &[1.0], 0.1, 0.1);
        assert!(r.triples.is_empty());
    }

    #[test]
    fn menu_consistent_triple() {
        let mut pairs = BTreeMap::new();
        pairs.insert(key("x", "y"), pair(0.3, 1.0));
        pairs.insert(key("y", "z"), pair(0.2, 1.0));
        pairs.insert(key("z", "x"), pair(-0.5, 1.0));
        let r = menu_consistency(&pairs, &[0.5, 1.0, 2.0], 0.05, 0.05);
        assert_eq!(r.triples.len(), 1);
        let t = &r.triples[0];
        assert!(t.drift_residual.abs() < 1e-9);
        assert!(t.boundary_discrepancy < 1e-9);
        assert!(!t.drift_flagged && !t.boundary_flagged);
    }

    #[test]
    fn menu_flags_different_boundaries() {
        let mut pairs = BTreeMap::new();
        pairs.insert(key("x", "y"), pair(0.3, 1.0));
        pairs.insert(key("y", "z"), pair(0.2, 1.0));
        pairs.insert(key("x", "z"), pair(0.5, 2.0));
        let r = menu_consistency(&pairs, &[0.5, 1.0], 0.1, 0.05);
        let t = &r.triples[0];
        assert!((t.boundary_discrepancy - 1.0).abs() < 1e-9);
        assert!(t.boundary_flagged);
    }

    #[test]
    fn menu_skips_incomplete_triples() {
        let mut pairs = BTreeMap::new();
        pairs.insert(key("x", "y"), pair(0.3, 1.0));
        pairs.insert(key("y", "z"), pair(0.2, 1.0));
        let r = menu_consistency(&pairs, &[1.0], 0.1, 0.1);
        assert!(r.triples.is_empty());
        assert_eq!(r.skipped.len(), 1);
    }
}
