//! Clamped B-spline basis with evenly spaced knots on [0, 1].

use serde::{Deserialize, Serialize};

use crate::error::{DdmError, Result};

/// `k` B-spline functions of the given `order` (degree + 1) on [0, 1].
///
/// The knot vector repeats 0 and 1 `order` times and places `k - order`
/// interior knots evenly, so the basis is a partition of unity on [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineBasis {
    k: usize,
    order: usize,
    knots: Vec<f64>,
}

impl SplineBasis {
    pub fn new(k: usize, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(DdmError::InvalidConfig("spline order must be at least 1".into()));
        }
        if k < order {
            return Err(DdmError::InvalidConfig(format!(
                "number of basis functions K = {k} must be at least the spline order {order}"
            )));
        }
        let interior = k - order;
        let mut knots = Vec::with_capacity(k + order);
        knots.extend(std::iter::repeat_n(0.0, order));
        for i in 1..=interior {
            knots.push(i as f64 / (interior + 1) as f64);
        }
        knots.extend(std::iter::repeat_n(1.0, order));
        Ok(Self { k, order, knots })
    }

    /// Cubic basis with `k` functions.
    pub fn cubic(k: usize) -> Result<Self> {
        Self::new(k, 4)
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    fn span(&self, g: f64) -> usize {
        let degree = self.order - 1;
        let last = self.k - 1;
        if g >= self.knots[last + 1] {
            return last;
        }
        // knots[degree..=last+1] is nondecreasing; find the interval holding g.
        let slice = &self.knots[degree..=last + 1];
        let pos = slice.partition_point(|&u| u <= g);
        (degree + pos.saturating_sub(1)).min(last)
    }

    /// Writes the `order` possibly-nonzero basis values at `g` into `out`
    /// and returns the index of the first one. `g` is clamped to [0, 1].
    pub fn nonzero(&self, g: f64, out: &mut [f64]) -> usize {
        let g = g.clamp(0.0, 1.0);
        let degree = self.order - 1;
        let span = self.span(g);
        let knots = &self.knots;
        out[0] = 1.0;
        let mut left = [0.0; 16];
        let mut right = [0.0; 16];
        debug_assert!(self.order <= 16);
        for j in 1..=degree {
            left[j] = g - knots[span + 1 - j];
            right[j] = knots[span + j] - g;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom == 0.0 { 0.0 } else { out[r] / denom };
                out[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            out[j] = saved;
        }
        span - degree
    }

    /// Dense vector q^K(g).
    pub fn values(&self, g: f64) -> Vec<f64> {
        let mut dense = vec![0.0; self.k];
        self.values_into(g, &mut dense);
        dense
    }

    pub fn values_into(&self, g: f64, dense: &mut [f64]) {
        let mut buf = [0.0; 16];
        dense.iter_mut().for_each(|v| *v = 0.0);
        let first = self.nonzero(g, &mut buf[..self.order]);
        dense[first..first + self.order].copy_from_slice(&buf[..self.order]);
    }

    /// q^K(g)' coefficients.
    pub fn evaluate(&self, g: f64, coefficients: &[f64]) -> f64 {
        let mut buf = [0.0; 16];
        let first = self.nonzero(g, &mut buf[..self.order]);
        buf[..self.order]
            .iter()
            .zip(&coefficients[first..first + self.order])
            .map(|(q, c)| q * c)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity() {
        for (k, order) in [(4, 4), (6, 4), (8, 4), (11, 4), (5, 3), (3, 2), (1, 1), (7, 1)] {
            let basis = SplineBasis::new(k, order).unwrap();
            for i in 0..=2000 {
                let g = i as f64 / 2000.0;
                let q = basis.values(g);
                let sum: f64 = q.iter().sum();
                assert!((sum - 1.0).abs() < 1e-12, "k={k} order={order} g={g} sum={sum}");
                assert!(q.iter().all(|&v| v >= -1e-15));
            }
        }
    }

    #[test]
    fn endpoints_interpolate_first_and_last_coefficients() {
        let basis = SplineBasis::cubic(6).unwrap();
        let coef = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert!((basis.evaluate(0.0, &coef) - 1.0).abs() < 1e-14);
        assert!((basis.evaluate(1.0, &coef) - 6.0).abs() < 1e-14);
    }

    #[test]
    fn reproduces_cubic_polynomials() {
        // Greville abscissae reproduce linear functions exactly.
        let basis = SplineBasis::cubic(8).unwrap();
        let knots = basis.knots();
        let coef: Vec<f64> = (0..8)
            .map(|i| (knots[i + 1] + knots[i + 2] + knots[i + 3]) / 3.0)
            .collect();
        for i in 0..=100 {
            let g = i as f64 / 100.0;
            assert!((basis.evaluate(g, &coef) - g).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_k_below_order() {
        assert!(SplineBasis::new(3, 4).is_err());
        assert!(SplineBasis::new(3, 0).is_err());
    }
}
