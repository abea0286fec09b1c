//! Univariate polynomials in the monomial basis.
//!
//! Coefficients are stored low-to-high. Evaluation uses compensated Horner
//! (see [`crate::util::horner_compensated`]): Chebyshev-derived approximants
//! have coefficients growing like `2^degree`, and the extra precision is what
//! keeps grid certification meaningful into degrees around one hundred.

use crate::error::{Error, Result};
use crate::util::horner_compensated;

#[derive(Debug, Clone, PartialEq)]
pub struct UnivariatePoly {
    coeffs: Vec<f64>,
}

impl UnivariatePoly {
    /// Build from low-to-high coefficients; trailing zeros are trimmed but a
    /// constant zero polynomial keeps one entry.
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter("empty coefficient list".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coefficient".into()));
        }
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        Ok(UnivariatePoly { coeffs })
    }

    pub fn zero() -> Self {
        UnivariatePoly { coeffs: vec![0.0] }
    }

    /// The identity polynomial `t`.
    pub fn identity() -> Self {
        UnivariatePoly {
            coeffs: vec![0.0, 1.0],
        }
    }

    pub fn constant(c: f64) -> Self {
        UnivariatePoly { coeffs: vec![c] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        horner_compensated(&self.coeffs, x)
    }

    /// Coefficient weight `sum_i beta_i^2`.
    pub fn weight(&self) -> f64 {
        let sq: Vec<f64> = self.coeffs.iter().map(|c| c * c).collect();
        crate::util::csum(&sq)
    }

    /// Level-weight `sum_i 2^i beta_i^2`, the quantity composed kernels track.
    pub fn weight2(&self) -> f64 {
        let sq: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| 2f64.powi(i as i32) * c * c)
            .collect();
        crate::util::csum(&sq)
    }

    /// Per-power values `2^i beta_i^2` (the `weight2` summands).
    pub fn level_weights(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| 2f64.powi(i as i32) * c * c)
            .collect()
    }
}

/// Rescale an approximation from `[-1, 1]` to `[-radius, radius]`:
/// `q(t) = radius * p(t / radius)`.
///
/// If `p` tracks a positively homogeneous target (ReLU, identity) to error
/// `eps` on `[-1, 1]`, then `q` tracks it to `radius * eps` on the scaled
/// interval. Coefficient weight grows by at most `radius^2`.
pub fn scale_for_radius(p: &UnivariatePoly, radius: f64) -> Result<UnivariatePoly> {
    if !(radius >= 1.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "scale radius must be >= 1, got {radius}"
        )));
    }
    let coeffs = p
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, &c)| c * radius.powi(1 - i as i32))
        .collect();
    UnivariatePoly::new(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_degree_eval_is_exact() {
        let c = UnivariatePoly::constant(2.5);
        assert_eq!(c.eval(123.0), 2.5);
        let lin = UnivariatePoly::new(vec![1.0, -3.0]).unwrap();
        assert_eq!(lin.eval(0.5), -0.5);
        assert_eq!(lin.degree(), 1);
    }

    #[test]
    fn trailing_zeros_trimmed() {
        let p = UnivariatePoly::new(vec![1.0, 2.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.degree(), 1);
        let z = UnivariatePoly::new(vec![0.0, 0.0]).unwrap();
        assert_eq!(z.degree(), 0);
        assert_eq!(z.eval(7.0), 0.0);
    }

    #[test]
    fn weight_and_level_weight() {
        let p = UnivariatePoly::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(p.weight(), 1.0 + 4.0 + 9.0);
        assert_eq!(p.weight2(), 1.0 + 2.0 * 4.0 + 4.0 * 9.0);
        // weight2 <= 2^d * weight always.
        assert!(p.weight2() <= 4.0 * p.weight());
    }

    #[test]
    fn scale_identity_radius_one() {
        let p = UnivariatePoly::new(vec![0.3, -1.0, 2.0]).unwrap();
        let q = scale_for_radius(&p, 1.0).unwrap();
        assert_eq!(q, p);
    }

    #[test]
    fn scale_linear_is_invariant() {
        let p = UnivariatePoly::identity();
        let q = scale_for_radius(&p, 3.0).unwrap();
        assert_eq!(q.coeffs(), &[0.0, 1.0]);
    }

    #[test]
    fn scale_square_halves_at_radius_two() {
        let p = UnivariatePoly::new(vec![0.0, 0.0, 1.0]).unwrap();
        let q = scale_for_radius(&p, 2.0).unwrap();
        assert_eq!(q.coeffs(), &[0.0, 0.0, 0.5]);
        // q(t) = t^2 / 2 = 2 * (t/2)^2.
        assert_eq!(q.eval(2.0), 2.0);
    }

    #[test]
    fn scale_weight_bound() {
        let p = UnivariatePoly::new(vec![0.5, 1.5, -2.0, 0.25]).unwrap();
        for r in [1.0, 2.0, 5.0] {
            let q = scale_for_radius(&p, r).unwrap();
            assert!(q.weight() <= r * r * p.weight() + 1e-12);
        }
    }

    #[test]
    fn scale_rejects_small_radius() {
        let p = UnivariatePoly::identity();
        assert!(scale_for_radius(&p, 0.5).is_err());
    }
}
