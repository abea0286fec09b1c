//! Empirical error functionals for the reliable setting.
//!
//! Reliability splits error in two: `loss_eq0` counts false positives on
//! zero-labeled points, `loss_gt0` averages the loss over the positive
//! part. `loss_eps_zo` is the piecewise-linear surrogate that sits between
//! the zero-one false-positive indicator and the linear constraint slack.

use crate::data::{Dataset, LabelRange};
use crate::error::{Error, Result};
use crate::hypothesis::Hypothesis;
use crate::loss::LossSpec;
use crate::util::csum;

/// `min(max(v, a), b)`.
pub fn clip(v: f64, a: f64, b: f64) -> Result<f64> {
    if a > b {
        return Err(Error::InvalidParameter(format!(
            "clip range [{a}, {b}] is inverted"
        )));
    }
    Ok(clip_unchecked(v, a, b))
}

#[inline]
pub(crate) fn clip_unchecked(v: f64, a: f64, b: f64) -> f64 {
    v.max(a).min(b)
}

fn require_zero_one(data: &Dataset) -> Result<()> {
    if data.label_range() != LabelRange::ZeroOne {
        return Err(Error::WrongLabelRange {
            expected: LabelRange::ZeroOne.to_string(),
            got: data.label_range().to_string(),
        });
    }
    Ok(())
}

/// Fraction of all samples where the hypothesis fires on a zero label.
pub fn loss_eq0(h: &Hypothesis, data: &Dataset) -> Result<f64> {
    require_zero_one(data)?;
    let mut fired = 0usize;
    for i in 0..data.len() {
        if data.y(i) == 0.0 && h.predict(data.x(i))? != 0.0 {
            fired += 1;
        }
    }
    Ok(fired as f64 / data.len() as f64)
}

/// `(1/m) sum_i loss(h(x_i), y_i) 1[y_i > 0]`.
pub fn loss_gt0(h: &Hypothesis, data: &Dataset, loss: &LossSpec) -> Result<f64> {
    require_zero_one(data)?;
    let mut terms = Vec::with_capacity(data.len());
    for i in 0..data.len() {
        if data.y(i) > 0.0 {
            terms.push(loss.evaluate(h.predict(data.x(i))?, data.y(i)));
        }
    }
    Ok(csum(&terms) / data.len() as f64)
}

/// Surrogate false-positive loss: 0 on positives; on zeros it ramps from 0
/// at `y_pred <= eps` to 1 beyond `2 eps`, linearly in between.
pub fn loss_eps_zo(y_pred: f64, y_true: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "surrogate needs eps > 0, got {eps}"
        )));
    }
    if y_true > 0.0 {
        return Ok(0.0);
    }
    Ok(if y_pred <= eps {
        0.0
    } else if y_pred <= 2.0 * eps {
        (y_pred - eps) / eps
    } else {
        1.0
    })
}

/// Mean of the surrogate over a dataset, on the raw (pre-threshold) values.
pub fn surrogate_eq0(h: &Hypothesis, data: &Dataset, eps: f64) -> Result<f64> {
    require_zero_one(data)?;
    let mut terms = Vec::with_capacity(data.len());
    for i in 0..data.len() {
        terms.push(loss_eps_zo(h.raw_predict(data.x(i))?, data.y(i), eps)?);
    }
    Ok(csum(&terms) / data.len() as f64)
}

/// `(1/m) sum_i h(x_i) y_i`; the Bach lane maximizes this.
pub fn empirical_correlation(h: &Hypothesis, data: &Dataset) -> Result<f64> {
    let mut terms = Vec::with_capacity(data.len());
    for i in 0..data.len() {
        terms.push(h.predict(data.x(i))? * data.y(i));
    }
    Ok(csum(&terms) / data.len() as f64)
}
