//! Loss registry.
//!
//! A [`LossSpec`] carries the constants the solver and the sample-size bound
//! need (Lipschitz constant and value bound on a declared prediction
//! interval) together with the structural flags the pipelines check:
//! convexity, and monotonicity in the sense that moving a prediction toward
//! the label from either side never increases the loss. The correlation loss
//! `-y' * y` is convex but not monotone, which is exactly why the thresholded
//! reliable path refuses it.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Squared,
    Absolute,
    Correlation,
}

/// A loss together with its declared analytic constants.
#[derive(Debug, Clone)]
pub struct LossSpec {
    kind: LossKind,
    name: String,
    /// Prediction interval `[u, v]` on which `lipschitz` and `bound` hold.
    interval: (f64, f64),
    lipschitz: f64,
    bound: f64,
    monotone: bool,
    convex: bool,
}

impl LossSpec {
    /// Squared loss `(y' - y)^2` with predictions and labels in `[lo, hi]`.
    pub fn squared(lo: f64, hi: f64) -> Result<Self> {
        check_interval(lo, hi)?;
        Ok(LossSpec {
            kind: LossKind::Squared,
            name: "squared".into(),
            interval: (lo, hi),
            lipschitz: 2.0 * (hi - lo),
            bound: (hi - lo) * (hi - lo),
            monotone: true,
            convex: true,
        })
    }

    /// Absolute loss `|y' - y|` with predictions and labels in `[lo, hi]`.
    pub fn absolute(lo: f64, hi: f64) -> Result<Self> {
        check_interval(lo, hi)?;
        Ok(LossSpec {
            kind: LossKind::Absolute,
            name: "absolute".into(),
            interval: (lo, hi),
            lipschitz: 1.0,
            bound: hi - lo,
            monotone: true,
            convex: true,
        })
    }

    /// Correlation loss `-y' * y` for labels in `[-1, 1]` and predictions in
    /// `[-radius, radius]`. Linear, hence convex, but not monotone: pushing a
    /// prediction past its label keeps decreasing the loss.
    pub fn correlation(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "correlation radius must be positive, got {radius}"
            )));
        }
        Ok(LossSpec {
            kind: LossKind::Correlation,
            name: "correlation".into(),
            interval: (-radius, radius),
            lipschitz: 1.0,
            bound: radius,
            monotone: false,
            convex: true,
        })
    }

    /// Look up a loss by CLI name on the given prediction interval.
    pub fn by_name(name: &str, lo: f64, hi: f64) -> Result<Self> {
        match name {
            "squared" => Self::squared(lo, hi),
            "absolute" => Self::absolute(lo, hi),
            "correlation" => Self::correlation(hi.abs().max(lo.abs())),
            other => Err(Error::Parse(format!("unknown loss '{other}'"))),
        }
    }

    pub fn evaluate(&self, y_pred: f64, y_true: f64) -> f64 {
        match self.kind {
            LossKind::Squared => (y_pred - y_true) * (y_pred - y_true),
            LossKind::Absolute => (y_pred - y_true).abs(),
            LossKind::Correlation => -y_pred * y_true,
        }
    }

    /// A subgradient of `l(., y_true)` at `y_pred`.
    pub fn subgradient(&self, y_pred: f64, y_true: f64) -> f64 {
        match self.kind {
            LossKind::Squared => 2.0 * (y_pred - y_true),
            LossKind::Absolute => {
                if y_pred > y_true {
                    1.0
                } else if y_pred < y_true {
                    -1.0
                } else {
                    0.0
                }
            }
            LossKind::Correlation => -y_true,
        }
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }
}

fn check_interval(lo: f64, hi: f64) -> Result<()> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "invalid loss interval [{lo}, {hi}]"
        )));
    }
    Ok(())
}
