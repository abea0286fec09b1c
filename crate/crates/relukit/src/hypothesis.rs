//! Predictors wrapped around a kernel expansion.
//!
//! The raw expansion `f` is post-processed per lane: the reliable learner
//! clips into `[0, 1]` and zeroes anything at or below the `2 eps`
//! threshold, the agnostic lane only clips, the correlation lane returns
//! `f` untouched.

use crate::error::{Error, Result};
use crate::metrics::clip_unchecked;
use crate::solver::DualSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    ReliableThreshold,
    ClipOnly,
    Raw,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::ReliableThreshold => "reliable-threshold",
            Mode::ClipOnly => "clip-only",
            Mode::Raw => "raw",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "reliable-threshold" => Ok(Mode::ReliableThreshold),
            "clip-only" => Ok(Mode::ClipOnly),
            "raw" => Ok(Mode::Raw),
            other => Err(Error::Parse(format!("unknown hypothesis mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Hypothesis {
    dual: DualSolution,
    mode: Mode,
    clip_range: (f64, f64),
    threshold: f64,
}

impl Hypothesis {
    /// Clip to `[0, 1]`, then report 0 at or below the `2 eps` cutoff.
    pub fn reliable(dual: DualSolution, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "reliable threshold needs eps > 0, got {eps}"
            )));
        }
        Ok(Hypothesis {
            dual,
            mode: Mode::ReliableThreshold,
            clip_range: (0.0, 1.0),
            threshold: 2.0 * eps,
        })
    }

    pub fn clipped(dual: DualSolution, lo: f64, hi: f64) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidParameter(format!(
                "clip range [{lo}, {hi}] is inverted"
            )));
        }
        Ok(Hypothesis {
            dual,
            mode: Mode::ClipOnly,
            clip_range: (lo, hi),
            threshold: 0.0,
        })
    }

    pub fn raw(dual: DualSolution) -> Self {
        Hypothesis {
            dual,
            mode: Mode::Raw,
            clip_range: (f64::NEG_INFINITY, f64::INFINITY),
            threshold: 0.0,
        }
    }

    /// Rebuild from serialized parts; validates the mode/range pairing.
    pub fn from_parts(
        dual: DualSolution,
        mode: Mode,
        clip_range: (f64, f64),
        threshold: f64,
    ) -> Result<Self> {
        match mode {
            Mode::ReliableThreshold => Hypothesis::reliable(dual, threshold / 2.0),
            Mode::ClipOnly => Hypothesis::clipped(dual, clip_range.0, clip_range.1),
            Mode::Raw => Ok(Hypothesis::raw(dual)),
        }
    }

    pub fn dual(&self) -> &DualSolution {
        &self.dual
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn clip_range(&self) -> (f64, f64) {
        self.clip_range
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// The kernel expansion before any clipping or thresholding.
    pub fn raw_predict(&self, x: &[f64]) -> Result<f64> {
        self.dual.predict(x)
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let f = self.dual.predict(x)?;
        Ok(match self.mode {
            Mode::Raw => f,
            Mode::ClipOnly => clip_unchecked(f, self.clip_range.0, self.clip_range.1),
            Mode::ReliableThreshold => {
                let c = clip_unchecked(f, self.clip_range.0, self.clip_range.1);
                if c <= self.threshold {
                    0.0
                } else {
                    c
                }
            }
        })
    }
}
