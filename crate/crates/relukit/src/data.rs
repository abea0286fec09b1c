//! Labeled samples on the unit sphere and the dataset container.
//!
//! Inputs live on `S^{n-1}`. Construction renormalizes small norm drift
//! (up to 1e-6, with a warning beyond 1e-9) and rejects anything larger, so
//! downstream kernel code can assume unit norm.

use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::util::{fmt_f64, l2_norm};

/// Declared label range of a dataset.
///
/// `ZeroOne` is required by the reliable learners; `Symmetric(r)` covers
/// `[-r, r]` targets such as bounded-network outputs (`Symmetric(1.0)` is the
/// usual `[-1, 1]` agnostic setting).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LabelRange {
    ZeroOne,
    Symmetric(f64),
}

impl LabelRange {
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            LabelRange::ZeroOne => (0.0, 1.0),
            LabelRange::Symmetric(r) => (-r, *r),
        }
    }

    pub fn contains(&self, y: f64) -> bool {
        let (lo, hi) = self.bounds();
        y >= lo && y <= hi
    }

    /// Parse a CLI spelling: `zero-one`, `pm-one`, or `sym:<radius>`.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "zero-one" | "0,1" => Ok(LabelRange::ZeroOne),
            "pm-one" | "-1,1" => Ok(LabelRange::Symmetric(1.0)),
            other => {
                if let Some(r) = other.strip_prefix("sym:") {
                    let radius: f64 = r
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad label range '{other}'")))?;
                    if radius > 0.0 && radius.is_finite() {
                        Ok(LabelRange::Symmetric(radius))
                    } else {
                        Err(Error::InvalidParameter(format!(
                            "label range radius must be positive, got {radius}"
                        )))
                    }
                } else {
                    Err(Error::Parse(format!("unknown label range '{other}'")))
                }
            }
        }
    }
}

impl fmt::Display for LabelRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelRange::ZeroOne => write!(f, "zero-one"),
            LabelRange::Symmetric(r) if *r == 1.0 => write!(f, "pm-one"),
            LabelRange::Symmetric(r) => write!(f, "sym:{r}"),
        }
    }
}

/// A single `(x, y)` pair with `x` on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    x: Vec<f64>,
    y: f64,
}

/// Norm drift beyond this is rejected outright.
pub const NORM_REJECT_TOL: f64 = 1e-6;
/// Norm drift beyond this is renormalized with a warning.
pub const NORM_WARN_TOL: f64 = 1e-9;

impl LabeledSample {
    pub fn new(x: Vec<f64>, y: f64) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidParameter("sample dimension is 0".into()));
        }
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite sample entry".into()));
        }
        let norm = l2_norm(&x);
        let dev = (norm - 1.0).abs();
        if dev > NORM_REJECT_TOL {
            return Err(Error::NotUnitNorm {
                norm,
                tol: NORM_REJECT_TOL,
            });
        }
        let x = if dev > 0.0 {
            if dev > NORM_WARN_TOL {
                log::warn!("renormalizing input with norm {norm}");
            }
            x.into_iter().map(|v| v / norm).collect()
        } else {
            x
        };
        Ok(LabeledSample { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    /// Replace the label; range checks happen at the dataset level.
    pub(crate) fn set_y(&mut self, y: f64) {
        self.y = y;
    }
}

/// Nonempty collection of samples sharing a dimension and a label range.
#[derive(Debug, Clone)]
pub struct Dataset {
    samples: Vec<LabeledSample>,
    n: usize,
    label_range: LabelRange,
}

impl Dataset {
    pub fn new(samples: Vec<LabeledSample>, label_range: LabelRange) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = samples[0].x().len();
        for s in &samples {
            if s.x().len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: s.x().len(),
                });
            }
            if !label_range.contains(s.y()) {
                let (lo, hi) = label_range.bounds();
                return Err(Error::LabelOutOfRange { y: s.y(), lo, hi });
            }
        }
        Ok(Dataset {
            samples,
            n,
            label_range,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn label_range(&self) -> LabelRange {
        self.label_range
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn x(&self, i: usize) -> &[f64] {
        self.samples[i].x()
    }

    pub fn y(&self, i: usize) -> f64 {
        self.samples[i].y()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LabeledSample> {
        self.samples.iter()
    }


    /// Write `x1,...,xn,y` rows with 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.n)
            .map(|i| format!("x{i}"))
            .chain(std::iter::once("y".to_string()))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for s in &self.samples {
            let mut fields: Vec<String> = s.x().iter().map(|&v| fmt_f64(v)).collect();
            fields.push(fmt_f64(s.y()));
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn write_csv_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Read a dataset written by [`Dataset::write_csv`].
    pub fn read_csv<R: std::io::Read>(reader: R, label_range: LabelRange) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let cols = headers.len();
        if cols < 2 || headers.get(cols - 1) != Some("y") {
            return Err(Error::Parse(
                "expected header x1,...,xn,y with a trailing y column".into(),
            ));
        }
        for (i, h) in headers.iter().take(cols - 1).enumerate() {
            if h != format!("x{}", i + 1) {
                return Err(Error::Parse(format!(
                    "unexpected column '{h}' at position {}",
                    i + 1
                )));
            }
        }
        let mut samples = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != cols {
                return Err(Error::Parse(format!(
                    "row has {} fields, expected {cols}",
                    rec.len()
                )));
            }
            let mut vals = Vec::with_capacity(cols);
            for field in rec.iter() {
                vals.push(
                    field
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad float '{field}'")))?,
                );
            }
            let y = vals.pop().unwrap();
            samples.push(LabeledSample::new(vals, y)?);
        }
        Dataset::new(samples, label_range)
    }

    pub fn read_csv_path<P: AsRef<Path>>(path: P, label_range: LabelRange) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(f), label_range)
    }
}
