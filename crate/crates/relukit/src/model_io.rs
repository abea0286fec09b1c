//! Structured-text persistence for trained models and builder networks.
//!
//! Two line-oriented formats, both versioned by a magic first line:
//! `relukit-model v1` stores a kernel expansion (alpha vector, support
//! points, kernel spec, post-processing mode) and `relukit-network v1`
//! stores layer matrices with activation and bounds. Every float is
//! printed with [`fmt_f64`], so a write/read cycle reproduces the exact
//! bits and a reloaded model predicts identically to the original.

use std::io::{Read, Write};
use std::path::Path;

use crate::approx::Activation;
use crate::error::{Error, Result};
use crate::hypothesis::{Hypothesis, Mode};
use crate::kernel::KernelSpec;
use crate::network::{NetworkBounds, ReluNetwork};
use crate::solver::DualSolution;
use crate::util::fmt_f64;

const MODEL_MAGIC: &str = "relukit-model v1";
const NETWORK_MAGIC: &str = "relukit-network v1";

fn join_row(row: &[f64]) -> String {
    row.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(" ")
}

fn parse_float(tok: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::Parse(format!("bad float {tok:?}")))
}

fn parse_count(tok: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| Error::Parse(format!("bad count {tok:?}")))
}

/// Line cursor that keeps the line number for error messages.
struct Cursor<'a> {
    lines: std::str::Lines<'a>,
    at: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor {
            lines: text.lines(),
            at: 0,
        }
    }

    fn next(&mut self) -> Result<&'a str> {
        self.at += 1;
        self.lines
            .next()
            .ok_or_else(|| Error::Parse(format!("line {}: unexpected end of input", self.at)))
    }

    /// Next line split on spaces, with the first token checked against `tag`.
    fn tagged(&mut self, tag: &str) -> Result<Vec<&'a str>> {
        let at = self.at + 1;
        let line = self.next()?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.first() != Some(&tag) {
            return Err(Error::Parse(format!(
                "line {at}: expected {tag:?}, got {line:?}"
            )));
        }
        Ok(toks)
    }

    fn row(&mut self, cols: usize) -> Result<Vec<f64>> {
        let at = self.at + 1;
        let line = self.next()?;
        let row: Vec<f64> = line
            .split_whitespace()
            .map(parse_float)
            .collect::<Result<_>>()?;
        if row.len() != cols {
            return Err(Error::Parse(format!(
                "line {at}: expected {cols} values, got {}",
                row.len()
            )));
        }
        Ok(row)
    }
}

pub fn write_model<W: Write>(h: &Hypothesis, mut out: W) -> Result<()> {
    let dual = h.dual();
    let spec = dual.spec();
    writeln!(out, "{MODEL_MAGIC}")?;
    writeln!(out, "mode {}", h.mode().name())?;
    let (lo, hi) = h.clip_range();
    writeln!(out, "clip {} {}", fmt_f64(lo), fmt_f64(hi))?;
    writeln!(out, "threshold {}", fmt_f64(h.threshold()))?;
    writeln!(out, "kernel degree {} depth {}", spec.degree(), spec.depth())?;
    if let Some(levels) = spec.level_weights() {
        writeln!(out, "levels {}", join_row(levels))?;
    }
    writeln!(out, "bound {}", fmt_f64(dual.bound()))?;
    let m = dual.alpha().len();
    let n = dual.support()[0].len();
    writeln!(out, "size m {m} n {n}")?;
    writeln!(out, "alpha")?;
    for &a in dual.alpha() {
        writeln!(out, "{}", fmt_f64(a))?;
    }
    writeln!(out, "support")?;
    for p in dual.support() {
        writeln!(out, "{}", join_row(p))?;
    }
    writeln!(out, "end")?;
    Ok(())
}

pub fn read_model<R: Read>(mut input: R) -> Result<Hypothesis> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut cur = Cursor::new(&text);
    if cur.next()? != MODEL_MAGIC {
        return Err(Error::Parse("not a relukit model file".into()));
    }

    let toks = cur.tagged("mode")?;
    let mode = Mode::parse(toks.get(1).copied().unwrap_or(""))?;
    let toks = cur.tagged("clip")?;
    if toks.len() != 3 {
        return Err(Error::Parse("clip needs two values".into()));
    }
    let clip = (parse_float(toks[1])?, parse_float(toks[2])?);
    let toks = cur.tagged("threshold")?;
    let threshold = parse_float(toks.get(1).copied().unwrap_or(""))?;

    let toks = cur.tagged("kernel")?;
    if toks.len() != 5 || toks[1] != "degree" || toks[3] != "depth" {
        return Err(Error::Parse(format!("malformed kernel line {toks:?}")));
    }
    let degree = parse_count(toks[2])?;
    let depth = parse_count(toks[4])?;
    let spec = if depth == 1 {
        KernelSpec::plain(degree)
    } else {
        let toks = cur.tagged("levels")?;
        let levels: Vec<f64> = toks[1..]
            .iter()
            .map(|t| parse_float(t))
            .collect::<Result<_>>()?;
        KernelSpec::composed(degree, depth, levels)?
    };

    let toks = cur.tagged("bound")?;
    let bound = parse_float(toks.get(1).copied().unwrap_or(""))?;
    let toks = cur.tagged("size")?;
    if toks.len() != 5 || toks[1] != "m" || toks[3] != "n" {
        return Err(Error::Parse(format!("malformed size line {toks:?}")));
    }
    let m = parse_count(toks[2])?;
    let n = parse_count(toks[4])?;

    cur.tagged("alpha")?;
    let mut alpha = Vec::with_capacity(m);
    for _ in 0..m {
        alpha.push(cur.row(1)?[0]);
    }
    cur.tagged("support")?;
    let mut support = Vec::with_capacity(m);
    for _ in 0..m {
        support.push(cur.row(n)?);
    }
    cur.tagged("end")?;

    let dual = DualSolution::new(alpha, support, spec, bound)?;
    Hypothesis::from_parts(dual, mode, clip, threshold)
}

pub fn write_model_path<P: AsRef<Path>>(h: &Hypothesis, path: P) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_model(h, std::io::BufWriter::new(f))
}

pub fn read_model_path<P: AsRef<Path>>(path: P) -> Result<Hypothesis> {
    let f = std::fs::File::open(path)?;
    read_model(std::io::BufReader::new(f))
}

pub fn write_network<W: Write>(net: &ReluNetwork, mut out: W) -> Result<()> {
    writeln!(out, "{NETWORK_MAGIC}")?;
    writeln!(out, "activation {}", net.activation().name())?;
    let b = net.bounds();
    writeln!(
        out,
        "bounds {} {} {}",
        fmt_f64(b.m0),
        fmt_f64(b.w),
        fmt_f64(b.m)
    )?;
    writeln!(out, "layers {}", net.layers().len())?;
    for (i, layer) in net.layers().iter().enumerate() {
        writeln!(out, "layer {i} {} {}", layer.len(), layer[0].len())?;
        for row in layer {
            writeln!(out, "{}", join_row(row))?;
        }
    }
    writeln!(out, "end")?;
    Ok(())
}

pub fn read_network<R: Read>(mut input: R) -> Result<ReluNetwork> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut cur = Cursor::new(&text);
    if cur.next()? != NETWORK_MAGIC {
        return Err(Error::Parse("not a relukit network file".into()));
    }

    let toks = cur.tagged("activation")?;
    let activation = Activation::parse(toks.get(1).copied().unwrap_or(""))?;
    let toks = cur.tagged("bounds")?;
    if toks.len() != 4 {
        return Err(Error::Parse("bounds needs three values".into()));
    }
    let bounds = NetworkBounds {
        m0: parse_float(toks[1])?,
        w: parse_float(toks[2])?,
        m: parse_float(toks[3])?,
    };
    let toks = cur.tagged("layers")?;
    let count = parse_count(toks.get(1).copied().unwrap_or(""))?;

    let mut layers = Vec::with_capacity(count);
    for i in 0..count {
        let toks = cur.tagged("layer")?;
        if toks.len() != 4 || parse_count(toks[1])? != i {
            return Err(Error::Parse(format!("malformed layer header {toks:?}")));
        }
        let rows = parse_count(toks[2])?;
        let cols = parse_count(toks[3])?;
        let mut layer = Vec::with_capacity(rows);
        for _ in 0..rows {
            layer.push(cur.row(cols)?);
        }
        layers.push(layer);
    }
    cur.tagged("end")?;
    // Validation (shape chaining, bounds) happens in the constructor.
    ReluNetwork::new(layers, activation, bounds)
}

pub fn write_network_path<P: AsRef<Path>>(net: &ReluNetwork, path: P) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_network(net, std::io::BufWriter::new(f))
}

pub fn read_network_path<P: AsRef<Path>>(path: P) -> Result<ReluNetwork> {
    let f = std::fs::File::open(path)?;
    read_network(std::io::BufReader::new(f))
}

/// True when the file starts with the network magic; used by `predict` to
/// dispatch without a flag.
pub fn sniff_network_path<P: AsRef<Path>>(path: P) -> Result<bool> {
    let text = std::fs::read_to_string(path)?;
    Ok(text.starts_with(NETWORK_MAGIC))
}
