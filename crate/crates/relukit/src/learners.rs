//! End-to-end learning pipelines.
//!
//! Each learner picks a degree and norm budget from a certified activation
//! approximant, hands the resulting kernel program to the solver, and wraps
//! the expansion in the right output mode. The polynomial lane can also
//! read its own coefficients back out (proper learning).

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::approx::{
    approx_relu, approx_relu_scaled, approx_sigmoid, approx_sigmoid_scaled, Activation,
    ApproxOpts,
};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::hypothesis::Hypothesis;
use crate::kernel::KernelSpec;
use crate::loss::LossSpec;
use crate::solver::{solve_norm_ball, solve_reliable, DualSolution, SolveOpts, SolveReport};
use crate::util::csum;

/// Shape of the target network class: `depth` hidden layers, per-layer
/// weight norm bound `weight_bound`, per-unit output bound `output_bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkArch {
    pub depth: usize,
    pub weight_bound: f64,
    pub output_bound: f64,
}

impl NetworkArch {
    pub fn new(depth: usize, weight_bound: f64, output_bound: f64) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidParameter("network depth must be >= 1".into()));
        }
        if !(weight_bound > 0.0) || !(output_bound > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "weight and output bounds must be positive, got W={weight_bound} M={output_bound}"
            )));
        }
        Ok(NetworkArch {
            depth,
            weight_bound,
            output_bound,
        })
    }
}

/// Output of the reliable lane: thresholded hypothesis plus the pipeline
/// parameters it was built from.
#[derive(Debug, Clone)]
pub struct ReliableReluModel {
    pub hypothesis: Hypothesis,
    pub eps: f64,
    pub b: f64,
    pub d: usize,
    pub report: SolveReport,
}

/// Output of the agnostic polynomial lane.
#[derive(Debug, Clone)]
pub struct PolynomialModel {
    pub hypothesis: Hypothesis,
    pub degree: usize,
    pub b: f64,
    pub report: SolveReport,
    /// Monomial coefficients `beta(I)`, once extracted.
    pub proper_coeffs: Option<BTreeMap<Vec<u32>, f64>>,
}

/// Reliable ReLU learning: certified approximant fixes `(d, B)`, the
/// constrained solve keeps the expansion at most `eps` on zero-labeled
/// points, and the hypothesis thresholds at `2 eps`.
pub fn learn_relu_reliable(
    data: &Dataset,
    loss: &LossSpec,
    eps: f64,
    delta: f64,
    opts: &SolveOpts,
) -> Result<ReliableReluModel> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < eps < 1, got {eps}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < delta < 1, got {delta}"
        )));
    }
    if !loss.is_monotone() {
        return Err(Error::NonMonotoneLoss(loss.name().to_string()));
    }
    let (lo, hi) = loss.interval();
    if lo > 0.0 || hi < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "loss interval [{lo}, {hi}] does not cover [0, 1]"
        )));
    }
    let (_, cert) = approx_relu(eps)?;
    let spec = KernelSpec::plain(cert.degree);
    let recommended = sample_size(eps, delta, cert.degree, cert.weight, loss.lipschitz(), loss.bound())?;
    if (data.len() as u64) < recommended {
        log::info!(
            "reliable fit on m={} below the guideline m={recommended} for eps={eps}, delta={delta}",
            data.len()
        );
    }
    let (dual, report) = solve_reliable(data, loss, &spec, cert.weight, eps, opts)?;
    Ok(ReliableReluModel {
        hypothesis: Hypothesis::reliable(dual, eps)?,
        eps,
        b: cert.weight,
        d: cert.degree,
        report,
    })
}

/// Agnostic polynomial regression over the degree-`d` ball of radius
/// `sqrt(B)`, clipped into `[-1, 1]`.
pub fn learn_poly_agnostic(
    data: &Dataset,
    loss: &LossSpec,
    d: usize,
    b: f64,
    opts: &SolveOpts,
) -> Result<PolynomialModel> {
    if !loss.is_monotone() {
        return Err(Error::NonMonotoneLoss(loss.name().to_string()));
    }
    let (lo, hi) = data.label_range().bounds();
    if lo < -1.0 - 1e-12 || hi > 1.0 + 1e-12 {
        return Err(Error::WrongLabelRange {
            expected: "labels within [-1, 1]".into(),
            got: data.label_range().to_string(),
        });
    }
    let spec = KernelSpec::plain(d);
    let (dual, report) = if b == 0.0 {
        // Degenerate ball: alpha = 0 is the only point.
        let alpha = vec![0.0; data.len()];
        let support: Vec<Vec<f64>> = data.samples().iter().map(|s| s.x().to_vec()).collect();
        let dual = DualSolution::new(alpha, support, spec.clone(), 0.0)?;
        let terms: Vec<f64> = (0..data.len())
            .map(|i| loss.evaluate(0.0, data.y(i)))
            .collect();
        let report = SolveReport {
            objective: csum(&terms),
            iterations: 0,
            max_constraint_violation: 0.0,
            norm_used: 0.0,
            converged: true,
            seed: opts.seed,
        };
        (dual, report)
    } else {
        solve_norm_ball(data, loss, &spec, b, opts)?
    };
    Ok(PolynomialModel {
        hypothesis: Hypothesis::clipped(dual, -1.0, 1.0)?,
        degree: d,
        b,
        report,
        proper_coeffs: None,
    })
}

/// `(sum i_j)! / prod i_j!`: ordered tuples collapsing to this exponent.
pub fn multinomial_count(exponent: &[u32]) -> BigUint {
    let mut result = BigUint::one();
    let mut total: u64 = 0;
    for &e in exponent {
        // Multiply by C(total + e, e), keeping everything exact.
        for k in 1..=u64::from(e) {
            total += 1;
            result = result * BigUint::from(total) / BigUint::from(k);
        }
    }
    result
}

/// `beta(I) = C(I) sum_i alpha_i x_i^I` for one exponent tuple.
pub fn extract_coefficients(model: &PolynomialModel, exponent: &[u32]) -> Result<f64> {
    let dual = model.hypothesis.dual();
    let n = dual.support()[0].len();
    if exponent.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: exponent.len(),
        });
    }
    let total: u32 = exponent.iter().sum();
    if total as usize > model.degree {
        return Err(Error::InvalidParameter(format!(
            "exponent degree {total} exceeds model degree {}",
            model.degree
        )));
    }
    let count = multinomial_count(exponent)
        .to_f64()
        .ok_or_else(|| Error::InvalidParameter("multinomial count overflows f64".into()))?;
    let terms: Vec<f64> = dual
        .support()
        .iter()
        .zip(dual.alpha())
        .map(|(x, &a)| {
            let mono: f64 = x
                .iter()
                .zip(exponent)
                .map(|(&c, &e)| c.powi(e as i32))
                .product();
            a * mono
        })
        .collect();
    Ok(count * csum(&terms))
}

/// Cap on how many monomials `extract_all_coefficients` will enumerate.
pub const COEFF_LIMIT: usize = 200_000;

fn exponents_up_to(n: usize, d: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn rec(cur: &mut Vec<u32>, pos: usize, left: usize, out: &mut Vec<Vec<u32>>) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur[pos] = e as u32;
            rec(cur, pos + 1, left - e, out);
        }
        cur[pos] = 0;
    }
    rec(&mut cur, 0, d, &mut out);
    out
}

/// Every `beta(I)` with total degree at most the model degree.
pub fn extract_all_coefficients(model: &PolynomialModel) -> Result<BTreeMap<Vec<u32>, f64>> {
    let n = model.hypothesis.dual().support()[0].len();
    let count = num_integer_binomial(n + model.degree, model.degree);
    if count > COEFF_LIMIT {
        return Err(Error::FeatureDimTooLarge {
            dim: count,
            limit: COEFF_LIMIT,
        });
    }
    let mut map = BTreeMap::new();
    for exp in exponents_up_to(n, model.degree) {
        map.insert(exp.clone(), extract_coefficients(model, &exp)?);
    }
    Ok(map)
}

fn num_integer_binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// Evaluate an extracted coefficient map at a point.
pub fn eval_exponent_map(coeffs: &BTreeMap<Vec<u32>, f64>, x: &[f64]) -> f64 {
    let terms: Vec<f64> = coeffs
        .iter()
        .map(|(exp, &beta)| {
            let mono: f64 = x
                .iter()
                .zip(exp)
                .map(|(&c, &e)| c.powi(e as i32))
                .product();
            beta * mono
        })
        .collect();
    csum(&terms)
}

/// Correlation maximization: minimize `sum -y_i f(x_i)` over the ball fixed
/// by the ReLU approximant at accuracy `eps`; output stays raw.
pub fn maximize_relu_correlation(
    data: &Dataset,
    eps: f64,
    opts: &SolveOpts,
) -> Result<(Hypothesis, SolveReport)> {
    let (lo, hi) = data.label_range().bounds();
    if lo < -1.0 - 1e-12 || hi > 1.0 + 1e-12 {
        return Err(Error::WrongLabelRange {
            expected: "labels within [-1, 1]".into(),
            got: data.label_range().to_string(),
        });
    }
    let (_, cert) = approx_relu(eps)?;
    let spec = KernelSpec::plain(cert.degree);
    let loss = LossSpec::correlation(hi.abs().max(lo.abs()).max(1.0))?;
    let (dual, report) = solve_norm_ball(data, &loss, &spec, cert.weight, opts)?;
    Ok((Hypothesis::raw(dual), report))
}

fn h_of(level_weights: &[f64], a: f64) -> f64 {
    let terms: Vec<f64> = level_weights
        .iter()
        .enumerate()
        .map(|(i, &w)| w * a.powi(2 * i as i32))
        .collect();
    csum(&terms).sqrt()
}

/// Learn a depth-`D` bounded-norm network agnostically.
///
/// Depth 1 (one hidden layer, linear output) reduces to the plain kernel
/// with a `W^2`-inflated budget; deeper targets re-kernelize level by level
/// with the approximant's `2^i beta_i^2` weights. Output is clipped to
/// `[-MW, MW]`.
pub fn learn_network(
    data: &Dataset,
    loss: &LossSpec,
    arch: NetworkArch,
    activation: Activation,
    eps: f64,
    opts: &SolveOpts,
) -> Result<(Hypothesis, SolveReport)> {
    if !matches!(activation, Activation::Relu | Activation::Sigmoid) {
        return Err(Error::InvalidParameter(format!(
            "unsupported network activation {:?}",
            activation.name()
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < eps < 1, got {eps}"
        )));
    }
    if arch.depth >= 3 {
        log::warn!(
            "depth {} composition: norm budgets grow doubly exponentially, expect loose fits",
            arch.depth
        );
    }
    let w = arch.weight_bound;
    let d_depth = arch.depth;
    let l = loss.lipschitz();
    let denom = if d_depth == 1 {
        (l + 1.0) * w * d_depth as f64
    } else {
        (l + 1.0) * w.max(1.0).powi(d_depth as i32) * d_depth as f64
    };
    let eps_eff = (eps / denom).min(0.45);
    let approx_opts = ApproxOpts::default();
    let (spec, b) = if d_depth == 1 {
        let cert = match activation {
            Activation::Relu => approx_relu(eps_eff)?.1,
            _ => approx_sigmoid(eps_eff)?.1,
        };
        (KernelSpec::plain(cert.degree), w * w * cert.weight)
    } else {
        let radius = w.max(1.0);
        let (p, cert) = match activation {
            Activation::Relu => approx_relu_scaled(eps_eff, radius, &approx_opts)?,
            _ => approx_sigmoid_scaled(eps_eff, radius, &approx_opts)?,
        };
        let weights = p.level_weights();
        let mut u = cert.weight.sqrt();
        for _ in 2..=d_depth {
            u = h_of(&weights, w * u);
        }
        (
            KernelSpec::composed(cert.degree, d_depth, weights)?,
            (w * u).powi(2),
        )
    };
    let (dual, report) = solve_norm_ball(data, loss, &spec, b, opts)?;
    let mw = arch.output_bound * w;
    Ok((Hypothesis::clipped(dual, -mw, mw)?, report))
}

/// Sample-complexity guideline:
/// `ceil((8 max(L, 1/eps) sqrt((d+1) B) + max(b, 1) sqrt(2 ln(1/delta)))^2 / eps^2)`.
pub fn sample_size(eps: f64, delta: f64, d: usize, b: f64, lipschitz: f64, bound: f64) -> Result<u64> {
    if !(eps > 0.0) || !(delta > 0.0 && delta < 1.0) || !(b > 0.0) || !(lipschitz > 0.0) || !(bound > 0.0)
    {
        return Err(Error::InvalidParameter(format!(
            "sample_size needs positive arguments and delta in (0,1); got eps={eps} delta={delta} B={b} L={lipschitz} b={bound}"
        )));
    }
    let rate = lipschitz.max(1.0 / eps);
    let main = 8.0 * rate * ((d as f64 + 1.0) * b).sqrt();
    let conf = bound.max(1.0) * (2.0 * (1.0 / delta).ln()).sqrt();
    let v = ((main + conf) / eps).powi(2);
    Ok(v.ceil() as u64)
}
