//! Certified uniform polynomial approximation of activations on an interval.
//!
//! The ReLU approximant comes from the classical Chebyshev series of `|t|`:
//! truncate it, average with the identity to get a one-sided candidate, then
//! apply a small affine shrink that pins the range into `[0, 1]` while the
//! uniform error stays below the target. Sigmoid uses Chebyshev interpolation
//! directly, with the same affine range fix. Every returned polynomial
//! carries a certificate: a grid sup-error plus a derivative-based slack that
//! upper-bounds the true sup-error, together with coefficient weights.
//!
//! Degrees adapt upward (25% steps) until the certificate passes or a ceiling
//! is hit. Note the monomial basis is inherently ill-conditioned here:
//! coefficients grow like `2^degree`, which is why evaluation is compensated
//! and why callers should treat degrees much beyond one hundred as outside
//! the certifiable regime.

use crate::error::{Error, Result};
use crate::poly::{scale_for_radius, UnivariatePoly};

/// Activations we can approximate or certify against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Abs,
    Identity,
}

impl Activation {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Activation::Relu => t.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-t).exp()),
            Activation::Abs => t.abs(),
            Activation::Identity => t,
        }
    }

    /// Upper bound on `|sigma'|`, valid on any interval.
    pub fn deriv_bound(&self) -> f64 {
        match self {
            Activation::Relu | Activation::Abs | Activation::Identity => 1.0,
            Activation::Sigmoid => 0.25,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Abs => "abs",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "abs" => Ok(Activation::Abs),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::Parse(format!("unknown activation '{other}'"))),
        }
    }
}

/// Certificate attached to an approximant.
#[derive(Debug, Clone)]
pub struct ApproxCertificate {
    pub target: Activation,
    /// Requested accuracy.
    pub eps: f64,
    pub degree: usize,
    /// Certified sup-error bound: grid maximum plus slack.
    pub max_grid_error: f64,
    /// Raw grid maximum, before slack.
    pub grid_error_raw: f64,
    /// Derivative-based slack covering between-grid behavior.
    pub slack: f64,
    /// Coefficient weight `sum beta_i^2`.
    pub weight: f64,
    /// Level weight `sum 2^i beta_i^2`.
    pub weight2: f64,
    pub grid_points: usize,
    /// Interval the certificate covers.
    pub interval: (f64, f64),
}

/// Options for the adaptive constructions.
#[derive(Debug, Clone)]
pub struct ApproxOpts {
    /// Hard cap on the adaptive degree.
    pub degree_ceiling: usize,
    /// Lower bound on certification grid size.
    pub min_grid: usize,
}

impl Default for ApproxOpts {
    fn default() -> Self {
        ApproxOpts {
            degree_ceiling: 200,
            min_grid: 100_000,
        }
    }
}

/// Split result of a grid certification.
#[derive(Debug, Clone, Copy)]
pub struct UniformError {
    pub grid_max: f64,
    pub slack: f64,
}

impl UniformError {
    pub fn bound(&self) -> f64 {
        self.grid_max + self.slack
    }
}

/// Certified sup-error of `p` against `target` on `[u, v]`.
///
/// Returns grid max plus slack `(v-u)/grid * (sup|p'| + sup|target'|)`,
/// where `sup|p'|` uses the Markov brothers inequality
/// `d^2 * sup|p| * 2/(v-u)` with `sup|p|` read off the same grid.
pub fn uniform_error(
    p: &UnivariatePoly,
    target: Activation,
    interval: (f64, f64),
    grid: usize,
) -> Result<f64> {
    uniform_error_detail(p, target, interval, grid).map(|e| e.bound())
}

/// Same as [`uniform_error`] but exposing the grid and slack parts.
pub fn uniform_error_detail(
    p: &UnivariatePoly,
    target: Activation,
    interval: (f64, f64),
    grid: usize,
) -> Result<UniformError> {
    let (u, v) = interval;
    if !(u < v) || !u.is_finite() || !v.is_finite() {
        return Err(Error::InvalidParameter(format!("bad interval [{u}, {v}]")));
    }
    if grid < 1000 {
        return Err(Error::InvalidParameter(format!(
            "certification grid must have at least 1000 points, got {grid}"
        )));
    }
    let mut grid_max: f64 = 0.0;
    let mut p_sup: f64 = 0.0;
    let step = (v - u) / (grid - 1) as f64;
    for i in 0..grid {
        let t = if i + 1 == grid { v } else { u + step * i as f64 };
        let pv = p.eval(t);
        let diff = (pv - target.eval(t)).abs();
        if diff > grid_max {
            grid_max = diff;
        }
        if pv.abs() > p_sup {
            p_sup = pv.abs();
        }
    }
    let d = p.degree() as f64;
    let p_deriv_bound = d * d * p_sup * 2.0 / (v - u);
    let slack = (v - u) / grid as f64 * (p_deriv_bound + target.deriv_bound());
    Ok(UniformError { grid_max, slack })
}

/// Coefficient-weight cap `(d+1) * (4e)^(2d) * m^2` for degree-`d`
/// polynomials bounded by `m` in sup-norm on `[-1, 1]`. Overflows to
/// infinity for degrees past ~90, which keeps comparisons conservative.
pub fn sherstov_bound(d: usize, m: f64) -> f64 {
    let base = 4.0 * std::f64::consts::E;
    (d as f64 + 1.0) * base.powi(2 * d as i32) * m * m
}

/// Monomial coefficients of the Chebyshev polynomial T_k, low-to-high.
fn chebyshev_monomial(k: usize) -> Vec<f64> {
    if k == 0 {
        return vec![1.0];
    }
    let mut prev = vec![1.0];
    let mut cur = vec![0.0, 1.0];
    for _ in 1..k {
        // T_{j+1} = 2 t T_j - T_{j-1}
        let mut next = vec![0.0; cur.len() + 1];
        for (i, &c) in cur.iter().enumerate() {
            next[i + 1] += 2.0 * c;
        }
        for (i, &c) in prev.iter().enumerate() {
            next[i] -= c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Accumulate `coeff * T_k` into a monomial coefficient vector.
fn add_chebyshev_term(acc: &mut Vec<f64>, k: usize, coeff: f64) {
    let t = chebyshev_monomial(k);
    if acc.len() < t.len() {
        acc.resize(t.len(), 0.0);
    }
    for (i, &c) in t.iter().enumerate() {
        acc[i] += coeff * c;
    }
}

/// Degree-`2k_max` truncation of the Chebyshev series of `|t|` on `[-1, 1]`.
///
/// `|t| = 2/pi + (4/pi) sum_{k>=1} (-1)^{k+1} T_{2k}(t) / (4k^2 - 1)`;
/// the truncation error is exactly `2 / (pi (2 k_max + 1))`, attained at 0.
fn abs_series_truncated(k_max: usize) -> UnivariatePoly {
    let mut acc = vec![0.0];
    add_chebyshev_term(&mut acc, 0, 2.0 / std::f64::consts::PI);
    for k in 1..=k_max {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let c = 4.0 / std::f64::consts::PI * sign / ((4 * k * k) as f64 - 1.0);
        add_chebyshev_term(&mut acc, 2 * k, c);
    }
    UnivariatePoly::new(acc).expect("finite coefficients")
}

/// Chebyshev interpolation coefficients of `f` on `[-1, 1]` up to `degree`,
/// computed from `nodes` Chebyshev points.
fn chebyshev_interp(f: impl Fn(f64) -> f64, degree: usize, nodes: usize) -> UnivariatePoly {
    let n = nodes.max(2 * (degree + 1));
    let vals: Vec<f64> = (0..n)
        .map(|j| {
            let theta = (j as f64 + 0.5) * std::f64::consts::PI / n as f64;
            f(theta.cos())
        })
        .collect();
    let mut acc = vec![0.0];
    for k in 0..=degree {
        let mut s = 0.0;
        for (j, &fv) in vals.iter().enumerate() {
            let theta = (j as f64 + 0.5) * std::f64::consts::PI / n as f64;
            s += fv * (k as f64 * theta).cos();
        }
        let c = s * 2.0 / n as f64;
        let c = if k == 0 { c / 2.0 } else { c };
        add_chebyshev_term(&mut acc, k, c);
    }
    UnivariatePoly::new(acc).expect("finite coefficients")
}

/// Affine range fix: `p = ((2 - eps)/2) (p_bar - 1/2) + 1/2`.
///
/// If `|p_bar - sigma| <= eps / (2 (2 - eps))` and `sigma` maps into
/// `[0, 1]`, the result stays within `eps` of `sigma` and maps `[-1, 1]`
/// into `[0, 1]`.
fn range_fix(p_bar: &UnivariatePoly, eps: f64) -> UnivariatePoly {
    let a = (2.0 - eps) / 2.0;
    let mut coeffs: Vec<f64> = p_bar.coeffs().iter().map(|&c| a * c).collect();
    coeffs[0] += 0.5 - a * 0.5;
    UnivariatePoly::new(coeffs).expect("finite coefficients")
}

/// Certification grid size giving slack around `eps / 20`.
fn cert_grid(degree: usize, eps: f64, interval: (f64, f64), min_grid: usize) -> usize {
    let d = degree as f64;
    let len = interval.1 - interval.0;
    let want = (20.0 * len * (d * d * 1.25 * 2.0 / len + 1.0) / eps).ceil();
    (want as usize).clamp(min_grid, 20_000_000)
}

fn certify(
    p: &UnivariatePoly,
    target: Activation,
    eps: f64,
    interval: (f64, f64),
    min_grid: usize,
) -> Result<(ApproxCertificate, bool)> {
    let grid = cert_grid(p.degree(), eps, interval, min_grid);
    let detail = uniform_error_detail(p, target, interval, grid)?;
    let cert = ApproxCertificate {
        target,
        eps,
        degree: p.degree(),
        max_grid_error: detail.bound(),
        grid_error_raw: detail.grid_max,
        slack: detail.slack,
        weight: p.weight(),
        weight2: p.weight2(),
        grid_points: grid,
        interval,
    };
    Ok((cert, detail.bound() <= eps))
}

/// Range check on a fresh coarse grid: does `p` map `[u, v]` into `[0, 1]`?
/// The affine fix leaves an `eps/4`-sized margin, far above rounding.
fn range_in_unit(p: &UnivariatePoly, interval: (f64, f64)) -> bool {
    let grid = 4096;
    let (u, v) = interval;
    let step = (v - u) / (grid - 1) as f64;
    (0..grid).all(|i| {
        let t = if i + 1 == grid { v } else { u + step * i as f64 };
        let pv = p.eval(t);
        (0.0..=1.0).contains(&pv)
    })
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "accuracy must lie in (0, 1), got {eps}"
        )));
    }
    Ok(())
}

/// Certified ReLU approximant on `[-1, 1]`: error at most `eps`, range in
/// `[0, 1]`, degree `O(1/eps)`.
pub fn approx_relu(eps: f64) -> Result<(UnivariatePoly, ApproxCertificate)> {
    approx_relu_opts(eps, &ApproxOpts::default())
}

pub fn approx_relu_opts(
    eps: f64,
    opts: &ApproxOpts,
) -> Result<(UnivariatePoly, ApproxCertificate)> {
    check_eps(eps)?;
    let mut d = ((2.0 / eps).ceil() as usize).max(2);
    d += d % 2;
    let mut last_err = f64::INFINITY;
    loop {
        let p_tilde = abs_series_truncated(d / 2);
        let mut bar_coeffs: Vec<f64> = p_tilde.coeffs().iter().map(|&c| 0.5 * c).collect();
        bar_coeffs[1] += 0.5;
        let p_bar = UnivariatePoly::new(bar_coeffs)?;
        let p = range_fix(&p_bar, eps);
        let (cert, ok) = certify(&p, Activation::Relu, eps, (-1.0, 1.0), opts.min_grid)?;
        if ok && range_in_unit(&p, (-1.0, 1.0)) {
            return Ok((p, cert));
        }
        last_err = cert.max_grid_error.min(last_err);
        let next = (d as f64 * 1.25).ceil() as usize;
        let next = next + next % 2;
        if next > opts.degree_ceiling {
            return Err(Error::DegreeCeiling {
                ceiling: opts.degree_ceiling,
                eps,
                achieved: last_err,
            });
        }
        d = next;
    }
}

/// Certified sigmoid approximant on `[-1, 1]`: error at most `eps`, range in
/// `[0, 1]`, degree `O(log(1/eps))`.
pub fn approx_sigmoid(eps: f64) -> Result<(UnivariatePoly, ApproxCertificate)> {
    approx_sigmoid_opts(eps, &ApproxOpts::default())
}

pub fn approx_sigmoid_opts(
    eps: f64,
    opts: &ApproxOpts,
) -> Result<(UnivariatePoly, ApproxCertificate)> {
    check_eps(eps)?;
    let mut d = ((1.0 / eps).log2().ceil() as usize).max(1) + 1;
    let mut last_err = f64::INFINITY;
    loop {
        let p_bar = chebyshev_interp(|t| Activation::Sigmoid.eval(t), d, 128);
        let p = range_fix(&p_bar, eps);
        let (cert, ok) = certify(&p, Activation::Sigmoid, eps, (-1.0, 1.0), opts.min_grid)?;
        if ok && range_in_unit(&p, (-1.0, 1.0)) {
            return Ok((p, cert));
        }
        last_err = cert.max_grid_error.min(last_err);
        let next = (d + 1).max((d as f64 * 1.25).ceil() as usize);
        if next > opts.degree_ceiling {
            return Err(Error::DegreeCeiling {
                ceiling: opts.degree_ceiling,
                eps,
                achieved: last_err,
            });
        }
        d = next;
    }
}

/// ReLU approximant on `[-radius, radius]` with absolute error `eps_abs`,
/// built by rescaling a unit-interval certificate (ReLU is positively
/// homogeneous, so the scaling is exact).
pub fn approx_relu_scaled(
    eps_abs: f64,
    radius: f64,
    opts: &ApproxOpts,
) -> Result<(UnivariatePoly, ApproxCertificate)> {
    if !(radius >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "radius must be >= 1, got {radius}"
        )));
    }
    let (p, _) = approx_relu_opts(eps_abs / radius, opts)?;
    let q = scale_for_radius(&p, radius)?;
    let (cert, ok) = certify(&q, Activation::Relu, eps_abs, (-radius, radius), opts.min_grid)?;
    if !ok {
        return Err(Error::DegreeCeiling {
            ceiling: opts.degree_ceiling,
            eps: eps_abs,
            achieved: cert.max_grid_error,
        });
    }
    Ok((q, cert))
}

/// Sigmoid approximant on `[-radius, radius]` with absolute error `eps_abs`.
///
/// Sigmoid is not homogeneous, so instead of rescaling we interpolate
/// `t -> sigmoid(radius * t)` on `[-1, 1]` and substitute `t = x / radius`.
pub fn approx_sigmoid_scaled(
    eps_abs: f64,
    radius: f64,
    opts: &ApproxOpts,
) -> Result<(UnivariatePoly, ApproxCertificate)> {
    check_eps(eps_abs)?;
    if !(radius >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "radius must be >= 1, got {radius}"
        )));
    }
    let mut d = (((1.0 / eps_abs).log2().ceil()) as usize).max(1) + radius.ceil() as usize;
    let mut last_err = f64::INFINITY;
    loop {
        let p_hat = chebyshev_interp(|t| Activation::Sigmoid.eval(radius * t), d, 256);
        let coeffs: Vec<f64> = p_hat
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, &c)| c / radius.powi(i as i32))
            .collect();
        let q = UnivariatePoly::new(coeffs)?;
        let (cert, ok) = certify(
            &q,
            Activation::Sigmoid,
            eps_abs,
            (-radius, radius),
            opts.min_grid,
        )?;
        if ok {
            return Ok((q, cert));
        }
        last_err = cert.max_grid_error.min(last_err);
        let next = (d + 1).max((d as f64 * 1.25).ceil() as usize);
        if next > opts.degree_ceiling {
            return Err(Error::DegreeCeiling {
                ceiling: opts.degree_ceiling,
                eps: eps_abs,
                achieved: last_err,
            });
        }
        d = next;
    }
}

/// Degree cap for the Chebyshev-basis path. Clenshaw stays stable well past
/// this; the cap only guards against absurd accuracy requests.
const CHEB_DEGREE_CEILING: usize = 4096;

/// Activation approximant kept in the Chebyshev basis on `[-radius, radius]`
/// and evaluated by the Clenshaw recurrence.
///
/// The monomial form of the same polynomial has coefficients growing like
/// `2^degree` and is numerically meaningless past degree ~120; this form is
/// usable at any degree the pointwise evaluators here need.
#[derive(Debug, Clone)]
pub struct ChebApprox {
    coeffs: Vec<f64>,
    radius: f64,
    target: Activation,
    err_bound: f64,
}

impl ChebApprox {
    /// Coefficients of `T_k(t / radius)`, low to high.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn target(&self) -> Activation {
        self.target
    }

    /// Certified sup error against the target on `[-radius, radius]`.
    pub fn err_bound(&self) -> f64 {
        self.err_bound
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Clenshaw evaluation. Defined for all `t`, but only certified on
    /// `[-radius, radius]`; outside, partial sums grow like `cosh`.
    pub fn eval(&self, t: f64) -> f64 {
        let s = t / self.radius;
        let n = self.coeffs.len();
        if n == 1 {
            return self.coeffs[0];
        }
        let mut b1 = 0.0f64;
        let mut b2 = 0.0f64;
        for k in (1..n).rev() {
            let b = 2.0 * s * b1 - b2 + self.coeffs[k];
            b2 = b1;
            b1 = b;
        }
        self.coeffs[0] + s * b1 - b2
    }

    /// Upper bound on `sup |p'|` over the certified interval, from the exact
    /// Chebyshev coefficients of the derivative.
    pub fn deriv_sup_bound(&self) -> f64 {
        let d = cheb_deriv_coeffs(&self.coeffs);
        d.iter().map(|c| c.abs()).sum::<f64>() / self.radius
    }
}

/// Chebyshev coefficients of the derivative of `sum c_k T_k`.
fn cheb_deriv_coeffs(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    if n <= 1 {
        return vec![0.0];
    }
    let mut d = vec![0.0; n - 1];
    d[n - 2] = 2.0 * (n - 1) as f64 * c[n - 1];
    if n >= 3 {
        d[n - 3] = 2.0 * (n - 2) as f64 * c[n - 2];
    }
    for k in (0..n.saturating_sub(3)).rev() {
        d[k] = d[k + 2] + 2.0 * (k + 1) as f64 * c[k + 1];
    }
    d[0] /= 2.0;
    d
}

/// Raw Chebyshev coefficients of the truncated `|s|` series, degree `2k_max`.
fn abs_series_cheb(k_max: usize) -> Vec<f64> {
    let mut c = vec![0.0; 2 * k_max + 1];
    c[0] = 2.0 / std::f64::consts::PI;
    for k in 1..=k_max {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        c[2 * k] = 4.0 / std::f64::consts::PI * sign / ((4 * k * k) as f64 - 1.0);
    }
    c
}

/// Grid certification for a Chebyshev-basis candidate. The derivative bound
/// comes from the coefficients themselves, so the grid stays small even at
/// high degree.
fn certify_cheb(cand: &ChebApprox, eps_abs: f64, min_grid: usize) -> UniformError {
    let (u, v) = (-cand.radius, cand.radius);
    let len = v - u;
    let rate = cand.deriv_sup_bound() + cand.target.deriv_bound();
    let want = (len * rate * 20.0 / eps_abs).ceil() as usize;
    let grid = want.clamp(min_grid.max(10_000), 5_000_000);
    let step = len / (grid - 1) as f64;
    let mut grid_max: f64 = 0.0;
    for i in 0..grid {
        let t = if i + 1 == grid { v } else { u + step * i as f64 };
        let diff = (cand.eval(t) - cand.target.eval(t)).abs();
        if diff > grid_max {
            grid_max = diff;
        }
    }
    let slack = len / grid as f64 * rate;
    UniformError { grid_max, slack }
}

fn cheb_ceiling_err(eps_abs: f64, achieved: f64) -> Error {
    Error::DegreeCeiling {
        ceiling: CHEB_DEGREE_CEILING,
        eps: eps_abs,
        achieved,
    }
}

/// Chebyshev-basis approximant of `target` on `[-radius, radius]` with
/// certified absolute error at most `eps_abs`.
///
/// Identity is represented exactly. ReLU and `|t|` come from the closed-form
/// truncated series; sigmoid from Chebyshev interpolation grown until the
/// certificate passes. No range normalization is applied: callers here need
/// pointwise accuracy, not a `[0, 1]` image.
pub fn cheb_activation(
    target: Activation,
    eps_abs: f64,
    radius: f64,
    opts: &ApproxOpts,
) -> Result<ChebApprox> {
    check_eps(eps_abs)?;
    if !(radius >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "radius must be >= 1, got {radius}"
        )));
    }
    match target {
        Activation::Identity => Ok(ChebApprox {
            coeffs: vec![0.0, radius],
            radius,
            target,
            err_bound: 0.0,
        }),
        Activation::Relu | Activation::Abs => {
            // Truncation error of the |s| series is 2/(pi (2K+1)); averaging
            // with s for ReLU halves it, the radius scale multiplies it back.
            let unit_trunc = |k: usize| 2.0 / (std::f64::consts::PI * (2 * k + 1) as f64);
            let scale = if target == Activation::Relu {
                radius / 2.0
            } else {
                radius
            };
            let mut k = 1usize.max(((scale / (0.9 * eps_abs) / std::f64::consts::PI - 1.0) / 2.0).ceil() as usize);
            loop {
                if 2 * k > CHEB_DEGREE_CEILING {
                    return Err(cheb_ceiling_err(eps_abs, scale * unit_trunc(k)));
                }
                let mut coeffs = abs_series_cheb(k);
                if target == Activation::Relu {
                    for c in &mut coeffs {
                        *c *= 0.5;
                    }
                    coeffs[1] += 0.5;
                }
                for c in &mut coeffs {
                    *c *= radius;
                }
                let mut cand = ChebApprox {
                    coeffs,
                    radius,
                    target,
                    err_bound: f64::INFINITY,
                };
                let err = certify_cheb(&cand, eps_abs, opts.min_grid);
                if err.bound() <= eps_abs {
                    cand.err_bound = err.bound();
                    return Ok(cand);
                }
                k += k / 4 + 1;
            }
        }
        Activation::Sigmoid => {
            let mut d = ((1.0 / eps_abs).log2().ceil() as usize).max(2) + radius.ceil() as usize;
            let mut last_err = f64::INFINITY;
            loop {
                if d > CHEB_DEGREE_CEILING {
                    return Err(cheb_ceiling_err(eps_abs, last_err));
                }
                let nodes = (2 * (d + 1)).max(128);
                let vals: Vec<f64> = (0..nodes)
                    .map(|j| {
                        let theta = (j as f64 + 0.5) * std::f64::consts::PI / nodes as f64;
                        Activation::Sigmoid.eval(radius * theta.cos())
                    })
                    .collect();
                let mut coeffs = vec![0.0; d + 1];
                for (k, slot) in coeffs.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for (j, &fv) in vals.iter().enumerate() {
                        let theta = (j as f64 + 0.5) * std::f64::consts::PI / nodes as f64;
                        s += fv * (k as f64 * theta).cos();
                    }
                    *slot = s * 2.0 / nodes as f64;
                }
                coeffs[0] /= 2.0;
                let mut cand = ChebApprox {
                    coeffs,
                    radius,
                    target,
                    err_bound: f64::INFINITY,
                };
                let err = certify_cheb(&cand, eps_abs, opts.min_grid);
                if err.bound() <= eps_abs {
                    cand.err_bound = err.bound();
                    return Ok(cand);
                }
                last_err = err.grid_max.min(last_err);
                d = (d + 2).max(d * 5 / 4);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: raw sup over fresh equispaced points.
    fn sup_error_on_grid(
        p: &UnivariatePoly,
        target: Activation,
        interval: (f64, f64),
        points: usize,
    ) -> f64 {
        let (u, v) = interval;
        let mut worst: f64 = 0.0;
        for i in 0..points {
            let t = u + (v - u) * i as f64 / (points - 1) as f64;
            worst = worst.max((p.eval(t) - target.eval(t)).abs());
        }
        worst
    }

    #[test]
    fn abs_truncation_error_matches_closed_form() {
        // Truncation error of the |t| series is exactly 2/(pi (2K+1)) at 0.
        for k in [3usize, 5, 10] {
            let p = abs_series_truncated(k);
            let predicted = 2.0 / (std::f64::consts::PI * (2 * k + 1) as f64);
            assert!((p.eval(0.0) - predicted).abs() < 1e-12);
            let sup = sup_error_on_grid(&p, Activation::Abs, (-1.0, 1.0), 20_001);
            assert!(sup <= predicted + 1e-12, "K={k}: sup {sup} > {predicted}");
        }
    }

    #[test]
    fn relu_certificates_hold_at_standard_accuracies() {
        for eps in [0.2, 0.1, 0.05] {
            let (p, cert) = approx_relu(eps).unwrap();
            assert!(cert.max_grid_error <= eps, "eps={eps}: {cert:?}");
            // Fresh-grid oracle at 1e5 points, no slack.
            let sup = sup_error_on_grid(&p, Activation::Relu, (-1.0, 1.0), 100_001);
            assert!(sup <= eps, "eps={eps}: fresh-grid sup {sup}");
            assert!((p.eval(1.0) - 1.0).abs() <= eps);
            assert!(p.eval(-1.0).abs() <= eps);
            assert!(range_in_unit(&p, (-1.0, 1.0)), "range escapes [0,1]");
            assert!(cert.weight <= sherstov_bound(cert.degree, 1.0));
            assert_eq!(cert.degree, p.degree());
        }
    }

    #[test]
    fn relu_degree_grows_with_accuracy() {
        let (_, c1) = approx_relu(0.2).unwrap();
        let (_, c2) = approx_relu(0.05).unwrap();
        assert!(c2.degree > c1.degree);
    }

    #[test]
    fn sigmoid_certificates_hold() {
        for eps in [0.1, 0.05, 0.01] {
            let (p, cert) = approx_sigmoid(eps).unwrap();
            assert!(cert.max_grid_error <= eps);
            assert!((p.eval(0.0) - 0.5).abs() <= eps);
            let sup = sup_error_on_grid(&p, Activation::Sigmoid, (-1.0, 1.0), 100_001);
            assert!(sup <= eps);
            assert!(range_in_unit(&p, (-1.0, 1.0)));
        }
    }

    #[test]
    fn sigmoid_degree_monotone_in_accuracy() {
        let (_, c_coarse) = approx_sigmoid(0.1).unwrap();
        let (_, c_fine) = approx_sigmoid(0.01).unwrap();
        assert!(
            c_fine.degree > c_coarse.degree,
            "degree({}) vs degree({})",
            c_fine.degree,
            c_coarse.degree
        );
    }

    #[test]
    fn uniform_error_zero_for_exact_target() {
        let p = UnivariatePoly::identity();
        let detail =
            uniform_error_detail(&p, Activation::Identity, (-1.0, 1.0), 100_000).unwrap();
        // The grid part is exactly zero; only the generic slack remains.
        assert!(detail.grid_max <= 1e-12);
        assert!(detail.bound() <= 1e-4);
    }

    #[test]
    fn uniform_error_of_zero_poly_vs_relu_is_one() {
        let p = UnivariatePoly::zero();
        let detail = uniform_error_detail(&p, Activation::Relu, (-1.0, 1.0), 100_000).unwrap();
        assert!((detail.grid_max - 1.0).abs() <= 1e-12);
        assert!(detail.bound() >= 1.0);
        assert!(detail.bound() <= 1.0 + 1e-4);
    }

    #[test]
    fn uniform_error_recertifies_relu_approx() {
        let (p, _) = approx_relu(0.1).unwrap();
        let bound = uniform_error(&p, Activation::Relu, (-1.0, 1.0), 100_000).unwrap();
        assert!(bound <= 0.1, "recertified bound {bound}");
    }

    #[test]
    fn uniform_error_rejects_small_grid_and_bad_interval() {
        let p = UnivariatePoly::identity();
        assert!(uniform_error(&p, Activation::Relu, (-1.0, 1.0), 999).is_err());
        assert!(uniform_error(&p, Activation::Relu, (1.0, -1.0), 2000).is_err());
    }

    #[test]
    fn sherstov_bound_values() {
        assert_eq!(sherstov_bound(0, 1.0), 1.0);
        // 2 * (4e)^2 = 32 e^2, recomputed directly.
        let expected = 32.0 * std::f64::consts::E * std::f64::consts::E;
        assert!((sherstov_bound(1, 1.0) - expected).abs() < 1e-9 * expected);
        // Ratio identity: bound(d+1)/bound(d) = (d+2)/(d+1) * (4e)^2.
        for d in [0usize, 3, 7] {
            let ratio = sherstov_bound(d + 1, 1.0) / sherstov_bound(d, 1.0);
            let expected = (d as f64 + 2.0) / (d as f64 + 1.0)
                * (4.0 * std::f64::consts::E).powi(2);
            assert!((ratio - expected).abs() < 1e-9 * expected);
        }
        // Scaling in m.
        let (a, b) = (sherstov_bound(2, 3.0), 9.0 * sherstov_bound(2, 1.0));
        assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn eps_out_of_range_rejected() {
        assert!(approx_relu(0.0).is_err());
        assert!(approx_relu(1.0).is_err());
        assert!(approx_sigmoid(-0.1).is_err());
    }

    #[test]
    fn scaled_relu_certificate_holds() {
        let (q, cert) = approx_relu_scaled(0.2, 2.0, &ApproxOpts::default()).unwrap();
        assert!(cert.max_grid_error <= 0.2);
        let sup = sup_error_on_grid(&q, Activation::Relu, (-2.0, 2.0), 50_001);
        assert!(sup <= 0.2);
    }

    #[test]
    fn scaled_sigmoid_certificate_holds() {
        let (q, cert) = approx_sigmoid_scaled(0.05, 2.0, &ApproxOpts::default()).unwrap();
        assert!(cert.max_grid_error <= 0.05);
        let sup = sup_error_on_grid(&q, Activation::Sigmoid, (-2.0, 2.0), 50_001);
        assert!(sup <= 0.05);
        // Degrees stay small for the smooth target.
        assert!(cert.degree <= 25, "degree {}", cert.degree);
    }

    fn cheb_sup_error(p: &ChebApprox, points: usize) -> f64 {
        let (u, v) = (-p.radius(), p.radius());
        let mut worst: f64 = 0.0;
        for i in 0..points {
            let t = u + (v - u) * i as f64 / (points - 1) as f64;
            worst = worst.max((p.eval(t) - p.target().eval(t)).abs());
        }
        worst
    }

    #[test]
    fn clenshaw_matches_monomial_chebyshev() {
        // Coefficient basis check: T_3(s) = 4s^3 - 3s.
        let p = ChebApprox {
            coeffs: vec![0.0, 0.0, 0.0, 1.0],
            radius: 1.0,
            target: Activation::Identity,
            err_bound: f64::INFINITY,
        };
        for t in [-1.0, -0.37, 0.0, 0.5, 0.99] {
            let exact = 4.0 * t * t * t - 3.0 * t;
            assert!((p.eval(t) - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn cheb_identity_is_exact() {
        let p = cheb_activation(Activation::Identity, 0.5, 2.0, &ApproxOpts::default()).unwrap();
        assert_eq!(p.err_bound(), 0.0);
        for t in [-2.0, -0.75, 0.0, 1.5] {
            assert_eq!(p.eval(t), t);
        }
    }

    #[test]
    fn cheb_relu_certificates_hold() {
        for (eps, radius) in [(0.1, 1.0), (0.05, 2.0), (0.2 / 18.0, 2.0)] {
            let p = cheb_activation(Activation::Relu, eps, radius, &ApproxOpts::default())
                .unwrap();
            assert!(p.err_bound() <= eps);
            let sup = cheb_sup_error(&p, 40_001);
            assert!(sup <= p.err_bound() + 1e-12, "eps={eps}: fresh sup {sup}");
        }
    }

    #[test]
    fn cheb_relu_stays_stable_at_high_degree() {
        // Accuracy that would need degree ~130; the monomial basis is
        // hopeless there, Clenshaw is not.
        let eps = 0.1 / 18.0;
        let p = cheb_activation(Activation::Relu, eps, 2.0, &ApproxOpts::default()).unwrap();
        assert!(p.degree() >= 100, "degree {}", p.degree());
        assert!(cheb_sup_error(&p, 40_001) <= eps);
        // The derivative bound stays O(1) despite the degree; this is what
        // keeps certification grids small.
        assert!(p.deriv_sup_bound() < 5.0, "deriv bound {}", p.deriv_sup_bound());
    }

    #[test]
    fn cheb_sigmoid_and_abs_certificates_hold() {
        let s = cheb_activation(Activation::Sigmoid, 0.01, 2.0, &ApproxOpts::default()).unwrap();
        assert!(cheb_sup_error(&s, 40_001) <= 0.01);
        assert!(s.degree() <= 20, "sigmoid degree {}", s.degree());
        let a = cheb_activation(Activation::Abs, 0.05, 1.0, &ApproxOpts::default()).unwrap();
        assert!(cheb_sup_error(&a, 40_001) <= 0.05);
    }

    #[test]
    fn cheb_rejects_bad_parameters() {
        assert!(cheb_activation(Activation::Relu, 0.0, 1.0, &ApproxOpts::default()).is_err());
        assert!(cheb_activation(Activation::Relu, 0.1, 0.5, &ApproxOpts::default()).is_err());
    }
}
