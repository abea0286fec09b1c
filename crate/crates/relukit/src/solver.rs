//! Constrained dual solvers for the kernel learning programs.
//!
//! Both entry points minimize a convex empirical loss over the ellipsoid
//! `alpha^T K alpha <= B`; the reliable variant adds one half-space
//! `K_i . alpha <= eps` per zero-labeled sample. The method is projected
//! subgradient descent in the K-metric with Polyak target-level steps, the
//! feasible set handled by Dykstra alternating projections. Deterministic
//! by construction: alpha starts at 0 and no randomness enters the loop.

use crate::data::{Dataset, LabelRange};
use crate::error::{Error, Result};
use crate::kernel::{gram, GramMatrix, KernelSpec};
use crate::loss::LossSpec;
use crate::util::{csum, cdot, fmt_f64, l2_norm};

/// Tie-breaking regularizer weight on `||alpha||^2`.
const RIDGE: f64 = 1e-12;

/// Solver knobs. `feas_tol` is a base rate; the acceptance band for
/// constraint violations is `feas_tol * (1 + B)`.
#[derive(Debug, Clone)]
pub struct SolveOpts {
    pub objective_tol: f64,
    pub feas_tol: f64,
    pub max_iters: usize,
    pub stall_window: usize,
    pub dykstra_tol: f64,
    pub dykstra_max_passes: usize,
    pub kkt_tol: f64,
    pub seed: u64,
}

impl Default for SolveOpts {
    fn default() -> Self {
        SolveOpts {
            objective_tol: 1e-7,
            feas_tol: 1e-6,
            max_iters: 100_000,
            stall_window: 50,
            dykstra_tol: 1e-8,
            dykstra_max_passes: 500,
            kkt_tol: 1e-3,
            seed: 0,
        }
    }
}

/// Kernel expansion `f(x) = sum_j alpha_j K(x_j, x)` plus its norm cap.
#[derive(Debug, Clone)]
pub struct DualSolution {
    alpha: Vec<f64>,
    support: Vec<Vec<f64>>,
    spec: KernelSpec,
    b: f64,
}

impl DualSolution {
    pub fn new(alpha: Vec<f64>, support: Vec<Vec<f64>>, spec: KernelSpec, b: f64) -> Result<Self> {
        if alpha.len() != support.len() {
            return Err(Error::DimensionMismatch {
                expected: support.len(),
                got: alpha.len(),
            });
        }
        if support.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(DualSolution {
            alpha,
            support,
            spec,
            b,
        })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn support(&self) -> &[Vec<f64>] {
        &self.support
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn bound(&self) -> f64 {
        self.b
    }

    /// `sum_j alpha_j K(x_j, x)` for a unit-norm `x`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.support[0].len() {
            return Err(Error::DimensionMismatch {
                expected: self.support[0].len(),
                got: x.len(),
            });
        }
        let terms: Vec<f64> = self
            .support
            .iter()
            .zip(&self.alpha)
            .map(|(xj, &a)| a * self.spec.eval_dot(cdot(xj, x)))
            .collect();
        Ok(csum(&terms))
    }
}

/// What the solve did, for auditing; `converged = false` is reported, never
/// silently upgraded.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub objective: f64,
    pub iterations: usize,
    pub max_constraint_violation: f64,
    pub norm_used: f64,
    pub converged: bool,
    pub seed: u64,
}

impl SolveReport {
    pub fn summary(&self) -> String {
        format!(
            "objective={} iters={} violation={} norm={} converged={}",
            fmt_f64(self.objective),
            self.iterations,
            fmt_f64(self.max_constraint_violation),
            fmt_f64(self.norm_used),
            self.converged
        )
    }
}

/// Radial projection onto `{alpha : alpha^T K alpha <= B}`, exact in the
/// K-seminorm for this centered ellipsoid.
pub fn project_ellipsoid(alpha: &[f64], k: &GramMatrix, b: f64) -> Vec<f64> {
    let q = k.quad(alpha);
    if q <= b {
        alpha.to_vec()
    } else {
        let c = (b / q).sqrt();
        alpha.iter().map(|&a| c * a).collect()
    }
}

/// One constrained instance: objective indices, zero constraints, caps.
struct Problem<'a> {
    gram: &'a GramMatrix,
    ys: Vec<f64>,
    obj_idx: Vec<usize>,
    zero_idx: Vec<usize>,
    eps: f64,
    b: f64,
    loss: &'a LossSpec,
}

impl Problem<'_> {
    fn loss_sum(&self, f: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .obj_idx
            .iter()
            .map(|&i| self.loss.evaluate(f[i], self.ys[i]))
            .collect();
        csum(&terms)
    }

    fn objective(&self, f: &[f64], alpha: &[f64]) -> f64 {
        self.loss_sum(f) + RIDGE * cdot(alpha, alpha)
    }

    /// Loss subgradient in prediction space; the K-metric subgradient of
    /// the objective as a function of alpha.
    fn subgrad(&self, f: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; f.len()];
        for &i in &self.obj_idx {
            s[i] = self.loss.subgradient(f[i], self.ys[i]);
        }
        s
    }

    /// Dykstra alternating projections onto the half-spaces and the
    /// ellipsoid, in the K-metric. `f` must equal `K alpha` on entry and
    /// does on exit; no matvecs are spent, corrections ride on stored
    /// Gram columns. Returns the number of passes.
    fn project(&self, alpha: &mut [f64], f: &mut [f64], opts: &SolveOpts) -> usize {
        let m = alpha.len();
        let k = self.gram.entries();
        let mut half_corr = vec![0.0; self.zero_idx.len()];
        let mut ell_corr = vec![0.0; m];
        let mut ell_corr_k = vec![0.0; m];
        for pass in 1..=opts.dykstra_max_passes {
            let mut moved = 0.0f64;
            for (c, &i) in self.zero_idx.iter().enumerate() {
                // y = alpha + corr e_i; project onto K_i . y <= eps.
                let g = half_corr[c];
                let v = f[i] + g * k[(i, i)];
                let theta = ((v - self.eps) / k[(i, i)]).max(0.0);
                let delta = g - theta;
                if delta != 0.0 {
                    alpha[i] += delta;
                    for j in 0..m {
                        f[j] += delta * k[(j, i)];
                    }
                    moved = moved.max(delta.abs());
                }
                half_corr[c] = theta;
            }
            // y = alpha + ell_corr; radial projection onto the ellipsoid.
            let mut fy = vec![0.0; m];
            let mut quad_terms = vec![0.0; m];
            for j in 0..m {
                fy[j] = f[j] + ell_corr_k[j];
            }
            let y: Vec<f64> = (0..m).map(|j| alpha[j] + ell_corr[j]).collect();
            for j in 0..m {
                quad_terms[j] = y[j] * fy[j];
            }
            let quad = csum(&quad_terms);
            let c = if quad <= self.b {
                1.0
            } else {
                (self.b / quad).sqrt()
            };
            for j in 0..m {
                let new_a = c * y[j];
                moved = moved.max((new_a - alpha[j]).abs());
                alpha[j] = new_a;
                f[j] = c * fy[j];
                ell_corr[j] = (1.0 - c) * y[j];
                ell_corr_k[j] = (1.0 - c) * fy[j];
            }
            if moved <= opts.dykstra_tol {
                return pass;
            }
        }
        opts.dykstra_max_passes
    }

    fn max_violation(&self, alpha: &[f64]) -> f64 {
        let f = self.gram.matvec(alpha);
        let mut v = self.gram.quad(alpha) - self.b;
        for &i in &self.zero_idx {
            v = v.max(f[i] - self.eps);
        }
        v.max(0.0)
    }

    fn solve(&self, opts: &SolveOpts) -> (Vec<f64>, SolveReport) {
        let m = self.ys.len();
        let mut alpha = vec![0.0; m];
        let mut f = vec![0.0; m];
        let mut best_alpha = alpha.clone();
        let mut best_obj = self.objective(&f, &alpha);
        let mut delta = (0.5 * best_obj.abs()).max(1.0);
        let mut window_anchor = best_obj;
        let mut window_count = 0usize;
        let mut iterations = 0usize;
        // With no objective terms alpha = 0 is already optimal (losses are
        // minimized at matching predictions and 0 is feasible).
        let mut converged = self.obj_idx.is_empty();
        while !converged && iterations < opts.max_iters {
            iterations += 1;
            let s = self.subgrad(&f);
            let ks = self.gram.matvec(&s);
            let snorm2 = cdot(&s, &ks);
            let cur = self.loss_sum(&f);
            if snorm2 <= 1e-30 {
                converged = true;
                break;
            }
            // Polyak target-level step toward best - delta.
            let step = (cur - (best_obj - delta)).max(0.0) / snorm2;
            for j in 0..m {
                alpha[j] -= step * s[j];
                f[j] -= step * ks[j];
            }
            self.project(&mut alpha, &mut f, opts);
            // Kill incremental drift in f periodically.
            if iterations % 64 == 0 {
                f = self.gram.matvec(&alpha);
            }
            let obj = self.objective(&f, &alpha);
            if obj < best_obj {
                best_obj = obj;
                best_alpha.copy_from_slice(&alpha);
            }
            // Window bookkeeping: the level stays only while progress is
            // commensurate with the optimism gap, and a flat window after
            // the coarse phase is convergence.
            window_count += 1;
            if window_count >= opts.stall_window {
                let gain = window_anchor - best_obj;
                if gain < 0.25 * delta {
                    delta *= 0.5;
                }
                if gain < opts.objective_tol * (1.0 + best_obj.abs())
                    && delta <= 0.01 * (1.0 + best_obj.abs())
                {
                    converged = true;
                }
                window_anchor = best_obj;
                window_count = 0;
            }
        }
        let violation = self.max_violation(&best_alpha);
        let norm_used = self.gram.quad(&best_alpha);
        let report = SolveReport {
            objective: best_obj,
            iterations,
            max_constraint_violation: violation,
            norm_used,
            converged: converged && violation <= opts.feas_tol * (1.0 + self.b),
            seed: opts.seed,
        };
        (best_alpha, report)
    }

    /// Norm of the projected subgradient at `alpha`, estimated by a short
    /// trial step and re-projection, measured in the K-seminorm.
    fn kkt_residual(&self, alpha: &[f64], opts: &SolveOpts) -> f64 {
        let m = alpha.len();
        let f = self.gram.matvec(alpha);
        let s = self.subgrad(&f);
        let ks = self.gram.matvec(&s);
        let snorm = cdot(&s, &ks).max(0.0).sqrt();
        let tau = 1e-4 / (1.0 + snorm);
        let mut trial: Vec<f64> = (0..m).map(|j| alpha[j] - tau * s[j]).collect();
        let mut ft: Vec<f64> = (0..m).map(|j| f[j] - tau * ks[j]).collect();
        self.project(&mut trial, &mut ft, opts);
        let d: Vec<f64> = (0..m).map(|j| trial[j] - alpha[j]).collect();
        self.gram.quad(&d).max(0.0).sqrt() / tau
    }
}

fn check_convex(loss: &LossSpec) -> Result<()> {
    if !loss.is_convex() {
        return Err(Error::NonConvexLoss(loss.name().to_string()));
    }
    Ok(())
}

fn check_b(b: f64) -> Result<()> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "norm bound B must be positive and finite, got {b}"
        )));
    }
    Ok(())
}

/// Minimize `sum_{i: y_i > 0} loss(f_i, y_i)` subject to `K_i . alpha <= eps`
/// on every zero-labeled sample and `alpha^T K alpha <= B`.
pub fn solve_reliable(
    data: &Dataset,
    loss: &LossSpec,
    spec: &KernelSpec,
    b: f64,
    eps: f64,
    opts: &SolveOpts,
) -> Result<(DualSolution, SolveReport)> {
    check_convex(loss)?;
    check_b(b)?;
    if eps < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "zero-constraint slack eps must be nonnegative, got {eps}"
        )));
    }
    if data.label_range() != LabelRange::ZeroOne {
        return Err(Error::WrongLabelRange {
            expected: LabelRange::ZeroOne.to_string(),
            got: data.label_range().to_string(),
        });
    }
    let g = gram(data, spec)?;
    let ys: Vec<f64> = (0..data.len()).map(|i| data.y(i)).collect();
    let obj_idx: Vec<usize> = (0..data.len()).filter(|&i| ys[i] > 0.0).collect();
    let zero_idx: Vec<usize> = (0..data.len()).filter(|&i| ys[i] == 0.0).collect();
    let problem = Problem {
        gram: &g,
        ys,
        obj_idx,
        zero_idx,
        eps,
        b,
        loss,
    };
    let (alpha, report) = problem.solve(opts);
    let support = data.samples().iter().map(|s| s.x().to_vec()).collect();
    Ok((DualSolution::new(alpha, support, spec.clone(), b)?, report))
}

/// Minimize `sum_i loss(f_i, y_i)` over the ellipsoid alone.
pub fn solve_norm_ball(
    data: &Dataset,
    loss: &LossSpec,
    spec: &KernelSpec,
    b: f64,
    opts: &SolveOpts,
) -> Result<(DualSolution, SolveReport)> {
    check_convex(loss)?;
    check_b(b)?;
    let g = gram(data, spec)?;
    let ys: Vec<f64> = (0..data.len()).map(|i| data.y(i)).collect();
    let obj_idx: Vec<usize> = (0..data.len()).collect();
    let problem = Problem {
        gram: &g,
        ys,
        obj_idx,
        zero_idx: Vec::new(),
        eps: 0.0,
        b,
        loss,
    };
    let (alpha, report) = problem.solve(opts);
    let support = data.samples().iter().map(|s| s.x().to_vec()).collect();
    Ok((DualSolution::new(alpha, support, spec.clone(), b)?, report))
}

/// Projected-subgradient KKT residual of a reliable solve at `alpha`.
/// `eps = None` drops the zero-label half-spaces (norm-ball programs).
pub fn kkt_residual(
    data: &Dataset,
    loss: &LossSpec,
    sol: &DualSolution,
    eps: Option<f64>,
    opts: &SolveOpts,
) -> Result<f64> {
    let g = gram(data, sol.spec())?;
    let ys: Vec<f64> = (0..data.len()).map(|i| data.y(i)).collect();
    let (obj_idx, zero_idx): (Vec<usize>, Vec<usize>) = match eps {
        Some(_) => (
            (0..data.len()).filter(|&i| ys[i] > 0.0).collect(),
            (0..data.len()).filter(|&i| ys[i] == 0.0).collect(),
        ),
        None => ((0..data.len()).collect(), Vec::new()),
    };
    let problem = Problem {
        gram: &g,
        ys,
        obj_idx,
        zero_idx,
        eps: eps.unwrap_or(0.0),
        b: sol.bound(),
        loss,
    };
    Ok(problem.kkt_residual(sol.alpha(), opts))
}

/// Loss sum of a solution over a dataset, using the objective convention of
/// the reliable program (positive labels only) or the norm-ball one (all).
pub fn objective_on(
    data: &Dataset,
    loss: &LossSpec,
    sol: &DualSolution,
    positives_only: bool,
) -> Result<f64> {
    let mut terms = Vec::new();
    for i in 0..data.len() {
        if positives_only && data.y(i) == 0.0 {
            continue;
        }
        terms.push(loss.evaluate(sol.predict(data.x(i))?, data.y(i)));
    }
    Ok(csum(&terms))
}

#[allow(dead_code)]
fn debug_norms(alpha: &[f64]) -> f64 {
    l2_norm(alpha)
}
