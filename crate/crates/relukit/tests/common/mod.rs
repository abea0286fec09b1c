//! Shared helpers for the integration suites: an independent brute-force
//! reference for the reliable program, kept deliberately simple so it can
//! serve as ground truth for the iterative solver.
//!
//! The search runs in prediction space `f = K alpha` rather than alpha
//! space: there the zero-label constraints are coordinate clips, the norm
//! constraint `f' K^-1 f <= B` is repaired by radial scaling, and every
//! coordinate is bounded by `sqrt(B K_ii)`, so a dense grid plus direction
//! search cannot wander off to the huge dual coefficients the kernel
//! optimum sometimes needs.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use relukit::kernel::{gram, KernelSpec};
use relukit::util::{csum, sample_unit_vector};
use relukit::{Dataset, LossSpec};

/// Dense Cholesky of the (jittered) Gram matrix; `m <= 4` here, so the
/// naive algorithm is exact enough.
struct Chol {
    l: Vec<Vec<f64>>,
}

impl Chol {
    fn new(mut a: Vec<Vec<f64>>) -> Self {
        let m = a.len();
        let scale = (0..m).map(|i| a[i][i]).fold(0.0f64, f64::max);
        let mut jitter = 1e-12 * scale.max(1.0);
        loop {
            let mut l = vec![vec![0.0; m]; m];
            let mut ok = true;
            'outer: for i in 0..m {
                for j in 0..=i {
                    let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
                    if i == j {
                        let d = a[i][i] - s;
                        if d <= 0.0 {
                            ok = false;
                            break 'outer;
                        }
                        l[i][j] = d.sqrt();
                    } else {
                        l[i][j] = (a[i][j] - s) / l[j][j];
                    }
                }
            }
            if ok {
                return Chol { l };
            }
            for (i, row) in a.iter_mut().enumerate() {
                row[i] += jitter;
            }
            jitter *= 10.0;
        }
    }

    /// `f' K^-1 f`, via one forward substitution.
    fn quad_inv(&self, f: &[f64]) -> f64 {
        let m = f.len();
        let mut z = vec![0.0; m];
        for i in 0..m {
            let s: f64 = (0..i).map(|k| self.l[i][k] * z[k]).sum();
            z[i] = (f[i] - s) / self.l[i][i];
        }
        z.iter().map(|v| v * v).sum()
    }
}

pub struct ReliableProgram {
    chol: Chol,
    ys: Vec<f64>,
    loss: LossSpec,
    eps: f64,
    b: f64,
    /// Per-coordinate search bound `sqrt(B K_ii)`.
    fmax: Vec<f64>,
}

impl ReliableProgram {
    pub fn new(data: &Dataset, loss: LossSpec, spec: &KernelSpec, b: f64, eps: f64) -> Self {
        let g = gram(data, spec).expect("gram on reference instance");
        let m = data.len();
        let k: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| g.get(i, j)).collect()).collect();
        let fmax = (0..m).map(|i| (b * k[i][i]).sqrt()).collect();
        ReliableProgram {
            chol: Chol::new(k),
            ys: (0..data.len()).map(|i| data.y(i)).collect(),
            loss,
            eps,
            b,
            fmax,
        }
    }

    pub fn objective(&self, f: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .ys
            .iter()
            .zip(f)
            .filter(|(&y, _)| y > 0.0)
            .map(|(&y, &fi)| self.loss.evaluate(fi, y))
            .collect();
        csum(&terms)
    }

    /// Clip zero-label coordinates to the slack, then scale radially into
    /// the norm ellipsoid. Scaling shrinks magnitudes, so the clip survives.
    pub fn repair(&self, mut f: Vec<f64>) -> Vec<f64> {
        for (fi, &y) in f.iter_mut().zip(&self.ys) {
            if y == 0.0 && *fi > self.eps {
                *fi = self.eps;
            }
        }
        let q = self.chol.quad_inv(&f);
        if q > self.b {
            let s = (self.b / q).sqrt();
            f.iter_mut().for_each(|v| *v *= s);
        }
        f
    }
}

/// Nonzero directions in `{-1, 0, 1}^m` plus a fixed batch of random unit
/// directions, so the search can slide along constraint boundaries where
/// axis moves alone stall.
fn search_directions(m: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    let total = 3usize.pow(m as u32);
    for code in 0..total {
        let mut d = Vec::with_capacity(m);
        let mut c = code;
        for _ in 0..m {
            d.push((c % 3) as f64 - 1.0);
            c /= 3;
        }
        if d.iter().any(|&v| v != 0.0) {
            dirs.push(d);
        }
    }
    let mut rng = ChaCha12Rng::seed_from_u64(0x5eed);
    for _ in 0..96 {
        dirs.push(sample_unit_vector(m, &mut rng));
    }
    dirs
}

/// Dense grid over the per-coordinate box, every point repaired into the
/// feasible set, then direction search with step halving.
pub fn reference_optimum(program: &ReliableProgram, m: usize, axis_points: usize) -> f64 {
    let mut best_f = program.repair(vec![0.0; m]);
    let mut best = program.objective(&best_f);

    let mut idx = vec![0usize; m];
    loop {
        let f: Vec<f64> = idx
            .iter()
            .zip(&program.fmax)
            .map(|(&i, &fm)| -fm + 2.0 * fm * i as f64 / (axis_points - 1) as f64)
            .collect();
        let f = program.repair(f);
        let obj = program.objective(&f);
        if obj < best {
            best = obj;
            best_f = f;
        }
        let mut k = 0;
        while k < m {
            idx[k] += 1;
            if idx[k] < axis_points {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == m {
            break;
        }
    }

    let dirs = search_directions(m);
    let span = program.fmax.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut step = span / (axis_points - 1) as f64;
    while step > 1e-10 {
        let mut improved = false;
        for d in &dirs {
            let cand: Vec<f64> = best_f.iter().zip(d).map(|(&a, &di)| a + step * di).collect();
            let cand = program.repair(cand);
            let obj = program.objective(&cand);
            if obj < best {
                best = obj;
                best_f = cand;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}
