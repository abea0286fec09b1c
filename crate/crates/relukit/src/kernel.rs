//! The multinomial kernel and its feature-space views.
//!
//! `MK_d(x, x') = sum_{j=0}^d (x . x')^j` is the kernel whose feature space
//! contains every ridge polynomial `p(w . x)` with `deg p <= d`; the explicit
//! ordered-tuple feature map and the embedding of such ridge functions are
//! provided for oracle-scale checks. Depth-composed variants re-kernelize
//! level by level with nonnegative per-power weights.

use nalgebra::DMatrix;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::poly::UnivariatePoly;
use crate::util::{cdot, csum, l2_norm};

/// Unit-norm tolerance for kernel arguments, matching data-layer admission.
const UNIT_TOL: f64 = 1e-6;

/// Cap on explicit feature dimensions; beyond this the map is refused.
pub const FEATURE_DIM_LIMIT: usize = 1_000_000;

fn check_unit(x: &[f64]) -> Result<()> {
    let norm = l2_norm(x);
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::NotUnitNorm {
            norm,
            tol: UNIT_TOL,
        });
    }
    Ok(())
}

/// `sum_{j=0}^d t^j` by Horner.
#[inline]
pub(crate) fn power_sum(t: f64, degree: usize) -> f64 {
    let mut acc = 1.0;
    for _ in 0..degree {
        acc = acc * t + 1.0;
    }
    acc
}

/// Multinomial kernel of degree `d` between two unit vectors.
pub fn mk_eval(x: &[f64], x2: &[f64], degree: usize) -> Result<f64> {
    if x.len() != x2.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: x2.len(),
        });
    }
    check_unit(x)?;
    check_unit(x2)?;
    Ok(power_sum(cdot(x, x2), degree))
}

/// Kernel selector: plain `MK_d`, or `depth`-fold composition where each
/// level applies `K <- sum_i a_i K^i` with `a_i = 2^i beta_i^2` taken from an
/// activation approximant.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    degree: usize,
    depth: usize,
    level_weights: Option<Vec<f64>>,
}

impl KernelSpec {
    pub fn plain(degree: usize) -> Self {
        KernelSpec {
            degree,
            depth: 1,
            level_weights: None,
        }
    }

    pub fn composed(degree: usize, depth: usize, level_weights: Vec<f64>) -> Result<Self> {
        if depth < 2 {
            return Err(Error::InvalidParameter(
                "composed kernels need depth >= 2; use plain() for depth 1".into(),
            ));
        }
        if level_weights.is_empty() || level_weights.iter().any(|&a| a < 0.0 || !a.is_finite()) {
            return Err(Error::InvalidParameter(
                "level weights must be nonnegative and finite".into(),
            ));
        }
        Ok(KernelSpec {
            degree,
            depth,
            level_weights: Some(level_weights),
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn level_weights(&self) -> Option<&[f64]> {
        self.level_weights.as_deref()
    }

    /// Kernel value between two unit vectors.
    pub fn eval(&self, x: &[f64], x2: &[f64]) -> Result<f64> {
        if x.len() != x2.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: x2.len(),
            });
        }
        check_unit(x)?;
        check_unit(x2)?;
        Ok(self.eval_dot(cdot(x, x2)))
    }

    /// Kernel value as a function of the base inner product.
    pub(crate) fn eval_dot(&self, t: f64) -> f64 {
        let mut v = power_sum(t, self.degree);
        if let Some(weights) = &self.level_weights {
            for _ in 1..self.depth {
                v = apply_level(weights, v);
            }
        }
        v
    }
}

/// `sum_i a_i v^i` by Horner.
fn apply_level(weights: &[f64], v: f64) -> f64 {
    let mut acc = 0.0;
    for &a in weights.iter().rev() {
        acc = acc * v + a;
    }
    acc
}

/// Depth-composed kernel value; `spec.depth == 1` reduces to `MK_d`.
pub fn composed_kernel_eval(x: &[f64], x2: &[f64], spec: &KernelSpec) -> Result<f64> {
    spec.eval(x, x2)
}

/// Symmetric kernel matrix over a dataset, with its PSD repair state.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
    spec: KernelSpec,
    jitter: f64,
}

impl GramMatrix {
    pub fn m(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    /// Diagonal jitter that was added to pass the PSD check (0 if none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// `K v` with a fixed row-major accumulation order.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let m = self.m();
        let mut out = vec![0.0; m];
        for i in 0..m {
            out[i] = cdot(self.entries.row(i).transpose().as_slice(), v);
        }
        out
    }

    /// Quadratic form `v^T K v`.
    pub fn quad(&self, v: &[f64]) -> f64 {
        let kv = self.matvec(v);
        cdot(v, &kv)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let m = self.m();
        for i in 0..m {
            let row: Vec<String> = (0..m)
                .map(|j| crate::util::fmt_f64(self.entries[(i, j)]))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Build the Gram matrix of `spec` over `data`.
///
/// The matrix is symmetrized by construction. A Cholesky-based PSD check
/// runs with an escalating diagonal jitter ladder (0, 1e-10, 1e-8 times the
/// max diagonal); if even the last rung fails the matrix is reported
/// indefinite rather than silently repaired.
pub fn gram(data: &Dataset, spec: &KernelSpec) -> Result<GramMatrix> {
    let m = data.len();
    let mut k = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = spec.eval_dot(cdot(data.x(i), data.x(j)));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    let max_diag = (0..m).map(|i| k[(i, i)]).fold(0.0f64, f64::max).max(1.0);
    let mut applied = 0.0;
    for jitter in [0.0, 1e-10 * max_diag, 1e-8 * max_diag] {
        let mut cand = k.clone();
        for i in 0..m {
            cand[(i, i)] += jitter;
        }
        if cand.clone().cholesky().is_some() {
            if jitter > 0.0 {
                log::warn!("gram: added diagonal jitter {jitter} to pass the PSD check");
            }
            for i in 0..m {
                k[(i, i)] += jitter;
            }
            applied = jitter;
            return Ok(GramMatrix {
                entries: k,
                spec: spec.clone(),
                jitter: applied,
            });
        }
    }
    Err(Error::IndefiniteGram { jitter: applied })
}

/// Explicit ordered-tuple feature map of `MK_d`.
///
/// Block `j` holds all products `x_{k_1} ... x_{k_j}` over ordered tuples in
/// lexicographic order, so the full dimension is `1 + n + ... + n^d`.
pub fn feature_map_explicit(x: &[f64], degree: usize) -> Result<Vec<f64>> {
    check_unit(x)?;
    let n = x.len();
    let dim = feature_dim(n, degree)?;
    let mut out = Vec::with_capacity(dim);
    out.push(1.0);
    let mut level = vec![1.0];
    for _ in 1..=degree {
        let mut next = Vec::with_capacity(level.len() * n);
        for &e in &level {
            for &c in x {
                next.push(e * c);
            }
        }
        out.extend_from_slice(&next);
        level = next;
    }
    Ok(out)
}

/// `1 + n + ... + n^d`, refused beyond [`FEATURE_DIM_LIMIT`].
pub fn feature_dim(n: usize, degree: usize) -> Result<usize> {
    let mut dim: usize = 1;
    let mut pow: usize = 1;
    for _ in 1..=degree {
        pow = pow
            .checked_mul(n)
            .filter(|&p| p <= FEATURE_DIM_LIMIT)
            .ok_or(Error::FeatureDimTooLarge {
                dim: usize::MAX,
                limit: FEATURE_DIM_LIMIT,
            })?;
        dim = dim
            .checked_add(pow)
            .filter(|&d| d <= FEATURE_DIM_LIMIT)
            .ok_or(Error::FeatureDimTooLarge {
                dim: usize::MAX,
                limit: FEATURE_DIM_LIMIT,
            })?;
    }
    Ok(dim)
}

/// A ridge polynomial `p(w . x)` embedded in the feature space of `MK_d`.
#[derive(Debug, Clone)]
pub struct RidgeEmbedding {
    pub vector: Vec<f64>,
    /// `sum_i beta_i^2 ||w||^{2i}`, the exact squared feature norm.
    pub norm_sq: f64,
}

/// Embed `x -> p(w . x)` into the feature space of `MK_{deg p}`.
///
/// Entry `(k_1, ..., k_j)` is `beta_j * w_{k_1} ... w_{k_j}`, so the feature
/// inner product with `psi(x)` telescopes back to `p(w . x)`.
pub fn embed_composed_poly(p: &UnivariatePoly, w: &[f64]) -> Result<RidgeEmbedding> {
    let norm = l2_norm(w);
    if norm > 1.0 + 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "ridge direction must have norm <= 1, got {norm}"
        )));
    }
    let n = w.len();
    let degree = p.degree();
    let dim = feature_dim(n, degree)?;
    let mut out = Vec::with_capacity(dim);
    out.push(p.coeff(0));
    let mut level = vec![1.0];
    for j in 1..=degree {
        let mut next = Vec::with_capacity(level.len() * n);
        for &e in &level {
            for &c in w {
                next.push(e * c);
            }
        }
        let beta = p.coeff(j);
        out.extend(next.iter().map(|&e| beta * e));
        level = next;
    }
    let norm_terms: Vec<f64> = (0..=degree)
        .map(|i| p.coeff(i) * p.coeff(i) * norm.powi(2 * i as i32))
        .collect();
    Ok(RidgeEmbedding {
        vector: out,
        norm_sq: csum(&norm_terms),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{LabelRange, LabeledSample};
    use crate::util::sample_unit_vector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn unit(v: Vec<f64>) -> Vec<f64> {
        let n = l2_norm(&v);
        v.into_iter().map(|x| x / n).collect()
    }

    #[test]
    fn kernel_values_by_hand() {
        let e1 = [1.0, 0.0];
        let e2 = [0.0, 1.0];
        // Orthogonal: only the j = 0 term survives.
        assert_eq!(mk_eval(&e1, &e2, 5).unwrap(), 1.0);
        // t = 1: d + 1.
        assert_eq!(mk_eval(&e1, &e1, 2).unwrap(), 3.0);
        // t = 0.5, d = 3: 1 + 0.5 + 0.25 + 0.125.
        let x = [0.5f64, 0.75f64.sqrt()];
        let y = [1.0, 0.0];
        let v = mk_eval(&x, &y, 3).unwrap();
        assert!((v - 1.875).abs() < 1e-12);
    }

    #[test]
    fn kernel_symmetry_on_random_pairs() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..50 {
            let a = sample_unit_vector(3, &mut rng);
            let b = sample_unit_vector(3, &mut rng);
            let ab = mk_eval(&a, &b, 4).unwrap();
            let ba = mk_eval(&b, &a, 4).unwrap();
            assert_eq!(ab, ba);
        }
    }

    #[test]
    fn kernel_rejects_non_unit() {
        let bad = [0.5, 0.5];
        let ok = [1.0, 0.0];
        assert!(mk_eval(&bad, &ok, 2).is_err());
        assert!(mk_eval(&ok, &[1.0], 2).is_err());
    }

    fn tiny_dataset(points: Vec<Vec<f64>>) -> Dataset {
        let samples = points
            .into_iter()
            .map(|x| LabeledSample::new(x, 0.0).unwrap())
            .collect();
        Dataset::new(samples, LabelRange::ZeroOne).unwrap()
    }

    #[test]
    fn gram_single_point_degree_two() {
        let ds = tiny_dataset(vec![vec![1.0, 0.0]]);
        let g = gram(&ds, &KernelSpec::plain(2)).unwrap();
        assert_eq!(g.m(), 1);
        assert_eq!(g.get(0, 0), 3.0);
        assert_eq!(g.jitter(), 0.0);
    }

    #[test]
    fn gram_orthogonal_pair_degree_three() {
        let ds = tiny_dataset(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let g = gram(&ds, &KernelSpec::plain(3)).unwrap();
        assert_eq!(g.get(0, 0), 4.0);
        assert_eq!(g.get(1, 1), 4.0);
        assert_eq!(g.get(0, 1), 1.0);
        assert_eq!(g.get(1, 0), 1.0);
    }

    #[test]
    fn gram_eigenvalues_respect_psd_floor() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let pts: Vec<Vec<f64>> = (0..5).map(|_| sample_unit_vector(3, &mut rng)).collect();
        let ds = tiny_dataset(pts);
        let g = gram(&ds, &KernelSpec::plain(3)).unwrap();
        let eig = nalgebra::SymmetricEigen::new(g.entries().clone());
        let max_diag = (0..5).map(|i| g.get(i, i)).fold(0.0f64, f64::max);
        for &l in eig.eigenvalues.iter() {
            assert!(l >= -1e-8 * max_diag, "eigenvalue {l}");
        }
    }

    #[test]
    fn gram_handles_duplicate_points_via_jitter_ladder() {
        // Exactly repeated points give a singular (still PSD) matrix; the
        // ladder may need a nonzero rung but must not report indefinite.
        let ds = tiny_dataset(vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]);
        let g = gram(&ds, &KernelSpec::plain(2)).unwrap();
        assert!(g.jitter() >= 0.0);
        assert_eq!(g.get(0, 1), g.get(0, 0) - g.jitter());
    }

    #[test]
    fn feature_map_small_cases() {
        // n = 1, d = 2, x = (1): (1, 1, 1).
        let f = feature_map_explicit(&[1.0], 2).unwrap();
        assert_eq!(f, vec![1.0, 1.0, 1.0]);
        // n = 2, d = 1: (1, a, b).
        let x = unit(vec![0.6, -0.8]);
        let f = feature_map_explicit(&x, 1).unwrap();
        assert_eq!(f, vec![1.0, x[0], x[1]]);
    }

    #[test]
    fn feature_map_matches_kernel() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for n in 1..=3usize {
            for d in 0..=3usize {
                for _ in 0..20 {
                    let a = sample_unit_vector(n, &mut rng);
                    let b = sample_unit_vector(n, &mut rng);
                    let fa = feature_map_explicit(&a, d).unwrap();
                    let fb = feature_map_explicit(&b, d).unwrap();
                    let lhs = cdot(&fa, &fb);
                    let rhs = mk_eval(&a, &b, d).unwrap();
                    assert!((lhs - rhs).abs() <= 1e-9, "n={n} d={d}: {lhs} vs {rhs}");
                }
            }
        }
    }

    #[test]
    fn feature_dim_limit_enforced() {
        assert!(feature_map_explicit(&sample_unit_vector(10, &mut ChaCha12Rng::seed_from_u64(0)), 7).is_err());
        assert_eq!(feature_dim(2, 3).unwrap(), 15);
    }

    #[test]
    fn ridge_embedding_of_identity() {
        // p(t) = t embeds as (0, w_1, ..., w_n) with unit norm for unit w.
        let w = unit(vec![0.3, -0.4, 0.5]);
        let emb = embed_composed_poly(&UnivariatePoly::identity(), &w).unwrap();
        assert_eq!(emb.vector.len(), 4);
        assert_eq!(emb.vector[0], 0.0);
        assert_eq!(&emb.vector[1..], w.as_slice());
        assert!((emb.norm_sq - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ridge_embedding_reproduces_ridge_values() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let p = UnivariatePoly::new(vec![0.25, -1.0, 0.5, 2.0]).unwrap();
        let w = sample_unit_vector(3, &mut rng);
        let emb = embed_composed_poly(&p, &w).unwrap();
        for _ in 0..30 {
            let x = sample_unit_vector(3, &mut rng);
            let psi = feature_map_explicit(&x, p.degree()).unwrap();
            let via_features = cdot(&emb.vector, &psi);
            let direct = p.eval(cdot(&w, &x));
            assert!((via_features - direct).abs() < 1e-12);
        }
        // Norm matches sum beta_i^2 ||w||^{2i} = weight for unit w.
        assert!((emb.norm_sq - p.weight()).abs() < 1e-12);
        assert!((cdot(&emb.vector, &emb.vector) - emb.norm_sq).abs() < 1e-12);
    }

    #[test]
    fn ridge_embedding_rejects_long_direction() {
        assert!(embed_composed_poly(&UnivariatePoly::identity(), &[1.0, 1.0]).is_err());
    }

    #[test]
    fn composed_depth_one_equals_plain() {
        let spec = KernelSpec::plain(4);
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let a = sample_unit_vector(3, &mut rng);
        let b = sample_unit_vector(3, &mut rng);
        assert_eq!(
            composed_kernel_eval(&a, &b, &spec).unwrap(),
            mk_eval(&a, &b, 4).unwrap()
        );
    }

    #[test]
    fn composed_diagonal_follows_scalar_recurrence() {
        let weights = vec![0.5, 0.25, 0.125];
        for depth in 2..=4usize {
            let spec = KernelSpec::composed(3, depth, weights.clone()).unwrap();
            let e1 = [1.0, 0.0, 0.0];
            let got = composed_kernel_eval(&e1, &e1, &spec).unwrap();
            // Independent scalar iteration of v <- sum_i a_i v^i from d + 1.
            let mut v = 4.0f64;
            for _ in 1..depth {
                v = weights
                    .iter()
                    .enumerate()
                    .map(|(i, a)| a * v.powi(i as i32))
                    .sum();
            }
            assert!((got - v).abs() <= 1e-12 * v.abs().max(1.0), "depth {depth}");
        }
    }

    #[test]
    fn composed_orthogonal_with_zero_constant_weight() {
        // Orthogonal inputs give t = 0, so level 1 is the bare 0-power term
        // (value 1); with a_0 = 0 the next levels evaluate sum_{i>=1} a_i.
        let weights = vec![0.0, 0.3, 0.1];
        let spec = KernelSpec::composed(2, 2, weights.clone()).unwrap();
        let e1 = [1.0, 0.0];
        let e2 = [0.0, 1.0];
        assert_eq!(mk_eval(&e1, &e2, 2).unwrap(), 1.0);
        let got = composed_kernel_eval(&e1, &e2, &spec).unwrap();
        assert!((got - 0.4).abs() < 1e-15);
    }

    #[test]
    fn composed_gram_passes_psd_check() {
        let mut rng = ChaCha12Rng::seed_from_u64(33);
        let pts: Vec<Vec<f64>> = (0..6).map(|_| sample_unit_vector(3, &mut rng)).collect();
        let ds = tiny_dataset(pts);
        let spec = KernelSpec::composed(2, 2, vec![0.2, 0.4, 0.3]).unwrap();
        assert!(gram(&ds, &spec).is_ok());
    }

    #[test]
    fn composed_constructor_validation() {
        assert!(KernelSpec::composed(2, 1, vec![1.0]).is_err());
        assert!(KernelSpec::composed(2, 2, vec![-1.0]).is_err());
        assert!(KernelSpec::composed(2, 2, vec![]).is_err());
    }

    #[test]
    fn matvec_and_quad_consistency() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let pts: Vec<Vec<f64>> = (0..4).map(|_| sample_unit_vector(2, &mut rng)).collect();
        let ds = tiny_dataset(pts);
        let g = gram(&ds, &KernelSpec::plain(2)).unwrap();
        let v = vec![0.5, -1.0, 0.25, 2.0];
        let kv = g.matvec(&v);
        let mut expect = vec![0.0; 4];
        for i in 0..4 {
            for j in 0..4 {
                expect[i] += g.get(i, j) * v[j];
            }
        }
        for i in 0..4 {
            assert!((kv[i] - expect[i]).abs() < 1e-12);
        }
        assert!((g.quad(&v) - cdot(&v, &kv)).abs() < 1e-12);
    }
}
