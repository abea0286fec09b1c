//! Deterministic numeric helpers shared across modules.
//!
//! Summation and polynomial evaluation here are sequential and compensated,
//! so results depend only on operand order, never on scheduling.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

/// Neumaier-compensated sum. Deterministic for a fixed slice order.
pub fn csum(values: &[f64]) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for &v in values {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

/// Compensated mean; empty input returns 0.
pub fn cmean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        csum(values) / values.len() as f64
    }
}

/// Error-free product: `a * b = p + e` exactly.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

/// Error-free sum: `a + b = s + e` exactly.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Horner evaluation with a double-double accumulator.
///
/// Coefficients are low-to-high. The compensation keeps cancellation error
/// near `cond * u^2`, which matters for Chebyshev-derived coefficients whose
/// magnitudes grow like `2^degree`.
pub fn horner_compensated(coeffs: &[f64], x: f64) -> f64 {
    let mut hi = 0.0f64;
    let mut lo = 0.0f64;
    for &c in coeffs.iter().rev() {
        let (p, pe) = two_prod(hi, x);
        let (s, se) = two_sum(p, c);
        hi = s;
        lo = lo.mul_add(x, pe + se);
        let (s2, e2) = two_sum(hi, lo);
        hi = s2;
        lo = e2;
    }
    hi + lo
}

/// Dot product of equal-length slices, compensated.
pub fn cdot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    let mut c = 0.0;
    for i in 0..a.len() {
        let (p, pe) = two_prod(a[i], b[i]);
        let t = s + p;
        if s.abs() >= p.abs() {
            c += (s - t) + p;
        } else {
            c += (p - t) + s;
        }
        s = t;
        c += pe;
    }
    s + c
}

/// Euclidean norm via compensated sum of squares.
pub fn l2_norm(v: &[f64]) -> f64 {
    cdot(v, v).sqrt()
}

/// SplitMix64 step, used to derive independent stream seeds from one seed.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One standard normal draw by Box-Muller; consumes two uniforms.
pub fn standard_normal(rng: &mut ChaCha12Rng) -> f64 {
    // u in (0, 1] so the log is finite.
    let u: f64 = 1.0 - rng.gen::<f64>();
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// Uniform point on `S^{n-1}` from normalized Gaussian coordinates.
///
/// Degenerate all-zero draws are rejected and redrawn, so the output norm is
/// always 1 up to rounding.
pub fn sample_unit_vector(n: usize, rng: &mut ChaCha12Rng) -> Vec<f64> {
    assert!(n >= 1, "dimension must be at least 1");
    loop {
        let v: Vec<f64> = (0..n).map(|_| standard_normal(rng)).collect();
        let norm = l2_norm(&v);
        if norm > 1e-12 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

/// Format a float with 17 significant digits; round-trips f64 exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn csum_handles_cancellation() {
        let vals = [1e16, 1.0, -1e16];
        assert_eq!(csum(&vals), 1.0);
    }

    #[test]
    fn horner_matches_naive_on_small_poly() {
        let c = [1.0, -2.0, 0.5];
        let x = 0.3;
        let naive = 1.0 - 2.0 * x + 0.5 * x * x;
        assert!((horner_compensated(&c, x) - naive).abs() < 1e-15);
    }

    #[test]
    fn horner_survives_large_alternating_coeffs() {
        // (1+x)^40 expanded at x = -0.999: condition number ~ 2^40 in the
        // monomial basis; the compensated result should keep ~1e-12 absolute.
        let mut c = vec![0.0; 41];
        let mut binom: f64 = 1.0;
        for (k, slot) in c.iter_mut().enumerate() {
            *slot = binom;
            binom = binom * (40 - k) as f64 / (k + 1) as f64;
        }
        let x: f64 = -0.999;
        let exact = (1.0 + x).powi(40);
        let got = horner_compensated(&c, x);
        assert!((got - exact).abs() < 1e-18, "got {got}, exact {exact}");
    }

    #[test]
    fn unit_vectors_are_unit() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for n in [1, 2, 5, 40] {
            let v = sample_unit_vector(n, &mut rng);
            assert_eq!(v.len(), n);
            assert!((l2_norm(&v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fmt_round_trips() {
        for v in [0.1, -3.25e-7, 1.0 / 3.0, 5411.0, f64::MIN_POSITIVE] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn mix_seed_separates_streams() {
        assert_ne!(mix_seed(1, 0), mix_seed(1, 1));
        assert_ne!(mix_seed(1, 0), mix_seed(2, 0));
    }
}
