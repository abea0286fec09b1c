//! Weight-bounded ReLU networks and the exact gadget constructions that turn
//! max-affine regression, PReLU, and clipped-ramp transfer functions into
//! network problems.
//!
//! Every gadget is an algebraic identity, not an approximation: the builders
//! arrange `relu` units so cancellations are exact, and tests hold them to
//! float-roundoff tolerances. Approximation enters only through
//! [`polynomialize_network`], which swaps the activation for a certified
//! polynomial and samples the resulting gap.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::approx::{cheb_activation, Activation, ApproxOpts, ChebApprox};
use crate::error::{Error, Result};
use crate::util::{cdot, l2_norm, sample_unit_vector};

/// Relative slop for declared-bound checks at construction.
const BOUND_TOL: f64 = 1e-9;

/// Points drawn for the polynomialization gap certificate.
const CERT_POINTS: usize = 10_000;
const CERT_SEED: u64 = 424_243;

fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn within(value: f64, bound: f64) -> bool {
    value <= bound + BOUND_TOL * (1.0 + bound)
}

fn check_unit(w: &[f64], what: &str) -> Result<()> {
    let norm = l2_norm(w);
    if !within(norm, 1.0) {
        return Err(Error::InvalidParameter(format!(
            "{what} must have norm at most 1, got {norm}"
        )));
    }
    Ok(())
}

/// Declared magnitude bounds for a network.
///
/// `m0` caps layer-0 row l2 norms, `w` caps later rows in l1, and `m` bounds
/// every unit's pre-activation input on unit-sphere inputs. The first two are
/// enforced at construction; `m` is definitional and checked empirically via
/// [`ReluNetwork::max_unit_input`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkBounds {
    pub m0: f64,
    pub w: f64,
    pub m: f64,
}

/// Per-layer record of a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Pre-activation unit inputs, one vector per hidden layer.
    pub inputs: Vec<Vec<f64>>,
    /// Post-activation unit outputs, one vector per hidden layer.
    pub outputs: Vec<Vec<f64>>,
    pub value: f64,
}

/// Fully-connected network with `depth` hidden layers, a single linear
/// output, and no biases. `layers[i]` holds the weight rows of layer `i`;
/// the last matrix is the output row.
#[derive(Debug, Clone)]
pub struct ReluNetwork {
    layers: Vec<Vec<Vec<f64>>>,
    activation: Activation,
    bounds: NetworkBounds,
}

fn forward(layers: &[Vec<Vec<f64>>], x: &[f64], act: &dyn Fn(f64) -> f64) -> Result<ForwardTrace> {
    let expected = layers[0][0].len();
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    let depth = layers.len() - 1;
    let mut h = x.to_vec();
    let mut inputs = Vec::with_capacity(depth);
    let mut outputs = Vec::with_capacity(depth);
    for rows in &layers[..depth] {
        let z: Vec<f64> = rows.iter().map(|row| cdot(row, &h)).collect();
        let y: Vec<f64> = z.iter().map(|&t| act(t)).collect();
        inputs.push(z);
        h = y.clone();
        outputs.push(y);
    }
    let value = cdot(&layers[depth][0], &h);
    Ok(ForwardTrace {
        inputs,
        outputs,
        value,
    })
}

impl ReluNetwork {
    /// Validates shapes and the declared `m0` / `w` bounds. The input-side
    /// bound `m` is not checkable row by row; see [`Self::max_unit_input`].
    pub fn new(
        layers: Vec<Vec<Vec<f64>>>,
        activation: Activation,
        bounds: NetworkBounds,
    ) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::InvalidParameter(
                "network needs at least one hidden layer and an output row".into(),
            ));
        }
        if !(bounds.m0 > 0.0 && bounds.w > 0.0 && bounds.m > 0.0)
            || !(bounds.m0.is_finite() && bounds.w.is_finite() && bounds.m.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "bounds must be positive and finite, got {bounds:?}"
            )));
        }
        let last = layers.len() - 1;
        if layers[last].len() != 1 {
            return Err(Error::InvalidParameter(format!(
                "output layer must have exactly one row, got {}",
                layers[last].len()
            )));
        }
        let mut prev_units = 0usize;
        for (i, rows) in layers.iter().enumerate() {
            if rows.is_empty() {
                return Err(Error::InvalidParameter(format!("layer {i} is empty")));
            }
            for row in rows {
                if row.is_empty() || row.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "layer {i} has an empty or non-finite row"
                    )));
                }
                if i > 0 && row.len() != prev_units {
                    return Err(Error::DimensionMismatch {
                        expected: prev_units,
                        got: row.len(),
                    });
                }
                if i == 0 {
                    let norm = l2_norm(row);
                    if !within(norm, bounds.m0) {
                        return Err(Error::InvalidParameter(format!(
                            "layer-0 row norm {norm} exceeds M0 = {}",
                            bounds.m0
                        )));
                    }
                } else {
                    let norm = l1_norm(row);
                    if !within(norm, bounds.w) {
                        return Err(Error::InvalidParameter(format!(
                            "layer-{i} row l1 norm {norm} exceeds W = {}",
                            bounds.w
                        )));
                    }
                }
            }
            if i == 0 {
                let width = rows[0].len();
                if rows.iter().any(|r| r.len() != width) {
                    return Err(Error::InvalidParameter(
                        "layer-0 rows have inconsistent widths".into(),
                    ));
                }
            }
            prev_units = rows.len();
        }
        Ok(ReluNetwork {
            layers,
            activation,
            bounds,
        })
    }

    /// Number of hidden layers.
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0][0].len()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn bounds(&self) -> NetworkBounds {
        self.bounds
    }

    pub fn layers(&self) -> &[Vec<Vec<f64>>] {
        &self.layers
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.eval_trace(x).map(|tr| tr.value)
    }

    pub fn eval_trace(&self, x: &[f64]) -> Result<ForwardTrace> {
        forward(&self.layers, x, &|t| self.activation.eval(t))
    }

    /// Largest pre-activation magnitude over the given inputs, for checking
    /// the declared `m` empirically.
    pub fn max_unit_input(&self, points: &[Vec<f64>]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for x in points {
            let tr = self.eval_trace(x)?;
            for z in &tr.inputs {
                for &v in z {
                    worst = worst.max(v.abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Embed `x` as `(x, 1)/sqrt(2)`, the bias-slot convention used by
/// [`build_piecewise_transfer`]. Unit vectors stay unit.
pub fn lift_input(x: &[f64]) -> Vec<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out: Vec<f64> = x.iter().map(|v| v * s).collect();
    out.push(s);
    out
}

/// Exact pairwise max: `max(a, b) = relu(a - b) + relu(b) - relu(-b)` with
/// `a = w1 . x`, `b = w2 . x`. One hidden layer of three units.
pub fn build_max2(w1: &[f64], w2: &[f64]) -> Result<ReluNetwork> {
    if w1.len() != w2.len() {
        return Err(Error::DimensionMismatch {
            expected: w1.len(),
            got: w2.len(),
        });
    }
    check_unit(w1, "w1")?;
    check_unit(w2, "w2")?;
    let diff: Vec<f64> = w1.iter().zip(w2).map(|(a, b)| a - b).collect();
    let neg: Vec<f64> = w2.iter().map(|v| -v).collect();
    let layers = vec![
        vec![diff, w2.to_vec(), neg],
        vec![vec![1.0, 1.0, -1.0]],
    ];
    ReluNetwork::new(
        layers,
        Activation::Relu,
        NetworkBounds {
            m0: 2.0,
            w: 3.0,
            m: 2.0,
        },
    )
}

/// Sum of `k` pairwise maxes, one max2 gadget per pair laid side by side.
/// Output l1 weight is exactly `3k`.
pub fn build_sum_max2affine(pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<ReluNetwork> {
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("need at least one pair".into()));
    }
    let n = pairs[0].0.len();
    let mut rows = Vec::with_capacity(3 * pairs.len());
    let mut out = Vec::with_capacity(3 * pairs.len());
    for (w1, w2) in pairs {
        if w1.len() != n || w2.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: if w1.len() != n { w1.len() } else { w2.len() },
            });
        }
        check_unit(w1, "pair weight")?;
        check_unit(w2, "pair weight")?;
        rows.push(w1.iter().zip(w2).map(|(a, b)| a - b).collect());
        rows.push(w2.clone());
        rows.push(w2.iter().map(|v| -v).collect());
        out.extend_from_slice(&[1.0, 1.0, -1.0]);
    }
    let k = pairs.len() as f64;
    ReluNetwork::new(
        vec![rows, vec![out]],
        Activation::Relu,
        NetworkBounds {
            m0: 2.0,
            w: 3.0 * k,
            m: 2.0,
        },
    )
}

/// Exact max of `k` linear functions via a balanced tree of pairwise maxes.
///
/// Leaves carry triples `(-a, a, b-a)` whose relu outputs combine with signs
/// `(-1, +1, +1)` to `a + relu(b - a) = max(a, b)`; inner layers repeat the
/// same triple pattern on the child combinations, so every level halves the
/// count until one value remains. `k` short of a power of two is padded with
/// copies of `w1`.
pub fn build_max_k_affine(ws: &[Vec<f64>]) -> Result<ReluNetwork> {
    if ws.is_empty() {
        return Err(Error::InvalidParameter("need at least one weight".into()));
    }
    let n = ws[0].len();
    for w in ws {
        if w.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: w.len(),
            });
        }
        check_unit(w, "max-affine weight")?;
    }
    let mut size = 2usize;
    while size < ws.len() {
        size *= 2;
    }
    let mut vs: Vec<Vec<f64>> = ws.to_vec();
    while vs.len() < size {
        vs.push(ws[0].clone());
    }

    let mut layers: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut rows = Vec::with_capacity(3 * size / 2);
    for pair in vs.chunks(2) {
        let (a, b) = (&pair[0], &pair[1]);
        rows.push(a.iter().map(|v| -v).collect());
        rows.push(a.clone());
        rows.push(b.iter().zip(a).map(|(bb, aa)| bb - aa).collect());
    }
    layers.push(rows);

    let mut triples = size / 2;
    while triples > 1 {
        let prev_units = 3 * triples;
        let mut rows = Vec::with_capacity(3 * triples / 2);
        for t in 0..triples / 2 {
            let mut a_vec = vec![0.0; prev_units];
            a_vec[6 * t] = -1.0;
            a_vec[6 * t + 1] = 1.0;
            a_vec[6 * t + 2] = 1.0;
            let mut b_vec = vec![0.0; prev_units];
            b_vec[6 * t + 3] = -1.0;
            b_vec[6 * t + 4] = 1.0;
            b_vec[6 * t + 5] = 1.0;
            rows.push(a_vec.iter().map(|v| -v).collect());
            rows.push(a_vec.clone());
            rows.push(b_vec.iter().zip(&a_vec).map(|(b, a)| b - a).collect());
        }
        layers.push(rows);
        triples /= 2;
    }
    layers.push(vec![vec![-1.0, 1.0, 1.0]]);

    let depth = layers.len() - 1;
    // A single-triple tree never sees the l1-6 combination rows.
    let w_bound = if depth == 1 { 3.0 } else { 6.0 };
    ReluNetwork::new(
        layers,
        Activation::Relu,
        NetworkBounds {
            m0: 2.0,
            w: w_bound,
            m: 2.0,
        },
    )
}

/// PReLU with slope `a` on the negative side:
/// `relu(w.x) - a relu(-w.x)`. Leaky ReLU is `a = 0.01`.
pub fn build_prelu(w: &[f64], a: f64) -> Result<ReluNetwork> {
    check_unit(w, "w")?;
    if !(a.abs() <= 1.0 + BOUND_TOL) {
        return Err(Error::InvalidParameter(format!(
            "slope magnitude must be at most 1, got {a}"
        )));
    }
    let neg: Vec<f64> = w.iter().map(|v| -v).collect();
    ReluNetwork::new(
        vec![vec![w.to_vec(), neg], vec![vec![1.0, -a]]],
        Activation::Relu,
        NetworkBounds {
            m0: 1.0,
            w: (1.0 + a.abs()).max(1.0),
            m: 1.0,
        },
    )
}

/// The clipped ramp `max(0, min(1/2 + C w.x, 1))` as a two-unit network:
/// `relu(1/2 + Ct) - relu(-1/2 + Ct)`.
///
/// The network definition has no bias slot, so callers must feed inputs
/// through [`lift_input`]; the `1/sqrt(2)` lift factor is cancelled by the
/// `sqrt(2)` output weights through relu homogeneity.
pub fn build_piecewise_transfer(w: &[f64], c: f64) -> Result<ReluNetwork> {
    check_unit(w, "w")?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "slope C must be positive and finite, got {c}"
        )));
    }
    let mut hi: Vec<f64> = w.iter().map(|v| c * v).collect();
    let mut lo = hi.clone();
    hi.push(0.5);
    lo.push(-0.5);
    let r = std::f64::consts::SQRT_2;
    let m0 = (c * c + 0.25).sqrt();
    ReluNetwork::new(
        vec![vec![hi, lo], vec![vec![r, -r]]],
        Activation::Relu,
        NetworkBounds {
            m0,
            w: 2.0 * r,
            m: m0,
        },
    )
}

/// Network with the activation replaced by a Chebyshev-basis polynomial.
/// Weights are those of the source network.
#[derive(Debug, Clone)]
pub struct PolyNetwork {
    layers: Vec<Vec<Vec<f64>>>,
    poly: ChebApprox,
}

impl PolyNetwork {
    pub fn poly(&self) -> &ChebApprox {
        &self.poly
    }

    pub fn layers(&self) -> &[Vec<Vec<f64>>] {
        &self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0][0].len()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.eval_trace(x).map(|tr| tr.value)
    }

    pub fn eval_trace(&self, x: &[f64]) -> Result<ForwardTrace> {
        forward(&self.layers, x, &|t| self.poly.eval(t))
    }
}

/// Sampled evidence that the polynomial substitute tracks the network.
///
/// `layer_sup[i]` is the worst unit-output gap seen at hidden layer `i+1`
/// and must stay below `layer_bound[i] = (i+1) eps / (W^(D-i-1) D)`; the
/// output gap must stay below `eps`. This certifies an empirical sup over
/// the sampled points, not the true sup.
#[derive(Debug, Clone)]
pub struct GapCertificate {
    pub eps: f64,
    /// Per-activation accuracy `eps / (W^D D)` used for the substitute.
    pub eps_act: f64,
    /// Interval radius the substitute is certified on.
    pub radius: f64,
    /// Worst output gap over the sample.
    pub sup_gap: f64,
    pub layer_sup: Vec<f64>,
    pub layer_bound: Vec<f64>,
    pub points: usize,
    /// Worst pre-activation magnitude of the exact network on the sample.
    pub max_unit_input: f64,
}

/// Replace the activation with a polynomial of accuracy `eps / (W^D D)` on
/// `[-2M, 2M]` and certify the output gap at `eps` over sampled sphere
/// points plus `extra` (typically the training inputs).
///
/// The per-layer budget `i eps / (W^(D-i) D)` is checked on every sampled
/// input; a violation anywhere reports the worst offending layer, with the
/// output counted as layer `D+1`.
pub fn polynomialize_network(
    net: &ReluNetwork,
    eps: f64,
    extra: &[Vec<f64>],
) -> Result<(PolyNetwork, GapCertificate)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "accuracy must lie in (0, 1), got {eps}"
        )));
    }
    let depth = net.depth();
    let d = depth as f64;
    let w_eff = net.bounds.w.max(1.0);
    let radius = (2.0 * net.bounds.m).max(1.0);
    let eps_act = eps / (w_eff.powi(depth as i32) * d);
    let poly = cheb_activation(net.activation, eps_act, radius, &ApproxOpts::default())?;
    let pnet = PolyNetwork {
        layers: net.layers.clone(),
        poly,
    };

    let layer_bound: Vec<f64> = (1..=depth)
        .map(|i| i as f64 * eps / (w_eff.powi((depth - i) as i32) * d))
        .collect();
    let n = net.input_dim();
    let mut rng = ChaCha12Rng::seed_from_u64(CERT_SEED);
    let mut layer_sup = vec![0.0f64; depth];
    let mut sup_gap: f64 = 0.0;
    let mut max_unit_input: f64 = 0.0;
    // Worst constraint excess seen, as (layer, gap, bound).
    let mut violation: Option<(usize, f64, f64)> = None;
    let note = |bad: &mut Option<(usize, f64, f64)>, layer, gap: f64, bound: f64| {
        if gap > bound + BOUND_TOL * (1.0 + bound) {
            let excess = gap - bound;
            if bad.map_or(true, |(_, g, b)| excess > g - b) {
                *bad = Some((layer, gap, bound));
            }
        }
    };

    let mut points = 0usize;
    let mut sampled: Vec<Vec<f64>> = (0..CERT_POINTS)
        .map(|_| sample_unit_vector(n, &mut rng))
        .collect();
    sampled.extend_from_slice(extra);
    for x in &sampled {
        let tr = net.eval_trace(x)?;
        let trp = pnet.eval_trace(x)?;
        for i in 0..depth {
            let gap = tr.outputs[i]
                .iter()
                .zip(&trp.outputs[i])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            layer_sup[i] = layer_sup[i].max(gap);
            note(&mut violation, i + 1, gap, layer_bound[i]);
            for &z in &tr.inputs[i] {
                max_unit_input = max_unit_input.max(z.abs());
            }
        }
        let gap = (tr.value - trp.value).abs();
        sup_gap = sup_gap.max(gap);
        note(&mut violation, depth + 1, gap, eps);
        points += 1;
    }
    if let Some((layer, gap, bound)) = violation {
        return Err(Error::CertificationFailed { layer, gap, bound });
    }
    let cert = GapCertificate {
        eps,
        eps_act,
        radius,
        sup_gap,
        layer_sup,
        layer_bound,
        points,
        max_unit_input,
    };
    Ok((pnet, cert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn unit(v: &[f64]) -> Vec<f64> {
        let norm = l2_norm(v);
        v.iter().map(|x| x / norm).collect()
    }

    #[test]
    fn single_unit_evaluates_relu() {
        let net = ReluNetwork::new(
            vec![vec![vec![1.0, 0.0]], vec![vec![1.0]]],
            Activation::Relu,
            NetworkBounds {
                m0: 1.0,
                w: 1.0,
                m: 1.0,
            },
        )
        .unwrap();
        assert_eq!(net.eval(&[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(net.eval(&[-1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(net.depth(), 1);
        assert!(net.eval(&[1.0]).is_err());
    }

    #[test]
    fn max2_on_scalar_slots() {
        // Slots pick out a = x_1, b = x_2; the eval wiring follows
        // relu(a-b) + relu(b) - relu(-b).
        let net = build_max2(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(net.eval(&[3.0, 5.0]).unwrap(), 5.0);
        assert_eq!(net.eval(&[-1.0, -4.0]).unwrap(), -1.0);
        assert_eq!(net.bounds().w, 3.0);
    }

    #[test]
    fn max2_matches_max_on_random_unit_data() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let w1 = sample_unit_vector(3, &mut rng);
            let w2 = sample_unit_vector(3, &mut rng);
            let x = sample_unit_vector(3, &mut rng);
            let net = build_max2(&w1, &w2).unwrap();
            let want = cdot(&w1, &x).max(cdot(&w2, &x));
            assert!((net.eval(&x).unwrap() - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn max2_rejects_long_weights() {
        assert!(build_max2(&[1.2, 0.0], &[0.0, 1.0]).is_err());
        assert!(build_max2(&[1.0, 0.0], &[0.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn sum_max2_adds_componentwise() {
        let pairs = vec![
            (vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]),
            (vec![0.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]),
        ];
        let net = build_sum_max2affine(&pairs).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let x = sample_unit_vector(4, &mut rng);
            let want = x[0].max(x[1]) + x[2].max(x[3]);
            assert!((net.eval(&x).unwrap() - want).abs() <= 1e-12);
        }
        // Output weights are three units per gadget.
        let out = &net.layers()[1][0];
        assert_eq!(l1_norm(out), 6.0);
        assert_eq!(net.bounds().w, 6.0);
    }

    #[test]
    fn sum_max2_single_pair_is_max2() {
        let w1 = unit(&[0.6, 0.8]);
        let w2 = unit(&[-0.8, 0.6]);
        let a = build_sum_max2affine(&[(w1.clone(), w2.clone())]).unwrap();
        let b = build_max2(&w1, &w2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for _ in 0..200 {
            let x = sample_unit_vector(2, &mut rng);
            assert_eq!(a.eval(&x).unwrap(), b.eval(&x).unwrap());
        }
    }

    #[test]
    fn max_k_tree_on_axis_weights() {
        let ws = vec![
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        ];
        let net = build_max_k_affine(&ws).unwrap();
        assert_eq!(net.depth(), 2);
        assert!((net.eval(&[0.6, 0.8]).unwrap() - 0.8).abs() <= 1e-15);
        // Sign flips land on the mirrored weights, same maximum.
        assert!((net.eval(&[-0.6, -0.8]).unwrap() - 0.8).abs() <= 1e-15);
        assert!((net.eval(&[0.6, -0.8]).unwrap() - 0.8).abs() <= 1e-15);
    }

    #[test]
    fn max_k_matches_max_for_various_k() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        for k in [2usize, 3, 4, 8] {
            for _ in 0..500 {
                let ws: Vec<Vec<f64>> =
                    (0..k).map(|_| sample_unit_vector(3, &mut rng)).collect();
                let net = build_max_k_affine(&ws).unwrap();
                let x = sample_unit_vector(3, &mut rng);
                let want = ws
                    .iter()
                    .map(|w| cdot(w, &x))
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!(
                    (net.eval(&x).unwrap() - want).abs() <= 1e-9,
                    "k={k} mismatch"
                );
            }
        }
    }

    #[test]
    fn max_k_degenerate_tree_is_linear() {
        let w = unit(&[0.3, -0.4, 0.5]);
        let net = build_max_k_affine(std::slice::from_ref(&w)).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        for _ in 0..200 {
            let x = sample_unit_vector(3, &mut rng);
            assert!((net.eval(&x).unwrap() - cdot(&w, &x)).abs() <= 1e-15);
        }
    }

    #[test]
    fn max_k_bounds_hold_on_samples() {
        let mut rng = ChaCha12Rng::seed_from_u64(37);
        let ws: Vec<Vec<f64>> = (0..8).map(|_| sample_unit_vector(4, &mut rng)).collect();
        let net = build_max_k_affine(&ws).unwrap();
        assert_eq!(net.depth(), 3);
        assert_eq!(net.bounds().w, 6.0);
        let pts: Vec<Vec<f64>> = (0..500).map(|_| sample_unit_vector(4, &mut rng)).collect();
        let worst = net.max_unit_input(&pts).unwrap();
        assert!(worst <= net.bounds().m + 1e-12, "unit input {worst}");
    }

    #[test]
    fn prelu_branches() {
        let w = vec![1.0, 0.0];
        let relu_like = build_prelu(&w, 0.0).unwrap();
        assert_eq!(relu_like.eval(&[0.7, 0.0]).unwrap(), 0.7);
        assert_eq!(relu_like.eval(&[-0.7, 0.0]).unwrap(), 0.0);

        let linear = build_prelu(&w, 1.0).unwrap();
        for t in [-0.9, -0.3, 0.2, 0.8] {
            assert_eq!(linear.eval(&[t, 0.0]).unwrap(), t);
        }

        let leaky = build_prelu(&w, 0.01).unwrap();
        assert!((leaky.eval(&[-2.0, 0.0]).unwrap() + 0.02).abs() <= 1e-15);
        assert!(build_prelu(&w, 1.5).is_err());
    }

    #[test]
    fn piecewise_transfer_matches_clipped_ramp() {
        let w = vec![1.0, 0.0];
        for c in [1.0, 5.0] {
            let net = build_piecewise_transfer(&w, c).unwrap();
            for i in 0..=400 {
                let t = -1.0 + 2.0 * i as f64 / 400.0;
                let x = lift_input(&[t, 0.0]);
                let want = (0.5 + c * t).clamp(0.0, 1.0);
                let got = net.eval(&x).unwrap();
                assert!((got - want).abs() <= 1e-12, "C={c} t={t}: {got} vs {want}");
            }
        }
        let net = build_piecewise_transfer(&w, 1.0).unwrap();
        assert!((net.eval(&lift_input(&[0.0, 0.0])).unwrap() - 0.5).abs() <= 1e-12);
        assert!((net.eval(&lift_input(&[2.0, 0.0])).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn lift_preserves_unit_norm() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        for n in [1usize, 2, 5] {
            let x = sample_unit_vector(n, &mut rng);
            let lifted = lift_input(&x);
            assert_eq!(lifted.len(), n + 1);
            assert!((l2_norm(&lifted) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn relu_nets_are_positively_homogeneous() {
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        let ws: Vec<Vec<f64>> = (0..4).map(|_| sample_unit_vector(3, &mut rng)).collect();
        let net = build_max_k_affine(&ws).unwrap();
        for _ in 0..200 {
            let x = sample_unit_vector(3, &mut rng);
            let lambda = 1e-3 + 0.999 * rand::Rng::gen::<f64>(&mut rng);
            let full = net.eval(&x).unwrap();
            let scaled_x: Vec<f64> = x.iter().map(|v| v * lambda).collect();
            let scaled = net.eval(&scaled_x).unwrap();
            assert!((scaled - lambda * full).abs() <= 1e-12);
        }
    }

    proptest! {
        #[test]
        fn max2_identity_proptest(raw1 in proptest::collection::vec(-1.0f64..1.0, 3),
                                  raw2 in proptest::collection::vec(-1.0f64..1.0, 3),
                                  rawx in proptest::collection::vec(-1.0f64..1.0, 3)) {
            prop_assume!(l2_norm(&raw1) > 1e-3 && l2_norm(&raw2) > 1e-3 && l2_norm(&rawx) > 1e-3);
            let (w1, w2, x) = (unit(&raw1), unit(&raw2), unit(&rawx));
            let net = build_max2(&w1, &w2).unwrap();
            let want = cdot(&w1, &x).max(cdot(&w2, &x));
            prop_assert!((net.eval(&x).unwrap() - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn polynomialize_identity_activation_is_exact() {
        let net = ReluNetwork::new(
            vec![vec![vec![1.0, 0.0]], vec![vec![1.0]]],
            Activation::Identity,
            NetworkBounds {
                m0: 1.0,
                w: 1.0,
                m: 1.0,
            },
        )
        .unwrap();
        let (pnet, cert) = polynomialize_network(&net, 0.1, &[]).unwrap();
        assert_eq!(cert.sup_gap, 0.0);
        assert_eq!(cert.layer_sup, vec![0.0]);
        assert_eq!(pnet.poly().degree(), 1);
    }

    #[test]
    fn polynomialize_single_relu() {
        let net = ReluNetwork::new(
            vec![vec![vec![1.0, 0.0]], vec![vec![1.0]]],
            Activation::Relu,
            NetworkBounds {
                m0: 1.0,
                w: 1.0,
                m: 1.0,
            },
        )
        .unwrap();
        let (pnet, cert) = polynomialize_network(&net, 0.1, &[]).unwrap();
        assert!(cert.sup_gap <= 0.1);
        assert!(cert.sup_gap > 0.0);
        assert_eq!(cert.points, CERT_POINTS);
        assert!(cert.max_unit_input <= 1.0 + 1e-12);
        // Spot check the substituted forward pass.
        let x = [0.6, 0.8];
        let gap = (pnet.eval(&x).unwrap() - net.eval(&x).unwrap()).abs();
        assert!(gap <= 0.1);
    }

    /// Random net within declared bounds (1, 3, 1): unit layer-0 rows keep
    /// inputs in [-1, 1]; later rows are scaled to l1 norm 1 so unit inputs
    /// never grow, which is what M = 1 asserts.
    fn random_bounded_net(depth: usize, rng: &mut ChaCha12Rng) -> ReluNetwork {
        let width = 3usize;
        let mut layers = Vec::new();
        layers.push((0..width).map(|_| sample_unit_vector(2, rng)).collect());
        for _ in 1..depth {
            let rows: Vec<Vec<f64>> = (0..width)
                .map(|_| {
                    let raw = sample_unit_vector(width, rng);
                    let l1 = l1_norm(&raw);
                    raw.iter().map(|v| v / l1).collect()
                })
                .collect();
            layers.push(rows);
        }
        let out_raw = sample_unit_vector(width, rng);
        let l1 = l1_norm(&out_raw);
        layers.push(vec![out_raw.iter().map(|v| 3.0 * v / l1).collect()]);
        ReluNetwork::new(
            layers,
            Activation::Relu,
            NetworkBounds {
                m0: 1.0,
                w: 3.0,
                m: 1.0,
            },
        )
        .unwrap()
    }

    #[test]
    fn polynomialize_respects_layer_budgets() {
        let mut rng = ChaCha12Rng::seed_from_u64(47);
        for depth in [1usize, 2] {
            let net = random_bounded_net(depth, &mut rng);
            let (_, cert) = polynomialize_network(&net, 0.2, &[]).unwrap();
            assert_eq!(cert.layer_sup.len(), depth);
            for i in 0..depth {
                assert!(
                    cert.layer_sup[i] <= cert.layer_bound[i],
                    "depth {depth} layer {i}: {} > {}",
                    cert.layer_sup[i],
                    cert.layer_bound[i]
                );
            }
            // Budgets loosen with the layer index.
            for w in cert.layer_bound.windows(2) {
                assert!(w[0] <= w[1]);
            }
            assert!(cert.sup_gap <= 0.2);
        }
    }

    #[test]
    fn polynomialize_fails_when_inputs_escape_the_radius() {
        // Declared M = 1 but the hidden row drives unit inputs to 3, far
        // outside the certified interval; the sampled gap must blow up.
        let net = ReluNetwork::new(
            vec![vec![vec![1.0, 0.0]], vec![vec![3.0]], vec![vec![1.0]]],
            Activation::Relu,
            NetworkBounds {
                m0: 1.0,
                w: 3.0,
                m: 1.0,
            },
        )
        .unwrap();
        let got = polynomialize_network(&net, 0.1, &[]);
        assert!(matches!(got, Err(Error::CertificationFailed { .. })));
    }

    #[test]
    fn polynomialize_includes_extra_points() {
        let net = ReluNetwork::new(
            vec![vec![vec![1.0, 0.0]], vec![vec![1.0]]],
            Activation::Relu,
            NetworkBounds {
                m0: 1.0,
                w: 1.0,
                m: 1.0,
            },
        )
        .unwrap();
        let extra = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let (_, cert) = polynomialize_network(&net, 0.2, &extra).unwrap();
        assert_eq!(cert.points, CERT_POINTS + 2);
    }
}
