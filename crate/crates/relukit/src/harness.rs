//! Synthetic generators, brute-force oracles, and the experiment runner.
//!
//! Everything here is seed-deterministic: a `GeneratorSpec` with a fixed seed
//! always produces the same dataset, oracles enumerate fixed grids, and
//! `run_experiment` emits byte-identical reports for identical configs. The
//! oracles are deliberately restricted to n <= 3, where exhaustive direction
//! grids are an honest stand-in for the best-in-class comparator.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::approx::{approx_relu, Activation};
use crate::data::{Dataset, LabelRange, LabeledSample};
use crate::error::{Error, Result};
use crate::learners::{
    learn_network, learn_poly_agnostic, learn_relu_reliable, maximize_relu_correlation,
    sample_size, NetworkArch,
};
use crate::loss::LossSpec;
use crate::metrics;
use crate::network::{NetworkBounds, ReluNetwork};
use crate::solver::SolveOpts;
use crate::util::{cmean, fmt_f64, mix_seed, sample_unit_vector};

/// Smallest label a corrupted positive may take; keeps the planted
/// comparator's false-positive rate at exactly zero.
const POSITIVE_FLOOR: f64 = 1e-12;

/// Dot-product slack when testing that a direction never fires on zeros.
const FEAS_DOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseModel {
    /// Replace the label of an affected sample with a uniform draw.
    FlipToRandom,
    /// Add `rate`-amplitude uniform noise to every eligible sample.
    AdditiveBounded,
}

impl NoiseModel {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseModel::FlipToRandom => "flip-to-random",
            NoiseModel::AdditiveBounded => "additive-bounded",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "flip-to-random" => Ok(NoiseModel::FlipToRandom),
            "additive-bounded" => Ok(NoiseModel::AdditiveBounded),
            other => Err(Error::Parse(format!("unknown noise model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NoiseSpec {
    /// Corruption probability (flip) or amplitude (additive), in `[0, 1]`.
    pub rate: f64,
    pub model: NoiseModel,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            rate: 0.0,
            model: NoiseModel::FlipToRandom,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    PlantedRelu,
    /// Fixed planted quadratic `q(x) = x1 x2`.
    PlantedPoly,
    PlantedDepth2 { units: usize },
    PlantedMaxAffine { k: usize },
    /// Planted ReLU with worst-case label rewrites instead of random noise.
    AdversarialCorrupt,
}

impl GeneratorKind {
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorKind::PlantedRelu => "planted-relu",
            GeneratorKind::PlantedPoly => "planted-poly",
            GeneratorKind::PlantedDepth2 { .. } => "planted-depth2",
            GeneratorKind::PlantedMaxAffine { .. } => "planted-max-affine",
            GeneratorKind::AdversarialCorrupt => "adversarial-corrupt",
        }
    }

    /// `units` and `k` parameterize the depth-2 and max-affine kinds and are
    /// ignored by the others.
    pub fn parse(s: &str, units: usize, k: usize) -> Result<Self> {
        match s {
            "planted-relu" => Ok(GeneratorKind::PlantedRelu),
            "planted-poly" => Ok(GeneratorKind::PlantedPoly),
            "planted-depth2" => Ok(GeneratorKind::PlantedDepth2 { units }),
            "planted-max-affine" => Ok(GeneratorKind::PlantedMaxAffine { k }),
            "adversarial-corrupt" => Ok(GeneratorKind::AdversarialCorrupt),
            other => Err(Error::Parse(format!("unknown generator kind '{other}'"))),
        }
    }

    fn label_range(&self) -> LabelRange {
        match self {
            GeneratorKind::PlantedRelu | GeneratorKind::AdversarialCorrupt => LabelRange::ZeroOne,
            _ => LabelRange::Symmetric(1.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub noise: NoiseSpec,
    /// Reliable kinds only ever corrupt positively labeled samples, so the
    /// planted concept keeps false-positive rate zero.
    pub zero_region: bool,
}

/// What the generator planted, for oracle comparisons and audits.
#[derive(Debug, Clone)]
pub enum GroundTruth {
    Relu(Vec<f64>),
    /// `q(x) = x1 x2`.
    Quadratic,
    Depth2(ReluNetwork),
    MaxAffine(Vec<Vec<f64>>),
}

impl GroundTruth {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            GroundTruth::Relu(w) => dot(w, x).max(0.0),
            GroundTruth::Quadratic => x[0] * x[1],
            GroundTruth::Depth2(net) => net.eval(x).expect("planted net dims"),
            GroundTruth::MaxAffine(ws) => ws
                .iter()
                .map(|w| dot(w, x))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `m` i.i.d. uniform points on `S^{n-1}`, deterministic per seed.
pub fn sample_sphere(n: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..m).map(|_| sample_unit_vector(n, &mut rng)).collect()
}

fn validate_spec(spec: &GeneratorSpec) -> Result<()> {
    if spec.n < 1 || spec.m < 1 {
        return Err(Error::InvalidParameter(format!(
            "need n >= 1 and m >= 1, got n={} m={}",
            spec.n, spec.m
        )));
    }
    if !(0.0..=1.0).contains(&spec.noise.rate) {
        return Err(Error::InvalidParameter(format!(
            "noise rate must lie in [0, 1], got {}",
            spec.noise.rate
        )));
    }
    match spec.kind {
        GeneratorKind::PlantedPoly if spec.n < 2 => Err(Error::InvalidParameter(
            "planted-poly needs n >= 2 for x1 x2".into(),
        )),
        GeneratorKind::PlantedDepth2 { units } if units == 0 => {
            Err(Error::InvalidParameter("depth-2 generator needs units >= 1".into()))
        }
        GeneratorKind::PlantedMaxAffine { k } if k == 0 => {
            Err(Error::InvalidParameter("max-affine generator needs k >= 1".into()))
        }
        _ => Ok(()),
    }
}

fn planted_truth(spec: &GeneratorSpec, truth_seed: u64) -> GroundTruth {
    let mut rng = ChaCha12Rng::seed_from_u64(truth_seed);
    match spec.kind {
        GeneratorKind::PlantedRelu | GeneratorKind::AdversarialCorrupt => {
            GroundTruth::Relu(sample_unit_vector(spec.n, &mut rng))
        }
        GeneratorKind::PlantedPoly => GroundTruth::Quadratic,
        GeneratorKind::PlantedDepth2 { units } => {
            let rows: Vec<Vec<f64>> = (0..units)
                .map(|_| sample_unit_vector(spec.n, &mut rng))
                .collect();
            // Alternating-sign mean combination keeps outputs in [-1, 1].
            let out: Vec<f64> = (0..units)
                .map(|j| if j % 2 == 0 { 1.0 } else { -1.0 } / units as f64)
                .collect();
            let net = ReluNetwork::new(
                vec![rows, vec![out]],
                Activation::Relu,
                NetworkBounds {
                    m0: 1.0,
                    w: 1.0,
                    m: 1.0,
                },
            )
            .expect("planted net within bounds");
            GroundTruth::Depth2(net)
        }
        GeneratorKind::PlantedMaxAffine { k } => {
            GroundTruth::MaxAffine((0..k).map(|_| sample_unit_vector(spec.n, &mut rng)).collect())
        }
    }
}

fn corrupt_label(spec: &GeneratorSpec, clean: f64, rng: &mut ChaCha12Rng) -> f64 {
    let rate = spec.noise.rate;
    match spec.kind {
        GeneratorKind::PlantedRelu => {
            // Zeros are untouchable in the reliable model.
            if clean <= 0.0 || rate == 0.0 {
                return clean;
            }
            match spec.noise.model {
                NoiseModel::FlipToRandom => {
                    if rng.gen::<f64>() < rate {
                        1.0 - rng.gen::<f64>()
                    } else {
                        clean
                    }
                }
                NoiseModel::AdditiveBounded => {
                    (clean + rate * (2.0 * rng.gen::<f64>() - 1.0)).clamp(POSITIVE_FLOOR, 1.0)
                }
            }
        }
        GeneratorKind::AdversarialCorrupt => {
            let eligible = !spec.zero_region || clean > 0.0;
            if !eligible || rate == 0.0 || rng.gen::<f64>() >= rate {
                return clean;
            }
            // Worst-case deterministic rewrite: push the label as far as the
            // range (and the zero-region promise) allows.
            if clean > 0.5 {
                POSITIVE_FLOOR
            } else if clean > 0.0 {
                1.0
            } else {
                1.0
            }
        }
        _ => match spec.noise.model {
            NoiseModel::FlipToRandom => {
                if rate > 0.0 && rng.gen::<f64>() < rate {
                    2.0 * rng.gen::<f64>() - 1.0
                } else {
                    clean
                }
            }
            NoiseModel::AdditiveBounded => {
                if rate == 0.0 {
                    clean
                } else {
                    (clean + rate * (2.0 * rng.gen::<f64>() - 1.0)).clamp(-1.0, 1.0)
                }
            }
        },
    }
}

fn plant(spec: &GeneratorSpec, truth_seed: u64, sample_seed: u64) -> Result<(Dataset, GroundTruth)> {
    validate_spec(spec)?;
    let truth = planted_truth(spec, truth_seed);
    let mut rng = ChaCha12Rng::seed_from_u64(sample_seed);
    let mut samples = Vec::with_capacity(spec.m);
    for _ in 0..spec.m {
        let x = sample_unit_vector(spec.n, &mut rng);
        // Label the stored coordinates, not the pre-construction ones, so a
        // noiseless plant is exactly realizable on the dataset it returns.
        let mut sample = LabeledSample::new(x, 0.0)?;
        let clean = truth.eval(sample.x());
        sample.set_y(corrupt_label(spec, clean, &mut rng));
        samples.push(sample);
    }
    Ok((Dataset::new(samples, spec.kind.label_range())?, truth))
}

/// Dataset plus planted truth for `spec`. Same spec, same bytes.
pub fn generate(spec: &GeneratorSpec) -> Result<(Dataset, GroundTruth)> {
    plant(spec, mix_seed(spec.seed, 0), mix_seed(spec.seed, 1))
}

/// Reliable planted instance: labels `relu(w* . x)` with corruption applied
/// to positives only, so `w*` stays a zero-false-positive comparator.
pub fn plant_reliable_relu(spec: &GeneratorSpec) -> Result<(Dataset, Vec<f64>)> {
    if spec.kind != GeneratorKind::PlantedRelu {
        return Err(Error::InvalidParameter(format!(
            "plant_reliable_relu needs kind planted-relu, got {}",
            spec.kind.name()
        )));
    }
    let (data, truth) = generate(spec)?;
    match truth {
        GroundTruth::Relu(w) => Ok((data, w)),
        _ => unreachable!("planted-relu produces a direction"),
    }
}

/// Objective enumerated by [`grid_oracle_relu`].
#[derive(Debug, Clone)]
pub enum OracleObjective {
    /// Minimize the empirical positive-part loss over directions that never
    /// fire on zero-labeled samples.
    ReliableLoss(LossSpec),
    /// Maximize the empirical correlation `(1/m) sum relu(w . x_i) y_i`.
    Correlation,
}

impl OracleObjective {
    pub fn name(&self) -> String {
        match self {
            OracleObjective::ReliableLoss(loss) => format!("reliable-{}", loss.name()),
            OracleObjective::Correlation => "correlation".into(),
        }
    }
}

/// Best direction found by exhaustive enumeration.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub best_direction: Vec<f64>,
    pub best_value: f64,
    pub grid_resolution: usize,
    pub objective: String,
}

fn direction_grid(n: usize, resolution: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::with_capacity(resolution + 1);
    // The zero concept never fires; it is always feasible and anchors the
    // all-zero-labels case.
    dirs.push(vec![0.0; n]);
    match n {
        2 => {
            for i in 0..resolution {
                let theta = 2.0 * std::f64::consts::PI * i as f64 / resolution as f64;
                dirs.push(vec![theta.cos(), theta.sin()]);
            }
        }
        3 => {
            // Fibonacci sphere: near-uniform and deterministic.
            let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
            for i in 0..resolution {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / resolution as f64;
                let r = (1.0 - z * z).max(0.0).sqrt();
                let phi = golden * i as f64;
                dirs.push(vec![r * phi.cos(), r * phi.sin(), z]);
            }
        }
        _ => unreachable!("oracle dimensions are checked upstream"),
    }
    dirs
}

/// Brute-force comparator over a uniform direction grid (angles for n=2,
/// Fibonacci sphere for n=3), plus the zero concept.
pub fn grid_oracle_relu(
    data: &Dataset,
    objective: &OracleObjective,
    resolution: usize,
) -> Result<OracleResult> {
    let n = data.dim();
    if !(2..=3).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "oracle enumerates n in {{2, 3}} only, got n={n}"
        )));
    }
    if resolution < 1000 {
        return Err(Error::InvalidParameter(format!(
            "oracle resolution must be at least 1000, got {resolution}"
        )));
    }
    let m = data.len() as f64;
    let zeros: Vec<&[f64]> = data
        .samples()
        .iter()
        .filter(|s| s.y() == 0.0)
        .map(|s| s.x())
        .collect();
    let positives: Vec<(&[f64], f64)> = data
        .samples()
        .iter()
        .filter(|s| s.y() > 0.0)
        .map(|s| (s.x(), s.y()))
        .collect();

    let minimize = matches!(objective, OracleObjective::ReliableLoss(_));
    let mut best_value = if minimize {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    let mut best_direction = vec![0.0; n];
    for w in direction_grid(n, resolution) {
        let value = match objective {
            OracleObjective::ReliableLoss(loss) => {
                if zeros.iter().any(|x| dot(&w, x) > FEAS_DOT_TOL) {
                    continue;
                }
                positives
                    .iter()
                    .map(|(x, y)| loss.evaluate(dot(&w, x).max(0.0), *y))
                    .sum::<f64>()
                    / m
            }
            OracleObjective::Correlation => {
                data.samples()
                    .iter()
                    .map(|s| dot(&w, s.x()).max(0.0) * s.y())
                    .sum::<f64>()
                    / m
            }
        };
        if (minimize && value < best_value) || (!minimize && value > best_value) {
            best_value = value;
            best_direction = w;
        }
    }
    Ok(OracleResult {
        best_direction,
        best_value,
        grid_resolution: resolution,
        objective: objective.name(),
    })
}

#[derive(Debug, Clone)]
pub enum LearnerKind {
    ReluReliable,
    Poly { degree: usize, bound: f64 },
    Bach,
    Network {
        depth: usize,
        weight_bound: f64,
        output_bound: f64,
        activation: Activation,
    },
}

impl LearnerKind {
    pub fn name(&self) -> &'static str {
        match self {
            LearnerKind::ReluReliable => "relu-reliable",
            LearnerKind::Poly { .. } => "poly",
            LearnerKind::Bach => "bach",
            LearnerKind::Network { .. } => "network",
        }
    }
}

/// Per-seed pass criteria; unset thresholds are not checked.
#[derive(Debug, Clone, Default)]
pub struct Thresholds {
    pub max_eq0: Option<f64>,
    /// Pass if `l_gt0 <= oracle_best + slack`.
    pub gt0_slack: Option<f64>,
    /// Pass if `correlation >= oracle_best - slack`.
    pub corr_slack: Option<f64>,
    pub max_test_sq: Option<f64>,
    /// Seeds that must pass for the whole run to pass.
    pub min_pass: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Generator template; its `m` is the train-split size and its `seed` is
    /// ignored in favor of the per-run seeds.
    pub generator: GeneratorSpec,
    pub m_test: usize,
    /// Replace the train size with `min(2000, sample_size(...))`.
    pub auto_m: bool,
    pub learner: LearnerKind,
    pub loss: String,
    pub eps: f64,
    pub delta: f64,
    pub seeds: Vec<u64>,
    pub oracle_resolution: Option<usize>,
    pub thresholds: Thresholds,
    pub opts: SolveOpts,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    /// Full CSV report: header, one row per seed, one summary row.
    pub report: String,
    pub pass_count: usize,
    pub seed_count: usize,
    /// `pass_count >= thresholds.min_pass`.
    pub passed: bool,
}

struct SeedRow {
    seed: u64,
    status: &'static str,
    objective: f64,
    iterations: f64,
    l_eq0: f64,
    l_gt0: f64,
    test_sq: f64,
    test_abs: f64,
    correlation: f64,
    oracle_best: f64,
    pass: bool,
}

fn error_row(seed: u64) -> SeedRow {
    SeedRow {
        seed,
        status: "error",
        objective: f64::NAN,
        iterations: f64::NAN,
        l_eq0: f64::NAN,
        l_gt0: f64::NAN,
        test_sq: f64::NAN,
        test_abs: f64::NAN,
        correlation: f64::NAN,
        oracle_best: f64::NAN,
        pass: false,
    }
}

fn train_loss(config: &ExperimentConfig) -> Result<LossSpec> {
    match &config.learner {
        LearnerKind::ReluReliable => LossSpec::by_name(&config.loss, 0.0, 1.0),
        LearnerKind::Poly { .. } => LossSpec::by_name(&config.loss, -1.0, 1.0),
        LearnerKind::Bach => LossSpec::by_name(&config.loss, -1.0, 1.0),
        LearnerKind::Network {
            weight_bound,
            output_bound,
            ..
        } => {
            let r = (weight_bound * output_bound).max(1.0);
            LossSpec::by_name(&config.loss, -r, r)
        }
    }
}

fn resolve_train_m(config: &ExperimentConfig) -> Result<usize> {
    if !config.auto_m {
        return Ok(config.generator.m);
    }
    match config.learner {
        LearnerKind::ReluReliable => {
            let (_, cert) = approx_relu(config.eps)?;
            let loss = train_loss(config)?;
            let guideline = sample_size(
                config.eps,
                config.delta,
                cert.degree,
                cert.weight,
                loss.lipschitz(),
                loss.bound(),
            )?;
            Ok(guideline.min(2000) as usize)
        }
        _ => Err(Error::InvalidParameter(
            "auto sample size is defined for the relu-reliable learner only".into(),
        )),
    }
}

fn run_seed(config: &ExperimentConfig, train_m: usize, seed: u64) -> Result<SeedRow> {
    let mut gspec = config.generator.clone();
    gspec.m = train_m;
    let truth_seed = mix_seed(seed, 0);
    let (train, _) = plant(&gspec, truth_seed, mix_seed(seed, 1))?;
    gspec.m = config.m_test;
    let (test, _) = plant(&gspec, truth_seed, mix_seed(seed, 2))?;

    let mut opts = config.opts.clone();
    opts.seed = seed;
    let loss = train_loss(config)?;
    let (hyp, report) = match &config.learner {
        LearnerKind::ReluReliable => {
            let model = learn_relu_reliable(&train, &loss, config.eps, config.delta, &opts)?;
            (model.hypothesis, model.report)
        }
        LearnerKind::Poly { degree, bound } => {
            let model = learn_poly_agnostic(&train, &loss, *degree, *bound, &opts)?;
            (model.hypothesis, model.report)
        }
        LearnerKind::Bach => maximize_relu_correlation(&train, config.eps, &opts)?,
        LearnerKind::Network {
            depth,
            weight_bound,
            output_bound,
            activation,
        } => {
            let arch = NetworkArch::new(*depth, *weight_bound, *output_bound)?;
            learn_network(&train, &loss, arch, *activation, config.eps, &opts)?
        }
    };

    let reliable_eval = test.label_range() == LabelRange::ZeroOne;
    let l_eq0 = if reliable_eval {
        metrics::loss_eq0(&hyp, &test)?
    } else {
        f64::NAN
    };
    let l_gt0 = if reliable_eval {
        let eval_loss = LossSpec::by_name(&config.loss, 0.0, 1.0)?;
        metrics::loss_gt0(&hyp, &test, &eval_loss)?
    } else {
        f64::NAN
    };
    let mut sq = Vec::with_capacity(test.len());
    let mut ab = Vec::with_capacity(test.len());
    for s in test.samples() {
        let p = hyp.predict(s.x())?;
        sq.push((p - s.y()).powi(2));
        ab.push((p - s.y()).abs());
    }
    let test_sq = cmean(&sq);
    let test_abs = cmean(&ab);
    let correlation = metrics::empirical_correlation(&hyp, &test)?;

    let oracle_best = match (&config.oracle_resolution, &config.learner) {
        (Some(res), LearnerKind::ReluReliable) => {
            let eval_loss = LossSpec::by_name(&config.loss, 0.0, 1.0)?;
            grid_oracle_relu(&test, &OracleObjective::ReliableLoss(eval_loss), *res)?.best_value
        }
        (Some(res), LearnerKind::Bach) => {
            grid_oracle_relu(&test, &OracleObjective::Correlation, *res)?.best_value
        }
        _ => f64::NAN,
    };

    let thr = &config.thresholds;
    let mut pass = true;
    if let Some(t) = thr.max_eq0 {
        pass &= l_eq0.is_finite() && l_eq0 <= t;
    }
    if let Some(t) = thr.gt0_slack {
        pass &= l_gt0.is_finite() && oracle_best.is_finite() && l_gt0 <= oracle_best + t;
    }
    if let Some(t) = thr.corr_slack {
        pass &= correlation.is_finite() && oracle_best.is_finite() && correlation >= oracle_best - t;
    }
    if let Some(t) = thr.max_test_sq {
        pass &= test_sq.is_finite() && test_sq <= t;
    }

    Ok(SeedRow {
        seed,
        status: if report.converged { "converged" } else { "maxiter" },
        objective: report.objective,
        iterations: report.iterations as f64,
        l_eq0,
        l_gt0,
        test_sq,
        test_abs,
        correlation,
        oracle_best,
        pass,
    })
}

const REPORT_HEADER: &str =
    "seed,m_train,m_test,status,objective,iterations,l_eq0,l_gt0,test_sq,test_abs,correlation,oracle_best,pass\n";

fn push_row(out: &mut String, row: &SeedRow, train_m: usize, test_m: usize) {
    out.push_str(&format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        row.seed,
        train_m,
        test_m,
        row.status,
        fmt_f64(row.objective),
        fmt_f64(row.iterations),
        fmt_f64(row.l_eq0),
        fmt_f64(row.l_gt0),
        fmt_f64(row.test_sq),
        fmt_f64(row.test_abs),
        fmt_f64(row.correlation),
        fmt_f64(row.oracle_best),
        u8::from(row.pass),
    ));
}

fn mean_finite(rows: &[SeedRow], pick: impl Fn(&SeedRow) -> f64) -> f64 {
    let vals: Vec<f64> = rows.iter().map(&pick).filter(|v| v.is_finite()).collect();
    if vals.is_empty() {
        f64::NAN
    } else {
        cmean(&vals)
    }
}

/// Train, evaluate, and compare against the oracle for every seed; the
/// report is a CSV with one row per seed, a trailing mean row, and the pass
/// count in the mean row's final column. Per-seed failures become `error`
/// rows instead of aborting the batch.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let train_m = resolve_train_m(config)?;
    let mut rows = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let row = run_seed(config, train_m, seed).unwrap_or_else(|e| {
            log::warn!("seed {seed} failed: {e}");
            error_row(seed)
        });
        rows.push(row);
    }

    let mut report = String::from(REPORT_HEADER);
    for row in &rows {
        push_row(&mut report, row, train_m, config.m_test);
    }
    let pass_count = rows.iter().filter(|r| r.pass).count();
    if !rows.is_empty() {
        report.push_str(&format!(
            "mean,{},{},,{},{},{},{},{},{},{},{},{}\n",
            train_m,
            config.m_test,
            fmt_f64(mean_finite(&rows, |r| r.objective)),
            fmt_f64(mean_finite(&rows, |r| r.iterations)),
            fmt_f64(mean_finite(&rows, |r| r.l_eq0)),
            fmt_f64(mean_finite(&rows, |r| r.l_gt0)),
            fmt_f64(mean_finite(&rows, |r| r.test_sq)),
            fmt_f64(mean_finite(&rows, |r| r.test_abs)),
            fmt_f64(mean_finite(&rows, |r| r.correlation)),
            fmt_f64(mean_finite(&rows, |r| r.oracle_best)),
            pass_count,
        ));
    }
    Ok(ExperimentOutcome {
        report,
        pass_count,
        seed_count: rows.len(),
        passed: pass_count >= config.thresholds.min_pass,
    })
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let start: u64 = a
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad seed range start '{a}'")))?;
        let end: u64 = b
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad seed range end '{b}'")))?;
        if end < start {
            return Err(Error::Parse(format!("empty seed range '{s}'")));
        }
        return Ok((start..end).collect());
    }
    s.split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad seed '{part}'")))
        })
        .collect()
}

fn parse_key<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("bad value '{value}' for key '{key}'")))
}

/// Parse the flat `key = value` experiment config format.
///
/// Required keys: `kind`, `n`, `m_train` (or `auto`), `learner`, `seeds`.
/// Everything else has defaults; unknown keys are rejected. See the README
/// for the full key list.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut kind_name: Option<String> = None;
    let mut units = 3usize;
    let mut k = 4usize;
    let mut n: Option<usize> = None;
    let mut m_train: Option<usize> = None;
    let mut auto_m = false;
    let mut m_test = 2000usize;
    let mut noise = NoiseSpec::none();
    let mut zero_region = true;
    let mut learner_name: Option<String> = None;
    let mut loss = "squared".to_string();
    let mut eps = 0.2f64;
    let mut delta = 0.05f64;
    let mut degree = 2usize;
    let mut bound = 1.0f64;
    let mut depth = 1usize;
    let mut weight_bound = 3.0f64;
    let mut output_bound = 2.0f64;
    let mut activation = Activation::Relu;
    let mut seeds: Option<Vec<u64>> = None;
    let mut oracle_resolution: Option<usize> = None;
    let mut thresholds = Thresholds::default();
    let mut opts = SolveOpts::default();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("config line {}: expected 'key = value'", lineno + 1))
        })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "kind" => kind_name = Some(value.to_string()),
            "units" => units = parse_key(key, value)?,
            "k" => k = parse_key(key, value)?,
            "n" => n = Some(parse_key(key, value)?),
            "m_train" => {
                if value == "auto" {
                    auto_m = true;
                    m_train = Some(0);
                } else {
                    m_train = Some(parse_key(key, value)?);
                }
            }
            "m_test" => m_test = parse_key(key, value)?,
            "noise_rate" => noise.rate = parse_key(key, value)?,
            "noise_model" => noise.model = NoiseModel::parse(value)?,
            "zero_region" => zero_region = parse_key(key, value)?,
            "learner" => learner_name = Some(value.to_string()),
            "loss" => loss = value.to_string(),
            "eps" => eps = parse_key(key, value)?,
            "delta" => delta = parse_key(key, value)?,
            "degree" => degree = parse_key(key, value)?,
            "bound" => bound = parse_key(key, value)?,
            "depth" => depth = parse_key(key, value)?,
            "weight_bound" => weight_bound = parse_key(key, value)?,
            "output_bound" => output_bound = parse_key(key, value)?,
            "activation" => activation = Activation::parse(value)?,
            "seeds" => seeds = Some(parse_seeds(value)?),
            "oracle_resolution" => oracle_resolution = Some(parse_key(key, value)?),
            "max_eq0" => thresholds.max_eq0 = Some(parse_key(key, value)?),
            "gt0_slack" => thresholds.gt0_slack = Some(parse_key(key, value)?),
            "corr_slack" => thresholds.corr_slack = Some(parse_key(key, value)?),
            "max_test_sq" => thresholds.max_test_sq = Some(parse_key(key, value)?),
            "min_pass" => thresholds.min_pass = parse_key(key, value)?,
            "objective_tol" => opts.objective_tol = parse_key(key, value)?,
            "feas_tol" => opts.feas_tol = parse_key(key, value)?,
            "max_iters" => opts.max_iters = parse_key(key, value)?,
            other => {
                return Err(Error::Parse(format!("unknown config key '{other}'")));
            }
        }
    }

    let kind_name = kind_name.ok_or_else(|| Error::Parse("config is missing 'kind'".into()))?;
    let kind = GeneratorKind::parse(&kind_name, units, k)?;
    let n = n.ok_or_else(|| Error::Parse("config is missing 'n'".into()))?;
    let m_train =
        m_train.ok_or_else(|| Error::Parse("config is missing 'm_train' (or 'auto')".into()))?;
    let learner_name =
        learner_name.ok_or_else(|| Error::Parse("config is missing 'learner'".into()))?;
    let learner = match learner_name.as_str() {
        "relu-reliable" => LearnerKind::ReluReliable,
        "poly" => LearnerKind::Poly { degree, bound },
        "bach" => LearnerKind::Bach,
        "network" => LearnerKind::Network {
            depth,
            weight_bound,
            output_bound,
            activation,
        },
        other => return Err(Error::Parse(format!("unknown learner '{other}'"))),
    };
    let seeds = seeds.ok_or_else(|| Error::Parse("config is missing 'seeds'".into()))?;

    Ok(ExperimentConfig {
        generator: GeneratorSpec {
            kind,
            n,
            m: m_train,
            seed: 0,
            noise,
            zero_region,
        },
        m_test,
        auto_m,
        learner,
        loss,
        eps,
        delta,
        seeds,
        oracle_resolution,
        thresholds,
        opts,
    })
}
