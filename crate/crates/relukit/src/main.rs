//! Command-line front end: certified activation approximants, the four
//! training lanes, data generation, grid oracles, and scripted experiment
//! runs. Every number crossing a process boundary is printed with 17
//! significant digits so downstream tools can reproduce results bit for bit.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use relukit::approx::{approx_relu_opts, approx_sigmoid_opts, Activation, ApproxOpts};
use relukit::harness::{
    generate, grid_oracle_relu, parse_config, run_experiment, GeneratorKind, GeneratorSpec,
    GroundTruth, NoiseModel, NoiseSpec, OracleObjective,
};
use relukit::kernel::{gram, KernelSpec};
use relukit::learners::{
    learn_network, learn_poly_agnostic, learn_relu_reliable, maximize_relu_correlation,
    sample_size, NetworkArch,
};
use relukit::model_io;
use relukit::solver::{SolveOpts, SolveReport};
use relukit::util::fmt_f64;
use relukit::{Dataset, LabelRange, LossSpec, Result};

#[derive(Parser)]
#[command(
    name = "relukit",
    version,
    about = "Kernel-based learners for ReLU-like regression with reliable guarantees"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Emit a certified polynomial approximant of an activation.
    Approx(ApproxArgs),
    /// Reliable ReLU regression: zero false positives up to tolerance.
    TrainReluReliable(TrainReluArgs),
    /// Agnostic polynomial regression of a chosen degree and weight budget.
    TrainPoly(TrainPolyArgs),
    /// Best-correlating ReLU direction (agnostic, correlation objective).
    TrainBach(TrainBachArgs),
    /// Agnostic regression against a bounded-network comparator class.
    TrainNetwork(TrainNetworkArgs),
    /// Max of k linear pieces, learned through the network reduction.
    FitMaxAffine(FitMaxAffineArgs),
    /// Sample-complexity estimate for the kernel regression lanes.
    SampleSize(SampleSizeArgs),
    /// Draw a synthetic dataset from a planted generator.
    GenData(GenDataArgs),
    /// Exhaustive grid search over ReLU directions (n = 2 or 3).
    Oracle(OracleArgs),
    /// Evaluate a saved model or network on a dataset.
    Predict(PredictArgs),
    /// Export the multinomial-kernel Gram matrix of a dataset.
    Gram(GramArgs),
    /// Run a scripted experiment; exit 0 iff its thresholds are met.
    Run(RunArgs),
}

/// Solver knobs shared by every training lane.
#[derive(Args)]
struct SolverFlags {
    /// Relative objective-improvement tolerance.
    #[arg(long, default_value_t = 1e-7)]
    objective_tol: f64,
    /// Constraint-violation tolerance.
    #[arg(long, default_value_t = 1e-6)]
    feas_tol: f64,
    /// Iteration cap for the subgradient loop.
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    /// Seed for solver-internal randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverFlags {
    fn opts(&self) -> SolveOpts {
        SolveOpts {
            objective_tol: self.objective_tol,
            feas_tol: self.feas_tol,
            max_iters: self.max_iters,
            seed: self.seed,
            ..SolveOpts::default()
        }
    }
}

#[derive(Args)]
struct ApproxArgs {
    /// Activation to approximate: relu or sigmoid.
    #[arg(long)]
    target: String,
    /// Uniform accuracy on [-1, 1].
    #[arg(long)]
    eps: f64,
    /// Hard cap on the adaptive degree.
    #[arg(long, default_value_t = 200)]
    degree_ceiling: usize,
    /// Write the record here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainReluArgs {
    /// Dataset CSV with labels in [0, 1].
    #[arg(long)]
    data: PathBuf,
    /// Accuracy parameter; also sets the 2*eps output threshold.
    #[arg(long)]
    eps: f64,
    /// Confidence parameter in (0, 1).
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Loss name: squared or absolute.
    #[arg(long, default_value = "squared")]
    loss: String,
    /// Save the trained model here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct TrainPolyArgs {
    #[arg(long)]
    data: PathBuf,
    /// Polynomial degree of the comparator class.
    #[arg(long)]
    degree: usize,
    /// Weight budget B on the squared coefficient norm.
    #[arg(long)]
    bound: f64,
    #[arg(long, default_value = "squared")]
    loss: String,
    /// Label range of the CSV: zero-one, pm-one, or sym:R.
    #[arg(long, default_value = "pm-one")]
    range: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct TrainBachArgs {
    /// Dataset CSV with labels in [-1, 1] (or [0, 1]).
    #[arg(long)]
    data: PathBuf,
    /// Approximation accuracy used to pick the kernel degree.
    #[arg(long)]
    eps: f64,
    /// Label range of the CSV.
    #[arg(long, default_value = "pm-one")]
    range: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct TrainNetworkArgs {
    #[arg(long)]
    data: PathBuf,
    /// Comparator depth D >= 1.
    #[arg(long)]
    depth: usize,
    /// Weight bound W: max l1 norm of hidden rows.
    #[arg(long)]
    weight_bound: f64,
    /// Output bound M on the network values.
    #[arg(long)]
    output_bound: f64,
    /// Hidden activation: relu or sigmoid.
    #[arg(long, default_value = "relu")]
    activation: String,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value = "squared")]
    loss: String,
    /// Label range; defaults to sym:max(1, W*M).
    #[arg(long)]
    range: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct FitMaxAffineArgs {
    #[arg(long)]
    data: PathBuf,
    /// Number of linear pieces in the comparator max.
    #[arg(long)]
    k: usize,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value = "squared")]
    loss: String,
    /// Label range; defaults to the gadget output range sym:2.
    #[arg(long, default_value = "sym:2")]
    range: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct SampleSizeArgs {
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Kernel degree d.
    #[arg(long)]
    degree: usize,
    /// Weight budget B.
    #[arg(long)]
    weight_bound: f64,
    /// Lipschitz constant of the loss.
    #[arg(long, default_value_t = 2.0)]
    lipschitz: f64,
    /// Pointwise bound on the loss.
    #[arg(long, default_value_t = 1.0)]
    loss_bound: f64,
}

#[derive(Args)]
struct GenDataArgs {
    /// planted-relu, planted-poly, planted-depth2, planted-max-affine,
    /// or adversarial-corrupt.
    #[arg(long)]
    kind: String,
    /// Ambient dimension.
    #[arg(long)]
    n: usize,
    /// Sample count.
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Corruption rate in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    noise_rate: f64,
    /// flip-to-random or additive-bounded.
    #[arg(long, default_value = "flip-to-random")]
    noise_model: String,
    /// Hidden units for planted-depth2.
    #[arg(long, default_value_t = 3)]
    units: usize,
    /// Pieces for planted-max-affine.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Allow corruption to touch zero-labeled samples.
    #[arg(long)]
    no_zero_region: bool,
    /// Dataset CSV destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also record what was planted (direction list or network file).
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    data: PathBuf,
    /// reliable or correlation.
    #[arg(long, default_value = "reliable")]
    objective: String,
    /// Loss for the reliable objective.
    #[arg(long, default_value = "squared")]
    loss: String,
    #[arg(long, default_value_t = 10_000)]
    resolution: usize,
    #[arg(long, default_value = "zero-one")]
    range: String,
}

#[derive(Args)]
struct PredictArgs {
    /// Model or network file; the kind is detected from the header.
    #[arg(long)]
    model: PathBuf,
    /// Dataset CSV; labels are ignored.
    #[arg(long)]
    data: PathBuf,
    /// Label range used to parse the CSV.
    #[arg(long, default_value = "pm-one")]
    range: String,
    /// Predictions destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GramArgs {
    #[arg(long)]
    data: PathBuf,
    /// Multinomial kernel degree.
    #[arg(long, default_value_t = 2)]
    degree: usize,
    #[arg(long, default_value = "pm-one")]
    range: String,
    /// Matrix CSV destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (key value lines).
    #[arg(long)]
    config: PathBuf,
    /// Also write the report CSV here.
    #[arg(long)]
    report: Option<PathBuf>,
}

/// Sink that is either a file or stdout.
fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn load_data(path: &PathBuf, range: &str) -> Result<Dataset> {
    Dataset::read_csv_path(path, LabelRange::parse(range)?)
}

fn loss_for(name: &str, range: LabelRange) -> Result<LossSpec> {
    let (lo, hi) = range.bounds();
    LossSpec::by_name(name, lo, hi)
}

fn print_report(report: &SolveReport) {
    let status = if report.converged { "converged" } else { "maxiter" };
    println!("status {status}");
    println!("objective {}", fmt_f64(report.objective));
    println!("iterations {}", report.iterations);
    println!("violation {}", fmt_f64(report.max_constraint_violation));
}

fn save_model(h: &relukit::Hypothesis, out: &Option<PathBuf>) -> Result<()> {
    if let Some(path) = out {
        model_io::write_model_path(h, path)?;
        println!("model {}", path.display());
    }
    Ok(())
}

fn cmd_approx(args: &ApproxArgs) -> Result<()> {
    let opts = ApproxOpts {
        degree_ceiling: args.degree_ceiling,
        ..ApproxOpts::default()
    };
    let (poly, cert) = match Activation::parse(&args.target)? {
        Activation::Relu => approx_relu_opts(args.eps, &opts)?,
        Activation::Sigmoid => approx_sigmoid_opts(args.eps, &opts)?,
        other => {
            return Err(relukit::Error::InvalidParameter(format!(
                "no certified approximant for target {}",
                other.name()
            )))
        }
    };
    let mut out = open_out(&args.out)?;
    writeln!(out, "target {}", cert.target.name())?;
    writeln!(out, "eps {}", fmt_f64(cert.eps))?;
    writeln!(out, "degree {}", cert.degree)?;
    writeln!(out, "coefficients")?;
    for &c in poly.coeffs() {
        writeln!(out, "{}", fmt_f64(c))?;
    }
    writeln!(out, "max_grid_error {}", fmt_f64(cert.max_grid_error))?;
    writeln!(out, "grid_error_raw {}", fmt_f64(cert.grid_error_raw))?;
    writeln!(out, "slack {}", fmt_f64(cert.slack))?;
    writeln!(out, "weight {}", fmt_f64(cert.weight))?;
    writeln!(out, "weight2 {}", fmt_f64(cert.weight2))?;
    writeln!(out, "grid_points {}", cert.grid_points)?;
    writeln!(
        out,
        "interval {} {}",
        fmt_f64(cert.interval.0),
        fmt_f64(cert.interval.1)
    )?;
    Ok(())
}

fn cmd_train_relu(args: &TrainReluArgs) -> Result<()> {
    let data = load_data(&args.data, "zero-one")?;
    let loss = loss_for(&args.loss, LabelRange::ZeroOne)?;
    let model = learn_relu_reliable(&data, &loss, args.eps, args.delta, &args.solver.opts())?;
    print_report(&model.report);
    println!("degree {}", model.d);
    println!("weight_budget {}", fmt_f64(model.b));
    println!("threshold {}", fmt_f64(model.hypothesis.threshold()));
    save_model(&model.hypothesis, &args.out)
}

fn cmd_train_poly(args: &TrainPolyArgs) -> Result<()> {
    let range = LabelRange::parse(&args.range)?;
    let data = load_data(&args.data, &args.range)?;
    let loss = loss_for(&args.loss, range)?;
    let model = learn_poly_agnostic(&data, &loss, args.degree, args.bound, &args.solver.opts())?;
    print_report(&model.report);
    println!("degree {}", model.degree);
    save_model(&model.hypothesis, &args.out)
}

fn cmd_train_bach(args: &TrainBachArgs) -> Result<()> {
    let data = load_data(&args.data, &args.range)?;
    let (h, report) = maximize_relu_correlation(&data, args.eps, &args.solver.opts())?;
    print_report(&report);
    save_model(&h, &args.out)
}

fn cmd_train_network(args: &TrainNetworkArgs) -> Result<()> {
    let arch = NetworkArch::new(args.depth, args.weight_bound, args.output_bound)?;
    let radius = (args.weight_bound * args.output_bound).max(1.0);
    let range = match &args.range {
        Some(s) => LabelRange::parse(s)?,
        None => LabelRange::Symmetric(radius),
    };
    let data = Dataset::read_csv_path(&args.data, range)?;
    let loss = loss_for(&args.loss, range)?;
    let activation = Activation::parse(&args.activation)?;
    let (h, report) = learn_network(&data, &loss, arch, activation, args.eps, &args.solver.opts())?;
    print_report(&report);
    save_model(&h, &args.out)
}

fn cmd_fit_max_affine(args: &FitMaxAffineArgs) -> Result<()> {
    if args.k == 0 {
        return Err(relukit::Error::InvalidParameter(
            "need at least one piece".into(),
        ));
    }
    // Comparator bounds come from the tree gadget: depth log2(k) rounded up,
    // row l1 at most 3 (6 once combination layers appear), outputs in [-2, 2].
    let mut size = 2usize;
    let mut depth = 1usize;
    while size < args.k {
        size *= 2;
        depth += 1;
    }
    let weight_bound = if depth == 1 { 3.0 } else { 6.0 };
    let arch = NetworkArch::new(depth, weight_bound, 2.0)?;
    let range = LabelRange::parse(&args.range)?;
    let data = Dataset::read_csv_path(&args.data, range)?;
    let loss = loss_for(&args.loss, range)?;
    let (h, report) = learn_network(
        &data,
        &loss,
        arch,
        Activation::Relu,
        args.eps,
        &args.solver.opts(),
    )?;
    println!("pieces {}", args.k);
    println!("depth {depth}");
    println!("weight_bound {}", fmt_f64(weight_bound));
    print_report(&report);
    save_model(&h, &args.out)
}

fn cmd_sample_size(args: &SampleSizeArgs) -> Result<()> {
    let m = sample_size(
        args.eps,
        args.delta,
        args.degree,
        args.weight_bound,
        args.lipschitz,
        args.loss_bound,
    )?;
    println!("{m}");
    Ok(())
}

fn cmd_gen_data(args: &GenDataArgs) -> Result<()> {
    let spec = GeneratorSpec {
        kind: GeneratorKind::parse(&args.kind, args.units, args.k)?,
        n: args.n,
        m: args.m,
        seed: args.seed,
        noise: NoiseSpec {
            rate: args.noise_rate,
            model: NoiseModel::parse(&args.noise_model)?,
        },
        zero_region: !args.no_zero_region,
    };
    let (data, truth) = generate(&spec)?;
    data.write_csv(open_out(&args.out)?)?;
    if let Some(path) = &args.truth_out {
        let mut t = std::io::BufWriter::new(std::fs::File::create(path)?);
        match &truth {
            GroundTruth::Relu(w) => {
                writeln!(t, "relu-direction")?;
                for &v in w {
                    writeln!(t, "{}", fmt_f64(v))?;
                }
            }
            GroundTruth::Quadratic => writeln!(t, "quadratic x1*x2")?,
            GroundTruth::Depth2(net) => model_io::write_network(net, t)?,
            GroundTruth::MaxAffine(ws) => {
                writeln!(t, "max-affine {}", ws.len())?;
                for w in ws {
                    let row: Vec<String> = w.iter().map(|&v| fmt_f64(v)).collect();
                    writeln!(t, "{}", row.join(" "))?;
                }
            }
        }
    }
    Ok(())
}

fn cmd_oracle(args: &OracleArgs) -> Result<()> {
    let range = LabelRange::parse(&args.range)?;
    let data = load_data(&args.data, &args.range)?;
    let objective = match args.objective.as_str() {
        "reliable" => OracleObjective::ReliableLoss(loss_for(&args.loss, range)?),
        "correlation" => OracleObjective::Correlation,
        other => {
            return Err(relukit::Error::Parse(format!(
                "unknown oracle objective '{other}'"
            )))
        }
    };
    let res = grid_oracle_relu(&data, &objective, args.resolution)?;
    println!("objective {}", res.objective);
    println!("resolution {}", res.grid_resolution);
    println!("best_value {}", fmt_f64(res.best_value));
    let dir: Vec<String> = res.best_direction.iter().map(|&v| fmt_f64(v)).collect();
    println!("best_direction {}", dir.join(" "));
    Ok(())
}

fn cmd_predict(args: &PredictArgs) -> Result<()> {
    let data = load_data(&args.data, &args.range)?;
    let mut out = open_out(&args.out)?;
    if model_io::sniff_network_path(&args.model)? {
        let net = model_io::read_network_path(&args.model)?;
        for s in data.samples() {
            writeln!(out, "{}", fmt_f64(net.eval(s.x())?))?;
        }
    } else {
        let h = model_io::read_model_path(&args.model)?;
        for s in data.samples() {
            writeln!(out, "{}", fmt_f64(h.predict(s.x())?))?;
        }
    }
    Ok(())
}

fn cmd_gram(args: &GramArgs) -> Result<()> {
    let data = load_data(&args.data, &args.range)?;
    let g = gram(&data, &KernelSpec::plain(args.degree))?;
    g.write_csv(open_out(&args.out)?)
}

/// Returns whether every threshold in the config was met.
fn cmd_run(args: &RunArgs) -> Result<bool> {
    let text = std::fs::read_to_string(&args.config)?;
    let config = parse_config(&text)?;
    let outcome = run_experiment(&config)?;
    print!("{}", outcome.report);
    if let Some(path) = &args.report {
        std::fs::write(path, outcome.report.as_bytes())?;
    }
    eprintln!(
        "{} of {} seeds passed (need {})",
        outcome.pass_count, outcome.seed_count, config.thresholds.min_pass
    );
    Ok(outcome.passed)
}

fn main() -> std::process::ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Approx(a) => cmd_approx(a),
        Cmd::TrainReluReliable(a) => cmd_train_relu(a),
        Cmd::TrainPoly(a) => cmd_train_poly(a),
        Cmd::TrainBach(a) => cmd_train_bach(a),
        Cmd::TrainNetwork(a) => cmd_train_network(a),
        Cmd::FitMaxAffine(a) => cmd_fit_max_affine(a),
        Cmd::SampleSize(a) => cmd_sample_size(a),
        Cmd::GenData(a) => cmd_gen_data(a),
        Cmd::Oracle(a) => cmd_oracle(a),
        Cmd::Predict(a) => cmd_predict(a),
        Cmd::Gram(a) => cmd_gram(a),
        Cmd::Run(a) => {
            return match cmd_run(a) {
                Ok(true) => std::process::ExitCode::SUCCESS,
                Ok(false) => std::process::ExitCode::FAILURE,
                Err(e) => {
                    eprintln!("error: {e}");
                    std::process::ExitCode::from(2)
                }
            }
        }
    };
    match result {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::ExitCode::from(2)
        }
    }
}
