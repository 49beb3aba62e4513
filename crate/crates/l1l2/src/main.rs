//! `l1l2` command line: prox evaluation, single solves, stationary-point
//! construction and experiment campaigns.
//!
//! Exit codes: 0 on success, 2 when some trials failed or were discarded,
//! 1 on a fatal error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use l1l2::bench::{
    self, constructed_method, family_matrix, noisy_method, run_experiment, stream_seed, success_gamma,
    success_method, ExperimentKind, ExperimentSpec, MatrixFamily, MethodSpec, ResultTable,
};
use l1l2::core::construct::construct_stationary;
use l1l2::core::linalg::rel_err;
use l1l2::core::problems::{gen_sparse_signal, lipschitz_constant, make_instance, spectral_normalize, ColumnScaling};
use l1l2::core::prox::prox_l1_al2;
use l1l2::core::rng::{trial_seed, Stream};
use l1l2::core::solvers::{check_stepsize, l1_init, solve, Warning};
use l1l2::core::{PenaltySpec, ProblemInstance, SolverConfig, TieRule};
use l1l2::fmt::num;
use l1l2::{config, io, Error};

#[derive(Parser)]
#[command(name = "l1l2", version, about = "Sparse recovery with the L1 - alpha*L2 penalty")]
struct Cli {
    /// Flat key=value file of flag defaults (keys are long flag names); explicit flags win
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the proximal operator of lambda*(||x||_1 - alpha*||x||_2)
    Prox(ProxArgs),
    /// Solve one problem, from files or a generated noise-free instance
    Solve(SolveArgs),
    /// Build measurement vectors that make sparse vectors stationary points
    Construct(ConstructArgs),
    /// Run a seeded experiment campaign and write per-trial CSV
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum Tie {
    /// Put the mass on the lowest maximizing index
    Lowest,
    /// As `lowest`, and list every maximizing index
    ReportAllMaxima,
}

#[derive(Args)]
struct ProxArgs {
    /// Input vector, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    y: Vec<f64>,
    /// Threshold lambda > 0
    #[arg(long)]
    lambda: f64,
    /// Weight of the L2 term, alpha >= 0
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Tie rule among entries attaining ||y||_inf
    #[arg(long, value_enum, default_value = "lowest")]
    tie: Tie,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverName {
    Fbs,
    FbsAcc,
    Admm,
    Dca,
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    /// L1 warm start: 2N ADMM steps with alpha = 0
    L1,
    /// Start from zero (not allowed for dca)
    Zero,
}

#[derive(Args)]
struct SolveArgs {
    /// Sensing matrix CSV (`rows,cols` header); omitted: generate one
    #[arg(long, value_name = "PATH", requires = "b")]
    a: Option<PathBuf>,
    /// Measurement vector CSV
    #[arg(long, value_name = "PATH")]
    b: Option<PathBuf>,
    /// Ground truth CSV, enables rel_err
    #[arg(long, value_name = "PATH")]
    truth: Option<PathBuf>,
    /// Generated matrix family (spectrally normalized, L = 1)
    #[arg(long, default_value = "gaussian")]
    family: MatrixFamily,
    /// Rows of the generated matrix
    #[arg(long, default_value_t = 64)]
    m: usize,
    /// Columns of the generated matrix
    #[arg(long, default_value_t = 256)]
    n: usize,
    /// Over-sampled DCT refinement factor
    #[arg(long = "F", value_name = "F")]
    f: Option<f64>,
    /// Nonzeros of the generated signal
    #[arg(long, default_value_t = 10)]
    sparsity: usize,
    /// Seed of the generated instance
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "admm")]
    method: SolverName,
    /// Weight of the L2 term
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Regularization weight
    #[arg(long, default_value_t = 1e-6)]
    gamma: f64,
    /// FBS stepsize, must satisfy lambda < 1/L [default: 0.99/L]
    #[arg(long)]
    lambda: Option<f64>,
    /// ADMM penalty [default: 10*gamma]
    #[arg(long)]
    delta: Option<f64>,
    /// Relative-step stopping tolerance
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Iteration cap [default: 10N]
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_enum, default_value = "l1")]
    init: Init,
    /// Write the solution here
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Write the `iter,matvecs,objective,rel_err` trace here
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(long, default_value = "gaussian")]
    family: MatrixFamily,
    /// Rows [default: 64, or 100 for odct]
    #[arg(long)]
    m: Option<usize>,
    /// Columns [default: 256, or 1500 for odct]
    #[arg(long)]
    n: Option<usize>,
    /// Over-sampled DCT refinement factor
    #[arg(long = "F", value_name = "F")]
    f: Option<f64>,
    /// Nonzeros of x*
    #[arg(long, default_value_t = 10)]
    sparsity: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for `a_<t>.csv`, `x_<t>.csv`, `b_<t>.csv` of kept trials
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Noise-free success rates over sparsity levels
    Success(SuccessArgs),
    /// Convergence to constructed stationary points over gamma values
    Constructed(ConstructedArgs),
    /// MSE of noisy recovery over numbers of measurements
    Noisy(NoisyArgs),
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Master seed; trial seeds derive from (seed, sweep value, trial)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses all cores
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Per-trial CSV; metadata goes to `<out>.meta`
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Directory for per-trial solver traces
    #[arg(long, value_name = "DIR")]
    trace_dir: Option<PathBuf>,
    /// Relative-step stopping tolerance of every method
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Iteration cap of every method [default: 10N]
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct SuccessArgs {
    #[arg(long, default_value = "gaussian")]
    family: MatrixFamily,
    /// Rows [default: 64, or 100 for odct]
    #[arg(long)]
    m: Option<usize>,
    /// Columns [default: 256, or 1500 for odct]
    #[arg(long)]
    n: Option<usize>,
    /// Over-sampled DCT refinement factor
    #[arg(long = "F", value_name = "F")]
    f: Option<f64>,
    /// Sparsity levels, comma separated
    #[arg(long, value_delimiter = ',', default_value = "5,10,15,20,25,30")]
    sparsity: Vec<f64>,
    /// Regularization weight [default: 1e-6, or 1e-7 for odct]
    #[arg(long)]
    gamma: Option<f64>,
    /// Methods among l1-admm, admm, dca, weighted
    #[arg(long, value_delimiter = ',', default_value = "dca,admm,weighted")]
    methods: Vec<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ConstructedArgs {
    /// gaussian or dct
    #[arg(long, default_value = "gaussian")]
    family: MatrixFamily,
    #[arg(long, default_value_t = 64)]
    m: usize,
    #[arg(long, default_value_t = 256)]
    n: usize,
    /// Nonzeros of x*
    #[arg(long, default_value_t = 10)]
    sparsity: usize,
    /// Regularization weights, comma separated
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.01,0.001")]
    gamma: Vec<f64>,
    /// Methods among dca, fbs (lambda = 1), admm (delta = 0.1)
    #[arg(long, value_delimiter = ',', default_value = "dca,fbs,admm")]
    methods: Vec<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scaling {
    /// Zero-mean columns with norm sqrt(M - 1)
    UnitVariance,
    /// Zero-mean columns with unit norm
    UnitNorm,
}

#[derive(Args)]
struct NoisyArgs {
    /// Numbers of measurements, comma separated
    #[arg(long, value_delimiter = ',', default_value = "238,250,276,300")]
    m: Vec<f64>,
    #[arg(long, default_value_t = 512)]
    n: usize,
    /// Nonzeros of the signal
    #[arg(long, default_value_t = 130)]
    sparsity: usize,
    /// Noise standard deviation
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, value_enum, default_value = "unit-variance")]
    scaling: Scaling,
    /// Methods among l1-fbs, l1l2-fbs (scheduled gamma), l1l2-admm (gamma = 0.8)
    #[arg(long, value_delimiter = ',', default_value = "l1-fbs,l1l2-fbs,l1l2-admm")]
    methods: Vec<String>,
    #[command(flatten)]
    common: CommonArgs,
}

/// Outcome of a command that did not fail outright.
enum Status {
    Ok,
    Partial,
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let args = match with_config_defaults(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let cli = Cli::parse_from(args);
    let result = match cli.command {
        Command::Prox(a) => cmd_prox(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Construct(a) => cmd_construct(a),
        Command::Bench(b) => cmd_bench(b),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Partial) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Appends `--key=value` for config-file keys not given on the command line.
fn with_config_defaults(args: Vec<String>) -> Result<Vec<String>, Error> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else if a == "--config" {
            path = args.get(i + 1).cloned();
        }
    }
    match path {
        Some(p) => {
            let kv = config::read(&p)?;
            Ok(config::merge_defaults(&args, args.len(), &kv))
        }
        None => Ok(args),
    }
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|&x| num(if x == 0.0 { 0.0 } else { x }))
        .collect::<Vec<_>>()
        .join(",")
}

fn cmd_prox(a: ProxArgs) -> Result<Status, Error> {
    let r = prox_l1_al2(&a.y, a.lambda, a.alpha, TieRule::LowestIndex)?;
    let mut line = format!("x={} case={} unique={}", join(&r.x), r.case.number(), r.is_unique);
    if let Tie::ReportAllMaxima = a.tie {
        if !r.maximizers.is_empty() {
            let idx: Vec<String> = r.maximizers.iter().map(|i| i.to_string()).collect();
            line.push_str(&format!(" maxima={}", idx.join(",")));
        }
    }
    println!("{line}");
    Ok(Status::Ok)
}

fn solver_config(a: &SolveArgs) -> SolverConfig {
    let mut cfg = match a.method {
        SolverName::Fbs => SolverConfig::fbs(),
        SolverName::FbsAcc => SolverConfig::fbs_accelerated(),
        SolverName::Admm => SolverConfig::admm(),
        SolverName::Dca => SolverConfig::dca(),
    }
    .with_tol(a.tol);
    if let Some(l) = a.lambda {
        cfg = cfg.with_lambda(l);
    }
    if let Some(d) = a.delta {
        cfg = cfg.with_delta(d);
    }
    if let Some(m) = a.max_iter {
        cfg = cfg.with_max_iter(m);
    }
    cfg
}

fn solve_instance(a: &SolveArgs) -> Result<ProblemInstance, Error> {
    let penalty = PenaltySpec::new(a.alpha, a.gamma)?;
    match (&a.a, &a.b) {
        (Some(pa), Some(pb)) => {
            let m = io::read_matrix(pa)?;
            let b = io::read_vector(pb)?;
            let l = lipschitz_constant(&m);
            let mut p = ProblemInstance::new(m, b, penalty)?.with_lipschitz(l);
            if let Some(t) = &a.truth {
                p = p.with_truth(io::read_vector(t)?)?;
            }
            Ok(p)
        }
        _ => {
            let seed = a.seed;
            let raw = family_matrix(a.family, a.m, a.n, a.f, stream_seed(seed, Stream::Matrix))?;
            let m = spectral_normalize(&raw)?;
            let (x, _) = gen_sparse_signal(a.n, a.sparsity, stream_seed(seed, Stream::Signal))?;
            Ok(make_instance(m, x, 0.0, penalty, seed)?.with_lipschitz(1.0))
        }
    }
}

fn report_warnings(w: &[Warning]) {
    for w in w {
        eprintln!("warning: {w}");
    }
}

fn cmd_solve(a: SolveArgs) -> Result<Status, Error> {
    let cfg = solver_config(&a);
    cfg.validate()?;
    let p = solve_instance(&a)?;
    if let (SolverName::Fbs | SolverName::FbsAcc, Some(l)) = (a.method, cfg.lambda) {
        if let Some(w) = check_stepsize(l, p.lipschitz())? {
            report_warnings(&[w]);
        }
    }
    let x0 = match a.init {
        Init::L1 => l1_init(&p, a.gamma)?,
        Init::Zero => vec![0.0; p.n()],
    };
    let t = solve(&p, &cfg, &x0)?;
    report_warnings(&t.warnings);
    if let Some(out) = &a.out {
        io::write_vector(out, &t.x)?;
    }
    if let Some(path) = &a.trace {
        bench::write_trace(path, &t, &x0, p.x_true.as_deref())?;
    }
    let mut line = match &p.x_true {
        Some(x) => format!("rel_err={}", num(rel_err(&t.x, x))),
        None => format!("objective={}", num(t.final_objective())),
    };
    line.push_str(&format!(
        " iterations={} matvecs={} converged={}",
        t.iterations, t.matvecs, t.converged
    ));
    println!("{line}");
    Ok(Status::Ok)
}

fn cmd_construct(a: ConstructArgs) -> Result<Status, Error> {
    let (dm, dn) = a.family.default_dims();
    let (m, n) = (a.m.unwrap_or(dm), a.n.unwrap_or(dn));
    if a.family == MatrixFamily::OversampledDct && a.f.is_none() {
        return Err(Error::Spec("over-sampled DCT needs --F".into()));
    }
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).map_err(|e| Error::Spec(format!("{}: {e}", dir.display())))?;
    }
    let mut kept = 0;
    let mut discarded = 0;
    for t in 0..a.trials {
        let seed = trial_seed(a.seed, a.gamma, t as u64);
        let raw = family_matrix(a.family, m, n, a.f, stream_seed(seed, Stream::Matrix))?;
        let mat = spectral_normalize(&raw)?;
        let (x, _) = gen_sparse_signal(n, a.sparsity, stream_seed(seed, Stream::Signal))?;
        let c = match construct_stationary(&mat, &x, a.alpha, a.gamma) {
            Ok(c) if c.converged => c,
            Ok(c) => {
                eprintln!("trial {t}: discarded, POCS did not converge in {} iterations", c.pocs_iterations);
                discarded += 1;
                continue;
            }
            Err(e) => {
                eprintln!("trial {t}: discarded, {e}");
                discarded += 1;
                continue;
            }
        };
        if let Some(dir) = &a.out {
            io::write_matrix(dir.join(format!("a_{t}.csv")), &mat)?;
            io::write_vector(dir.join(format!("x_{t}.csv")), &x)?;
            io::write_vector(dir.join(format!("b_{t}.csv")), &c.b)?;
        }
        kept += 1;
    }
    println!("constructed={kept} discarded={discarded}");
    Ok(if discarded > 0 { Status::Partial } else { Status::Ok })
}

fn named_methods(names: &[String], lookup: impl Fn(&str) -> Option<MethodSpec>) -> Result<Vec<MethodSpec>, Error> {
    names
        .iter()
        .map(|n| lookup(n.trim()).ok_or_else(|| Error::Spec(format!("unknown method `{n}`"))))
        .collect()
}

fn apply_common(spec: &mut ExperimentSpec, c: &CommonArgs) {
    spec.jobs = c.jobs;
    spec.trace_dir = c.trace_dir.clone();
    for m in &mut spec.methods {
        m.config.tol = c.tol;
        if let Some(cap) = c.max_iter {
            m.config.max_iter = Some(cap);
        }
    }
}

fn cmd_bench(b: BenchCommand) -> Result<Status, Error> {
    let (spec, common) = match b {
        BenchCommand::Success(a) => {
            let (dm, dn) = a.family.default_dims();
            let gamma = a.gamma.unwrap_or_else(|| success_gamma(a.family));
            let mut spec = ExperimentSpec::success(a.family, a.f, a.sparsity, a.common.trials, a.common.seed);
            spec.m = a.m.unwrap_or(dm);
            spec.n = a.n.unwrap_or(dn);
            spec.gamma = gamma;
            spec.methods = named_methods(&a.methods, |n| success_method(n, a.family, a.f, gamma))?;
            (spec, a.common)
        }
        BenchCommand::Constructed(a) => {
            let mut spec = ExperimentSpec::constructed(a.family, a.gamma, a.common.trials, a.common.seed);
            spec.m = a.m;
            spec.n = a.n;
            spec.sparsity = a.sparsity;
            spec.methods = named_methods(&a.methods, constructed_method)?;
            (spec, a.common)
        }
        BenchCommand::Noisy(a) => {
            let mut spec = ExperimentSpec::noisy(a.m, a.common.trials, a.common.seed);
            spec.n = a.n;
            spec.sparsity = a.sparsity;
            spec.sigma = a.sigma;
            spec.scaling = match a.scaling {
                Scaling::UnitVariance => ColumnScaling::UnitVariance,
                Scaling::UnitNorm => ColumnScaling::UnitNorm,
            };
            spec.methods = named_methods(&a.methods, noisy_method)?;
            (spec, a.common)
        }
    };
    let mut spec = spec;
    apply_common(&mut spec, &common);
    if let Some(dir) = &spec.trace_dir {
        fs::create_dir_all(dir).map_err(|e| Error::Spec(format!("{}: {e}", dir.display())))?;
    }
    let table = run_experiment(&spec)?;
    if let Some(out) = &common.out {
        bench::write_csv(&table, out)?;
        bench::write_metadata(&table, meta_path(out))?;
    }
    print_summaries(&table);
    println!("{}", summary_line(&table));
    for d in &table.discarded {
        eprintln!("discarded sweep={} trial={}: {}", num(d.sweep), d.trial, d.reason);
    }
    Ok(if table.failures() > 0 || !table.discarded.is_empty() {
        Status::Partial
    } else {
        Status::Ok
    })
}

fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

fn print_summaries(table: &ResultTable) {
    eprintln!(
        "{:>10} {:>10} {:>7} {:>6} {:>8} {:>12} {:>12} {:>10} {:>12}",
        "sweep", "method", "trials", "failed", "success", "rel_err", "mse", "mse_se", "matvecs"
    );
    for s in table.summaries() {
        eprintln!(
            "{:>10} {:>10} {:>7} {:>6} {:>8.2} {:>12.4e} {:>12.4} {:>10.4} {:>12.1}",
            num(s.sweep),
            s.method,
            s.trials,
            s.failures,
            s.success_rate,
            s.mean_rel_err,
            s.mean_mse,
            s.se_mse(),
            s.mean_matvecs
        );
    }
}

/// Success rate, mean calibrated MSE per method, or worst final relative error.
fn summary_line(table: &ResultTable) -> String {
    let solved: Vec<_> = table.records.iter().filter(|r| r.method != "oracle").collect();
    match table.kind {
        ExperimentKind::Success => {
            let ok = solved.iter().filter(|r| r.success).count();
            format!("success_rate={:.2}", ok as f64 / solved.len().max(1) as f64)
        }
        ExperimentKind::Constructed => {
            let worst = solved
                .iter()
                .filter(|r| !r.is_failure())
                .map(|r| r.rel_err)
                .fold(0.0, f64::max);
            format!(
                "final_rel_err={} discarded={}",
                num(worst),
                table.discarded.len()
            )
        }
        ExperimentKind::Noisy => {
            let parts: Vec<String> = table
                .summaries()
                .iter()
                .map(|s| format!("{}@{}={}", s.method, num(s.sweep), num(s.mean_mse)))
                .collect();
            format!("mean_mse {}", parts.join(" "))
        }
    }
}
