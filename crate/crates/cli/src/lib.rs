//! Command implementations behind the `qutrit-ybe` binary: verify turnover
//! identities, fit mirrored Trotter steps, compress Trotter circuits and
//! sample return-probability dynamics.
//!
//! Exit codes: 0 success, 1 a tolerance or verification check failed,
//! 2 bad arguments, configuration or I/O.

mod svg;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qutrit_ybe::dynamics::{self, Boundary, DynamicsConfig, Method, TimeGrid};
use qutrit_ybe::optimizer::OptimizerConfig;
use qutrit_ybe::spin::{self, Axis, Representation};
use qutrit_ybe::trotter::{self, compress, optimize_reflection, step_angle, ReflectionCost, Scheme};
use qutrit_ybe::turnover::{self, Family};

#[derive(Parser)]
#[command(name = "qutrit-ybe", version, about = "Qutrit turnover identities and Trotter circuit compression")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output file; a `<out>.manifest.json` is written beside it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the pass/fail tolerance.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the exact algebraic and turnover identities.
    Verify(VerifyArgs),
    /// Fit mirrored Trotter steps over a sweep configuration.
    Optimize(OptimizeArgs),
    /// Compress a Trotter circuit by block substitution and merging.
    Compress(CompressArgs),
    /// Tabulate return probabilities of |202⟩.
    Dynamics(DynamicsArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Algebra,
    Turnover,
    Subspace,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Shift ε off α + γ so that every sampled turnover must fail.
    #[arg(long)]
    break_constraint: bool,
}

#[derive(Args)]
struct OptimizeArgs {
    /// JSON sweep configuration.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["params_file", "auto"])))]
struct CompressArgs {
    #[arg(long)]
    scheme: Scheme,
    #[arg(long = "J")]
    j: f64,
    /// Total evolution time covered by the circuit.
    #[arg(long, default_value_t = 5.0)]
    t: f64,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long)]
    nb: usize,
    /// Per-step angle; overrides the value derived from J, t and steps.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// JSON array of mirrored-step parameters, or an object with a `params` field.
    #[arg(long)]
    params_file: Option<PathBuf>,
    /// Fit the mirrored step before compressing.
    #[arg(long)]
    auto: bool,
    /// Fail (exit 1) if the mirrored-step infidelity exceeds this.
    #[arg(long)]
    max_infidelity: Option<f64>,
}

#[derive(Args)]
struct DynamicsArgs {
    #[arg(long = "J", value_delimiter = ',', default_value = "0.1,0.55,1.0")]
    j: Vec<f64>,
    /// `exact`, `trotter:SCHEME:STEPS` or `compressed:SCHEME:STEPS:NB`, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "exact")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 5.0)]
    t_max: f64,
    #[arg(long, default_value_t = 0.025)]
    dt: f64,
    #[arg(long, value_enum, default_value = "open")]
    boundary: BoundaryArg,
    /// Also write one SVG plot per J.
    #[arg(long)]
    svg: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Open,
    Periodic,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn check(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<qutrit_ybe::Error> for Failure {
    fn from(e: qutrit_ybe::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

/// Parse `args` (program name first) and run the command; returns the exit
/// code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return 2;
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let outcome = match &cli.command {
        Command::Verify(a) => verify(&cli, a),
        Command::Optimize(a) => optimize(&cli, a),
        Command::Compress(a) => compress_cmd(&cli, a),
        Command::Dynamics(a) => dynamics_cmd(&cli, a),
    };
    match outcome {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult {
    fs::write(path, contents).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_digest: String,
    rng_seed: Option<u64>,
    tool_version: &'a str,
    started_unix: f64,
    finished_unix: f64,
}

/// Record provenance beside `out` so that `out` itself stays reproducible.
fn write_manifest(out: &Path, command: &str, config: &[u8], seed: Option<u64>, started: f64) -> CliResult {
    let digest = Sha256::digest(config).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    });
    let manifest = Manifest {
        command,
        config_digest: digest,
        rng_seed: seed,
        tool_version: env!("CARGO_PKG_VERSION"),
        started_unix: started,
        finished_unix: unix_now(),
    };
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    write_file(Path::new(&name), &(serde_json::to_string_pretty(&manifest).expect("serializable") + "\n"))
}

fn optimizer_config(base: OptimizerConfig, seed: Option<u64>) -> OptimizerConfig {
    OptimizerConfig {
        rng_seed: seed.unwrap_or(base.rng_seed),
        ..base
    }
}

// ---------------------------------------------------------------- verify

#[derive(Serialize)]
struct SuiteResult {
    name: &'static str,
    max_residual: f64,
    tolerance: f64,
    passed: bool,
}

fn algebra_residual() -> f64 {
    [
        spin::algebra_report(Representation::Standard),
        spin::algebra_report(Representation::Adjoint),
        spin::basis_change_residual(),
        spin::conjugation_unitarity_residual(),
        spin::conjugation_relation_residual(),
        spin::padded_exchange_residual(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

fn turnover_residual(samples: usize, seed: u64, broken: bool) -> f64 {
    let shift = if broken { 0.1 } else { 0.0 };
    let mut worst: f64 = 0.0;
    for family in [Family::SingleAxis, Family::AxisPairs, Family::AllThree] {
        for g in family.generators() {
            worst = worst.max(turnover::sampled_turnover(g, samples, seed, shift));
        }
    }
    worst
}

fn subspace_residual(samples: usize, seed: u64) -> f64 {
    let angles = turnover::sample_angles(samples, seed);
    Axis::ALL
        .par_iter()
        .flat_map_iter(|&axis| {
            angles.iter().map(move |&[a, b, c, d]| {
                let r = turnover::subspace_check(axis, a, b, c, d);
                r.off_block_mass.max(r.block_residual).max(r.qubit_turnover_residual)
            })
        })
        .reduce(|| 0.0, f64::max)
}

fn verify(cli: &Cli, a: &VerifyArgs) -> CliResult {
    let started = unix_now();
    if a.samples == 0 {
        return Err(Failure::usage("--samples must be at least 1"));
    }
    let seed = cli.seed.unwrap_or(0);
    let wants = |s: Suite| a.suite == s || a.suite == Suite::All;
    let mut results = Vec::new();
    let mut push = |name, residual: f64, default_tol: f64| {
        let tolerance = cli.tolerance.unwrap_or(default_tol);
        results.push(SuiteResult {
            name,
            max_residual: residual,
            tolerance,
            passed: residual < tolerance,
        });
    };
    if wants(Suite::Algebra) {
        push("algebra", algebra_residual(), 1e-14);
    }
    if wants(Suite::Turnover) {
        push("turnover", turnover_residual(a.samples, seed, a.break_constraint), 1e-12);
    }
    if wants(Suite::Subspace) {
        push("subspace", subspace_residual(a.samples, seed), 1e-12);
    }

    for r in &results {
        println!(
            "{:<9} max residual {:.3e}  tolerance {:.0e}  {}",
            r.name,
            r.max_residual,
            r.tolerance,
            if r.passed { "PASS" } else { "FAIL" }
        );
    }
    let literal = spin::padded_literal_residual();
    if wants(Suite::Algebra) {
        println!("note: literal two-qubit form I⊗A − A⊗I of padded S̃x has residual {literal:.3e}; the exchange form holds");
    }

    if let Some(out) = &cli.out {
        let report = serde_json::json!({
            "suites": results,
            "samples": a.samples,
            "seed": seed,
            "break_constraint": a.break_constraint,
            "padded_literal_residual": literal,
        });
        write_file(out, &(serde_json::to_string_pretty(&report).expect("serializable") + "\n"))?;
        let args = format!("{:?}|{}|{}|{}", a.suite as u8, a.samples, seed, a.break_constraint);
        write_manifest(out, "verify", args.as_bytes(), Some(seed), started)?;
    }
    if results.iter().all(|r| r.passed) {
        Ok(())
    } else {
        Err(Failure::check("verification failed"))
    }
}

// -------------------------------------------------------------- optimize

#[derive(Deserialize)]
#[serde(untagged)]
enum ThetaSpec {
    Fixed(f64),
    Derived { t: f64, steps: usize },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfig {
    #[serde(rename = "J")]
    j: Vec<f64>,
    schemes: Vec<Scheme>,
    nb: Vec<usize>,
    theta: ThetaSpec,
    #[serde(default)]
    optimizer: OptimizerConfig,
}

#[derive(Serialize)]
struct OptLine {
    scheme: Scheme,
    #[serde(rename = "J")]
    j: f64,
    nb: usize,
    theta: f64,
    params: Vec<f64>,
    infidelity: f64,
    /// `null` when the infidelity is exactly zero.
    log10_infidelity: Option<f64>,
    restarts: Vec<f64>,
    seed: u64,
}

fn optimize(cli: &Cli, a: &OptimizeArgs) -> CliResult {
    let started = unix_now();
    let raw = read_file(&a.config)?;
    let cfg: SweepConfig =
        serde_json::from_str(&raw).map_err(|e| Failure::usage(format!("{}: {e}", a.config.display())))?;
    let opt = optimizer_config(cfg.optimizer.clone(), cli.seed);
    opt.validate()?;
    if cfg.nb.contains(&0) {
        return Err(Failure::usage("nb entries must be at least 1"));
    }
    let theta_for = |j: f64| -> CliResult<f64> {
        match cfg.theta {
            ThetaSpec::Fixed(t) => Ok(t),
            ThetaSpec::Derived { t, steps } if steps > 0 => Ok(step_angle(j, t, steps)),
            ThetaSpec::Derived { .. } => Err(Failure::usage("theta.steps must be at least 1")),
        }
    };
    let mut jobs = Vec::new();
    for &j in &cfg.j {
        let theta = theta_for(j)?;
        for &scheme in &cfg.schemes {
            for &nb in &cfg.nb {
                jobs.push((j, theta, scheme, nb));
            }
        }
    }
    let lines: Vec<OptLine> = jobs
        .par_iter()
        .map(|&(j, theta, scheme, nb)| {
            let res = optimize_reflection(scheme, theta, nb, &opt)?;
            Ok(OptLine {
                scheme,
                j,
                nb,
                theta,
                params: res.best_params,
                infidelity: res.best_infidelity,
                log10_infidelity: (res.best_infidelity > 0.0).then(|| res.best_infidelity.log10()),
                restarts: res.restart_infidelities,
                seed: opt.rng_seed,
            })
        })
        .collect::<Result<_, qutrit_ybe::Error>>()?;

    let mut body = String::new();
    for l in &lines {
        body += &serde_json::to_string(l).expect("serializable");
        body.push('\n');
    }
    match &cli.out {
        Some(out) => {
            write_file(out, &body)?;
            write_manifest(out, "optimize", raw.as_bytes(), Some(opt.rng_seed), started)?;
        }
        None => print!("{body}"),
    }
    eprint!("{}", log10_table(&lines, &cfg.nb));
    Ok(())
}

fn log10_table(lines: &[OptLine], nbs: &[usize]) -> String {
    let mut s = String::from("     J scheme");
    for nb in nbs {
        let _ = write!(s, "  nb={nb:<3}");
    }
    s.push('\n');
    for row in lines.chunks(nbs.len().max(1)) {
        let _ = write!(s, "{:>6} {:<6}", row[0].j, row[0].scheme.to_string());
        for l in row {
            match l.log10_infidelity {
                Some(v) => {
                    let _ = write!(s, " {v:>7.2}");
                }
                None => s += "    -inf",
            }
        }
        s.push('\n');
    }
    s
}

// -------------------------------------------------------------- compress

#[derive(Deserialize)]
#[serde(untagged)]
enum ParamsFile {
    Bare(Vec<f64>),
    Wrapped { params: Vec<f64> },
}

#[derive(Serialize)]
struct CompressOutput<'a> {
    scheme: Scheme,
    #[serde(rename = "J")]
    j: f64,
    theta: f64,
    steps: usize,
    nb: usize,
    params: &'a [f64],
    infidelity: f64,
    report: &'a trotter::CompressionReport,
}

fn compress_cmd(cli: &Cli, a: &CompressArgs) -> CliResult {
    let started = unix_now();
    if a.nb == 0 || a.steps < a.nb + 1 {
        return Err(Failure::usage(format!(
            "--steps must be at least --nb + 1 (steps = {}, nb = {})",
            a.steps, a.nb
        )));
    }
    let theta = match a.theta {
        Some(t) => t,
        None => {
            let t = step_angle(a.j, a.t, a.steps);
            eprintln!("per-step angle θ = −J·t/steps = −{}·{}/{} = {t}", a.j, a.t, a.steps);
            t
        }
    };
    let seed = cli.seed.unwrap_or(0);
    let (params, infidelity) = if let Some(path) = &a.params_file {
        let raw = read_file(path)?;
        let parsed: ParamsFile =
            serde_json::from_str(raw.trim()).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        let params = match parsed {
            ParamsFile::Bare(p) | ParamsFile::Wrapped { params: p } => p,
        };
        if params.len() != a.scheme.param_count() {
            return Err(Failure::usage(format!(
                "{}: scheme {} takes {} parameters, file has {}",
                path.display(),
                a.scheme,
                a.scheme.param_count(),
                params.len()
            )));
        }
        let c = ReflectionCost::new(a.scheme, theta, a.nb)?.eval(&params);
        (params, c)
    } else {
        let cfg = optimizer_config(OptimizerConfig::default(), Some(seed));
        let res = optimize_reflection(a.scheme, theta, a.nb, &cfg)?;
        (res.best_params, res.best_infidelity)
    };

    let (circuit, report) = compress(a.scheme, theta, a.steps, a.nb, &params)?;
    let doc = CompressOutput {
        scheme: a.scheme,
        j: a.j,
        theta,
        steps: a.steps,
        nb: a.nb,
        params: &params,
        infidelity,
        report: &report,
    };
    let report_json = serde_json::to_string_pretty(&doc).expect("serializable") + "\n";
    print!("{report_json}");
    if let Some(out) = &cli.out {
        write_file(out, &(circuit.to_json()? + "\n"))?;
        let mut rp = out.as_os_str().to_owned();
        rp.push(".report.json");
        write_file(Path::new(&rp), &report_json)?;
        let args = format!(
            "{}|{}|{}|{}|{}|{theta}|{:?}",
            a.scheme, a.j, a.t, a.steps, a.nb, a.params_file
        );
        write_manifest(out, "compress", args.as_bytes(), Some(seed), started)?;
    }
    let limit = a.max_infidelity.or(cli.tolerance);
    match limit {
        Some(m) if infidelity > m => Err(Failure::check(format!(
            "mirrored-step infidelity {infidelity:.3e} exceeds {m:.3e}"
        ))),
        _ => Ok(()),
    }
}

// -------------------------------------------------------------- dynamics

fn dynamics_cmd(cli: &Cli, a: &DynamicsArgs) -> CliResult {
    let started = unix_now();
    if !(a.dt > 0.0) || !(a.t_max > 0.0) {
        return Err(Failure::usage("--dt and --t-max must be positive"));
    }
    let methods: Vec<Method> = a
        .methods
        .iter()
        .filter(|m| !m.trim().is_empty())
        .map(|m| m.parse())
        .collect::<Result<_, _>>()?;
    let cfg = DynamicsConfig {
        j_values: a.j.clone(),
        methods,
        grid: TimeGrid {
            t_max: a.t_max,
            dt: a.dt,
        },
        boundary: match a.boundary {
            BoundaryArg::Open => Boundary::Open,
            BoundaryArg::Periodic => Boundary::Periodic,
        },
        optimizer: optimizer_config(OptimizerConfig::default(), cli.seed),
    };
    let rows = dynamics::dynamics_sweep(&cfg)?;
    let csv = dynamics::to_csv(&rows);
    match &cli.out {
        Some(out) => write_file(out, &csv)?,
        None => print!("{csv}"),
    }

    if a.svg {
        let base = cli.out.clone().unwrap_or_else(|| PathBuf::from("dynamics.csv"));
        let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("dynamics").to_string();
        let dir = base.parent().map(Path::to_path_buf).unwrap_or_default();
        for &j in &cfg.j_values {
            let mut curve = None;
            let mut dots = Vec::new();
            for m in &cfg.methods {
                let label = m.to_string();
                let points: Vec<(f64, f64)> = rows
                    .iter()
                    .filter(|r| r.j == j && r.method == label)
                    .map(|r| (r.t, r.p))
                    .collect();
                if *m == Method::Exact && curve.is_none() {
                    curve = Some((label, points));
                } else {
                    dots.push((label, points));
                }
            }
            let curve_series = curve.as_ref().map(|(l, p)| svg::Series {
                label: l,
                points: p.clone(),
            });
            let dot_series: Vec<svg::Series> = dots
                .iter()
                .map(|(l, p)| svg::Series {
                    label: l,
                    points: p.clone(),
                })
                .collect();
            let plot = svg::plot(&format!("J = {j}"), a.t_max, curve_series.as_ref(), &dot_series);
            write_file(&dir.join(format!("{stem}_J{j}.svg")), &plot)?;
        }
    }
    if let Some(out) = &cli.out {
        let args = format!("{:?}|{:?}|{}|{}|{}", a.j, a.methods, a.t_max, a.dt, matches!(a.boundary, BoundaryArg::Periodic));
        write_manifest(out, "dynamics", args.as_bytes(), cli.seed, started)?;
    }
    Ok(())
}
