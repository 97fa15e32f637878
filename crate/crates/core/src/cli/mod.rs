//! The `bbmlab` command line.
//!
//! Exit codes: 0 success, 1 a verdict failed, 2 configuration error,
//! 3 computation error.

mod config;
mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use config::{Experiment, ExperimentConfig};
pub use output::{
    aborted_trailer, counterexample_csv, curves_svg, num, sweep_csv, verdicts_json, COUNTEREXAMPLE_HEADER,
    SWEEP_HEADER,
};

use crate::geometry::{ExhaustionLevel, Shape};
use crate::limits::{
    divergence_precondition, divergence_verdict_from_sweep, farpart_decay_from_sweep, step5_decomposition, sweep,
    theorem_verdict_scaled, Status, SweepResult, Verdict,
};
use crate::maximal::{gradient_maximal, verify_lp_bound, verify_pointwise_bound_with, DirectionGrid, GradientMagnitude, TGrid};
use crate::rng::RandomStream;
use crate::seminorm::{k_constant, sphere_mc, EnergyKind, SeminormParams};
use crate::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERDICT: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

/// Relative tolerance of theorem verdicts when the config gives none.
pub const DEFAULT_TOLERANCE: f64 = 0.05;
/// Interior points of the pointwise check.
pub const POINTWISE_POINTS: usize = 10;
/// Uniform points for `||(grad f)*||_p`.
pub const LP_POINTS: usize = 128;

#[derive(Debug, Parser)]
#[command(name = "bbmlab", version, about = "Fractional Sobolev energies and their s -> 1 limit")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print K_{n,p} in closed form and by sphere Monte Carlo.
    Constants {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 10_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sweep s over the grid and extrapolate (1-s) E(s).
    Sweep(RunArgs),
    /// Run the verification suite and write verdicts.json.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// Multiply the theorem target by this factor (negative control).
        #[arg(long)]
        corrupt_target: Option<f64>,
    },
    /// Compare classical and truncated energies on a cusp.
    Counterexample(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    emit_plots: bool,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

pub fn main() -> ExitCode {
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("BBMLAB_LOG", "error")).try_init();
    ExitCode::from(run(std::env::args_os()))
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cli.threads {
        if k == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_CONFIG;
        }
        pool = pool.num_threads(k);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(code) => code,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("config error: {m}"),
                Failure::Runtime(m) => eprintln!("error: {m}"),
            }
            f.code()
        }
    }
}

fn dispatch(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Constants { n, p, samples, seed } => cmd_constants(n, p, samples, seed),
        Command::Sweep(args) => {
            let (exp, out) = load(&args)?;
            cmd_sweep(&exp, &out)
        }
        Command::Verify { run, corrupt_target } => {
            let (exp, out) = load(&run)?;
            if let Some(c) = corrupt_target {
                if !c.is_finite() {
                    return Err(Failure::Config(format!("--corrupt-target {c} must be finite")));
                }
            }
            cmd_verify(&exp, &out, corrupt_target.unwrap_or(1.0))
        }
        Command::Counterexample(args) => {
            let (exp, out) = load(&args)?;
            cmd_counterexample(&exp, &out)
        }
    }
}

fn load(args: &RunArgs) -> Result<(Experiment, PathBuf), Failure> {
    let mut config = ExperimentConfig::load(&args.config).map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.output = out.clone();
    }
    config.emit_plots |= args.emit_plots;
    let exp = config.validate().map_err(|e| Failure::Config(e.to_string()))?;
    let out = exp.config.output.clone();
    std::fs::create_dir_all(&out).map_err(|e| runtime(format!("{}: {e}", out.display())))?;
    Ok((exp, out))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn cmd_constants(n: usize, p: f64, samples: usize, seed: u64) -> Result<u8, Failure> {
    let k = k_constant(n, p).map_err(|e| Failure::Config(e.to_string()))?;
    if !(1..=3).contains(&n) {
        return Err(Failure::Config(format!("sphere sampling supports n in 1..=3, got {n}")));
    }
    if samples < 2 {
        return Err(Failure::Config("--samples must be at least 2".into()));
    }
    let (mc, se) = sphere_mc(n, p, samples, &RandomStream::new(seed)).map_err(runtime)?;
    println!("K_{{{n},{p}}} closed form = {:.10}", k.value);
    println!("sphere Monte Carlo = {mc:.10} (stderr {se:.3e}, {samples} samples)");
    println!("relative difference = {:.3e}", (mc - k.value).abs() / k.value);
    Ok(EXIT_OK)
}

fn plot(exp: &Experiment, out: &Path, name: &str, title: &str, result: &SweepResult, kinds: &[EnergyKind]) -> Result<(), Failure> {
    if !exp.config.emit_plots {
        return Ok(());
    }
    let series: Vec<_> = kinds.iter().map(|k| (k.to_string(), result.curve(*k))).collect();
    write(&out.join(name), &curves_svg(title, &series, result.target.finite()))
}

/// Runs the sweep. On failure the completed rows are written followed by an
/// `# ABORTED` trailer.
fn run_sweep(exp: &Experiment, kinds: Vec<EnergyKind>, csv: &Path) -> Result<SweepResult, Failure> {
    match sweep(&exp.sweep_spec(kinds)) {
        Ok(r) => Ok(r),
        Err(Error::SweepAborted { s, partial, source }) => {
            let mut text = sweep_csv(&partial);
            text.push_str(&aborted_trailer(Some(s), &source.to_string()));
            write(csv, &text)?;
            Err(runtime(format!("sweep aborted at s = {s}: {source}")))
        }
        Err(e) => {
            let mut text = format!("{SWEEP_HEADER}\n");
            text.push_str(&aborted_trailer(None, &e.to_string()));
            write(csv, &text)?;
            Err(runtime(e))
        }
    }
}

fn cmd_sweep(exp: &Experiment, out: &Path) -> Result<u8, Failure> {
    let csv = out.join("sweep.csv");
    let result = run_sweep(exp, exp.config.kinds.clone(), &csv)?;
    write(&csv, &sweep_csv(&result))?;
    plot(exp, out, "sweep.svg", "(1-s) E(s)", &result, &exp.config.kinds)?;
    for lim in &result.limits {
        println!("limit[{}] = {} +- {}", lim.kind, num(lim.value), num(lim.uncertainty));
    }
    println!("target = {}", num(result.target.finite().unwrap_or(f64::INFINITY)));
    Ok(EXIT_OK)
}

fn verify_kinds(exp: &Experiment) -> Vec<EnergyKind> {
    let mut kinds = vec![EnergyKind::Truncated];
    let mut extra = exp.config.kinds.clone();
    if exp.domain.supports_geodesic() {
        extra.push(EnergyKind::FarPart);
    }
    if matches!(exp.domain.shape(), Shape::Cusp(_)) {
        extra.push(EnergyKind::Classical);
    }
    for k in extra {
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }
    kinds
}

fn inconclusive(claim: &str, e: impl std::fmt::Display) -> Verdict {
    Verdict::new(claim, Status::Inconclusive, f64::NAN, f64::NAN, 0.0, format!("not evaluated: {e}"))
}

fn cmd_verify(exp: &Experiment, out: &Path, corrupt: f64) -> Result<u8, Failure> {
    let json = out.join("verdicts.json");
    let mut verdicts = Vec::new();
    let outcome = verify_suite(exp, out, corrupt, &mut verdicts);
    write(&json, &verdicts_json(&verdicts))?;
    outcome?;
    for v in &verdicts {
        println!("{}: {}", v.claim, v.status);
    }
    let failed = verdicts.iter().any(|v| v.status == Status::Fail);
    Ok(if failed { EXIT_VERDICT } else { EXIT_OK })
}

fn verify_suite(exp: &Experiment, out: &Path, corrupt: f64, verdicts: &mut Vec<Verdict>) -> Result<(), Failure> {
    let c = &exp.config;
    let tolerance = c.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    let kinds = verify_kinds(exp);
    let result = run_sweep(exp, kinds.clone(), &out.join("sweep.csv"))?;
    write(&out.join("sweep.csv"), &sweep_csv(&result))?;
    plot(exp, out, "sweep.svg", "(1-s) E(s)", &result, &kinds)?;

    verdicts.push(match result.target.finite() {
        Some(_) => theorem_verdict_scaled(&result, tolerance, corrupt).map_err(runtime)?,
        None => inconclusive("theorem-limit", "||grad f||_p is infinite"),
    });

    let root = RandomStream::new(c.seed).derive_named("verify");
    verdicts.push(pointwise_verdict(exp, &root)?);
    verdicts.push(lp_verdict(exp, &root)?);

    let margin = c.exhaustion_margin.unwrap_or(0.25 * exp.domain.inradius());
    let level = ExhaustionLevel::new(1, margin).map_err(runtime)?;
    let s_last = *c.s_grid.last().expect("validated grid");
    let params = SeminormParams::new(s_last, c.p, c.tau).map_err(runtime)?;
    let report = step5_decomposition(&c.function, &exp.domain, level, &params, &c.budgets, c.seed, &c.s_grid)
        .map_err(runtime)?;
    verdicts.extend(report.verdicts());

    if kinds.contains(&EnergyKind::FarPart) {
        verdicts.push(farpart_decay_from_sweep(&result).map_err(runtime)?);
    }
    if matches!(exp.domain.shape(), Shape::Cusp(_)) {
        verdicts.push(divergence(exp, &result, tolerance)?);
    }
    Ok(())
}

fn divergence(exp: &Experiment, result: &SweepResult, tolerance: f64) -> Result<Verdict, Failure> {
    if let Some(v) = divergence_precondition(&exp.config.function, &exp.domain, exp.config.p) {
        return Ok(v);
    }
    divergence_verdict_from_sweep(result, tolerance).map_err(runtime)
}

/// `verify_pointwise_bound` at seeded interior points and every grid `s`.
fn pointwise_verdict(exp: &Experiment, root: &RandomStream) -> Result<Verdict, Failure> {
    let c = &exp.config;
    let mut picker = root.derive_named("points");
    let inner = c.budgets.inner.max(1 << 12);
    let (mut worst, mut failures, mut checks) = (f64::NEG_INFINITY, 0usize, 0usize);
    for i in 0..POINTWISE_POINTS {
        let x = exp.domain.sample_uniform(&mut picker).map_err(runtime)?;
        let maximal = gradient_maximal(&c.function, &exp.domain, &x, c.p).map_err(runtime)?;
        for (j, &s) in c.s_grid.iter().enumerate() {
            let params = SeminormParams::new(s, c.p, c.tau).map_err(runtime)?;
            let stream = root.derive_named("pointwise").derive((i * c.s_grid.len() + j) as u64);
            let r = verify_pointwise_bound_with(&c.function, &exp.domain, &params, &x, &maximal, inner, &stream)
                .map_err(runtime)?;
            checks += 1;
            if !r.pass {
                failures += 1;
            }
            if r.rhs > 0.0 {
                worst = worst.max(r.lhs / r.rhs);
            }
        }
    }
    let status = if failures == 0 { Status::Pass } else { Status::Fail };
    Ok(Verdict::new(
        "pointwise-bound",
        status,
        worst,
        1.0,
        crate::maximal::POINTWISE_EPSILON,
        format!("{failures} of {checks} checks failed; lhs/rhs is the worst ratio"),
    ))
}

/// `||(grad f)*||_p <= C_{n,p} ||grad f||_p`.
fn lp_verdict(exp: &Experiment, root: &RandomStream) -> Result<Verdict, Failure> {
    let c = &exp.config;
    let h = GradientMagnitude { f: &c.function, domain: &exp.domain };
    let dirs = DirectionGrid::default_for(exp.domain.dim()).map_err(runtime)?;
    let grid = TGrid::for_domain(&exp.domain);
    let r = verify_lp_bound(&h, &exp.domain, c.p, LP_POINTS, &dirs, &grid, &root.derive_named("lp-bound"))
        .map_err(runtime)?;
    Ok(Verdict::new(
        "lp-bound",
        if r.pass { Status::Pass } else { Status::Fail },
        r.maximal_norm,
        r.constant * r.norm,
        0.0,
        format!("C_{{n,p}} = {:.6}, ratio {:.4}", r.constant, r.ratio),
    ))
}

fn cmd_counterexample(exp: &Experiment, out: &Path) -> Result<u8, Failure> {
    let kinds = vec![EnergyKind::Truncated, EnergyKind::Classical];
    let csv = out.join("counterexample.csv");
    let result = run_sweep(exp, kinds.clone(), &csv)?;
    let tolerance = exp.config.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    let verdict = match divergence_precondition(&exp.config.function, &exp.domain, exp.config.p) {
        Some(v) => v,
        None if result.target.finite().is_none() => inconclusive("divergence", "||grad f||_p is infinite"),
        None => divergence_verdict_from_sweep(&result, tolerance).map_err(runtime)?,
    };
    write(&csv, &counterexample_csv(&result, Some(&verdict)))?;
    plot(exp, out, "counterexample.svg", "classical vs truncated", &result, &kinds)?;
    println!("divergence: {} ({})", verdict.status, verdict.notes);
    Ok(if verdict.status == Status::Fail { EXIT_VERDICT } else { EXIT_OK })
}
