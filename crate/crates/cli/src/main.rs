//! `glde`: load a system definition and run one analysis on it.
//!
//! Exit codes: 0 success, 2 condition (H) fails, 3 resonance or missing
//! dichotomy where one is required, 64 malformed input, 1 anything else.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use glde_core::config::{canonical_json, SystemConfig};
use glde_core::floquet::DEFAULT_EPS_UC;
use glde_core::periodic::{periodic_solution_with, DEFAULT_SAMPLES};
use glde_core::{
    check_h, dichotomy_bound_audit, dichotomy_check, gauge_oracle_integrate, ks_integrate, monodromy,
    AuditGrid, GldeError, Propagator, RegulatedVectorFunction, Trajectory,
};
use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

const EXIT_OTHER: u8 = 1;
const EXIT_H: u8 = 2;
const EXIT_RESONANT: u8 = 3;
const EXIT_CONFIG: u8 = 64;

#[derive(Parser)]
#[command(name = "glde", version, about = "Periodic generalized linear differential equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report the jump factors of A and whether condition (H) holds.
    Check(Common),
    /// Solve an initial value problem and write the trajectory as CSV.
    Simulate(SimulateArgs),
    /// Floquet multipliers, classification and dichotomy constants.
    Dichotomy(DichotomyArgs),
    /// The unique periodic solution of the forced system.
    Periodic(PeriodicArgs),
    /// Integral of f against A, closed form and gauge oracle.
    Integrate(IntegrateArgs),
}

#[derive(Args)]
struct Common {
    /// System definition (JSON).
    config: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    t0: f64,
    /// Defaults to one period after `t0`.
    #[arg(long, allow_negative_numbers = true)]
    t1: Option<f64>,
    /// Initial value, comma separated; zero when omitted.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    x0: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
}

#[derive(Args)]
struct DichotomyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = DEFAULT_EPS_UC)]
    eps_uc: f64,
}

#[derive(Args)]
struct PeriodicArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = DEFAULT_EPS_UC)]
    eps_uc: f64,
    /// Truncation periods for the dichotomy representation.
    #[arg(long)]
    periods: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    /// Trajectory CSV; defaults to the `--out` path with a `.csv` extension.
    #[arg(long)]
    trajectory: Option<PathBuf>,
}

#[derive(Args)]
struct IntegrateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_negative_numbers = true)]
    a: f64,
    #[arg(long, allow_negative_numbers = true)]
    b: f64,
    #[arg(long, default_value_t = 1 << 16)]
    oracle_cells: usize,
}

#[derive(Debug)]
enum Failure {
    Glde(GldeError),
    Io(PathBuf, std::io::Error),
    Usage(String),
}

impl From<GldeError> for Failure {
    fn from(e: GldeError) -> Self {
        Failure::Glde(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Glde(GldeError::Config(_)) | Failure::Usage(_) => EXIT_CONFIG,
            Failure::Glde(GldeError::HViolation { .. }) => EXIT_H,
            Failure::Glde(GldeError::Resonant(_) | GldeError::NoDichotomy(_)) => EXIT_RESONANT,
            // unreadable configs are reported as Usage; Io is only an unwritable output
            Failure::Io(_, _) | Failure::Glde(_) => EXIT_OTHER,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Glde(e) => e.to_string(),
            Failure::Io(p, e) => format!("{}: {e}", p.display()),
            Failure::Usage(m) => m.clone(),
        }
    }
}

type Outcome = std::result::Result<u8, Failure>;

fn load(path: &Path) -> std::result::Result<SystemConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(SystemConfig::from_json(&text)?)
}

fn emit(out: Option<&Path>, text: &str) -> std::result::Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Io(p.to_path_buf(), e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn vec_json(v: &DVector<f64>) -> Value {
    json!(v.iter().collect::<Vec<_>>())
}

fn mat_json(m: &DMatrix<f64>) -> Value {
    json!((0..m.nrows()).map(|i| m.row(i).iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.initial_value().len();
    let mut out = String::from("t,side");
    for i in 1..=n {
        write!(out, ",x_{i}").unwrap();
    }
    out.push('\n');
    let mut row = |t: f64, side: &str, x: &DVector<f64>| {
        write!(out, "{t},{side}").unwrap();
        for v in x.iter() {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    };
    for p in traj.points() {
        if p.is_jump {
            row(p.t, "L", &p.left);
            row(p.t, "P", &p.value);
            row(p.t, "R", &p.right);
        } else {
            row(p.t, "P", &p.value);
        }
    }
    out
}

fn check(args: &Common) -> Outcome {
    let cfg = load(&args.config)?;
    let report = check_h(&cfg.to_integrator()?);
    let entries: Vec<Value> = report
        .entries
        .iter()
        .map(|e| json!({"time": e.time, "det_minus": e.det_minus, "det_plus": e.det_plus, "passes": e.passes()}))
        .collect();
    emit(args.out.as_deref(), &canonical_json(&json!({"passed": report.passed, "jumps": entries})))?;
    if let Some(bad) = report.first_failure() {
        eprintln!("condition (H) fails at t = {}", bad.time);
        return Ok(EXIT_H);
    }
    Ok(0)
}

fn simulate(args: &SimulateArgs) -> Outcome {
    let sys = load(&args.common.config)?.to_system()?;
    let x0 = match &args.x0 {
        Some(v) if v.len() != sys.dim() => {
            return Err(Failure::Usage(format!("--x0 has {} entries, the system has dimension {}", v.len(), sys.dim())))
        }
        Some(v) => DVector::from_column_slice(v),
        None => DVector::zeros(sys.dim()),
    };
    let t1 = args.t1.unwrap_or(args.t0 + sys.period());
    if !args.t0.is_finite() || !t1.is_finite() {
        return Err(Failure::Usage("time bounds must be finite".into()));
    }
    let traj = Propagator::new(&sys).propagate(args.t0, &x0, t1, args.samples)?;
    emit(args.common.out.as_deref(), &trajectory_csv(&traj))?;
    Ok(0)
}

fn dichotomy(args: &DichotomyArgs) -> Outcome {
    let sys = load(&args.common.config)?.to_system()?;
    let p = Propagator::new(&sys);
    let report = dichotomy_check(&monodromy(&p)?, args.eps_uc)?;
    let audit = if report.is_dichotomy() { Some(dichotomy_bound_audit(&p, &report, AuditGrid::default())?) } else { None };
    let doc = json!({
        "multipliers": report.multipliers.iter().map(|r| [r.re, r.im]).collect::<Vec<_>>(),
        "classification": report.classification.as_str(),
        "eps_uc": report.eps_uc,
        "P": report.projection.as_ref().map(mat_json),
        "K": report.k,
        "alpha": report.alpha,
        "audit_worst_ratio": audit.map(|a| a.worst_ratio),
    });
    emit(args.common.out.as_deref(), &canonical_json(&doc))?;
    Ok(0)
}

fn periodic(args: &PeriodicArgs) -> Outcome {
    let sys = load(&args.common.config)?.to_system()?;
    let p = Propagator::new(&sys);
    let res = periodic_solution_with(&p, args.eps_uc, args.periods, args.samples)?;
    let doc = json!({
        "x0": vec_json(&res.x0),
        "periodicity_residual": res.periodicity_residual,
        "integral_equation_residual": res.integral_equation_residual,
        "path_gap": res.path_gap,
        "x0_alt": vec_json(&res.x0_alt),
        "representation_gap": res.representation_gap,
        "truncation_periods": res.truncation_periods,
        "truncation_bound": res.truncation_bound,
        "multipliers": res.report.multipliers.iter().map(|r| [r.re, r.im]).collect::<Vec<_>>(),
    });
    emit(args.common.out.as_deref(), &canonical_json(&doc))?;
    let csv_path = args.trajectory.clone().or_else(|| args.common.out.as_ref().map(|o| o.with_extension("csv")));
    if let Some(path) = csv_path {
        emit(Some(&path), &trajectory_csv(&res.trajectory))?;
    }
    Ok(0)
}

fn integrate(args: &IntegrateArgs) -> Outcome {
    let cfg = load(&args.common.config)?;
    let a_fn = cfg.to_integrator()?;
    let f = cfg.to_forcing()?.unwrap_or(RegulatedVectorFunction::zero(cfg.dimension, cfg.period)?);
    if !args.a.is_finite() || !args.b.is_finite() {
        return Err(Failure::Usage(format!("malformed range [{}, {}]", args.a, args.b)));
    }
    if args.oracle_cells == 0 {
        return Err(Failure::Usage("--oracle-cells must be positive".into()));
    }
    let value = ks_integrate(&a_fn, &f, args.a, args.b)?;
    let oracle = gauge_oracle_integrate(&a_fn, &f, args.a, args.b, args.oracle_cells)?;
    let doc = json!({
        "a": args.a,
        "b": args.b,
        "value": vec_json(&value),
        "oracle_value": vec_json(&oracle),
        "oracle_cells": args.oracle_cells,
        "gap": (&value - &oracle).amax(),
    });
    emit(args.common.out.as_deref(), &canonical_json(&doc))?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let outcome = match &cli.command {
        Command::Check(a) => check(a),
        Command::Simulate(a) => simulate(a),
        Command::Dichotomy(a) => dichotomy(a),
        Command::Periodic(a) => periodic(a),
        Command::Integrate(a) => integrate(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("glde: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
