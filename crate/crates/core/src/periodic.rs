//! The unique ω-periodic solution of a forced system whose homogeneous part
//! admits an exponential dichotomy.
//!
//! With `x_f` the solution from `x_f(0) = 0`, every solution satisfies
//! `x(ω) = M x(0) + x_f(ω)`, so the periodic one starts at
//! `x₀ = [I - M]⁻¹ x_f(ω)`. The variation-of-constants formula links this to the
//! Stieltjes integral `∫_0^ω d[U(ω,s)] φ(s)`, `φ = f - f(0)`:
//!
//! ```text
//! ∫_0^ω d[U(ω,s)] φ(s) = C_f - x_f(ω),   C_f = f(ω) - f(0)
//! ```
//!
//! which is evaluated both ways as a cross-check.

use nalgebra::{DMatrix, DVector};

use crate::error::{GldeError, Result};
use crate::floquet::{dichotomy_check, monodromy, DichotomyReport, MonodromyData, DEFAULT_EPS_UC};
use crate::ks::{integrate_with, Quadrature, Shifted};
use crate::propagator::Propagator;
use crate::system::GldeSystem;
use crate::trajectory::Trajectory;

pub const TOL_PER: f64 = 1e-6;
pub const TOL_VOC: f64 = 1e-6;
pub const MAX_TRUNCATION_PERIODS: usize = 64;
pub const DEFAULT_SAMPLES: usize = 101;

/// Both evaluations of the periodic initial condition.
#[derive(Debug, Clone)]
pub struct InitialCondition {
    pub x0: DVector<f64>,
    /// `∫_0^ω d[U(ω,s)] φ(s)` from the forced response, `C_f - x_f(ω)`.
    pub shooting_integral: DVector<f64>,
    /// The same integral evaluated directly as a Stieltjes integral.
    pub direct_integral: DVector<f64>,
}

impl InitialCondition {
    pub fn path_gap(&self) -> f64 {
        (&self.shooting_integral - &self.direct_integral).norm()
    }
}

/// Truncated evaluation of the dichotomy integral representation of `x₀`.
#[derive(Debug, Clone)]
pub struct RepresentationX0 {
    pub x0: DVector<f64>,
    pub periods: usize,
    /// Upper bound on the neglected tail.
    pub truncation_bound: f64,
}

#[derive(Debug, Clone)]
pub struct PeriodicSolutionResult {
    pub x0: DVector<f64>,
    pub trajectory: Trajectory,
    /// `‖x(ω) - x₀‖`
    pub periodicity_residual: f64,
    /// `‖x(ω) - x(0) - ∫_0^ω d[A]x - (f(ω) - f(0))‖` along the trajectory.
    pub integral_equation_residual: f64,
    pub path_gap: f64,
    pub x0_alt: DVector<f64>,
    pub representation_gap: f64,
    pub truncation_periods: usize,
    pub truncation_bound: f64,
    pub report: DichotomyReport,
}

/// `x_f(t)`: the forced solution with `x_f(0) = 0`.
pub fn forced_response(p: &Propagator, t: f64) -> Result<DVector<f64>> {
    let n = p.system().dim();
    p.solution_at(0.0, &DVector::zeros(n), t)
}

fn increment(sys: &GldeSystem) -> DVector<f64> {
    match sys.forcing() {
        Some(f) => f.increment(),
        None => DVector::zeros(sys.dim()),
    }
}

/// Rejects systems whose homogeneous part is not dichotomic.
pub fn require_dichotomy(report: &DichotomyReport) -> Result<()> {
    if report.is_dichotomy() {
        return Ok(());
    }
    let near = report.near_one(report.eps_uc.max(1e-6));
    if !near.is_empty() {
        return Err(GldeError::Resonant(near.iter().map(|r| (r.re, r.im)).collect()));
    }
    Err(GldeError::NoDichotomy(report.marginal.iter().map(|r| (r.re, r.im)).collect()))
}

fn solve(m: DMatrix<f64>, rhs: &DVector<f64>, what: &'static str) -> Result<DVector<f64>> {
    m.lu().solve(rhs).ok_or(GldeError::Singular(what))
}

/// Initial condition of the periodic solution with both evaluation paths.
pub fn initial_condition_with(p: &Propagator, md: &MonodromyData) -> Result<InitialCondition> {
    let sys = p.system();
    let n = sys.dim();
    let w = sys.period();
    let c_f = increment(sys);
    let x_end = forced_response(p, w)?;
    let id = DMatrix::<f64>::identity(n, n);
    let x0 = solve(&id - &md.matrix, &x_end, "I - M")?;
    let shooting_integral = &c_f - &x_end;
    let direct_integral = match sys.forcing() {
        Some(f) => {
            let u = p.inverse_fundamental(md.matrix.clone());
            integrate_with(&u, &Shifted::new(f, 0.0), 0.0, w, Quadrature::composite(w / 128.0))?
        }
        None => DVector::zeros(n),
    };
    Ok(InitialCondition { x0, shooting_integral, direct_integral })
}

/// `x₀` of the unique ω-periodic solution.
pub fn periodic_initial_condition(sys: &GldeSystem) -> Result<DVector<f64>> {
    let p = Propagator::new(sys);
    let md = monodromy(&p)?;
    require_dichotomy(&dichotomy_check(&md, DEFAULT_EPS_UC)?)?;
    let ic = initial_condition_with(&p, &md)?;
    if ic.path_gap() > TOL_VOC {
        return Err(GldeError::Tolerance { what: "forced response vs direct integral", value: ic.path_gap(), tol: TOL_VOC });
    }
    Ok(ic.x0)
}

/// Default truncation: `ceil(20 / (αω))` periods, at most 64.
pub fn default_truncation(report: &DichotomyReport) -> usize {
    let aw = report.alpha.unwrap_or(0.0) * report.period;
    if aw <= 0.0 {
        return MAX_TRUNCATION_PERIODS;
    }
    ((20.0 / aw).ceil() as usize).clamp(1, MAX_TRUNCATION_PERIODS)
}

/// `x₀ ≈ -∫_{-Nω}^0 d[P𝒰⁻¹(s)] φ(s) + ∫_0^{Nω} d[(I-P)𝒰⁻¹(s)] φ(s)`.
///
/// Only the integrals over `[-ω, 0]` and `[0, ω]` are evaluated; period `k`
/// follows from `𝒰⁻¹(s ∓ kω) = M^{±k} 𝒰⁻¹(s)` and `φ(s ∓ kω) = φ(s) ∓ k C_f`.
pub fn dichotomy_representation_x0(
    p: &Propagator,
    md: &MonodromyData,
    report: &DichotomyReport,
    periods: usize,
) -> Result<RepresentationX0> {
    require_dichotomy(report)?;
    let (proj, alpha, k) = match (&report.projection, report.alpha, report.k) {
        (Some(pr), Some(a), Some(k)) => (pr, a, k),
        _ => unreachable!("dichotomy reports carry P, α and K"),
    };
    let sys = p.system();
    let n = sys.dim();
    let w = sys.period();
    let id = DMatrix::<f64>::identity(n, n);
    let Some(f) = sys.forcing() else {
        return Ok(RepresentationX0 { x0: DVector::zeros(n), periods, truncation_bound: 0.0 });
    };
    let c_f = f.increment();
    let m_inv = md.matrix.clone().try_inverse().ok_or(GldeError::Singular("monodromy matrix"))?;

    let u_inv = p.inverse_fundamental(id.clone());
    let phi = Shifted::new(f, 0.0);
    let rule = Quadrature::composite(w / 128.0);
    let j_minus = integrate_with(&u_inv, &phi, -w, 0.0, rule)?;
    let j_plus = integrate_with(&u_inv, &phi, 0.0, w, rule)?;
    let h_minus = (&id - &md.matrix) * &c_f;
    let h_plus = (&m_inv - &id) * &c_f;

    let comp = &id - proj;
    let mut s_minus = DVector::zeros(n);
    let mut s_plus = DVector::zeros(n);
    let mut pow = id.clone();
    let mut pow_inv = id.clone();
    for kk in 0..periods {
        let kf = kk as f64;
        s_minus += proj * &pow * (&j_minus - &h_minus * kf);
        s_plus += &comp * &pow_inv * (&j_plus + &h_plus * kf);
        pow = &pow * &md.matrix;
        pow_inv = &pow_inv * &m_inv;
    }

    let q = (-alpha * w).exp();
    let nf = periods as f64;
    let geo = q.powi(periods as i32) / (1.0 - q);
    let arith = q.powi(periods as i32) * (nf * (1.0 - q) + q) / ((1.0 - q) * (1.0 - q));
    let bound = k * ((j_minus.norm() + j_plus.norm()) * geo + (h_minus.norm() + h_plus.norm()) * arith);
    Ok(RepresentationX0 { x0: s_plus - s_minus, periods, truncation_bound: bound })
}

/// Both sides of the shooting identity between the forward and the backward
/// period: `[I - U(ω,0)]⁻¹ ∫_0^ω d[U(ω,s)]φ(s)` and
/// `[I - U(-ω,0)]⁻¹ ∫_0^{-ω} d[U(-ω,s)]φ(s)`, each integral obtained from the
/// forced response in the respective direction. They agree when `f` is periodic.
pub fn period_shooting_identity(p: &Propagator, md: &MonodromyData) -> Result<(DVector<f64>, DVector<f64>)> {
    let sys = p.system();
    let n = sys.dim();
    let w = sys.period();
    let id = DMatrix::<f64>::identity(n, n);
    let c_f = increment(sys);
    let fwd_int = &c_f - forced_response(p, w)?;
    let back_int = -&c_f - forced_response(p, -w)?;
    let m_inv = md.matrix.clone().try_inverse().ok_or(GldeError::Singular("monodromy matrix"))?;
    let lhs = solve(&id - &md.matrix, &fwd_int, "I - M")?;
    let rhs = solve(&id - m_inv, &back_int, "I - M^-1")?;
    Ok((lhs, rhs))
}

/// Periodic initial condition by shooting backward over one period,
/// `x₀ = [I - M⁻¹]⁻¹ x_f(-ω)`.
pub fn backward_shooting_x0(p: &Propagator, md: &MonodromyData) -> Result<DVector<f64>> {
    let n = p.system().dim();
    let m_inv = md.matrix.clone().try_inverse().ok_or(GldeError::Singular("monodromy matrix"))?;
    solve(DMatrix::identity(n, n) - m_inv, &forced_response(p, -p.system().period())?, "I - M^-1")
}

pub fn periodic_solution(sys: &GldeSystem) -> Result<PeriodicSolutionResult> {
    periodic_solution_with(&Propagator::new(sys), DEFAULT_EPS_UC, None, DEFAULT_SAMPLES)
}

/// Periodic solution with explicit unit-circle tolerance, truncation and sampling.
pub fn periodic_solution_with(
    p: &Propagator,
    eps_uc: f64,
    periods: Option<usize>,
    samples: usize,
) -> Result<PeriodicSolutionResult> {
    let sys = p.system();
    let w = sys.period();
    let md = monodromy(p)?;
    let report = dichotomy_check(&md, eps_uc)?;
    require_dichotomy(&report)?;
    let ic = initial_condition_with(p, &md)?;
    let path_gap = ic.path_gap();
    if path_gap > TOL_VOC {
        return Err(GldeError::Tolerance { what: "forced response vs direct integral", value: path_gap, tol: TOL_VOC });
    }
    let x0 = ic.x0;
    let trajectory = p.propagate(0.0, &x0, w, samples)?;
    let periodicity_residual = (trajectory.final_value() - &x0).norm();
    if periodicity_residual > TOL_PER {
        return Err(GldeError::Tolerance { what: "periodicity residual", value: periodicity_residual, tol: TOL_PER });
    }
    let integral = integrate_with(sys.integrator(), &trajectory, 0.0, w, Quadrature::composite(w / 256.0))?;
    let df = match sys.forcing() {
        Some(f) => f.value(w) - f.value(0.0),
        None => DVector::zeros(sys.dim()),
    };
    let integral_equation_residual = (trajectory.final_value() - &x0 - integral - df).norm();
    if integral_equation_residual > TOL_PER {
        return Err(GldeError::Tolerance {
            what: "integral equation residual",
            value: integral_equation_residual,
            tol: TOL_PER,
        });
    }
    let n_trunc = periods.unwrap_or_else(|| default_truncation(&report));
    let rep = dichotomy_representation_x0(p, &md, &report, n_trunc)?;
    let representation_gap = (&rep.x0 - &x0).norm();
    Ok(PeriodicSolutionResult {
        x0,
        trajectory,
        periodicity_residual,
        integral_equation_residual,
        path_gap,
        x0_alt: rep.x0,
        representation_gap,
        truncation_periods: n_trunc,
        truncation_bound: rep.truncation_bound,
        report,
    })
}
