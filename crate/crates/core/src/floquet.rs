//! Monodromy matrix, Floquet multipliers and decomposition, and the
//! unit-circle test for exponential dichotomy.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{GldeError, Result};
use crate::function::same_instant;
use crate::linalg::{complexify, expm_c, logm, null_space_c, op_norm, op_norm_c, spectral_projection, CMatrix, ComplexSchur};
use crate::propagator::Propagator;

/// Default half-width of the band around the unit circle in which no verdict is given.
pub const DEFAULT_EPS_UC: f64 = 1e-8;

/// Multipliers this close to the unit circle count as lying on it.
pub const UNIT_CIRCLE_FLOOR: f64 = 1e-12;

/// Eigenvalues closer than this are treated as one repeated multiplier.
pub const CLUSTER_TOL: f64 = 1e-9;

/// Samples per period of the Floquet factor `G`.
pub const G_SAMPLES_PER_PERIOD: usize = 256;

const FUNDAMENTAL_SAMPLES: usize = 200;
const K0_HORIZON_PERIODS: f64 = 4.0;
const K0_SAMPLES_PER_PERIOD: usize = 64;

/// `𝒰(t) = U(t, 0)` at one instant together with its one-sided limits.
#[derive(Debug, Clone)]
pub struct FundamentalSample {
    pub t: f64,
    pub left: DMatrix<f64>,
    pub value: DMatrix<f64>,
    pub right: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct MonodromyData {
    pub matrix: DMatrix<f64>,
    /// Eigenvalues of `matrix` with multiplicity, conjugate pairs adjacent.
    pub multipliers: Vec<Complex64>,
    pub period: f64,
    /// `𝒰` on `[0, ω]`: a uniform grid plus every jump time.
    pub samples: Vec<FundamentalSample>,
}

impl MonodromyData {
    /// Eigen-analysis of a given monodromy matrix; `samples` is left empty.
    pub fn from_matrix(matrix: DMatrix<f64>, period: f64) -> Result<Self> {
        let multipliers = multipliers_of(&matrix)?;
        Ok(Self { matrix, multipliers, period, samples: Vec::new() })
    }

    /// Distinct multipliers after clustering.
    pub fn distinct_multipliers(&self) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = Vec::new();
        for &r in &self.multipliers {
            if !out.iter().any(|q| (q - r).norm() <= CLUSTER_TOL * (1.0 + r.norm())) {
                out.push(r);
            }
        }
        out
    }

    /// Real multipliers with an orthonormal basis of real eigenvectors for each.
    pub fn real_eigenpairs(&self) -> Vec<(f64, DVector<f64>)> {
        let n = self.matrix.nrows();
        let mut out = Vec::new();
        for r in self.distinct_multipliers().into_iter().filter(|r| r.im == 0.0) {
            let shifted = &self.matrix - DMatrix::identity(n, n) * r.re;
            let svd = shifted.svd(false, true);
            let v_t = svd.v_t.expect("requested v_t");
            let scale = self.matrix.amax().max(1.0);
            for i in 0..svd.singular_values.len() {
                if svd.singular_values[i] <= 1e-8 * scale {
                    out.push((r.re, v_t.row(i).transpose()));
                }
            }
        }
        out
    }

    /// One representative `ρ` (with `Im ρ > 0`) per conjugate pair, with the real
    /// basis `[Re ξ, Im ξ]` of its invariant plane.
    pub fn complex_planes(&self) -> Vec<(Complex64, DMatrix<f64>)> {
        let n = self.matrix.nrows();
        let mut out = Vec::new();
        for r in self.distinct_multipliers().into_iter().filter(|r| r.im > 0.0) {
            let shifted = complexify(&self.matrix) - CMatrix::identity(n, n) * r;
            if let Some(v) = null_space_c(&shifted, 1e-8).into_iter().next() {
                let mut basis = DMatrix::zeros(n, 2);
                for i in 0..n {
                    basis[(i, 0)] = v[i].re;
                    basis[(i, 1)] = v[i].im;
                }
                out.push((r, basis));
            }
        }
        out
    }
}

/// Eigenvalues of a real matrix: near-real values snapped onto the axis,
/// clusters replaced by their mean, conjugate pairs made exact.
fn multipliers_of(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let mut ev = ComplexSchur::new(m)?.eigenvalues();
    let count = ev.len();
    for r in &mut ev {
        if r.im.abs() <= CLUSTER_TOL * (1.0 + r.norm()) {
            r.im = 0.0;
        }
    }
    let mut seen = vec![false; ev.len()];
    for i in 0..ev.len() {
        if seen[i] {
            continue;
        }
        let members: Vec<usize> = (i..ev.len())
            .filter(|&j| !seen[j] && (ev[j] - ev[i]).norm() <= CLUSTER_TOL * (1.0 + ev[i].norm()))
            .collect();
        let mean = members.iter().map(|&j| ev[j]).sum::<Complex64>() / members.len() as f64;
        for &j in &members {
            ev[j] = mean;
            seen[j] = true;
        }
    }
    // match each upper-half-plane value with its nearest lower-half partner
    let mut groups: Vec<Vec<Complex64>> = Vec::new();
    let mut lower: Vec<Complex64> = ev.iter().copied().filter(|r| r.im < 0.0).collect();
    for r in ev.iter().copied() {
        if r.im == 0.0 {
            groups.push(vec![r]);
        } else if r.im > 0.0 {
            let k = (0..lower.len())
                .min_by(|&i, &j| (lower[i] - r.conj()).norm().total_cmp(&(lower[j] - r.conj()).norm()))
                .expect("complex eigenvalues of a real matrix come in pairs");
            lower.swap_remove(k);
            groups.push(vec![r, r.conj()]);
        }
    }
    groups.sort_by(|a, b| a[0].re.total_cmp(&b[0].re).then(a[0].im.total_cmp(&b[0].im)));
    let ev: Vec<Complex64> = groups.into_iter().flatten().collect();
    debug_assert_eq!(ev.len(), count);
    Ok(ev)
}

/// `M = U(ω, 0)`, its multipliers, and samples of `𝒰` on `[0, ω]`.
pub fn monodromy(p: &Propagator) -> Result<MonodromyData> {
    let sys = p.system();
    let a = sys.integrator();
    if !a.is_periodic_increment() {
        return Err(GldeError::NonPeriodic);
    }
    let w = sys.period();
    let n = sys.dim();
    let mut times: Vec<f64> = (0..=FUNDAMENTAL_SAMPLES).map(|i| w * i as f64 / FUNDAMENTAL_SAMPLES as f64).collect();
    times.extend(a.jump_times_in(0.0, w));
    times.sort_by(f64::total_cmp);
    times.dedup_by(|x, y| same_instant(*x, *y));
    let us = p.fundamental_at(&times)?;
    let id = DMatrix::<f64>::identity(n, n);
    let samples: Vec<FundamentalSample> = times
        .iter()
        .zip(us)
        .map(|(&t, u)| match a.jump_at(t) {
            Some(j) => FundamentalSample {
                t,
                left: (&id - &j.pre) * &u,
                right: (&id + &j.post) * &u,
                value: u,
            },
            None => FundamentalSample { t, left: u.clone(), right: u.clone(), value: u },
        })
        .collect();
    let matrix = p.transition_matrix(w, 0.0)?;
    let multipliers = multipliers_of(&matrix)?;
    Ok(MonodromyData { matrix, multipliers, period: w, samples })
}

/// `𝒰(t) = G(t) e^{Qt}` with `Q` the principal logarithm of `M` over `ω`.
#[derive(Debug, Clone)]
pub struct FloquetDecomposition {
    pub q: CMatrix,
    /// Sample times: a uniform grid on `[0, ω]` plus jump times, then the same
    /// instants shifted by `ω`.
    pub times: Vec<f64>,
    pub g: Vec<CMatrix>,
    /// False when `M` has an eigenvalue on the closed negative real axis.
    pub real_log_exists: bool,
    pub monodromy: MonodromyData,
}

impl FloquetDecomposition {
    /// `max ‖G(t + ω) - G(t)‖` over the sampled `t ∈ [0, ω]`.
    pub fn g_periodicity_defect(&self) -> f64 {
        let half = self.times.len() / 2;
        (0..half).map(|i| op_norm_c(&(&self.g[i + half] - &self.g[i]))).fold(0.0, f64::max)
    }

    /// `‖e^{Qω} - M‖`.
    pub fn reconstruction_defect(&self) -> f64 {
        let w = self.monodromy.period;
        let e = expm_c(&(&self.q * Complex64::new(w, 0.0)));
        op_norm_c(&(e - complexify(&self.monodromy.matrix)))
    }

    /// `‖G(0) - I‖`.
    pub fn g_origin_defect(&self) -> f64 {
        let n = self.q.nrows();
        op_norm_c(&(&self.g[0] - CMatrix::identity(n, n)))
    }
}

pub fn floquet_decompose(p: &Propagator) -> Result<FloquetDecomposition> {
    let md = monodromy(p)?;
    floquet_from(p, md)
}

/// Floquet decomposition reusing an already computed monodromy.
pub fn floquet_from(p: &Propagator, md: MonodromyData) -> Result<FloquetDecomposition> {
    let w = md.period;
    let q = logm(&md.matrix)? / Complex64::new(w, 0.0);
    let real_log_exists = !md.multipliers.iter().any(|r| r.im == 0.0 && r.re < 0.0);
    let a = p.system().integrator();
    let mut base: Vec<f64> = (0..=G_SAMPLES_PER_PERIOD).map(|i| w * i as f64 / G_SAMPLES_PER_PERIOD as f64).collect();
    base.extend(a.jump_times_in(0.0, w));
    base.sort_by(f64::total_cmp);
    base.dedup_by(|x, y| same_instant(*x, *y));
    let mut times = base.clone();
    times.extend(base.iter().map(|t| t + w));
    let us = p.fundamental_at(&times)?;
    let g = times
        .iter()
        .zip(us)
        .map(|(&t, u)| complexify(&u) * expm_c(&(&q * Complex64::new(-t, 0.0))))
        .collect();
    Ok(FloquetDecomposition { q, times, g, real_log_exists, monodromy: md })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Dichotomy,
    NoDichotomy,
    Undecidable,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Dichotomy => "dichotomy",
            Classification::NoDichotomy => "no-dichotomy",
            Classification::Undecidable => "undecidable",
        }
    }
}

#[derive(Debug, Clone)]
pub struct DichotomyReport {
    pub classification: Classification,
    pub multipliers: Vec<Complex64>,
    pub stable: Vec<Complex64>,
    pub unstable: Vec<Complex64>,
    /// Multipliers within the unit-circle band.
    pub marginal: Vec<Complex64>,
    /// Spectral projection onto the stable subspace of `M` (dichotomy only).
    pub projection: Option<DMatrix<f64>>,
    pub k: Option<f64>,
    pub alpha: Option<f64>,
    pub eps_uc: f64,
    pub period: f64,
}

impl DichotomyReport {
    pub fn is_dichotomy(&self) -> bool {
        self.classification == Classification::Dichotomy
    }

    /// Multipliers whose distance to 1 falls below `tol`.
    pub fn near_one(&self, tol: f64) -> Vec<Complex64> {
        self.multipliers.iter().copied().filter(|r| (r - 1.0).norm() < tol).collect()
    }
}

/// Classifies the multipliers against the unit circle. On a dichotomy verdict,
/// also returns `P`, `α` and the constant `K = max(1, K₀ max‖G‖ max‖G⁻¹‖)`.
pub fn dichotomy_check(md: &MonodromyData, eps_uc: f64) -> Result<DichotomyReport> {
    if !(eps_uc >= 0.0) || !eps_uc.is_finite() {
        return Err(GldeError::Config(format!("unit-circle tolerance must be non-negative, got {eps_uc}")));
    }
    let dist = |r: &Complex64| (r.norm() - 1.0).abs();
    let marginal: Vec<Complex64> = md
        .multipliers
        .iter()
        .copied()
        .filter(|r| dist(r) < eps_uc || dist(r) <= UNIT_CIRCLE_FLOOR)
        .collect();
    let stable: Vec<Complex64> = md.multipliers.iter().copied().filter(|r| !marginal.contains(r) && r.norm() < 1.0).collect();
    let unstable: Vec<Complex64> = md.multipliers.iter().copied().filter(|r| !marginal.contains(r) && r.norm() > 1.0).collect();
    let classification = if md.multipliers.iter().any(|r| dist(r) < eps_uc) {
        Classification::Undecidable
    } else if !marginal.is_empty() {
        Classification::NoDichotomy
    } else {
        Classification::Dichotomy
    };
    let mut report = DichotomyReport {
        classification,
        multipliers: md.multipliers.clone(),
        stable,
        unstable,
        marginal,
        projection: None,
        k: None,
        alpha: None,
        eps_uc,
        period: md.period,
    };
    if classification != Classification::Dichotomy {
        return Ok(report);
    }

    let w = md.period;
    let n = md.matrix.nrows();
    let alpha = md.multipliers.iter().map(|r| r.norm().ln().abs()).fold(f64::INFINITY, f64::min) / w;
    let (proj, rank) = spectral_projection(&md.matrix, |l| l.norm() < 1.0)?;
    debug_assert_eq!(rank, report.stable.len());

    let q = logm(&md.matrix)? / Complex64::new(w, 0.0);
    let pc = complexify(&proj);
    let qc = CMatrix::identity(n, n) - &pc;
    let steps = (K0_HORIZON_PERIODS as usize) * K0_SAMPLES_PER_PERIOD;
    let mut k0: f64 = 1.0;
    for i in 0..=steps {
        let tau = w * i as f64 / K0_SAMPLES_PER_PERIOD as f64;
        let e_plus = expm_c(&(&q * Complex64::new(tau, 0.0)));
        let e_minus = expm_c(&(&q * Complex64::new(-tau, 0.0)));
        let grow = (alpha * tau).exp();
        k0 = k0.max(op_norm_c(&(&e_plus * &pc)) * grow).max(op_norm_c(&(&e_minus * &qc)) * grow);
    }

    let (mut g_max, mut g_inv_max): (f64, f64) = (0.0, 0.0);
    for (s, u) in md.samples.iter().flat_map(|s| [(s, &s.left), (s, &s.value), (s, &s.right)]) {
        let g = complexify(u) * expm_c(&(&q * Complex64::new(-s.t, 0.0)));
        let sv = g.svd(false, false).singular_values;
        g_max = g_max.max(sv.max());
        g_inv_max = g_inv_max.max(1.0 / sv.min());
    }
    if md.samples.is_empty() {
        g_max = 1.0;
        g_inv_max = 1.0;
    }
    report.k = Some((k0 * g_max * g_inv_max).max(1.0));
    report.alpha = Some(alpha);
    report.projection = Some(proj);
    Ok(report)
}

/// Grid for [`dichotomy_bound_audit`]: `t, s ∈ [-2ω, 2ω]` with spacing `ω / points_per_period`.
#[derive(Debug, Clone, Copy)]
pub struct AuditGrid {
    pub points_per_period: usize,
}

impl Default for AuditGrid {
    fn default() -> Self {
        Self { points_per_period: 16 }
    }
}

#[derive(Debug, Clone)]
pub struct AuditResult {
    /// `max ‖𝒰(t)P𝒰⁻¹(s)‖ e^{α(t-s)}` (t ≥ s) and the mirrored quantity with `I - P`.
    pub worst_ratio: f64,
    pub worst_pair: (f64, f64),
    /// `max ‖U(t+ω, s+ω) - U(t, s)‖` over grid pairs whose shift stays on the grid.
    pub biperiodicity_defect: f64,
    /// `max ‖P‖, ‖I - P‖`, the `t = s` entries.
    pub diagonal_norm: f64,
}

pub fn dichotomy_bound_audit(p: &Propagator, report: &DichotomyReport, grid: AuditGrid) -> Result<AuditResult> {
    let (proj, alpha) = match (&report.projection, report.alpha) {
        (Some(pr), Some(a)) if report.is_dichotomy() => (pr, a),
        _ => return Err(GldeError::NoDichotomy(report.marginal.iter().map(|r| (r.re, r.im)).collect())),
    };
    let w = report.period;
    let m = grid.points_per_period.max(1);
    let times: Vec<f64> = (0..=4 * m).map(|i| -2.0 * w + w * i as f64 / m as f64).collect();
    let us = p.fundamental_at(&times)?;
    let inv: Vec<DMatrix<f64>> = us
        .iter()
        .map(|u| u.clone().try_inverse().ok_or(GldeError::Singular("fundamental matrix")))
        .collect::<Result<_>>()?;
    let n = proj.nrows();
    let comp = DMatrix::<f64>::identity(n, n) - proj;
    let up: Vec<DMatrix<f64>> = us.iter().map(|u| u * proj).collect();
    let uq: Vec<DMatrix<f64>> = us.iter().map(|u| u * &comp).collect();

    let mut worst = 0.0;
    let mut worst_pair = (0.0, 0.0);
    let mut diag: f64 = 0.0;
    for i in 0..times.len() {
        for j in 0..times.len() {
            let (t, s) = (times[i], times[j]);
            let ratio = if i >= j {
                op_norm(&(&up[i] * &inv[j])) * (alpha * (t - s)).exp()
            } else {
                op_norm(&(&uq[i] * &inv[j])) * (alpha * (s - t)).exp()
            };
            if i == j {
                diag = diag.max(ratio).max(op_norm(&(&uq[i] * &inv[j])));
            }
            if ratio > worst {
                worst = ratio;
                worst_pair = (t, s);
            }
        }
    }

    let mut bip: f64 = 0.0;
    for i in 0..times.len() - m {
        for j in 0..times.len() - m {
            let u0 = &us[i] * &inv[j];
            let u1 = &us[i + m] * &inv[j + m];
            bip = bip.max(op_norm(&(u1 - u0)));
        }
    }
    Ok(AuditResult { worst_ratio: worst, worst_pair, biperiodicity_defect: bip, diagonal_norm: diag })
}

/// Propagates `x(0) = ξ` over `[-Nω, Nω]` and returns
/// `max ‖x(t + ω) - ρ x(t)‖ / ‖x(t)‖` over a grid of `t ∈ [-Nω, (N-1)ω]`.
pub fn multiplier_solution_check(p: &Propagator, rho: f64, xi: &DVector<f64>, periods: usize) -> Result<f64> {
    let md_m = p.transition_matrix(p.system().period(), 0.0)?;
    let scale = xi.norm();
    if scale == 0.0 {
        return Err(GldeError::NotEigenvector(f64::INFINITY));
    }
    let res = (&md_m * xi - xi * rho).norm() / scale;
    if res > 1e-10 {
        return Err(GldeError::NotEigenvector(res));
    }
    let basis = DMatrix::from_column_slice(xi.len(), 1, xi.as_slice());
    let r = DMatrix::from_element(1, 1, rho);
    shift_deviation(p, &basis, &r, periods)
}

/// Complex multiplier variant: with `basis = [Re ξ, Im ξ]`, checks
/// `X(t + ω) = X(t) R` for the real `2 x 2` rotation-scaling `R` of `ρ`.
pub fn multiplier_plane_check(p: &Propagator, rho: Complex64, basis: &DMatrix<f64>, periods: usize) -> Result<f64> {
    let md_m = p.transition_matrix(p.system().period(), 0.0)?;
    let r = DMatrix::from_row_slice(2, 2, &[rho.re, rho.im, -rho.im, rho.re]);
    let res = op_norm(&(&md_m * basis - basis * &r)) / op_norm(basis);
    if res > 1e-10 {
        return Err(GldeError::NotEigenvector(res));
    }
    shift_deviation(p, basis, &r, periods)
}

fn shift_deviation(p: &Propagator, basis: &DMatrix<f64>, r: &DMatrix<f64>, periods: usize) -> Result<f64> {
    let periods = periods.max(1);
    let w = p.system().period();
    let per = 64;
    let count = (2 * periods - 1) * per;
    let base: Vec<f64> = (0..=count).map(|i| -(periods as f64) * w + w * i as f64 / per as f64).collect();
    let mut times = base.clone();
    times.extend(base.iter().map(|t| t + w));
    let us = p.fundamental_at(&times)?;
    let k = base.len();
    let mut worst: f64 = 0.0;
    for i in 0..k {
        let x = &us[i] * basis;
        let x_next = &us[i + k] * basis;
        let dev = op_norm(&(x_next - &x * r)) / op_norm(&x);
        worst = worst.max(dev);
    }
    Ok(worst)
}

/// Sup-norms of the solution from `x(0) = ξ` over `[-3ω, 3ω]` and `[-ω, ω]`.
#[derive(Debug, Clone, Copy)]
pub struct BoundednessProbe {
    pub outer_max: f64,
    pub inner_max: f64,
}

impl BoundednessProbe {
    pub fn ratio(&self) -> f64 {
        self.outer_max / self.inner_max
    }
}

pub fn boundedness_probe(p: &Propagator, xi: &DVector<f64>) -> Result<BoundednessProbe> {
    let sys = p.system();
    let w = sys.period();
    let per = 64;
    let mut times: Vec<f64> = (0..=6 * per).map(|i| -3.0 * w + w * i as f64 / per as f64).collect();
    times.extend(sys.integrator().jump_times_in(-3.0 * w, 3.0 * w));
    let us = p.fundamental_at(&times)?;
    let n = sys.dim();
    let id = DMatrix::<f64>::identity(n, n);
    let (mut outer, mut inner): (f64, f64) = (0.0, 0.0);
    for (&t, u) in times.iter().zip(&us) {
        let mut vals = vec![u * xi];
        if let Some(j) = sys.integrator().jump_at(t) {
            vals.push((&id - &j.pre) * u * xi);
            vals.push((&id + &j.post) * u * xi);
        }
        let m = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
        outer = outer.max(m);
        if t >= -w - 1e-12 && t <= w + 1e-12 {
            inner = inner.max(m);
        }
    }
    Ok(BoundednessProbe { outer_max: outer, inner_max: inner })
}
