//! Kurzweil–Stieltjes integrals `∫_a^b d[A(s)] f(s)`.
//!
//! For an integrator with a piecewise smooth density and finitely many jumps
//! the integral splits into an absolutely continuous part and jump sums:
//!
//! ```text
//! ∫_a^b A'(s) f(s) ds + Σ_{τ ∈ [a,b)} Δ⁺A(τ) f(τ) + Σ_{τ ∈ (a,b]} Δ⁻A(τ) f(τ)
//! ```
//!
//! The smooth part is integrated with Gauss–Legendre rules on the cells of the
//! merged mesh of integrator and integrand, which is exact for the polynomial
//! class. [`gauge_oracle_integrate`] evaluates the defining Riemann–Stieltjes
//! sums on a tagged partition and serves as an independent check.

use nalgebra::{DMatrix, DVector};

use crate::error::{GldeError, Result};
use crate::function::{same_instant, BvMatrixFunction, RegulatedVectorFunction};
use crate::linalg::op_norm;

/// A matrix-valued integrator that is smooth between its breakpoints.
pub trait Integrator {
    /// `(rows, cols)` of the integrator values.
    fn shape(&self) -> (usize, usize);
    /// Instants in `[a, b]` where the density may be discontinuous, jump times included.
    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64>;
    /// `(time, Δ⁻, Δ⁺)` for every jump in `[a, b]`.
    fn jumps_in(&self, a: f64, b: f64) -> Vec<(f64, DMatrix<f64>, DMatrix<f64>)>;
    /// Densities at instants strictly inside smooth cells.
    fn densities(&self, ts: &[f64]) -> Vec<DMatrix<f64>>;
    /// Point values.
    fn values(&self, ts: &[f64]) -> Vec<DMatrix<f64>>;
}

/// A vector integrand that is continuous between its breakpoints.
pub trait Integrand {
    fn dim(&self) -> usize;
    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64>;
    fn values(&self, ts: &[f64]) -> Vec<DVector<f64>>;
}

/// Composite Gauss–Legendre rule: each smooth cell is cut into panels no wider
/// than `max_panel`, each integrated with the 8-point rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub max_panel: f64,
}

impl Quadrature {
    /// One panel per cell. Exact for polynomial products up to degree 15.
    pub const EXACT_POLY: Quadrature = Quadrature { max_panel: f64::INFINITY };

    pub fn composite(max_panel: f64) -> Self {
        Self { max_panel }
    }

    fn nodes(&self, lo: f64, hi: f64, ts: &mut Vec<f64>, ws: &mut Vec<f64>) {
        let len = hi - lo;
        let panels = if self.max_panel.is_finite() {
            ((len / self.max_panel).ceil() as usize).max(1)
        } else {
            1
        };
        let h = len / panels as f64;
        for p in 0..panels {
            let c = lo + (p as f64 + 0.5) * h;
            for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
                ts.push(c + 0.5 * h * x);
                ws.push(0.5 * h * w);
            }
        }
    }
}

const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Sorts and merges instants that coincide up to [`same_instant`].
pub(crate) fn merge_instants(mut pts: Vec<f64>) -> Vec<f64> {
    pts.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(pts.len());
    for p in pts {
        match out.last() {
            Some(&q) if same_instant(p, q) => {}
            _ => out.push(p),
        }
    }
    out
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !a.is_finite() || !b.is_finite() {
        return Err(GldeError::NonFinite("interval endpoint"));
    }
    Ok(())
}

/// Kurzweil–Stieltjes integral for a general integrator/integrand pair.
pub fn integrate_with<A, F>(a_fn: &A, f: &F, a: f64, b: f64, rule: Quadrature) -> Result<DVector<f64>>
where
    A: Integrator + ?Sized,
    F: Integrand + ?Sized,
{
    check_interval(a, b)?;
    let (rows, cols) = a_fn.shape();
    if cols != f.dim() {
        return Err(GldeError::DimensionMismatch { expected: cols, found: f.dim() });
    }
    if a == b {
        return Ok(DVector::zeros(rows));
    }
    if a > b {
        return integrate_with(a_fn, f, b, a, rule).map(|v| -v);
    }
    let mut pts = vec![a, b];
    pts.extend(a_fn.breakpoints(a, b));
    pts.extend(f.breakpoints(a, b));
    let pts = merge_instants(pts);

    let mut ts = Vec::new();
    let mut ws = Vec::new();
    for w in pts.windows(2) {
        rule.nodes(w[0], w[1], &mut ts, &mut ws);
    }
    let dens = a_fn.densities(&ts);
    let vals = f.values(&ts);
    let mut acc = DVector::zeros(rows);
    for ((d, v), w) in dens.iter().zip(vals.iter()).zip(ws.iter()) {
        acc.gemv(*w, d, v, 1.0);
    }

    let jumps = a_fn.jumps_in(a, b);
    let jt: Vec<f64> = jumps.iter().map(|j| j.0).collect();
    let fv = f.values(&jt);
    for ((t, pre, post), v) in jumps.iter().zip(fv.iter()) {
        if *t < b && !same_instant(*t, b) {
            acc.gemv(1.0, post, v, 1.0);
        }
        if *t > a && !same_instant(*t, a) {
            acc.gemv(1.0, pre, v, 1.0);
        }
    }
    Ok(acc)
}

/// `∫_a^b d[A(s)] f(s)` for the piecewise polynomial class (exact quadrature).
pub fn ks_integrate(
    a_fn: &BvMatrixFunction,
    f: &RegulatedVectorFunction,
    a: f64,
    b: f64,
) -> Result<DVector<f64>> {
    check_interval(a, b)?;
    if a_fn.dim() != f.dim() {
        return Err(GldeError::DimensionMismatch { expected: a_fn.dim(), found: f.dim() });
    }
    a_fn.check_domain(a)?;
    a_fn.check_domain(b)?;
    integrate_with(a_fn, f, a, b, Quadrature::EXACT_POLY)
}

/// Relative width of the cells tagged at a jump of the integrator.
const JUMP_CELL_SHRINK: f64 = 1.0 / 1024.0;

/// Riemann–Stieltjes sum `Σ [A(α_j) - A(α_{j-1})] f(τ_j)` on a uniform partition
/// with `cells` cells, refined so every jump of `A` and every breakpoint of `f`
/// is a partition point. Cells touching a jump of `A` are tagged at the jump
/// and shrunk to `h / 1024`, all others are tagged at their midpoint.
pub fn gauge_oracle_with<A, F>(a_fn: &A, f: &F, a: f64, b: f64, cells: usize) -> Result<DVector<f64>>
where
    A: Integrator + ?Sized,
    F: Integrand + ?Sized,
{
    check_interval(a, b)?;
    if cells == 0 {
        return Err(GldeError::InvalidRepresentation("oracle needs at least one cell".into()));
    }
    let (rows, cols) = a_fn.shape();
    if cols != f.dim() {
        return Err(GldeError::DimensionMismatch { expected: cols, found: f.dim() });
    }
    if a == b {
        return Ok(DVector::zeros(rows));
    }
    if a > b {
        return gauge_oracle_with(a_fn, f, b, a, cells).map(|v| -v);
    }
    let h = (b - a) / cells as f64;
    let jump_times: Vec<f64> = a_fn.jumps_in(a, b).iter().map(|j| j.0).collect();
    let mut special = jump_times.clone();
    for t in &jump_times {
        special.extend([t - h * JUMP_CELL_SHRINK, t + h * JUMP_CELL_SHRINK].into_iter().filter(|s| *s > a && *s < b));
    }
    special.extend(f.breakpoints(a, b));
    let special = merge_instants(special);

    let mut grid: Vec<f64> = (0..=cells).map(|i| a + i as f64 * h).collect();
    *grid.last_mut().unwrap() = b;
    for s in &special {
        // replace the nearest grid point if it coincides, otherwise insert
        let i = grid.partition_point(|g| g < s);
        if i < grid.len() && same_instant(grid[i], *s) {
            grid[i] = *s;
        } else if i > 0 && same_instant(grid[i - 1], *s) {
            grid[i - 1] = *s;
        } else {
            grid.insert(i, *s);
        }
    }
    let is_jump = |t: f64| jump_times.contains(&t);
    // a cell bounded by two jumps gets split so each jump has its own tag
    let mut refined = Vec::with_capacity(grid.len());
    for w in grid.windows(2) {
        refined.push(w[0]);
        if is_jump(w[0]) && is_jump(w[1]) {
            refined.push(0.5 * (w[0] + w[1]));
        }
    }
    refined.push(*grid.last().unwrap());

    let tags: Vec<f64> = refined
        .windows(2)
        .map(|w| {
            if is_jump(w[0]) {
                w[0]
            } else if is_jump(w[1]) {
                w[1]
            } else {
                0.5 * (w[0] + w[1])
            }
        })
        .collect();
    let av = a_fn.values(&refined);
    let fv = f.values(&tags);
    let mut acc = DVector::zeros(rows);
    for (j, v) in fv.iter().enumerate() {
        let da = &av[j + 1] - &av[j];
        acc.gemv(1.0, &da, v, 1.0);
    }
    Ok(acc)
}

pub fn gauge_oracle_integrate(
    a_fn: &BvMatrixFunction,
    f: &RegulatedVectorFunction,
    a: f64,
    b: f64,
    cells: usize,
) -> Result<DVector<f64>> {
    if a_fn.dim() != f.dim() {
        return Err(GldeError::DimensionMismatch { expected: a_fn.dim(), found: f.dim() });
    }
    a_fn.check_domain(a)?;
    a_fn.check_domain(b)?;
    gauge_oracle_with(a_fn, f, a, b, cells)
}

/// `var_a^b(A)` in the operator 2-norm: `∫_a^b ‖A'‖ + Σ_{(a,b]} ‖Δ⁻A‖ + Σ_{[a,b)} ‖Δ⁺A‖`.
pub fn variation<A: Integrator + ?Sized>(a_fn: &A, a: f64, b: f64) -> Result<f64> {
    check_interval(a, b)?;
    if a > b {
        return Err(GldeError::InvalidInterval { a, b });
    }
    if a == b {
        return Ok(0.0);
    }
    let mut pts = vec![a, b];
    pts.extend(a_fn.breakpoints(a, b));
    let pts = merge_instants(pts);
    let mut ts = Vec::new();
    let mut ws = Vec::new();
    for w in pts.windows(2) {
        // ‖A'‖ is only piecewise smooth (singular values may cross)
        Quadrature::composite((w[1] - w[0]) / 16.0).nodes(w[0], w[1], &mut ts, &mut ws);
    }
    let mut total: f64 = a_fn.densities(&ts).iter().zip(ws).map(|(d, w)| w * op_norm(d)).sum();
    for (t, pre, post) in a_fn.jumps_in(a, b) {
        if t < b && !same_instant(t, b) {
            total += op_norm(&post);
        }
        if t > a && !same_instant(t, a) {
            total += op_norm(&pre);
        }
    }
    Ok(total)
}

impl Integrator for BvMatrixFunction {
    fn shape(&self) -> (usize, usize) {
        (self.dim(), self.dim())
    }

    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        self.inner().mesh_points_in(a, b)
    }

    fn jumps_in(&self, a: f64, b: f64) -> Vec<(f64, DMatrix<f64>, DMatrix<f64>)> {
        self.inner()
            .jump_times_in(a, b)
            .into_iter()
            .map(|t| {
                let j = self.jump_at(t).expect("jump time from own table");
                (t, j.pre.clone(), j.post.clone())
            })
            .collect()
    }

    fn densities(&self, ts: &[f64]) -> Vec<DMatrix<f64>> {
        ts.iter().map(|t| self.density_at(*t)).collect()
    }

    fn values(&self, ts: &[f64]) -> Vec<DMatrix<f64>> {
        ts.iter().map(|t| self.value(*t)).collect()
    }
}

impl Integrand for RegulatedVectorFunction {
    fn dim(&self) -> usize {
        RegulatedVectorFunction::dim(self)
    }

    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        self.inner().mesh_points_in(a, b)
    }

    fn values(&self, ts: &[f64]) -> Vec<DVector<f64>> {
        ts.iter().map(|t| self.value(*t)).collect()
    }
}

/// A constant integrand.
#[derive(Debug, Clone)]
pub struct ConstantIntegrand(pub DVector<f64>);

impl Integrand for ConstantIntegrand {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn breakpoints(&self, _a: f64, _b: f64) -> Vec<f64> {
        Vec::new()
    }

    fn values(&self, ts: &[f64]) -> Vec<DVector<f64>> {
        vec![self.0.clone(); ts.len()]
    }
}

/// Integrand `s ↦ f(s) - f(s₀)`.
#[derive(Debug, Clone)]
pub struct Shifted<'a> {
    pub f: &'a RegulatedVectorFunction,
    pub origin: DVector<f64>,
}

impl<'a> Shifted<'a> {
    pub fn new(f: &'a RegulatedVectorFunction, s0: f64) -> Self {
        Self { f, origin: f.value(s0) }
    }
}

impl Integrand for Shifted<'_> {
    fn dim(&self) -> usize {
        self.origin.len()
    }

    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        Integrand::breakpoints(self.f, a, b)
    }

    fn values(&self, ts: &[f64]) -> Vec<DVector<f64>> {
        ts.iter().map(|t| self.f.value(*t) - &self.origin).collect()
    }
}
