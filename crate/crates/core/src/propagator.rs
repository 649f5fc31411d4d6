//! Transition matrices and solution propagation.
//!
//! Between jump instants the solution follows the ODE `x' = A'(t) x + f'(t)`,
//! integrated with fixed-step classical RK4 that never steps across a mesh
//! point. Jumps are crossed with the exact relations
//!
//! ```text
//! x(τ)  = [I - Δ⁻A(τ)]⁻¹ (x(τ-) + Δ⁻f(τ))
//! x(τ+) = [I + Δ⁺A(τ)] x(τ) + Δ⁺f(τ)
//! ```
//!
//! and their inverses when travelling backward in time.

use nalgebra::{DMatrix, DVector};

use crate::error::{GldeError, Result};
use crate::function::{same_instant, to_col, to_vec, BvMatrixFunction, RegulatedVectorFunction};
use crate::ks::{integrate_with, merge_instants, Integrator, Quadrature, Shifted};
use crate::system::GldeSystem;
use crate::trajectory::{DenseSegment, Trajectory, TrajectoryPoint};

/// Default number of RK4 steps per period.
pub const DEFAULT_STEPS_PER_PERIOD: usize = 4096;

const MAX_STEPS: f64 = 5e8;

/// Which one-sided limit of `U(t, s)` to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `U(t+, s)`
    TPlus,
    /// `U(t-, s)`
    TMinus,
    /// `U(t, s+)`
    SPlus,
    /// `U(t, s-)`
    SMinus,
}

/// Receives events while a solution is walked across an interval.
pub(crate) trait Recorder {
    fn segment_start(&mut self) {}
    fn node(&mut self, _t: f64, _x: &DMatrix<f64>, _dx: &DMatrix<f64>) {}
    fn jump(&mut self, _t: f64, _left: &DMatrix<f64>, _value: &DMatrix<f64>, _right: &DMatrix<f64>) {}
    fn stop(&mut self, _idx: usize, _t: f64, _value: &DMatrix<f64>) {}
}

struct NullRecorder;
impl Recorder for NullRecorder {}

struct StopRecorder {
    values: Vec<Option<DMatrix<f64>>>,
}

impl Recorder for StopRecorder {
    fn stop(&mut self, idx: usize, _t: f64, value: &DMatrix<f64>) {
        self.values[idx] = Some(value.clone());
    }
}

#[derive(Default)]
struct TrajectoryRecorder {
    segments: Vec<DenseSegment>,
    jumps: Vec<TrajectoryPoint>,
    samples: Vec<(f64, DVector<f64>)>,
}

impl Recorder for TrajectoryRecorder {
    fn segment_start(&mut self) {
        self.segments.push(DenseSegment::default());
    }

    fn node(&mut self, t: f64, x: &DMatrix<f64>, dx: &DMatrix<f64>) {
        let seg = self.segments.last_mut().expect("segment started");
        seg.ts.push(t);
        seg.xs.push(to_vec(x));
        seg.dxs.push(to_vec(dx));
    }

    fn jump(&mut self, t: f64, left: &DMatrix<f64>, value: &DMatrix<f64>, right: &DMatrix<f64>) {
        self.jumps.push(TrajectoryPoint {
            t,
            left: to_vec(left),
            value: to_vec(value),
            right: to_vec(right),
            is_jump: true,
        });
    }

    fn stop(&mut self, _idx: usize, t: f64, value: &DMatrix<f64>) {
        self.samples.push((t, to_vec(value)));
    }
}

/// Jump data of one instant on the walk.
struct Crossing {
    t: f64,
    a: Option<(DMatrix<f64>, DMatrix<f64>)>,
    f: Option<(DMatrix<f64>, DMatrix<f64>)>,
    stops: Vec<usize>,
}

impl Crossing {
    fn is_jump(&self) -> bool {
        self.a.is_some() || self.f.is_some()
    }

    fn left_from_value(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = x.clone();
        if let Some((pre, _)) = &self.a {
            out -= pre * x;
        }
        if let Some((pre, _)) = &self.f {
            out -= pre;
        }
        out
    }

    fn right_from_value(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = x.clone();
        if let Some((_, post)) = &self.a {
            out += post * x;
        }
        if let Some((_, post)) = &self.f {
            out += post;
        }
        out
    }

    fn value_from_left(&self, xl: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut rhs = xl.clone();
        if let Some((pre, _)) = &self.f {
            rhs += pre;
        }
        match &self.a {
            Some((pre, _)) => {
                let n = pre.nrows();
                let m = DMatrix::identity(n, n) - pre;
                m.lu().solve(&rhs).ok_or(GldeError::HViolation { time: self.t, det: 0.0 })
            }
            None => Ok(rhs),
        }
    }

    fn value_from_right(&self, xr: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut rhs = xr.clone();
        if let Some((_, post)) = &self.f {
            rhs -= post;
        }
        match &self.a {
            Some((_, post)) => {
                let n = post.nrows();
                let m = DMatrix::identity(n, n) + post;
                m.lu().solve(&rhs).ok_or(GldeError::HViolation { time: self.t, det: 0.0 })
            }
            None => Ok(rhs),
        }
    }
}

/// `y += a x`
fn axpy(y: &mut DMatrix<f64>, a: f64, x: &DMatrix<f64>) {
    y.zip_apply(x, |yi, xi| *yi += a * xi);
}

/// Transition-matrix and solution machinery for one system.
#[derive(Debug, Clone, Copy)]
pub struct Propagator<'a> {
    sys: &'a GldeSystem,
    step: f64,
}

impl<'a> Propagator<'a> {
    /// Uses `h = ω / 4096`.
    pub fn new(sys: &'a GldeSystem) -> Self {
        Self { sys, step: sys.period() / DEFAULT_STEPS_PER_PERIOD as f64 }
    }

    pub fn with_step(sys: &'a GldeSystem, step: f64) -> Result<Self> {
        if !step.is_finite() || step <= 0.0 {
            return Err(GldeError::StepUnderflow(step));
        }
        Ok(Self { sys, step })
    }

    pub fn system(&self) -> &'a GldeSystem {
        self.sys
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    fn check_time(&self, t: f64) -> Result<()> {
        self.sys.integrator().check_domain(t)
    }

    fn crossing(&self, t: f64, forced: bool) -> Crossing {
        let a = self.sys.integrator().jump_at(t).map(|j| (j.pre.clone(), j.post.clone()));
        let f = if forced {
            self.sys
                .forcing()
                .and_then(|f| f.jump_at(t))
                .map(|j| (to_col(&j.pre), to_col(&j.post)))
        } else {
            None
        };
        Crossing { t, a, f, stops: Vec::new() }
    }

    /// Walks the point value `x` at `s` to `t`, reporting events to `rec`.
    /// Returns the point value at `t`.
    pub(crate) fn walk(
        &self,
        s: f64,
        x: DMatrix<f64>,
        t: f64,
        forced: bool,
        stops: &[f64],
        rec: &mut dyn Recorder,
    ) -> Result<DMatrix<f64>> {
        self.check_time(s)?;
        self.check_time(t)?;
        let forced = forced && self.sys.forcing().is_some();
        let a_fn = self.sys.integrator();
        let f_fn = if forced { self.sys.forcing() } else { None };
        let (lo, hi) = (s.min(t), s.max(t));
        if (hi - lo) / self.step > MAX_STEPS {
            return Err(GldeError::StepUnderflow(self.step));
        }

        let mut pts = vec![lo, hi];
        pts.extend(a_fn.inner().mesh_points_in(lo, hi));
        if let Some(f) = f_fn {
            pts.extend(f.inner().mesh_points_in(lo, hi));
        }
        pts.extend(stops.iter().copied().filter(|p| *p >= lo && *p <= hi));
        let mut pts = merge_instants(pts);
        pts[0] = lo;
        let last = pts.len() - 1;
        pts[last] = hi;

        let mut crossings: Vec<Crossing> = pts.iter().map(|p| self.crossing(*p, forced)).collect();
        for (idx, st) in stops.iter().enumerate() {
            let j = pts.partition_point(|p| p < st);
            let cand = [j.saturating_sub(1), j.min(last)];
            if let Some(&k) = cand.iter().find(|&&k| same_instant(pts[k], *st)) {
                crossings[k].stops.push(idx);
            }
        }
        let forward = t >= s;
        if !forward {
            crossings.reverse();
        }

        let mut x = x;
        let first = &crossings[0];
        let (left, right) = (first.left_from_value(&x), first.right_from_value(&x));
        if first.is_jump() {
            rec.jump(first.t, &left, &x, &right);
        }
        for &i in &first.stops {
            rec.stop(i, first.t, &x);
        }
        if crossings.len() == 1 {
            return Ok(x);
        }
        x = if forward { right } else { left };

        for i in 1..crossings.len() {
            let (p, q) = (crossings[i - 1].t, crossings[i].t);
            self.integrate_segment(p, q, &mut x, f_fn, rec);
            let c = &crossings[i];
            let (left, value, right) = if forward {
                let value = c.value_from_left(&x)?;
                let right = c.right_from_value(&value);
                (x.clone(), value, right)
            } else {
                let value = c.value_from_right(&x)?;
                let left = c.left_from_value(&value);
                (left, value, x.clone())
            };
            if c.is_jump() {
                rec.jump(c.t, &left, &value, &right);
            }
            for &k in &c.stops {
                rec.stop(k, c.t, &value);
            }
            if i == crossings.len() - 1 {
                return Ok(value);
            }
            x = if forward { right } else { left };
        }
        unreachable!("loop returns at the last crossing")
    }

    /// RK4 from `p` to `q` on a stretch free of mesh points.
    fn integrate_segment(
        &self,
        p: f64,
        q: f64,
        x: &mut DMatrix<f64>,
        f_fn: Option<&RegulatedVectorFunction>,
        rec: &mut dyn Recorder,
    ) {
        let a_fn: &BvMatrixFunction = self.sys.integrator();
        let mid = 0.5 * (p + q);
        let w = a_fn.period();
        let (ka, ra) = a_fn.inner().locate(mid);
        let a_cell = a_fn.density().cell_of(ra);
        let a_shift = ka as f64 * w;
        let f_cell = f_fn.map(|f| {
            let (kf, rf) = f.inner().locate(mid);
            (f.density().cell_of(rf), kf as f64 * w)
        });

        let (n, m) = x.shape();
        let mut da = DMatrix::zeros(n, n);
        let mut df = DMatrix::zeros(n, 1);
        let mut rhs = |t: f64, x: &DMatrix<f64>, out: &mut DMatrix<f64>| {
            a_fn.density().eval_cell_into(a_cell, t - a_shift, &mut da);
            da.mul_to(x, out);
            if let (Some(f), Some((cell, shift))) = (f_fn, f_cell) {
                f.density().eval_cell_into(cell, t - shift, &mut df);
                *out += &df;
            }
        };

        let steps = (((q - p).abs() / self.step) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = (q - p) / steps as f64;
        let mut k1 = DMatrix::zeros(n, m);
        let mut k2 = DMatrix::zeros(n, m);
        let mut k3 = DMatrix::zeros(n, m);
        let mut k4 = DMatrix::zeros(n, m);
        let mut tmp = DMatrix::zeros(n, m);

        rec.segment_start();
        rhs(p, x, &mut k1);
        rec.node(p, x, &k1);
        for i in 0..steps {
            let t0 = p + i as f64 * h;
            let t1 = if i + 1 == steps { q } else { p + (i + 1) as f64 * h };
            let hh = t1 - t0;
            tmp.copy_from(x);
            axpy(&mut tmp, 0.5 * hh, &k1);
            rhs(t0 + 0.5 * hh, &tmp, &mut k2);
            tmp.copy_from(x);
            axpy(&mut tmp, 0.5 * hh, &k2);
            rhs(t0 + 0.5 * hh, &tmp, &mut k3);
            tmp.copy_from(x);
            axpy(&mut tmp, hh, &k3);
            rhs(t1, &tmp, &mut k4);
            k2 += &k3;
            axpy(x, hh / 6.0, &k1);
            axpy(x, hh / 3.0, &k2);
            axpy(x, hh / 6.0, &k4);
            rhs(t1, x, &mut k1);
            rec.node(t1, x, &k1);
        }
    }

    /// Point value `U(t, s)`.
    pub fn transition_matrix(&self, t: f64, s: f64) -> Result<DMatrix<f64>> {
        self.check_time(t)?;
        self.check_time(s)?;
        let n = self.sys.dim();
        if t == s {
            return Ok(DMatrix::identity(n, n));
        }
        if t > s {
            self.walk(s, DMatrix::identity(n, n), t, false, &[], &mut NullRecorder)
        } else {
            let forward = self.walk(t, DMatrix::identity(n, n), s, false, &[], &mut NullRecorder)?;
            forward.try_inverse().ok_or(GldeError::Singular("transition matrix inverse"))
        }
    }

    /// One-sided limits of `U(t, s)` from the jump factors at the varying argument.
    pub fn one_sided_transition(&self, t: f64, s: f64, side: Side) -> Result<DMatrix<f64>> {
        let u = self.transition_matrix(t, s)?;
        let a = self.sys.integrator();
        let n = self.sys.dim();
        let id = DMatrix::<f64>::identity(n, n);
        let at = |x: f64| a.jump_at(x).cloned();
        Ok(match side {
            Side::TPlus => match at(t) {
                Some(j) => (&id + &j.post) * u,
                None => u,
            },
            Side::TMinus => match at(t) {
                Some(j) => (&id - &j.pre) * u,
                None => u,
            },
            Side::SPlus => match at(s) {
                Some(j) => {
                    let inv = (&id + &j.post).try_inverse().ok_or(GldeError::HViolation { time: s, det: 0.0 })?;
                    u * inv
                }
                None => u,
            },
            Side::SMinus => match at(s) {
                Some(j) => {
                    let inv = (&id - &j.pre).try_inverse().ok_or(GldeError::HViolation { time: s, det: 0.0 })?;
                    u * inv
                }
                None => u,
            },
        })
    }

    /// `𝒰(t) = U(t, 0)` at every requested instant (any order), computed with
    /// one forward and one backward sweep from 0.
    pub fn fundamental_at(&self, ts: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let n = self.sys.dim();
        let mut out = vec![DMatrix::identity(n, n); ts.len()];
        let pos: Vec<usize> = (0..ts.len()).filter(|&i| ts[i] > 0.0).collect();
        let neg: Vec<usize> = (0..ts.len()).filter(|&i| ts[i] < 0.0).collect();
        for (idx, forward) in [(pos, true), (neg, false)] {
            if idx.is_empty() {
                continue;
            }
            let stops: Vec<f64> = idx.iter().map(|&i| ts[i]).collect();
            let end = if forward {
                stops.iter().cloned().fold(f64::MIN, f64::max)
            } else {
                stops.iter().cloned().fold(f64::MAX, f64::min)
            };
            let mut rec = StopRecorder { values: vec![None; stops.len()] };
            self.walk(0.0, DMatrix::identity(n, n), end, false, &stops, &mut rec)?;
            for (k, &i) in idx.iter().enumerate() {
                out[i] = rec.values[k].take().expect("every stop is visited");
            }
        }
        Ok(out)
    }

    /// Solution of the (inhomogeneous, if forced) system with `x(s0) = x0`,
    /// sampled at `samples` equispaced instants between `s0` and `t1` plus every
    /// jump instant in range.
    pub fn propagate(&self, s0: f64, x0: &DVector<f64>, t1: f64, samples: usize) -> Result<Trajectory> {
        if x0.len() != self.sys.dim() {
            return Err(GldeError::DimensionMismatch { expected: self.sys.dim(), found: x0.len() });
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(GldeError::NonFinite("initial value"));
        }
        if samples < 2 {
            return Err(GldeError::InvalidRepresentation("at least two samples are required".into()));
        }
        let stops: Vec<f64> = (0..samples)
            .map(|i| {
                if i + 1 == samples {
                    t1
                } else {
                    s0 + (t1 - s0) * i as f64 / (samples - 1) as f64
                }
            })
            .collect();
        let mut rec = TrajectoryRecorder::default();
        let end = self.walk(s0, to_col(x0), t1, true, &stops, &mut rec)?;
        let TrajectoryRecorder { mut segments, mut jumps, samples } = rec;
        if t1 < s0 {
            segments.reverse();
            for s in &mut segments {
                s.ts.reverse();
                s.xs.reverse();
                s.dxs.reverse();
            }
            jumps.reverse();
        }
        let mut points: Vec<TrajectoryPoint> = jumps.clone();
        for (t, v) in samples {
            if !jumps.iter().any(|j| same_instant(j.t, t)) {
                points.push(TrajectoryPoint::smooth(t, v));
            }
        }
        points.sort_by(|a, b| a.t.total_cmp(&b.t));
        points.dedup_by(|a, b| a.t == b.t);
        let traj = Trajectory {
            initial_time: s0,
            initial_value: x0.clone(),
            end_time: t1,
            end_value: to_vec(&end),
            points,
            jumps,
            segments,
        };
        debug_assert!(traj.jump_defect(self.sys) < 1e-9, "jump relations violated");
        Ok(traj)
    }

    /// Point value of the solution at `t` with `x(s0) = x0`.
    pub fn solution_at(&self, s0: f64, x0: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
        let end = self.walk(s0, to_col(x0), t, true, &[], &mut NullRecorder)?;
        Ok(to_vec(&end))
    }

    /// Integrator `s ↦ left · U(0, s)`.
    pub fn inverse_fundamental(&self, left: DMatrix<f64>) -> TransitionIntegrator<'_> {
        TransitionIntegrator { prop: *self, left }
    }

    /// Right-hand side of the variation-of-constants formula,
    /// `U(t,s0)x0 + f(t) - f(s0) - ∫_{s0}^t d[U(t,s)](f(s) - f(s0))`.
    pub fn variation_of_constants(&self, s0: f64, x0: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
        let u_t0 = self.transition_matrix(t, s0)?;
        let mut out = &u_t0 * x0;
        if let Some(f) = self.sys.forcing() {
            let u_t = self.fundamental_at(&[t])?.remove(0);
            let integrator = self.inverse_fundamental(u_t);
            let phi = Shifted::new(f, s0);
            let rule = Quadrature::composite(self.sys.period() / 128.0);
            let integral = integrate_with(&integrator, &phi, s0, t, rule)?;
            out += f.value(t) - f.value(s0) - integral;
        }
        Ok(out)
    }

    /// `‖variation-of-constants formula - propagated solution‖` at `t`.
    pub fn voc_crosscheck(&self, s0: f64, x0: &DVector<f64>, t: f64) -> Result<f64> {
        let formula = self.variation_of_constants(s0, x0, t)?;
        let direct = self.solution_at(s0, x0, t)?;
        Ok((formula - direct).norm())
    }
}

/// The integrator `s ↦ L · U(0, s) = L · 𝒰(s)⁻¹`; with `L = U(t, 0)` this is
/// `s ↦ U(t, s)`. Density `-L U(0,s) A'(s)`; jumps from the one-sided limits
/// `U(0, s±)`.
#[derive(Debug, Clone)]
pub struct TransitionIntegrator<'a> {
    prop: Propagator<'a>,
    left: DMatrix<f64>,
}

impl TransitionIntegrator<'_> {
    fn inverse_fundamentals(&self, ts: &[f64]) -> Vec<DMatrix<f64>> {
        self.prop
            .fundamental_at(ts)
            .expect("integrator evaluated inside the system domain")
            .into_iter()
            .map(|u| &self.left * u.try_inverse().expect("transition matrices are invertible"))
            .collect()
    }
}

impl Integrator for TransitionIntegrator<'_> {
    fn shape(&self) -> (usize, usize) {
        (self.left.nrows(), self.prop.sys.dim())
    }

    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        self.prop.sys.integrator().inner().mesh_points_in(a, b)
    }

    fn jumps_in(&self, a: f64, b: f64) -> Vec<(f64, DMatrix<f64>, DMatrix<f64>)> {
        let a_fn = self.prop.sys.integrator();
        let times = a_fn.jump_times_in(a, b);
        let vals = self.inverse_fundamentals(&times);
        let n = a_fn.dim();
        let id = DMatrix::<f64>::identity(n, n);
        times
            .into_iter()
            .zip(vals)
            .map(|(t, v)| {
                let j = a_fn.jump_at(t).expect("jump time");
                let minus_inv = (&id - &j.pre).try_inverse().expect("condition (H)");
                let plus_inv = (&id + &j.post).try_inverse().expect("condition (H)");
                let pre = &v * (&id - minus_inv);
                let post = &v * (plus_inv - &id);
                (t, pre, post)
            })
            .collect()
    }

    fn densities(&self, ts: &[f64]) -> Vec<DMatrix<f64>> {
        let a_fn = self.prop.sys.integrator();
        self.inverse_fundamentals(ts)
            .into_iter()
            .zip(ts)
            .map(|(v, t)| -(v * a_fn.density_at(*t)))
            .collect()
    }

    fn values(&self, ts: &[f64]) -> Vec<DMatrix<f64>> {
        self.inverse_fundamentals(ts)
    }
}

/// Convenience wrapper using the default step.
pub fn transition_matrix(sys: &GldeSystem, t: f64, s: f64) -> Result<DMatrix<f64>> {
    Propagator::new(sys).transition_matrix(t, s)
}

/// Convenience wrapper using the default step.
pub fn propagate(sys: &GldeSystem, s0: f64, x0: &DVector<f64>, t1: f64, samples: usize) -> Result<Trajectory> {
    Propagator::new(sys).propagate(s0, x0, t1, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::{MatrixJump, VectorJump};
    use crate::poly::PiecewisePoly;

    fn m1(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    fn scalar(density: f64, jumps: Vec<MatrixJump>) -> GldeSystem {
        let a = BvMatrixFunction::new(1.0, PiecewisePoly::constant(m1(density), 1.0).unwrap(), jumps, true)
            .unwrap();
        GldeSystem::homogeneous(a).unwrap()
    }

    #[test]
    fn identity_at_equal_times() {
        let sys = scalar(-1.0, vec![MatrixJump::new(0.5, m1(0.2), m1(0.3))]);
        let p = Propagator::new(&sys);
        assert_eq!(p.transition_matrix(0.5, 0.5).unwrap(), m1(1.0));
    }

    #[test]
    fn smooth_scalar_matches_exponential() {
        let sys = scalar(-1.0, vec![]);
        let u = transition_matrix(&sys, 1.0, 0.0).unwrap();
        assert!((u[(0, 0)] - (-1f64).exp()).abs() < 1e-12);
        let back = transition_matrix(&sys, -0.3, 0.7).unwrap();
        assert!((back[(0, 0)] - 1f64.exp()).abs() < 1e-11);
    }

    #[test]
    fn jump_factors_compose() {
        let sys = scalar(0.0, vec![MatrixJump::new(0.5, m1(0.25), m1(1.0))]);
        let p = Propagator::new(&sys);
        let full = p.transition_matrix(1.0, 0.0).unwrap()[(0, 0)];
        assert!((full - 2.0 / 0.75).abs() < 1e-14);
        // point value at the jump carries only the left factor
        assert!((p.transition_matrix(0.5, 0.0).unwrap()[(0, 0)] - 1.0 / 0.75).abs() < 1e-14);
        let tp = p.one_sided_transition(0.5, 0.0, Side::TPlus).unwrap()[(0, 0)];
        let tm = p.one_sided_transition(0.5, 0.0, Side::TMinus).unwrap()[(0, 0)];
        assert!((tp - 2.0 / 0.75).abs() < 1e-14);
        assert!((tm - 1.0).abs() < 1e-14);
        let sp = p.one_sided_transition(1.0, 0.5, Side::SPlus).unwrap()[(0, 0)];
        assert!((sp - 1.0).abs() < 1e-14);
    }

    #[test]
    fn backward_walk_inverts_forward() {
        let sys = scalar(-0.7, vec![MatrixJump::new(0.5, m1(0.25), m1(1.0))]);
        let p = Propagator::new(&sys);
        let fwd = p.transition_matrix(1.3, -0.4).unwrap()[(0, 0)];
        let bwd = p.transition_matrix(-0.4, 1.3).unwrap()[(0, 0)];
        assert!((fwd * bwd - 1.0).abs() < 1e-13);
        let us = p.fundamental_at(&[-0.4, 1.3]).unwrap();
        assert!((us[1][(0, 0)] / us[0][(0, 0)] - fwd).abs() < 1e-12);
    }

    #[test]
    fn impulsive_forcing_steps_at_the_jump() {
        let a = BvMatrixFunction::constant_density(m1(0.0), 1.0).unwrap();
        let f = RegulatedVectorFunction::new(
            1.0,
            DVector::zeros(1),
            PiecewisePoly::zeros(1, 1, 1.0).unwrap(),
            vec![VectorJump::new(0.5, DVector::zeros(1), DVector::from_element(1, 2.0))],
            false,
        )
        .unwrap();
        let sys = GldeSystem::new(a, Some(f)).unwrap();
        let traj = propagate(&sys, 0.0, &DVector::zeros(1), 1.0, 5).unwrap();
        let jumps = traj.jump_points();
        assert_eq!(jumps.len(), 1);
        assert_eq!(jumps[0].value[0], 0.0);
        assert_eq!(jumps[0].right[0], 2.0);
        assert_eq!(traj.final_value()[0], 2.0);
        assert_eq!(traj.value_at(0.25).unwrap()[0], 0.0);
        assert_eq!(traj.value_at(0.75).unwrap()[0], 2.0);
        let r = Propagator::new(&sys).voc_crosscheck(0.0, &DVector::zeros(1), 1.0).unwrap();
        assert!(r < 1e-12, "{r}");
    }

    #[test]
    fn voc_formula_agrees_for_smooth_forcing() {
        let a = BvMatrixFunction::constant_density(m1(-1.0), 1.0).unwrap();
        let dens = PiecewisePoly::fit(vec![0.0, 0.25, 0.5, 0.75, 1.0], 5, |t| {
            m1((2.0 * std::f64::consts::PI * t).cos())
        })
        .unwrap();
        let f = RegulatedVectorFunction::new(1.0, DVector::zeros(1), dens, vec![], false).unwrap();
        let sys = GldeSystem::new(a, Some(f)).unwrap();
        let p = Propagator::new(&sys);
        let r = p.voc_crosscheck(0.2, &DVector::from_element(1, 0.3), 0.9).unwrap();
        assert!(r < 1e-8, "{r}");
    }

    #[test]
    fn rejects_bad_step() {
        let sys = scalar(-1.0, vec![]);
        assert!(matches!(Propagator::with_step(&sys, 0.0), Err(GldeError::StepUnderflow(_))));
    }
}
