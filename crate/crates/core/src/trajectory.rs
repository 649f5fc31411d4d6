//! Sampled solutions with explicit one-sided values at jump instants and a
//! cubic Hermite dense output built on the Runge–Kutta nodes.

use nalgebra::DVector;

use crate::function::same_instant;
use crate::ks::Integrand;
use crate::system::GldeSystem;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub left: DVector<f64>,
    pub value: DVector<f64>,
    pub right: DVector<f64>,
    pub is_jump: bool,
}

impl TrajectoryPoint {
    pub(crate) fn smooth(t: f64, value: DVector<f64>) -> Self {
        Self { t, left: value.clone(), right: value.clone(), value, is_jump: false }
    }
}

/// Nodes of one jump-free stretch, in increasing time.
#[derive(Debug, Clone, Default)]
pub(crate) struct DenseSegment {
    pub ts: Vec<f64>,
    pub xs: Vec<DVector<f64>>,
    pub dxs: Vec<DVector<f64>>,
}

impl DenseSegment {
    fn start(&self) -> f64 {
        self.ts[0]
    }

    fn end(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    fn eval(&self, t: f64) -> DVector<f64> {
        let i = self.ts.partition_point(|s| *s <= t).clamp(1, self.ts.len() - 1);
        let (t0, t1) = (self.ts[i - 1], self.ts[i]);
        let h = t1 - t0;
        if h == 0.0 {
            return self.xs[i].clone();
        }
        let th = (t - t0) / h;
        let th2 = th * th;
        let th3 = th2 * th;
        let h00 = 2.0 * th3 - 3.0 * th2 + 1.0;
        let h10 = th3 - 2.0 * th2 + th;
        let h01 = -2.0 * th3 + 3.0 * th2;
        let h11 = th3 - th2;
        &self.xs[i - 1] * h00 + &self.dxs[i - 1] * (h10 * h) + &self.xs[i] * h01 + &self.dxs[i] * (h11 * h)
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub(crate) initial_time: f64,
    pub(crate) initial_value: DVector<f64>,
    pub(crate) end_time: f64,
    pub(crate) end_value: DVector<f64>,
    /// Samples and jump instants, increasing in time.
    pub(crate) points: Vec<TrajectoryPoint>,
    pub(crate) jumps: Vec<TrajectoryPoint>,
    pub(crate) segments: Vec<DenseSegment>,
}

impl Trajectory {
    pub fn initial_time(&self) -> f64 {
        self.initial_time
    }

    pub fn initial_value(&self) -> &DVector<f64> {
        &self.initial_value
    }

    pub fn end_time(&self) -> f64 {
        self.end_time
    }

    /// Point value at the end of the integration span.
    pub fn final_value(&self) -> &DVector<f64> {
        &self.end_value
    }

    pub fn points(&self) -> &[TrajectoryPoint] {
        &self.points
    }

    pub fn jump_points(&self) -> &[TrajectoryPoint] {
        &self.jumps
    }

    pub fn span(&self) -> (f64, f64) {
        (self.initial_time.min(self.end_time), self.initial_time.max(self.end_time))
    }

    fn jump_near(&self, t: f64) -> Option<&TrajectoryPoint> {
        self.jumps.iter().find(|p| same_instant(p.t, t))
    }

    /// Point value at `t` from the dense output; `None` outside the span.
    pub fn value_at(&self, t: f64) -> Option<DVector<f64>> {
        let (lo, hi) = self.span();
        if t < lo && !same_instant(t, lo) || t > hi && !same_instant(t, hi) {
            return None;
        }
        if let Some(p) = self.jump_near(t) {
            return Some(p.value.clone());
        }
        if same_instant(t, self.end_time) {
            return Some(self.end_value.clone());
        }
        if same_instant(t, self.initial_time) {
            return Some(self.initial_value.clone());
        }
        let i = self.segments.partition_point(|s| s.end() < t);
        let seg = self.segments.get(i).or_else(|| self.segments.last())?;
        Some(seg.eval(t.clamp(seg.start(), seg.end())))
    }

    /// Largest residual of the jump relations
    /// `x(t+) - x(t) = Δ⁺A x(t) + Δ⁺f` and `x(t) - x(t-) = Δ⁻A x(t) + Δ⁻f`.
    pub fn jump_defect(&self, sys: &GldeSystem) -> f64 {
        let a = sys.integrator();
        let mut worst = 0.0_f64;
        for p in &self.jumps {
            let ja = a.jump_at(p.t);
            let jf = sys.forcing().and_then(|f| f.jump_at(p.t));
            let mut plus = &p.right - &p.value;
            let mut minus = &p.value - &p.left;
            if let Some(j) = ja {
                plus -= &j.post * &p.value;
                minus -= &j.pre * &p.value;
            }
            if let Some(j) = jf {
                plus -= &j.post;
                minus -= &j.pre;
            }
            let scale = 1.0 + p.value.amax();
            worst = worst.max(plus.amax() / scale).max(minus.amax() / scale);
        }
        worst
    }
}

impl Integrand for Trajectory {
    fn dim(&self) -> usize {
        self.initial_value.len()
    }

    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .segments
            .iter()
            .flat_map(|s| [s.start(), s.end()])
            .chain(self.jumps.iter().map(|p| p.t))
            .filter(|t| *t >= a && *t <= b)
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn values(&self, ts: &[f64]) -> Vec<DVector<f64>> {
        ts.iter()
            .map(|t| self.value_at(*t).expect("integrand evaluated outside trajectory span"))
            .collect()
    }
}
