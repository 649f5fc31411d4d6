//! Bounded-variation integrators and regulated forcing terms.
//!
//! Both are represented on one period by an absolutely continuous part (a
//! piecewise polynomial density) plus a finite jump table, and are extended to
//! the whole line by periodic increments: `F(t + kω) = F(t) + k C`.

use nalgebra::{DMatrix, DVector};

use crate::error::{GldeError, Result};
use crate::poly::PiecewisePoly;

/// A jump at `time`: `pre = F(t) - F(t-)`, `post = F(t+) - F(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jump<V> {
    pub time: f64,
    pub pre: V,
    pub post: V,
}

pub type MatrixJump = Jump<DMatrix<f64>>;
pub type VectorJump = Jump<DVector<f64>>;

impl MatrixJump {
    pub fn new(time: f64, pre: DMatrix<f64>, post: DMatrix<f64>) -> Self {
        Self { time, pre, post }
    }
}

impl VectorJump {
    pub fn new(time: f64, pre: DVector<f64>, post: DVector<f64>) -> Self {
        Self { time, pre, post }
    }
}

/// Left limit, point value and right limit of a function at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct OneSided<V> {
    pub left: V,
    pub value: V,
    pub right: V,
}

/// Relative tolerance used to identify time instants (jump times, mesh points)
/// after periodic reduction.
pub(crate) const SNAP: f64 = 1e-12;

pub(crate) fn same_instant(a: f64, b: f64) -> bool {
    (a - b).abs() <= SNAP * (1.0 + a.abs().max(b.abs()))
}

pub(crate) fn to_col(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

pub(crate) fn to_vec(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Shared representation for matrix- and vector-valued functions.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PiecewiseBv {
    period: f64,
    density: PiecewisePoly,
    jumps: Vec<MatrixJump>,
    /// `∫_0^{b_i} density` at each mesh point.
    prefix: Vec<DMatrix<f64>>,
    /// Sum of `pre + post` over jumps strictly before jump `j`.
    jump_prefix: Vec<DMatrix<f64>>,
    increment: DMatrix<f64>,
}

impl PiecewiseBv {
    fn new(period: f64, density: PiecewisePoly, mut jumps: Vec<MatrixJump>) -> Result<Self> {
        if !period.is_finite() {
            return Err(GldeError::NonFinite("period"));
        }
        if period <= 0.0 {
            return Err(GldeError::InvalidRepresentation(format!("period {period} must be positive")));
        }
        let mesh_end = density.period();
        if (mesh_end - period).abs() > SNAP * period {
            return Err(GldeError::InvalidRepresentation(format!(
                "density mesh ends at {mesh_end}, period is {period}"
            )));
        }
        let mut density = if mesh_end != period {
            let mut bps = density.breakpoints().to_vec();
            *bps.last_mut().unwrap() = period;
            PiecewisePoly::new(bps, density.cells().to_vec())?
        } else {
            density
        };
        let shape = density.shape();
        jumps.sort_by(|a, b| a.time.total_cmp(&b.time));
        for j in &jumps {
            if !j.time.is_finite() {
                return Err(GldeError::NonFinite("jump time"));
            }
            if j.time < 0.0 || j.time >= period {
                return Err(GldeError::InvalidRepresentation(format!(
                    "jump time {} outside [0, {period})",
                    j.time
                )));
            }
            if j.pre.shape() != shape || j.post.shape() != shape {
                return Err(GldeError::DimensionMismatch { expected: shape.0, found: j.pre.nrows() });
            }
            if j.pre.iter().chain(j.post.iter()).any(|v| !v.is_finite()) {
                return Err(GldeError::NonFinite("jump size"));
            }
        }
        if jumps.windows(2).any(|w| w[0].time == w[1].time) {
            return Err(GldeError::InvalidRepresentation("duplicate jump times".into()));
        }
        for j in &jumps {
            density = density.with_breakpoint(j.time);
        }

        let bps = density.breakpoints();
        let mut prefix = Vec::with_capacity(bps.len());
        let mut acc = DMatrix::zeros(shape.0, shape.1);
        prefix.push(acc.clone());
        for i in 0..bps.len() - 1 {
            acc += density.cell_integral(i, 0.0, bps[i + 1] - bps[i]);
            prefix.push(acc.clone());
        }
        let density_total = acc;

        let mut jump_prefix = Vec::with_capacity(jumps.len() + 1);
        let mut jacc = DMatrix::zeros(shape.0, shape.1);
        for j in &jumps {
            jump_prefix.push(jacc.clone());
            jacc += &j.pre + &j.post;
        }
        jump_prefix.push(jacc.clone());
        let increment = density_total + jacc;

        Ok(Self { period, density, jumps, prefix, jump_prefix, increment })
    }

    pub(crate) fn period(&self) -> f64 {
        self.period
    }

    pub(crate) fn density(&self) -> &PiecewisePoly {
        &self.density
    }

    pub(crate) fn jumps(&self) -> &[MatrixJump] {
        &self.jumps
    }

    pub(crate) fn increment(&self) -> &DMatrix<f64> {
        &self.increment
    }

    fn shape(&self) -> (usize, usize) {
        self.density.shape()
    }

    /// Splits `t = kω + r` with `r ∈ [0, ω)`, snapping `r` onto nearby jump times.
    pub(crate) fn locate(&self, t: f64) -> (i64, f64) {
        let w = self.period;
        let mut k = (t / w).floor();
        let mut r = t - k * w;
        if r < 0.0 {
            r = 0.0;
        }
        if r >= w || same_instant(r, w) {
            k += 1.0;
            r = 0.0;
        }
        if let Some(j) = self.jumps.iter().find(|j| same_instant(j.time, r)) {
            r = j.time;
        }
        (k as i64, r)
    }

    pub(crate) fn jump_index(&self, r: f64) -> Option<usize> {
        self.jumps.iter().position(|j| j.time == r)
    }

    /// In-period value relative to `F(0-)`.
    fn local_value(&self, r: f64) -> DMatrix<f64> {
        let bps = self.density.breakpoints();
        let cell = self.density.cell_of(r);
        let mut v = &self.prefix[cell] + self.density.cell_integral(cell, 0.0, r - bps[cell]);
        let before = self.jumps.partition_point(|j| j.time < r);
        v += &self.jump_prefix[before];
        if let Some(j) = self.jumps.get(before).filter(|j| j.time == r) {
            v += &j.pre;
        }
        v
    }

    /// Value relative to `F(0-)`.
    pub(crate) fn value(&self, t: f64) -> DMatrix<f64> {
        let (k, r) = self.locate(t);
        self.local_value(r) + &self.increment * k as f64
    }

    pub(crate) fn one_sided(&self, t: f64) -> OneSided<DMatrix<f64>> {
        let (k, r) = self.locate(t);
        let value = self.local_value(r) + &self.increment * k as f64;
        match self.jump_index(r) {
            Some(i) => {
                let j = &self.jumps[i];
                OneSided { left: &value - &j.pre, right: &value + &j.post, value }
            }
            None => OneSided { left: value.clone(), right: value.clone(), value },
        }
    }

    /// Density at `t` (right-continuous at mesh points).
    pub(crate) fn density_at(&self, t: f64) -> DMatrix<f64> {
        let (_, r) = self.locate(t);
        self.density.eval(r)
    }

    /// Jump `(pre, post)` at `t`, if any.
    pub(crate) fn jump_at(&self, t: f64) -> Option<&MatrixJump> {
        let (_, r) = self.locate(t);
        self.jump_index(r).map(|i| &self.jumps[i])
    }

    /// All instants `kω + p` in `[a, b]` for in-period points `p`.
    pub(crate) fn periodic_points(&self, points: &[f64], a: f64, b: f64) -> Vec<f64> {
        let w = self.period;
        let k0 = (a / w).floor() as i64 - 1;
        let k1 = (b / w).ceil() as i64 + 1;
        let mut out = Vec::new();
        for k in k0..=k1 {
            for p in points {
                let t = k as f64 * w + p;
                if same_instant(t, a) {
                    out.push(a);
                } else if same_instant(t, b) {
                    out.push(b);
                } else if t > a && t < b {
                    out.push(t);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    pub(crate) fn jump_times_in(&self, a: f64, b: f64) -> Vec<f64> {
        let pts: Vec<f64> = self.jumps.iter().map(|j| j.time).collect();
        self.periodic_points(&pts, a, b)
    }

    pub(crate) fn mesh_points_in(&self, a: f64, b: f64) -> Vec<f64> {
        self.periodic_points(self.density.breakpoints(), a, b)
    }

    fn validate_shape(&self, rows: usize, cols: usize) -> Result<()> {
        let (r, c) = self.shape();
        if r != rows || c != cols {
            return Err(GldeError::DimensionMismatch { expected: rows, found: r });
        }
        Ok(())
    }
}

/// An `n x n` matrix-valued integrator `A` of locally bounded variation.
#[derive(Debug, Clone, PartialEq)]
pub struct BvMatrixFunction {
    inner: PiecewiseBv,
    periodic_increment: bool,
}

impl BvMatrixFunction {
    /// Builds `A` from its density and jump table. Jump times are inserted into
    /// the density mesh. When `periodic_increment` is false the function is only
    /// meaningful on `[0, ω]`.
    pub fn new(
        period: f64,
        density: PiecewisePoly,
        jumps: Vec<MatrixJump>,
        periodic_increment: bool,
    ) -> Result<Self> {
        let (r, c) = density.shape();
        if r != c {
            return Err(GldeError::InvalidRepresentation(format!(
                "integrator density must be square, got {r}x{c}"
            )));
        }
        let inner = PiecewiseBv::new(period, density, jumps)?;
        Ok(Self { inner, periodic_increment })
    }

    /// Constant density `D` on every period, no jumps.
    pub fn constant_density(density: DMatrix<f64>, period: f64) -> Result<Self> {
        Self::new(period, PiecewisePoly::constant(density, period)?, vec![], true)
    }

    pub fn dim(&self) -> usize {
        self.inner.shape().0
    }

    pub fn period(&self) -> f64 {
        self.inner.period()
    }

    pub fn density(&self) -> &PiecewisePoly {
        self.inner.density()
    }

    pub fn jumps(&self) -> &[MatrixJump] {
        self.inner.jumps()
    }

    pub fn is_periodic_increment(&self) -> bool {
        self.periodic_increment
    }

    /// `C = A(t + ω) - A(t)`.
    pub fn increment(&self) -> &DMatrix<f64> {
        self.inner.increment()
    }

    /// Point value, normalised so that `A(0-) = 0`.
    pub fn value(&self, t: f64) -> DMatrix<f64> {
        self.inner.value(t)
    }

    pub fn one_sided_values(&self, t: f64) -> OneSided<DMatrix<f64>> {
        self.inner.one_sided(t)
    }

    pub fn density_at(&self, t: f64) -> DMatrix<f64> {
        self.inner.density_at(t)
    }

    pub fn jump_at(&self, t: f64) -> Option<&MatrixJump> {
        self.inner.jump_at(t)
    }

    pub fn jump_times_in(&self, a: f64, b: f64) -> Vec<f64> {
        self.inner.jump_times_in(a, b)
    }

    /// Variation over one period: `∫_0^ω ‖A'‖ + Σ (‖Δ⁻A‖ + ‖Δ⁺A‖)`.
    pub fn period_variation(&self) -> f64 {
        crate::ks::variation(self, 0.0, self.period()).unwrap_or(f64::NAN)
    }

    pub(crate) fn inner(&self) -> &PiecewiseBv {
        &self.inner
    }

    pub(crate) fn check_domain(&self, t: f64) -> Result<()> {
        if !t.is_finite() {
            return Err(GldeError::NonFinite("time"));
        }
        if !self.periodic_increment && (t < 0.0 || t > self.period()) {
            return Err(GldeError::OutsideDomain(t));
        }
        Ok(())
    }
}

/// A regulated vector forcing term `f` with periodic increments; when
/// `periodic` is set the increment is zero and `f ∈ G_ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegulatedVectorFunction {
    inner: PiecewiseBv,
    base_value: DVector<f64>,
    periodic: bool,
}

impl RegulatedVectorFunction {
    /// `density` must be `n x 1`. `base_value` is `f(0)`.
    pub fn new(
        period: f64,
        base_value: DVector<f64>,
        density: PiecewisePoly,
        jumps: Vec<VectorJump>,
        periodic: bool,
    ) -> Result<Self> {
        let (r, c) = density.shape();
        if c != 1 {
            return Err(GldeError::InvalidRepresentation(format!(
                "forcing density must be a column, got {r}x{c}"
            )));
        }
        if base_value.len() != r {
            return Err(GldeError::DimensionMismatch { expected: r, found: base_value.len() });
        }
        if base_value.iter().any(|v| !v.is_finite()) {
            return Err(GldeError::NonFinite("base value"));
        }
        for j in &jumps {
            if j.pre.len() != r || j.post.len() != r {
                return Err(GldeError::DimensionMismatch { expected: r, found: j.pre.len() });
            }
        }
        let scale = 1.0
            + density.scale()
            + jumps.iter().map(|j| j.pre.amax() + j.post.amax()).sum::<f64>();
        let mjumps = jumps
            .into_iter()
            .map(|j| MatrixJump::new(j.time, to_col(&j.pre), to_col(&j.post)))
            .collect();
        let inner = PiecewiseBv::new(period, density, mjumps)?;
        if periodic && inner.increment().amax() > 1e-9 * scale {
            return Err(GldeError::InvalidRepresentation(format!(
                "forcing flagged periodic but its increment over one period is {:.3e}",
                inner.increment().amax()
            )));
        }
        Ok(Self { inner, base_value, periodic })
    }

    pub fn zero(n: usize, period: f64) -> Result<Self> {
        Self::constant(DVector::zeros(n), period)
    }

    pub fn constant(value: DVector<f64>, period: f64) -> Result<Self> {
        let n = value.len();
        Self::new(period, value, PiecewisePoly::zeros(n, 1, period)?, vec![], true)
    }

    pub fn dim(&self) -> usize {
        self.base_value.len()
    }

    pub fn period(&self) -> f64 {
        self.inner.period()
    }

    pub fn base_value(&self) -> &DVector<f64> {
        &self.base_value
    }

    pub fn density(&self) -> &PiecewisePoly {
        self.inner.density()
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn jumps(&self) -> Vec<VectorJump> {
        self.inner
            .jumps()
            .iter()
            .map(|j| VectorJump::new(j.time, to_vec(&j.pre), to_vec(&j.post)))
            .collect()
    }

    /// `f(t + ω) - f(t)`.
    pub fn increment(&self) -> DVector<f64> {
        to_vec(self.inner.increment())
    }

    fn offset(&self) -> DVector<f64> {
        // f(0) - f(0-)
        let pre0 = self.inner.jump_at(0.0).map(|j| to_vec(&j.pre));
        match pre0 {
            Some(p) => &self.base_value - p,
            None => self.base_value.clone(),
        }
    }

    pub fn value(&self, t: f64) -> DVector<f64> {
        self.offset() + to_vec(&self.inner.value(t))
    }

    pub fn one_sided_values(&self, t: f64) -> OneSided<DVector<f64>> {
        let off = self.offset();
        let os = self.inner.one_sided(t);
        OneSided {
            left: &off + to_vec(&os.left),
            value: &off + to_vec(&os.value),
            right: &off + to_vec(&os.right),
        }
    }

    pub fn density_at(&self, t: f64) -> DVector<f64> {
        to_vec(&self.inner.density_at(t))
    }

    pub fn jump_at(&self, t: f64) -> Option<VectorJump> {
        self.inner.jump_at(t).map(|j| VectorJump::new(j.time, to_vec(&j.pre), to_vec(&j.post)))
    }

    pub fn jump_times_in(&self, a: f64, b: f64) -> Vec<f64> {
        self.inner.jump_times_in(a, b)
    }

    pub(crate) fn inner(&self) -> &PiecewiseBv {
        &self.inner
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        self.inner.validate_shape(n, 1)
    }
}
