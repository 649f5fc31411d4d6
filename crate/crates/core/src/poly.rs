//! Piecewise polynomial densities on one period `[0, ω]`.
//!
//! Each cell stores its polynomial in the local offset `u = t - breakpoints[i]`,
//! with matrix-valued coefficients (vectors are stored as `n x 1` matrices).

use nalgebra::{DMatrix, DVector};

use crate::error::{GldeError, Result};

/// Highest admissible polynomial degree in a cell.
pub const MAX_DEGREE: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePoly {
    rows: usize,
    cols: usize,
    breakpoints: Vec<f64>,
    cells: Vec<Vec<DMatrix<f64>>>,
}

impl PiecewisePoly {
    /// Builds a piecewise polynomial from breakpoints `0 = b_0 < ... < b_m = ω`
    /// and per-cell coefficient lists (constant term first).
    pub fn new(breakpoints: Vec<f64>, cells: Vec<Vec<DMatrix<f64>>>) -> Result<Self> {
        let bad = |msg: String| Err(GldeError::InvalidRepresentation(msg));
        if breakpoints.len() < 2 {
            return bad("mesh needs at least two breakpoints".into());
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(GldeError::NonFinite("mesh breakpoint"));
        }
        if breakpoints[0] != 0.0 {
            return bad(format!("mesh must start at 0, found {}", breakpoints[0]));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return bad("mesh breakpoints must be strictly increasing".into());
        }
        if cells.len() != breakpoints.len() - 1 {
            return bad(format!(
                "{} cells given for {} mesh intervals",
                cells.len(),
                breakpoints.len() - 1
            ));
        }
        let (rows, cols) = match cells.first().and_then(|c| c.first()) {
            Some(m) => m.shape(),
            None => return bad("empty coefficient list".into()),
        };
        for (i, cell) in cells.iter().enumerate() {
            if cell.is_empty() || cell.len() > MAX_DEGREE + 1 {
                return bad(format!(
                    "cell {i}: {} coefficients (allowed 1..={})",
                    cell.len(),
                    MAX_DEGREE + 1
                ));
            }
            for c in cell {
                if c.shape() != (rows, cols) {
                    return bad(format!("cell {i}: inconsistent coefficient shape"));
                }
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(GldeError::NonFinite("density coefficient"));
                }
            }
        }
        Ok(Self { rows, cols, breakpoints, cells })
    }

    pub fn zeros(rows: usize, cols: usize, period: f64) -> Result<Self> {
        Self::constant(DMatrix::zeros(rows, cols), period)
    }

    pub fn constant(value: DMatrix<f64>, period: f64) -> Result<Self> {
        Self::new(vec![0.0, period], vec![vec![value]])
    }

    /// Constant vector density.
    pub fn constant_vector(value: &DVector<f64>, period: f64) -> Result<Self> {
        Self::constant(DMatrix::from_column_slice(value.len(), 1, value.as_slice()), period)
    }

    /// Interpolates `func` at Chebyshev points of each cell with a polynomial of
    /// the given degree.
    pub fn fit<F>(breakpoints: Vec<f64>, degree: usize, func: F) -> Result<Self>
    where
        F: Fn(f64) -> DMatrix<f64>,
    {
        if degree > MAX_DEGREE {
            return Err(GldeError::InvalidRepresentation(format!(
                "fit degree {degree} exceeds {MAX_DEGREE}"
            )));
        }
        let m = degree + 1;
        let mut cells = Vec::with_capacity(breakpoints.len().saturating_sub(1));
        for w in breakpoints.windows(2) {
            let (lo, h) = (w[0], w[1] - w[0]);
            // nodes in scaled local variable v = u / h
            let nodes: Vec<f64> = (0..m)
                .map(|j| {
                    let x = (std::f64::consts::PI * (2 * j + 1) as f64 / (2 * m) as f64).cos();
                    0.5 * (1.0 - x)
                })
                .collect();
            let vander = DMatrix::from_fn(m, m, |r, c| nodes[r].powi(c as i32));
            let lu = vander.lu();
            let samples: Vec<DMatrix<f64>> = nodes.iter().map(|v| func(lo + v * h)).collect();
            let (rows, cols) = samples[0].shape();
            let mut coeffs = vec![DMatrix::zeros(rows, cols); m];
            for r in 0..rows {
                for c in 0..cols {
                    let rhs = DVector::from_iterator(m, samples.iter().map(|s| s[(r, c)]));
                    let sol = lu.solve(&rhs).ok_or(GldeError::Singular("Chebyshev fit"))?;
                    for k in 0..m {
                        coeffs[k][(r, c)] = sol[k] / h.powi(k as i32);
                    }
                }
            }
            cells.push(coeffs);
        }
        Self::new(breakpoints, cells)
    }

    pub fn period(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn cells(&self) -> &[Vec<DMatrix<f64>>] {
        &self.cells
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn degree(&self) -> usize {
        self.cells.iter().map(|c| c.len() - 1).max().unwrap_or(0)
    }

    /// Index of the cell containing `r`; right-continuous at interior breakpoints,
    /// the last cell owns `ω`.
    pub fn cell_of(&self, r: f64) -> usize {
        let idx = self.breakpoints.partition_point(|b| *b <= r);
        idx.saturating_sub(1).min(self.cells.len() - 1)
    }

    /// Evaluates the polynomial of `cell` at absolute in-period position `r`.
    pub fn eval_cell_into(&self, cell: usize, r: f64, out: &mut DMatrix<f64>) {
        let u = r - self.breakpoints[cell];
        let coeffs = &self.cells[cell];
        out.copy_from(&coeffs[coeffs.len() - 1]);
        for c in coeffs.iter().rev().skip(1) {
            *out *= u;
            *out += c;
        }
    }

    pub fn eval_cell(&self, cell: usize, r: f64) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        self.eval_cell_into(cell, r, &mut out);
        out
    }

    pub fn eval(&self, r: f64) -> DMatrix<f64> {
        self.eval_cell(self.cell_of(r), r)
    }

    /// Exact integral of one cell's polynomial between local offsets `u0` and `u1`.
    pub fn cell_integral(&self, cell: usize, u0: f64, u1: f64) -> DMatrix<f64> {
        let mut acc = DMatrix::zeros(self.rows, self.cols);
        for (k, c) in self.cells[cell].iter().enumerate() {
            let p = (k + 1) as i32;
            acc += c * ((u1.powi(p) - u0.powi(p)) / p as f64);
        }
        acc
    }

    /// Exact integral over `[r0, r1] ⊂ [0, ω]`.
    pub fn integral(&self, r0: f64, r1: f64) -> DMatrix<f64> {
        let mut acc = DMatrix::zeros(self.rows, self.cols);
        if r1 <= r0 {
            return acc;
        }
        let first = self.cell_of(r0);
        for cell in first..self.cells.len() {
            let lo = self.breakpoints[cell];
            let hi = self.breakpoints[cell + 1];
            if lo >= r1 {
                break;
            }
            let a = r0.max(lo) - lo;
            let b = r1.min(hi) - lo;
            if b > a {
                acc += self.cell_integral(cell, a, b);
            }
        }
        acc
    }

    /// Returns a copy whose mesh contains `r`, re-expanding the split cell.
    pub fn with_breakpoint(&self, r: f64) -> Self {
        if r <= 0.0 || r >= self.period() || self.breakpoints.contains(&r) {
            return self.clone();
        }
        let cell = self.cell_of(r);
        let shift = r - self.breakpoints[cell];
        let shifted = taylor_shift(&self.cells[cell], shift);
        let mut out = self.clone();
        out.breakpoints.insert(cell + 1, r);
        out.cells.insert(cell + 1, shifted);
        out
    }

    /// Largest absolute coefficient; used for tolerance scaling.
    pub fn scale(&self) -> f64 {
        self.cells
            .iter()
            .flatten()
            .flat_map(|m| m.iter())
            .fold(0.0_f64, |a, v| a.max(v.abs()))
    }
}

/// Coefficients of `q(v) = p(v + d)`.
fn taylor_shift(coeffs: &[DMatrix<f64>], d: f64) -> Vec<DMatrix<f64>> {
    let m = coeffs.len();
    let (rows, cols) = coeffs[0].shape();
    let mut out = vec![DMatrix::zeros(rows, cols); m];
    for (k, c) in coeffs.iter().enumerate() {
        let mut binom = 1.0;
        for j in 0..=k {
            // C(k, j) d^(k-j)
            out[j] += c * (binom * d.powi((k - j) as i32));
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
    }
    out
}
