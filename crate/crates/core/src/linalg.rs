//! Dense linear-algebra helpers: operator norms, ordered complex Schur form,
//! spectral projections and the principal matrix logarithm.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{GldeError, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Operator 2-norm (largest singular value).
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    match m.shape() {
        (0, _) | (_, 0) => 0.0,
        (1, 1) => m[(0, 0)].abs(),
        _ => m.clone().svd(false, false).singular_values.max(),
    }
}

pub fn op_norm_c(m: &CMatrix) -> f64 {
    match m.shape() {
        (0, _) | (_, 0) => 0.0,
        (1, 1) => m[(0, 0)].norm(),
        _ => m.clone().svd(false, false).singular_values.max(),
    }
}

pub fn complexify(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Unitary `z` and upper-triangular `t` with `m = z t z^H`.
#[derive(Debug, Clone)]
pub struct ComplexSchur {
    pub z: CMatrix,
    pub t: CMatrix,
}

impl ComplexSchur {
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        Self::of_complex(&complexify(m))
    }

    pub fn of_complex(m: &CMatrix) -> Result<Self> {
        let n = m.nrows();
        if n == 0 {
            return Ok(Self { z: CMatrix::zeros(0, 0), t: CMatrix::zeros(0, 0) });
        }
        let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 10_000)
            .ok_or(GldeError::Singular("Schur decomposition did not converge"))?;
        let (z, mut t) = schur.unpack();
        for j in 0..n {
            for i in j + 1..n {
                t[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
        Ok(Self { z, t })
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }

    /// Swaps diagonal entries `k` and `k + 1` by a unitary rotation.
    fn swap(&mut self, k: usize) {
        let n = self.t.nrows();
        let t11 = self.t[(k, k)];
        let t12 = self.t[(k, k + 1)];
        let t22 = self.t[(k + 1, k + 1)];
        // eigenvector of the 2x2 block for t22
        let mut v1 = t12;
        let mut v2 = t22 - t11;
        let nv = (v1.norm_sqr() + v2.norm_sqr()).sqrt();
        if nv == 0.0 {
            return;
        }
        v1 /= nv;
        v2 /= nv;
        // g = [[v1, -conj(v2)], [v2, conj(v1)]]
        let g = [[v1, -v2.conj()], [v2, v1.conj()]];
        // t <- g^H t on rows k, k+1
        for j in 0..n {
            let a = self.t[(k, j)];
            let b = self.t[(k + 1, j)];
            self.t[(k, j)] = g[0][0].conj() * a + g[1][0].conj() * b;
            self.t[(k + 1, j)] = g[0][1].conj() * a + g[1][1].conj() * b;
        }
        // t <- t g and z <- z g on columns k, k+1
        for i in 0..n {
            let a = self.t[(i, k)];
            let b = self.t[(i, k + 1)];
            self.t[(i, k)] = a * g[0][0] + b * g[1][0];
            self.t[(i, k + 1)] = a * g[0][1] + b * g[1][1];
            let a = self.z[(i, k)];
            let b = self.z[(i, k + 1)];
            self.z[(i, k)] = a * g[0][0] + b * g[1][0];
            self.z[(i, k + 1)] = a * g[0][1] + b * g[1][1];
        }
        self.t[(k + 1, k)] = Complex64::new(0.0, 0.0);
        self.t[(k, k)] = t22;
        self.t[(k + 1, k + 1)] = t11;
    }

    /// Moves every eigenvalue satisfying `select` to the leading block, keeping
    /// relative order within both groups. Returns the size of the leading block.
    pub fn reorder<F>(&mut self, select: F) -> usize
    where
        F: Fn(Complex64) -> bool,
    {
        let n = self.t.nrows();
        let mut placed = 0;
        for i in 0..n {
            if select(self.t[(i, i)]) {
                let mut k = i;
                while k > placed {
                    self.swap(k - 1);
                    k -= 1;
                }
                placed += 1;
            }
        }
        placed
    }
}

/// Spectral projection of `m` onto the invariant subspace of the eigenvalues
/// selected by `select`, along the complementary invariant subspace.
pub fn spectral_projection<F>(m: &DMatrix<f64>, select: F) -> Result<(DMatrix<f64>, usize)>
where
    F: Fn(Complex64) -> bool,
{
    let n = m.nrows();
    let mut schur = ComplexSchur::new(m)?;
    let k = schur.reorder(select);
    if k == 0 {
        return Ok((DMatrix::zeros(n, n), 0));
    }
    if k == n {
        return Ok((DMatrix::identity(n, n), n));
    }
    let t = &schur.t;
    // solve t11 r - r t22 = -t12 column by column
    let mut r = CMatrix::zeros(k, n - k);
    for j in 0..n - k {
        let mut rhs: Vec<Complex64> = (0..k).map(|i| -t[(i, k + j)]).collect();
        for l in 0..j {
            let c = t[(k + l, k + j)];
            for (i, v) in rhs.iter_mut().enumerate() {
                *v += r[(i, l)] * c;
            }
        }
        let shift = t[(k + j, k + j)];
        for i in (0..k).rev() {
            let mut s = rhs[i];
            for l in i + 1..k {
                s -= t[(i, l)] * r[(l, j)];
            }
            let d = t[(i, i)] - shift;
            if d.norm() == 0.0 {
                return Err(GldeError::Singular("spectral separation"));
            }
            r[(i, j)] = s / d;
        }
    }
    let mut block = CMatrix::zeros(n, n);
    for i in 0..k {
        block[(i, i)] = Complex64::new(1.0, 0.0);
        for j in 0..n - k {
            block[(i, k + j)] = -r[(i, j)];
        }
    }
    let p = &schur.z * block * schur.z.adjoint();
    Ok((p.map(|c| c.re), k))
}

/// Principal square root of an upper-triangular matrix.
fn sqrt_triangular(t: &CMatrix) -> Result<CMatrix> {
    let n = t.nrows();
    let mut r = CMatrix::zeros(n, n);
    for i in 0..n {
        r[(i, i)] = t[(i, i)].sqrt();
    }
    for d in 1..n {
        for i in 0..n - d {
            let j = i + d;
            let mut s = t[(i, j)];
            for k in i + 1..j {
                s -= r[(i, k)] * r[(k, j)];
            }
            let den = r[(i, i)] + r[(j, j)];
            if den.norm() == 0.0 {
                return Err(GldeError::Singular("triangular square root"));
            }
            r[(i, j)] = s / den;
        }
    }
    Ok(r)
}

/// Principal logarithm of a nonsingular real matrix, in complex arithmetic
/// (Schur form, inverse scaling and squaring, `atanh` series).
pub fn logm(m: &DMatrix<f64>) -> Result<CMatrix> {
    let n = m.nrows();
    let schur = ComplexSchur::new(m)?;
    if schur.eigenvalues().iter().any(|l| l.norm() == 0.0) {
        return Err(GldeError::Singular("matrix logarithm of a singular matrix"));
    }
    let id = CMatrix::identity(n, n);
    let mut t = schur.t.clone();
    let mut squarings = 0;
    while (&t - &id).norm() > 0.25 {
        t = sqrt_triangular(&t)?;
        squarings += 1;
        if squarings > 100 {
            return Err(GldeError::Singular("matrix logarithm scaling"));
        }
    }
    let y = (&t - &id) * (&t + &id).try_inverse().ok_or(GldeError::Singular("logm Cayley"))?;
    let y2 = &y * &y;
    let mut term = y.clone();
    let mut acc = y.clone();
    for j in 1..40 {
        term = &term * &y2;
        acc += &term / Complex64::new((2 * j + 1) as f64, 0.0);
        if term.norm() < 1e-18 {
            break;
        }
    }
    let log_t = acc * Complex64::new(2.0 * 2f64.powi(squarings), 0.0);
    Ok(&schur.z * log_t * schur.z.adjoint())
}

/// Matrix exponential of a complex matrix.
pub fn expm_c(m: &CMatrix) -> CMatrix {
    m.exp()
}

/// Orthonormal basis of the numerical null space of `m`, from the right
/// singular vectors whose singular values fall below `tol · max(1, ‖m‖)`.
pub fn null_space_c(m: &CMatrix, tol: f64) -> Vec<DVector<Complex64>> {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let scale = svd.singular_values.max().max(1.0);
    let mut out = Vec::new();
    for i in 0..svd.singular_values.len() {
        if svd.singular_values[i] <= tol * scale {
            out.push(DVector::from_iterator(n, v_t.row(i).iter().map(|c| c.conj())));
        }
    }
    // rank-deficient square matrices from nalgebra's thin SVD keep all rows
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        (a - b).amax() <= tol
    }

    #[test]
    fn operator_norm_of_known_matrices() {
        assert_eq!(op_norm(&DMatrix::from_element(1, 1, -3.0)), 3.0);
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 0.0]);
        assert!((op_norm(&m) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn reordered_schur_keeps_similarity() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.3, 0.0, 0.5, -1.0, 0.2, 0.0, 3.0]);
        let mut s = ComplexSchur::new(&m).unwrap();
        let k = s.reorder(|l| l.norm() < 1.0);
        assert_eq!(k, 1);
        assert!(s.t[(0, 0)].norm() < 1.0);
        let back = &s.z * &s.t * s.z.adjoint();
        assert!((back - complexify(&m)).norm() < 1e-12);
        for i in 0..3 {
            for j in 0..i {
                assert_eq!(s.t[(i, j)].norm(), 0.0);
            }
        }
    }

    #[test]
    fn spectral_projection_of_non_normal_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[0.5, 3.0, 0.0, 2.0]);
        let (p, k) = spectral_projection(&m, |l| l.norm() < 1.0).unwrap();
        assert_eq!(k, 1);
        assert!(close(&(&p * &p), &p, 1e-13));
        assert!(close(&(&p * &m), &(&m * &p), 1e-13));
        // range(P) = span(e1), kernel(P) = eigenvector of 2: (2, 1)
        let v = DVector::from_vec(vec![2.0, 1.0]);
        assert!((&p * v).amax() < 1e-13);
    }

    #[test]
    fn spectral_projection_with_complex_pair() {
        // rotation scaled by 0.5 (inside) plus an unstable direction
        let m = DMatrix::from_row_slice(3, 3, &[0.0, -0.5, 1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 3.0]);
        let (p, k) = spectral_projection(&m, |l| l.norm() < 1.0).unwrap();
        assert_eq!(k, 2);
        assert!(close(&(&p * &p), &p, 1e-12));
        assert!(close(&(&p * &m), &(&m * &p), 1e-12));
        assert!((p.trace() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn logm_inverts_expm() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -0.5, 3.0]);
        let l = logm(&m).unwrap();
        let back = expm_c(&l);
        assert!((back - complexify(&m)).norm() < 1e-12);
    }

    #[test]
    fn logm_of_identity_and_defective_matrices() {
        let l = logm(&DMatrix::identity(3, 3)).unwrap();
        assert!(l.norm() < 1e-15);
        let j = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        let l = logm(&j).unwrap();
        // log of a Jordan block: [[ln 2, 1/2], [0, ln 2]]
        assert!((l[(0, 0)].re - 2f64.ln()).abs() < 1e-13);
        assert!((l[(0, 1)].re - 0.5).abs() < 1e-13);
        assert!(l[(1, 0)].norm() < 1e-13);
    }

    #[test]
    fn logm_of_negative_scalar_is_principal() {
        let l = logm(&DMatrix::from_element(1, 1, -2.0)).unwrap();
        assert!((l[(0, 0)].re - 2f64.ln()).abs() < 1e-14);
        assert!((l[(0, 0)].im.abs() - std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn null_space_of_rank_one_matrix() {
        let m = complexify(&DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]));
        let ns = null_space_c(&m, 1e-10);
        assert_eq!(ns.len(), 1);
        assert!((&m * &ns[0]).norm() < 1e-14);
    }
}
