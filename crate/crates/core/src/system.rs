//! GLDE systems `dx/dτ = D[A(t)x + f(t)]` and condition (H).

use nalgebra::DMatrix;

use crate::error::{GldeError, Result};
use crate::function::{same_instant, BvMatrixFunction, RegulatedVectorFunction};

/// Jump factors with `|det|` below this are treated as singular.
pub const H_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct HEntry {
    pub time: f64,
    /// `det[I - Δ⁻A(t)]`
    pub det_minus: f64,
    /// `det[I + Δ⁺A(t)]`
    pub det_plus: f64,
}

impl HEntry {
    pub fn passes(&self) -> bool {
        self.det_minus.abs() >= H_THRESHOLD && self.det_plus.abs() >= H_THRESHOLD
    }
}

/// Determinants of both jump factors at every jump in one period.
#[derive(Debug, Clone, PartialEq)]
pub struct HReport {
    pub entries: Vec<HEntry>,
    pub passed: bool,
}

impl HReport {
    pub fn first_failure(&self) -> Option<&HEntry> {
        self.entries.iter().find(|e| !e.passes())
    }
}

/// Checks that `I - Δ⁻A(t)` and `I + Δ⁺A(t)` are invertible at every jump.
/// Away from jumps both factors are the identity.
pub fn check_h(a: &BvMatrixFunction) -> HReport {
    let n = a.dim();
    let id = DMatrix::<f64>::identity(n, n);
    let entries: Vec<HEntry> = a
        .jumps()
        .iter()
        .map(|j| HEntry {
            time: j.time,
            det_minus: (&id - &j.pre).determinant(),
            det_plus: (&id + &j.post).determinant(),
        })
        .collect();
    let passed = entries.iter().all(HEntry::passes);
    HReport { entries, passed }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GldeSystem {
    a: BvMatrixFunction,
    f: Option<RegulatedVectorFunction>,
}

impl GldeSystem {
    /// Validates shapes, periods and condition (H).
    pub fn new(a: BvMatrixFunction, f: Option<RegulatedVectorFunction>) -> Result<Self> {
        if let Some(f) = &f {
            f.check_dim(a.dim())?;
            if !same_instant(f.period(), a.period()) {
                return Err(GldeError::InvalidRepresentation(format!(
                    "integrator period {} differs from forcing period {}",
                    a.period(),
                    f.period()
                )));
            }
        }
        let report = check_h(&a);
        if let Some(e) = report.first_failure() {
            let det = e.det_minus.abs().min(e.det_plus.abs());
            return Err(GldeError::HViolation { time: e.time, det });
        }
        Ok(Self { a, f })
    }

    pub fn homogeneous(a: BvMatrixFunction) -> Result<Self> {
        Self::new(a, None)
    }

    pub fn integrator(&self) -> &BvMatrixFunction {
        &self.a
    }

    pub fn forcing(&self) -> Option<&RegulatedVectorFunction> {
        self.f.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn period(&self) -> f64 {
        self.a.period()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.f.is_none()
    }

    /// Same integrator, forcing dropped.
    pub fn homogeneous_part(&self) -> GldeSystem {
        GldeSystem { a: self.a.clone(), f: None }
    }

    pub fn with_forcing(&self, f: RegulatedVectorFunction) -> Result<GldeSystem> {
        GldeSystem::new(self.a.clone(), Some(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::MatrixJump;
    use crate::poly::PiecewisePoly;

    fn jumpy(pre: f64, post: f64) -> BvMatrixFunction {
        BvMatrixFunction::new(
            1.0,
            PiecewisePoly::zeros(1, 1, 1.0).unwrap(),
            vec![MatrixJump::new(
                0.5,
                DMatrix::from_element(1, 1, pre),
                DMatrix::from_element(1, 1, post),
            )],
            true,
        )
        .unwrap()
    }

    #[test]
    fn no_jumps_pass_trivially() {
        let a = BvMatrixFunction::constant_density(DMatrix::identity(2, 2), 1.0).unwrap();
        let r = check_h(&a);
        assert!(r.passed);
        assert!(r.entries.is_empty());
    }

    #[test]
    fn unit_left_jump_fails() {
        let r = check_h(&jumpy(1.0, 0.0));
        assert!(!r.passed);
        assert_eq!(r.entries[0].det_minus, 0.0);
        assert!(matches!(
            GldeSystem::homogeneous(jumpy(1.0, 0.0)),
            Err(GldeError::HViolation { .. })
        ));
    }

    #[test]
    fn negative_half_right_jump_passes() {
        let r = check_h(&jumpy(0.0, -0.5));
        assert!(r.passed);
        assert_eq!(r.entries[0].det_plus, 0.5);
    }

    #[test]
    fn mismatched_forcing_is_rejected() {
        let a = BvMatrixFunction::constant_density(DMatrix::identity(2, 2), 1.0).unwrap();
        let f = RegulatedVectorFunction::zero(3, 1.0).unwrap();
        assert!(GldeSystem::new(a.clone(), Some(f)).is_err());
        let g = RegulatedVectorFunction::zero(2, 2.0).unwrap();
        assert!(GldeSystem::new(a, Some(g)).is_err());
    }
}
