//! Analytic examples with hand-derived answers, and an independent ODE solver
//! for cross-checks.

use std::f64::consts::{E, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{GldeError, Result};
use crate::function::{BvMatrixFunction, MatrixJump, RegulatedVectorFunction, VectorJump};
use crate::poly::PiecewisePoly;
use crate::system::GldeSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpectedVerdict {
    Dichotomy,
    /// A multiplier lies exactly on the unit circle.
    NotDichotomy,
}

#[derive(Debug, Clone)]
pub struct NamedExample {
    pub id: String,
    pub system: GldeSystem,
    pub monodromy: DMatrix<f64>,
    pub multipliers: Vec<Complex64>,
    pub verdict: ExpectedVerdict,
    /// Stable spectral projection when `verdict` is a dichotomy.
    pub projection: Option<DMatrix<f64>>,
    pub alpha: Option<f64>,
    /// Initial value of the periodic solution for forced examples.
    pub periodic_x0: Option<DVector<f64>>,
    pub note: &'static str,
}

fn m1(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

fn real(values: &[f64]) -> Vec<Complex64> {
    values.iter().map(|v| Complex64::new(*v, 0.0)).collect()
}

fn unit_mesh(cells: usize) -> Vec<f64> {
    (0..=cells).map(|i| i as f64 / cells as f64).collect()
}

/// Scalar `A' = λ`, `ω = 1`.
pub fn scalar_density(lambda: f64) -> GldeSystem {
    GldeSystem::homogeneous(BvMatrixFunction::constant_density(m1(lambda), 1.0).expect("valid"))
        .expect("no jumps")
}

/// `A' = diag(-1, 1)`, `ω = 1`.
pub fn saddle() -> GldeSystem {
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0]));
    GldeSystem::homogeneous(BvMatrixFunction::constant_density(d, 1.0).expect("valid")).expect("no jumps")
}

/// Scalar `A' = λ` with a right jump `Δ⁺A = c` at `τ = 0.5`, `ω = 1`.
pub fn scalar_with_jump(lambda: f64, c: f64) -> GldeSystem {
    let a = BvMatrixFunction::new(
        1.0,
        PiecewisePoly::constant(m1(lambda), 1.0).expect("valid"),
        vec![MatrixJump::new(0.5, m1(0.0), m1(c))],
        true,
    )
    .expect("valid");
    GldeSystem::homogeneous(a).expect("1 + c is nonzero")
}

/// Periodic forcing with density `(cos 2πt, sin 2πt, ...)` cycling over the
/// components, fitted by degree-5 polynomials on 16 cells; `f(0) = 0`.
pub fn trig_forcing(n: usize) -> RegulatedVectorFunction {
    let density = PiecewisePoly::fit(unit_mesh(16), 5, |t| {
        DMatrix::from_fn(n, 1, |i, _| if i % 2 == 0 { (2.0 * PI * t).cos() } else { (2.0 * PI * t).sin() })
    })
    .expect("valid fit");
    RegulatedVectorFunction::new(1.0, DVector::zeros(n), density, vec![], true).expect("zero mean")
}

/// Zero density and a single right jump `Δ⁺f = b` at `τ = 0.5`. The forcing
/// increases by `b` every period.
pub fn impulse_forcing(b: f64) -> RegulatedVectorFunction {
    RegulatedVectorFunction::new(
        1.0,
        DVector::zeros(1),
        PiecewisePoly::zeros(1, 1, 1.0).expect("valid"),
        vec![VectorJump::new(0.5, DVector::zeros(1), DVector::from_element(1, b))],
        false,
    )
    .expect("valid")
}

/// All analytic examples, period 1.
///
/// - `E1`, `E2`: `A' = ∓1`, `M = e^{∓1}`.
/// - `E3`: `A' = diag(-1, 1)`, `M = diag(e⁻¹, e)`, `P = diag(1, 0)`.
/// - `E4(c)`: zero density, `Δ⁺A(0.5) = c`, `M = 1 + c`.
/// - `E5`: `A' = -1` and `Δ⁺A(0.5) = e - 1`, so `M = e⁻¹ (1 + e - 1) = 1`.
/// - `E6`: `E1` forced by `Δ⁺f(0.5) = b`, `b = 1`. The solution from `x₀`
///   decays to `x₀e^{-0.5}`, jumps by `b`, decays again, so
///   `x(1) = e⁻¹x₀ + b e^{-0.5}` and `x₀ = b e^{-0.5} / (1 - e⁻¹)`.
/// - `E1-trig`: `x' = -x + cos 2πt`, periodic solution
///   `(cos 2πt + 2π sin 2πt) / (1 + 4π²)`.
/// - `E3-trig`: `E3` forced by `(cos 2πt, sin 2πt)`; the unstable component has
///   periodic solution `-(2π cos 2πt + sin 2πt) / (1 + 4π²)`.
pub fn builtin_examples() -> Vec<NamedExample> {
    let e = E;
    let k = 1.0 + 4.0 * PI * PI;
    let mut out = vec![
        NamedExample {
            id: "E1".into(),
            system: scalar_density(-1.0),
            monodromy: m1(1.0 / e),
            multipliers: real(&[1.0 / e]),
            verdict: ExpectedVerdict::Dichotomy,
            projection: Some(m1(1.0)),
            alpha: Some(1.0),
            periodic_x0: None,
            note: "scalar smooth stable",
        },
        NamedExample {
            id: "E2".into(),
            system: scalar_density(1.0),
            monodromy: m1(e),
            multipliers: real(&[e]),
            verdict: ExpectedVerdict::Dichotomy,
            projection: Some(m1(0.0)),
            alpha: Some(1.0),
            periodic_x0: None,
            note: "scalar smooth unstable",
        },
        NamedExample {
            id: "E3".into(),
            system: saddle(),
            monodromy: DMatrix::from_diagonal(&DVector::from_vec(vec![1.0 / e, e])),
            multipliers: real(&[1.0 / e, e]),
            verdict: ExpectedVerdict::Dichotomy,
            projection: Some(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]))),
            alpha: Some(1.0),
            periodic_x0: None,
            note: "decoupled saddle",
        },
    ];
    for c in [-0.5, 0.0, 1.0] {
        let rho = 1.0 + c;
        let dich = c != 0.0;
        out.push(NamedExample {
            id: format!("E4({c})"),
            system: scalar_with_jump(0.0, c),
            monodromy: m1(rho),
            multipliers: real(&[rho]),
            verdict: if dich { ExpectedVerdict::Dichotomy } else { ExpectedVerdict::NotDichotomy },
            projection: dich.then(|| m1(if rho < 1.0 { 1.0 } else { 0.0 })),
            alpha: dich.then(|| rho.ln().abs()),
            periodic_x0: None,
            note: "pure impulse",
        });
    }
    out.push(NamedExample {
        id: "E5".into(),
        system: scalar_with_jump(-1.0, e - 1.0),
        monodromy: m1(1.0),
        multipliers: real(&[1.0]),
        verdict: ExpectedVerdict::NotDichotomy,
        projection: None,
        alpha: None,
        periodic_x0: None,
        note: "decay and jump cancel, multiplier on the unit circle",
    });
    let b = 1.0;
    out.push(NamedExample {
        id: "E6".into(),
        system: scalar_density(-1.0).with_forcing(impulse_forcing(b)).expect("dimensions agree"),
        monodromy: m1(1.0 / e),
        multipliers: real(&[1.0 / e]),
        verdict: ExpectedVerdict::Dichotomy,
        projection: Some(m1(1.0)),
        alpha: Some(1.0),
        periodic_x0: Some(DVector::from_element(1, b * (-0.5f64).exp() / (1.0 - 1.0 / e))),
        note: "impulsive forcing",
    });
    out.push(NamedExample {
        id: "E1-trig".into(),
        system: scalar_density(-1.0).with_forcing(trig_forcing(1)).expect("dimensions agree"),
        monodromy: m1(1.0 / e),
        multipliers: real(&[1.0 / e]),
        verdict: ExpectedVerdict::Dichotomy,
        projection: Some(m1(1.0)),
        alpha: Some(1.0),
        periodic_x0: Some(DVector::from_element(1, 1.0 / k)),
        note: "smooth periodic forcing",
    });
    out.push(NamedExample {
        id: "E3-trig".into(),
        system: saddle().with_forcing(trig_forcing(2)).expect("dimensions agree"),
        monodromy: DMatrix::from_diagonal(&DVector::from_vec(vec![1.0 / e, e])),
        multipliers: real(&[1.0 / e, e]),
        verdict: ExpectedVerdict::Dichotomy,
        projection: Some(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]))),
        alpha: Some(1.0),
        periodic_x0: Some(DVector::from_vec(vec![1.0 / k, -2.0 * PI / k])),
        note: "saddle with smooth periodic forcing",
    });
    out
}

pub fn example(id: &str) -> Option<NamedExample> {
    builtin_examples().into_iter().find(|e| e.id == id)
}

/// Explicit midpoint solution of a jump-free system with `cells` equal steps.
pub fn dense_ode_oracle(sys: &GldeSystem, s0: f64, x0: &DVector<f64>, t: f64, cells: usize) -> Result<DVector<f64>> {
    let a = sys.integrator();
    let f = sys.forcing();
    if !a.jumps().is_empty() || f.is_some_and(|f| !f.jumps().is_empty()) {
        return Err(GldeError::InvalidRepresentation("the midpoint oracle requires a jump-free system".into()));
    }
    if cells == 0 {
        return Err(GldeError::InvalidRepresentation("at least one cell is required".into()));
    }
    if x0.len() != sys.dim() {
        return Err(GldeError::DimensionMismatch { expected: sys.dim(), found: x0.len() });
    }
    let rhs = |s: f64, x: &DVector<f64>| {
        let mut d = a.density_at(s) * x;
        if let Some(f) = f {
            d += f.density_at(s);
        }
        d
    };
    let h = (t - s0) / cells as f64;
    let mut x = x0.clone();
    for i in 0..cells {
        let s = s0 + i as f64 * h;
        let mid = &x + rhs(s, &x) * (0.5 * h);
        x += rhs(s + 0.5 * h, &mid) * h;
    }
    Ok(x)
}
