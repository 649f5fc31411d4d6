mod common;

use glde_core::floquet::{monodromy, DEFAULT_EPS_UC};
use glde_core::ks::{gauge_oracle_with, integrate_with, Quadrature};
use glde_core::linalg::op_norm;
use glde_core::testkit::dense_ode_oracle;
use glde_core::{
    dichotomy_check, gauge_oracle_integrate, ks_integrate, BvMatrixFunction, GldeSystem, PiecewisePoly, Propagator,
    RegulatedVectorFunction,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn close(a: &DVector<f64>, b: &DVector<f64>, tol: f64) -> bool {
    (a - b).amax() <= tol * (1.0 + a.amax().max(b.amax()))
}

fn scaled_forcing(f: &RegulatedVectorFunction, c: f64) -> RegulatedVectorFunction {
    let d = f.density();
    let cells = d.cells().iter().map(|cell| cell.iter().map(|m| m * c).collect()).collect();
    let jumps = f
        .jumps()
        .into_iter()
        .map(|mut j| {
            j.pre *= c;
            j.post *= c;
            j
        })
        .collect();
    RegulatedVectorFunction::new(
        f.period(),
        f.base_value() * c,
        PiecewisePoly::new(d.breakpoints().to_vec(), cells).unwrap(),
        jumps,
        false,
    )
    .unwrap()
}

fn scaled_integrator(a: &BvMatrixFunction, c: f64) -> BvMatrixFunction {
    let d = a.density();
    let cells = d.cells().iter().map(|cell| cell.iter().map(|m| m * c).collect()).collect();
    let jumps = a
        .jumps()
        .iter()
        .cloned()
        .map(|mut j| {
            j.pre *= c;
            j.post *= c;
            j
        })
        .collect();
    BvMatrixFunction::new(a.period(), PiecewisePoly::new(d.breakpoints().to_vec(), cells).unwrap(), jumps, true)
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn integral_is_linear_in_both_arguments(seed in 0u64..10_000, c in -3.0f64..3.0, lo in -0.5f64..0.5, hi in 0.5f64..1.5) {
        let mut rng = common::rng(seed);
        let a = common::random_integrator(&mut rng, 2, 3);
        let f = common::random_forcing(&mut rng, 2, 3);
        let base = ks_integrate(&a, &f, lo, hi).unwrap();
        let in_f = ks_integrate(&a, &scaled_forcing(&f, c), lo, hi).unwrap();
        let in_a = ks_integrate(&scaled_integrator(&a, c), &f, lo, hi).unwrap();
        prop_assert!(close(&in_f, &(&base * c), 1e-10));
        prop_assert!(close(&in_a, &(&base * c), 1e-10));
        let g = common::random_forcing(&mut rng, 2, 2);
        // sum of two forcings through their values
        let sum = integrate_with(&a, &Sum(&f, &g), lo, hi, Quadrature::EXACT_POLY).unwrap();
        let parts = base + ks_integrate(&a, &g, lo, hi).unwrap();
        prop_assert!(close(&sum, &parts, 1e-10));
    }

    #[test]
    fn integral_is_additive_and_oriented(seed in 0u64..10_000, lo in -0.5f64..0.5, hi in 0.6f64..1.5, at_jump in any::<bool>(), u in 0.0f64..1.0) {
        let mut rng = common::rng(seed);
        let a = common::random_integrator(&mut rng, 2, 3);
        let f = common::random_forcing(&mut rng, 2, 3);
        let jt = a.jump_times_in(lo, hi);
        let c = if at_jump && !jt.is_empty() { jt[(u * jt.len() as f64) as usize % jt.len()] } else { lo + u * (hi - lo) };
        let whole = ks_integrate(&a, &f, lo, hi).unwrap();
        let split = ks_integrate(&a, &f, lo, c).unwrap() + ks_integrate(&a, &f, c, hi).unwrap();
        prop_assert!(close(&whole, &split, 1e-10));
        let rev = ks_integrate(&a, &f, hi, lo).unwrap();
        prop_assert_eq!(rev, -whole);
    }

    #[test]
    fn transition_cocycle_and_inverse(seed in 0u64..10_000, t in -1.5f64..1.5, r in -1.5f64..1.5, s in -1.5f64..1.5, snap in any::<bool>()) {
        let mut rng = common::rng(seed);
        let sys = common::random_system(&mut rng, 2, 3, false);
        let p = Propagator::new(&sys);
        let jt = sys.integrator().jump_times_in(-1.5, 1.5);
        let r = if snap && !jt.is_empty() { jt[0] } else { r };
        let uts = p.transition_matrix(t, s).unwrap();
        let utr = p.transition_matrix(t, r).unwrap();
        let urs = p.transition_matrix(r, s).unwrap();
        prop_assert!(op_norm(&(&uts - &utr * &urs)) <= 1e-8 * (1.0 + op_norm(&uts).powi(2)));
        let ust = p.transition_matrix(s, t).unwrap();
        prop_assert!(op_norm(&(&uts * ust - DMatrix::<f64>::identity(2, 2))) <= 1e-8);
    }

    #[test]
    fn transition_is_biperiodic_and_powers_match(seed in 0u64..10_000, t in -1.0f64..1.0, s in -1.0f64..1.0) {
        let mut rng = common::rng(seed);
        let sys = common::random_system(&mut rng, 2, 2, false);
        let p = Propagator::new(&sys);
        let shifted = p.transition_matrix(t + 1.0, s + 1.0).unwrap();
        prop_assert!(op_norm(&(shifted - p.transition_matrix(t, s).unwrap())) <= 1e-8);
        let m = p.transition_matrix(1.0, 0.0).unwrap();
        let mut pow = m.clone();
        for n in 2..=4 {
            pow = &pow * &m;
            let u = p.transition_matrix(n as f64, 0.0).unwrap();
            prop_assert!(op_norm(&(u - &pow)) <= 1e-7 * (1.0 + op_norm(&pow)));
        }
    }

    #[test]
    fn trajectories_satisfy_the_integral_equation(seed in 0u64..10_000, s in 0.0f64..0.4, t in 0.6f64..1.4) {
        let mut rng = common::rng(seed);
        let sys = common::random_system(&mut rng, 2, 3, true);
        let p = Propagator::new(&sys);
        let x0 = DVector::from_vec(vec![0.3, -0.7]);
        let traj = p.propagate(0.0, &x0, 1.5, 7).unwrap();
        prop_assert!(traj.jump_defect(&sys) <= 1e-12);
        let xs = traj.value_at(s).unwrap();
        let xt = traj.value_at(t).unwrap();
        let integral = integrate_with(sys.integrator(), &traj, s, t, Quadrature::composite(1.0 / 256.0)).unwrap();
        let f = sys.forcing().unwrap();
        let residual = &xt - &xs - integral - (f.value(t) - f.value(s));
        prop_assert!(residual.amax() <= 1e-6, "{}", residual.amax());
        prop_assert!(p.voc_crosscheck(0.0, &x0, t).unwrap() <= 1e-6);
    }

    #[test]
    fn projection_commutes_with_monodromy(seed in 0u64..10_000) {
        let mut rng = common::rng(seed);
        let sys = common::random_system(&mut rng, 3, 2, false);
        let md = monodromy(&Propagator::new(&sys)).unwrap();
        let report = dichotomy_check(&md, DEFAULT_EPS_UC).unwrap();
        if let Some(proj) = &report.projection {
            prop_assert!((proj * proj - proj).amax() <= 1e-8 * (1.0 + proj.amax()));
            prop_assert!((proj * &md.matrix - &md.matrix * proj).amax() <= 1e-8 * (1.0 + op_norm(proj) * op_norm(&md.matrix)));
            let rank = proj.clone().svd(false, false).singular_values.iter().filter(|v| **v > 1e-6).count();
            prop_assert_eq!(rank, report.stable.len());
        }
    }
}

struct Sum<'a>(&'a RegulatedVectorFunction, &'a RegulatedVectorFunction);

impl glde_core::ks::Integrand for Sum<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out = glde_core::ks::Integrand::breakpoints(self.0, a, b);
        out.extend(glde_core::ks::Integrand::breakpoints(self.1, a, b));
        out
    }

    fn values(&self, ts: &[f64]) -> Vec<DVector<f64>> {
        ts.iter().map(|t| self.0.value(*t) + self.1.value(*t)).collect()
    }
}

#[test]
fn oracle_error_decays_with_refinement() {
    let mut rng = common::rng(11);
    for _ in 0..5 {
        let a = common::random_integrator(&mut rng, 2, 3);
        let f = common::random_forcing(&mut rng, 2, 3);
        let exact = ks_integrate(&a, &f, 0.0, 1.0).unwrap();
        let errs: Vec<f64> = (8..=16)
            .map(|k| (gauge_oracle_integrate(&a, &f, 0.0, 1.0, 1 << k).unwrap() - &exact).amax())
            .collect();
        let c = errs[0] * 256.0;
        for (i, e) in errs.iter().enumerate() {
            assert!(*e <= c * 2f64.powi(-(8 + i as i32)) * 1.5 + 1e-13, "k={} err={e}", 8 + i);
        }
        // every fourfold refinement lowers the error
        for i in 0..errs.len() - 2 {
            assert!(errs[i + 2] < errs[i] || errs[i + 2] < 1e-12, "{errs:?}");
        }
    }
}

#[test]
fn oracle_works_for_general_integrators() {
    let mut rng = common::rng(12);
    let sys = common::random_system(&mut rng, 2, 2, true);
    let p = Propagator::new(&sys);
    let u = p.inverse_fundamental(DMatrix::identity(2, 2));
    let f = glde_core::ks::Shifted::new(sys.forcing().unwrap(), 0.0);
    let exact = integrate_with(&u, &f, 0.0, 1.0, Quadrature::composite(1.0 / 128.0)).unwrap();
    let oracle = gauge_oracle_with(&u, &f, 0.0, 1.0, 1 << 10).unwrap();
    assert!((exact - oracle).amax() < 1e-4);
}

#[test]
fn rk4_halving_gains_order_four() {
    let sys = GldeSystem::homogeneous(
        BvMatrixFunction::new(
            1.0,
            PiecewisePoly::fit(vec![0.0, 0.5, 1.0], 5, |t| DMatrix::from_element(1, 1, (6.0 * t).sin() * 3.0)).unwrap(),
            vec![],
            true,
        )
        .unwrap(),
    )
    .unwrap();
    let exact = {
        let a = sys.integrator();
        a.value(1.0)[(0, 0)].exp()
    };
    let err = |h: f64| (Propagator::with_step(&sys, h).unwrap().transition_matrix(1.0, 0.0).unwrap()[(0, 0)] - exact).abs();
    let (e1, e2) = (err(1.0 / 32.0), err(1.0 / 64.0));
    assert!(e1 / e2 >= 8.0, "{e1} {e2}");
}

#[test]
fn midpoint_oracle_agrees_with_rk4() {
    use std::f64::consts::PI;
    let mut rng = common::rng(13);
    let mesh: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
    for _ in 0..5 {
        let c0 = DMatrix::from_fn(2, 2, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
        let c1 = DMatrix::from_fn(2, 2, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
        let v = DVector::from_fn(2, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
        let density = PiecewisePoly::fit(mesh.clone(), 5, |t| &c0 + &c1 * (2.0 * PI * t).sin()).unwrap();
        let forcing = PiecewisePoly::fit(mesh.clone(), 5, |t| {
            let col = &v * (2.0 * PI * t).cos();
            DMatrix::from_column_slice(2, 1, col.as_slice())
        })
        .unwrap();
        let a = BvMatrixFunction::new(1.0, density, vec![], true).unwrap();
        let f = RegulatedVectorFunction::new(1.0, DVector::zeros(2), forcing, vec![], false).unwrap();
        let sys = GldeSystem::new(a, Some(f)).unwrap();
        let x0 = DVector::from_vec(vec![1.0, -0.5]);
        let rk = Propagator::new(&sys).solution_at(0.0, &x0, 1.0).unwrap();
        let mid = dense_ode_oracle(&sys, 0.0, &x0, 1.0, 1 << 14).unwrap();
        assert!((rk - mid).amax() < 1e-6);
    }
}
