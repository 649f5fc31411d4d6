//! Shared fixtures for the benchmarks.

use std::f64::consts::PI;

use glde_core::testkit::trig_forcing;
use glde_core::{BvMatrixFunction, GldeSystem, MatrixJump, PiecewisePoly};
use nalgebra::DMatrix;

/// An `n × n` system with a smooth rotating density on 16 cells and
/// `jumps` evenly spaced right jumps, forced by `trig_forcing(n)`.
pub fn forced_system(n: usize, jumps: usize) -> GldeSystem {
    let mesh: Vec<f64> = (0..=16).map(|i| i as f64 / 16.0).collect();
    let density = PiecewisePoly::fit(mesh, 5, |t| {
        DMatrix::from_fn(n, n, |i, j| {
            let phase = 2.0 * PI * t + (i + 2 * j) as f64;
            if i == j {
                -0.5 + 0.3 * phase.cos()
            } else {
                0.2 * phase.sin()
            }
        })
    })
    .expect("valid fit");
    let js = (0..jumps)
        .map(|k| {
            let t = (k as f64 + 0.5) / jumps as f64;
            MatrixJump::new(t, DMatrix::zeros(n, n), DMatrix::from_fn(n, n, |i, j| if i == j { 0.1 } else { 0.05 }))
        })
        .collect();
    let a = BvMatrixFunction::new(1.0, density, js, true).expect("valid integrator");
    GldeSystem::new(a, Some(trig_forcing(n))).expect("condition (H) holds")
}
