#![allow(dead_code)]

use glde_core::{BvMatrixFunction, GldeSystem, MatrixJump, PiecewisePoly, RegulatedVectorFunction, VectorJump};
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn mesh(rng: &mut StdRng, cells: usize) -> Vec<f64> {
    let mut inner: Vec<f64> = (1..cells).map(|_| rng.random_range(0.05..0.95)).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup_by(|a, b| (*a - *b).abs() < 0.02);
    let mut out = vec![0.0];
    out.extend(inner);
    out.push(1.0);
    out
}

fn random_matrix(rng: &mut StdRng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-scale..scale))
}

fn random_poly(rng: &mut StdRng, r: usize, c: usize, scale: f64) -> PiecewisePoly {
    let cells_n = rng.random_range(1..4);
    let bps = mesh(rng, cells_n);
    let cells = (0..bps.len() - 1)
        .map(|_| {
            let deg = rng.random_range(0..4);
            (0..=deg).map(|k| random_matrix(rng, r, c, scale / (1 + k) as f64)).collect()
        })
        .collect();
    PiecewisePoly::new(bps, cells).unwrap()
}

fn jump_times(rng: &mut StdRng, count: usize) -> Vec<f64> {
    let mut ts: Vec<f64> = Vec::new();
    while ts.len() < count {
        let t = (rng.random_range(0.0..1.0f64) * 64.0).floor() / 64.0;
        if !ts.contains(&t) {
            ts.push(t);
        }
    }
    ts
}

/// Random integrator of period 1 with at most `max_jumps` jumps; jump factors
/// stay well inside the invertible range.
pub fn random_integrator(rng: &mut StdRng, n: usize, max_jumps: usize) -> BvMatrixFunction {
    let density = random_poly(rng, n, n, 1.0);
    let count = rng.random_range(0..=max_jumps);
    let jumps = jump_times(rng, count)
        .into_iter()
        .map(|t| {
            let pre = random_matrix(rng, n, n, 0.4 / n as f64);
            let post = random_matrix(rng, n, n, 0.4 / n as f64);
            MatrixJump::new(t, pre, post)
        })
        .collect();
    BvMatrixFunction::new(1.0, density, jumps, true).unwrap()
}

/// Random forcing (not periodic) with at most `max_jumps` jumps.
pub fn random_forcing(rng: &mut StdRng, n: usize, max_jumps: usize) -> RegulatedVectorFunction {
    let density = random_poly(rng, n, 1, 1.0);
    let count = rng.random_range(0..=max_jumps);
    let jumps = jump_times(rng, count)
        .into_iter()
        .map(|t| {
            let pre = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let post = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            VectorJump::new(t, pre, post)
        })
        .collect();
    let base = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    RegulatedVectorFunction::new(1.0, base, density, jumps, false).unwrap()
}

pub fn random_system(rng: &mut StdRng, n: usize, max_jumps: usize, forced: bool) -> GldeSystem {
    let a = random_integrator(rng, n, max_jumps);
    let f = forced.then(|| random_forcing(rng, n, max_jumps));
    GldeSystem::new(a, f).unwrap()
}

pub fn m1(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

pub fn v1(v: f64) -> DVector<f64> {
    DVector::from_element(1, v)
}
