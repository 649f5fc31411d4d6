//! Numerical toolkit for ω-periodic generalized linear differential equations
//! `dx/dτ = D[A(t)x + f(t)]` driven by Kurzweil–Stieltjes integrals.
//!
//! - [`ks`]: Kurzweil–Stieltjes integrals, a tagged-partition oracle, variation.
//! - [`system`] and [`propagator`]: condition (H), transition matrices `U(t, s)`
//!   and solutions with explicit jump bookkeeping.
//! - [`floquet`]: monodromy matrix, Floquet decomposition and the
//!   unit-circle test for exponential dichotomy.
//! - [`periodic`]: the unique ω-periodic solution of the forced system.
//! - [`testkit`]: analytic examples with hand-derived answers.
//! - [`config`]: JSON system definitions.

pub mod config;
pub mod error;
pub mod floquet;
pub mod function;
pub mod ks;
pub mod linalg;
pub mod periodic;
pub mod poly;
pub mod propagator;
pub mod system;
pub mod testkit;
pub mod trajectory;

pub use error::{GldeError, Result};
pub use floquet::{
    dichotomy_bound_audit, dichotomy_check, floquet_decompose, monodromy, multiplier_solution_check,
    AuditGrid, Classification, DichotomyReport, FloquetDecomposition, MonodromyData,
};
pub use function::{BvMatrixFunction, Jump, MatrixJump, OneSided, RegulatedVectorFunction, VectorJump};
pub use ks::{gauge_oracle_integrate, ks_integrate, variation};
pub use periodic::{dichotomy_representation_x0, periodic_initial_condition, periodic_solution, PeriodicSolutionResult};
pub use poly::PiecewisePoly;
pub use propagator::{propagate, transition_matrix, Propagator, Side};
pub use system::{check_h, GldeSystem, HReport};
pub use trajectory::{Trajectory, TrajectoryPoint};
