//! Shared workloads for the criterion benches.

use varheat_core::experiments::initial_w;
use varheat_core::{CoefficientModel, GridFunction, InitMode, PeriodicGrid, SolverState};

/// `w⁰` of the quadratic model on `n` cells.
pub fn initial_profile(n: usize) -> GridFunction {
    let grid = PeriodicGrid::new(n).expect("valid grid");
    initial_w(&CoefficientModel::quadratic(), grid, InitMode::PointSample).expect("initial data")
}

pub fn initial_state(n: usize) -> SolverState {
    SolverState::initial(initial_profile(n))
}

/// Diagonally dominant cyclic system of size `n`.
pub fn cyclic_system(n: usize) -> [Vec<f64>; 4] {
    let off = vec![-0.4; n];
    let diag = (0..n).map(|j| 1.9 + 0.1 * (j % 3) as f64).collect();
    let rhs = (0..n).map(|j| (j as f64).sin()).collect();
    [off.clone(), diag, off, rhs]
}
