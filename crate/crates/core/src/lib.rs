//! Finite difference solvers for the degenerate variational heat equation
//! `u_t = c(u)(c(u)u_x)_x` on the periodic unit interval, in its transformed
//! forms `w_t = B(w)w_xx` and `v_t = (c²(k̄_v(v))v_x)_x`.

pub mod coefficients;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod scheme_v;
pub mod scheme_w;
pub mod special;
pub mod stepping;
pub mod tridiag;

#[cfg(test)]
mod testing;

pub use coefficients::{BValues, CoefficientModel, InversionConfig, OseenFrankModel, OseenFrankTransform};
pub use error::{Error, Result};
pub use grid::{
    coarse_point_error, cross_grid_error, theta_combination, DiscreteNorms, GridFunction, InterpolantKind, Norm,
    PeriodicGrid,
};
pub use scheme_v::{u_from_v, u_from_w, v_initial, VInitSource, VScheme};
pub use scheme_w::{derivative_sequences, project_initial, WScheme};
pub use stepping::{
    cfl_check, run, run_full, step_schedule, CflPolicy, InitMode, SolverState, StepReport, ThetaSchemeConfig,
    TimeStepper, Trajectory, VState,
};
