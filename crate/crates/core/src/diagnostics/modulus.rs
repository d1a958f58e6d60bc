//! Empirical time-continuity moduli.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{cross_grid_error, InterpolantKind, Norm};
use crate::stepping::{SolverState, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Modulus {
    pub measured: f64,
    pub bound: f64,
}

impl Modulus {
    pub fn holds(&self) -> bool {
        self.measured <= self.bound
    }
}

/// Level in force at time `t` (piecewise constant in time): the last stored
/// level with `t_n ≤ t`. Requires every level to be stored.
fn level_at(trajectory: &Trajectory, t: f64) -> Result<&SolverState> {
    trajectory.check_time(t)?;
    if trajectory.levels.len() != trajectory.steps() + 1 {
        return Err(Error::Config(
            "time moduli need a trajectory with every level stored".into(),
        ));
    }
    let slack = 1e-12 * trajectory.dt;
    let k = trajectory.levels.partition_point(|l| l.t <= t + slack);
    Ok(&trajectory.levels[k.max(1) - 1])
}

/// `‖w^{Δt}(·, t+τ) − w^{Δt}(·, t)‖_{L¹}` for the piecewise-linear
/// interpolant, against `(τ + Δt)·|z⁰|_BV + (Δx/2)·|w⁰|_BV`.
pub fn time_modulus_w(trajectory: &Trajectory, t: f64, tau: f64) -> Result<Modulus> {
    if tau < 0.0 {
        return Err(Error::Config(format!("tau = {tau} must be nonnegative")));
    }
    let early = level_at(trajectory, t)?;
    let late = level_at(trajectory, t + tau)?;
    let measured = cross_grid_error(&late.values, &early.values, Norm::L1, InterpolantKind::Linear)?;
    let w0 = &trajectory.initial().values;
    let dx = trajectory.grid().dx();
    let bound = (tau + trajectory.dt) * w0.forward_diff().bv() + 0.5 * dx * w0.bv();
    Ok(Modulus { measured, bound })
}

/// Measured `L¹` modulus of `z̄` over `τ`; no bound is asserted for it.
pub fn time_modulus_z(trajectory: &Trajectory, t: f64, tau: f64) -> Result<f64> {
    let early = level_at(trajectory, t)?;
    let late = level_at(trajectory, t + tau)?;
    cross_grid_error(
        &late.values.forward_diff(),
        &early.values.forward_diff(),
        Norm::L1,
        InterpolantKind::ConstantInterval,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CoefficientModel;
    use crate::grid::{GridFunction, PeriodicGrid};
    use crate::scheme_w::WScheme;
    use crate::stepping::{run, run_full, ThetaSchemeConfig};
    use std::f64::consts::PI;

    fn sine(n: usize) -> GridFunction {
        GridFunction::from_fn(PeriodicGrid::new(n).unwrap(), |x| -(2.0 * PI * x).sin()).unwrap()
    }

    #[test]
    fn zero_lag_and_frozen_runs() {
        let s = WScheme::new(CoefficientModel::quadratic(), ThetaSchemeConfig::new(1.0, 1.0).unwrap()).unwrap();
        let traj = run_full(&s, sine(50), 0.01).unwrap();
        let m = time_modulus_w(&traj, 0.003, 0.0).unwrap();
        assert_eq!(m.measured, 0.0);
        assert!(m.holds());

        let frozen = WScheme::new(
            CoefficientModel::constant(0.0),
            ThetaSchemeConfig::new(0.5, 3.0).unwrap(),
        )
        .unwrap();
        let traj = run_full(&frozen, sine(50), 0.01).unwrap();
        assert_eq!(time_modulus_w(&traj, 0.0, 0.01).unwrap().measured, 0.0);
    }

    #[test]
    fn bound_holds_on_an_implicit_run() {
        let s = WScheme::new(CoefficientModel::quadratic(), ThetaSchemeConfig::new(1.0, 1.0).unwrap()).unwrap();
        let traj = run_full(&s, sine(100), 0.02).unwrap();
        let m = time_modulus_w(&traj, 0.0, 0.01).unwrap();
        assert!(m.measured > 0.0 && m.holds(), "{m:?}");
        assert!(time_modulus_z(&traj, 0.0, 0.01).unwrap() > 0.0);
    }

    #[test]
    fn rejects_sparse_trajectories_and_bad_times() {
        let s = WScheme::new(CoefficientModel::quadratic(), ThetaSchemeConfig::new(1.0, 1.0).unwrap()).unwrap();
        let sparse = run(&s, sine(20), 0.05, &[]).unwrap();
        assert!(time_modulus_w(&sparse, 0.0, 0.01).is_err());
        let full = run_full(&s, sine(20), 0.05).unwrap();
        assert!(matches!(
            time_modulus_w(&full, 0.04, 0.5),
            Err(Error::TimeOutOfRange { .. })
        ));
    }
}
