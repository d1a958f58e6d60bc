//! Runtime monitors for the discrete maximum principle and BV bounds of
//! `w` and `z = D₊w`.

use serde::Serialize;

use crate::stepping::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundRecord {
    pub step_index: usize,
    pub t: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub w_bv: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub z_bv: f64,
    /// Allowance `step_index · newton_tol` applied to every comparison.
    pub delta: f64,
    pub w_range_violated: bool,
    pub w_bv_violated: bool,
    pub z_range_violated: bool,
    pub z_bv_violated: bool,
}

impl BoundRecord {
    pub fn any_violation(&self) -> bool {
        self.w_range_violated || self.w_bv_violated || self.z_range_violated || self.z_bv_violated
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub records: Vec<BoundRecord>,
    /// Whether every step of the run satisfied the CFL condition; when it
    /// did not, violations are expected and only recorded.
    pub cfl_satisfied: bool,
}

impl BoundReport {
    pub fn violations(&self) -> usize {
        self.records.iter().filter(|r| r.any_violation()).count()
    }

    pub fn first_violation(&self) -> Option<&BoundRecord> {
        self.records.iter().find(|r| r.any_violation())
    }
}

/// Evaluates the four bounds at every stored level against level 0.
pub fn monitor_bounds(trajectory: &Trajectory) -> BoundReport {
    let tol = trajectory.config.newton_tol;
    let w0 = &trajectory.initial().values;
    let z0 = w0.forward_diff();
    let (w_lo, w_hi, w_bv) = (w0.min(), w0.max(), w0.bv());
    let (z_lo, z_hi, z_bv) = (z0.min(), z0.max(), z0.bv());
    let records = trajectory
        .levels
        .iter()
        .map(|level| {
            let w = &level.values;
            let z = w.forward_diff();
            let delta = level.step_index as f64 * tol;
            let mut r = BoundRecord {
                step_index: level.step_index,
                t: level.t,
                w_min: w.min(),
                w_max: w.max(),
                w_bv: w.bv(),
                z_min: z.min(),
                z_max: z.max(),
                z_bv: z.bv(),
                delta,
                w_range_violated: false,
                w_bv_violated: false,
                z_range_violated: false,
                z_bv_violated: false,
            };
            r.w_range_violated = r.w_min < w_lo - delta || r.w_max > w_hi + delta;
            r.w_bv_violated = r.w_bv > w_bv + delta;
            r.z_range_violated = r.z_min < z_lo - delta || r.z_max > z_hi + delta;
            r.z_bv_violated = r.z_bv > z_bv + delta;
            r
        })
        .collect();
    BoundReport {
        records,
        cfl_satisfied: trajectory.cfl_satisfied(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CoefficientModel;
    use crate::grid::{GridFunction, PeriodicGrid};
    use crate::scheme_w::WScheme;
    use crate::stepping::{run_full, CflPolicy, ThetaSchemeConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_w0(seed: u64, n: usize) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = PeriodicGrid::new(n).unwrap();
        GridFunction::new(grid, (0..n).map(|_| rng.gen_range(-0.95..0.95)).collect()).unwrap()
    }

    #[test]
    fn frozen_trajectory_has_no_violations() {
        let s = WScheme::new(
            CoefficientModel::constant(0.0),
            ThetaSchemeConfig::new(0.5, 100.0).unwrap(),
        )
        .unwrap();
        let traj = run_full(&s, random_w0(1, 32), 0.05).unwrap();
        let report = monitor_bounds(&traj);
        assert_eq!(report.violations(), 0);
        assert!(report.records.iter().all(|r| r.w_bv == report.records[0].w_bv));
    }

    #[test]
    fn implicit_run_respects_all_bounds() {
        let config = ThetaSchemeConfig::new(1.0, 5.0).unwrap().with_policy(CflPolicy::Strict);
        let s = WScheme::new(CoefficientModel::quadratic(), config).unwrap();
        let w0 = random_w0(2, 48);
        let dt = config.dt(w0.grid());
        let traj = run_full(&s, w0, 100.0 * dt).unwrap();
        assert_eq!(traj.steps(), 100);
        assert_eq!(monitor_bounds(&traj).violations(), 0);
    }

    #[test]
    fn large_step_regime_is_reported_not_rejected() {
        let s = WScheme::new(
            CoefficientModel::quadratic(),
            ThetaSchemeConfig::new(0.5, 100.0).unwrap(),
        )
        .unwrap();
        let grid = PeriodicGrid::new(99).unwrap();
        let w0 = GridFunction::from_fn(grid, |x| -(2.0 * PI * x).sin()).unwrap();
        let report = monitor_bounds(&run_full(&s, w0, 0.04).unwrap());
        assert!(!report.cfl_satisfied);
        assert_eq!(report.records.len(), 5);
    }
}
