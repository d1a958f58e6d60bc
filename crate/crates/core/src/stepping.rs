//! Scheme configuration, solver state and the time loop shared by the `w`
//! and `v` schemes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, PeriodicGrid};

/// What to do when `λ` violates the stability bound of the θ-scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CflPolicy {
    Strict,
    #[default]
    Warn,
    Off,
}

/// How continuous initial data is put on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    CellAverage,
    #[default]
    PointSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaSchemeConfig {
    pub theta: f64,
    /// `Δt / Δx²`
    pub lambda: f64,
    pub cfl_policy: CflPolicy,
    /// Sup-norm bound on the nonlinear residual.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub init_mode: InitMode,
}

impl ThetaSchemeConfig {
    pub fn new(theta: f64, lambda: f64) -> Result<Self> {
        let config = Self {
            theta,
            lambda,
            cfl_policy: CflPolicy::default(),
            newton_tol: 1e-12,
            newton_max_iter: 50,
            init_mode: InitMode::default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_policy(mut self, policy: CflPolicy) -> Self {
        self.cfl_policy = policy;
        self
    }

    pub fn with_init_mode(mut self, mode: InitMode) -> Self {
        self.init_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::Config(format!("theta = {} outside [0, 1]", self.theta)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda = {} must be positive", self.lambda)));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return Err(Error::Config(
                "Newton tolerance and iteration limit must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn dt(&self, grid: &PeriodicGrid) -> f64 {
        self.lambda * grid.dx() * grid.dx()
    }

    pub fn cfl_satisfied(&self) -> bool {
        cfl_check(self.theta, self.lambda)
    }

    /// Applies the CFL policy: `Ok(false)` means "proceed, but flagged".
    pub(crate) fn enforce_cfl(&self) -> Result<bool> {
        let ok = self.cfl_satisfied();
        if !ok && self.cfl_policy == CflPolicy::Strict {
            return Err(Error::CflViolation {
                theta: self.theta,
                lambda: self.lambda,
            });
        }
        Ok(ok)
    }
}

/// `θ = 1`, or `λ < 1/(2(1−θ))`.
pub fn cfl_check(theta: f64, lambda: f64) -> bool {
    theta >= 1.0 || lambda < 1.0 / (2.0 * (1.0 - theta))
}

/// One time level of either scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub values: GridFunction,
    pub t: f64,
    pub step_index: usize,
}

/// The `v`-scheme uses the same state layout.
pub type VState = SolverState;

impl SolverState {
    pub fn initial(values: GridFunction) -> Self {
        Self {
            values,
            t: 0.0,
            step_index: 0,
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.values.grid()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepReport {
    /// Index of the level this step produced.
    pub step_index: usize,
    pub dt: f64,
    pub newton_iterations: usize,
    pub final_residual: f64,
    pub cfl_satisfied: bool,
}

/// Anything that advances a [`SolverState`] by one θ-step.
pub trait TimeStepper {
    fn config(&self) -> &ThetaSchemeConfig;

    /// Advances by `dt`, which may be shorter than the nominal step.
    fn step_by(&self, state: &SolverState, dt: f64) -> Result<(SolverState, StepReport)>;

    /// One nominal step of size `λΔx²`.
    fn step(&self, state: &SolverState) -> Result<(SolverState, StepReport)> {
        self.step_by(state, self.config().dt(state.grid()))
    }
}

/// Stored levels of a run plus the full step log.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: ThetaSchemeConfig,
    /// Nominal step `λΔx²`.
    pub dt: f64,
    pub final_time: f64,
    /// Stored levels in increasing time; always contains level 0 and the
    /// landing level at `final_time`.
    pub levels: Vec<SolverState>,
    pub reports: Vec<StepReport>,
}

impl Trajectory {
    pub fn grid(&self) -> &PeriodicGrid {
        self.levels[0].grid()
    }

    pub fn initial(&self) -> &SolverState {
        &self.levels[0]
    }

    pub fn last(&self) -> &SolverState {
        self.levels.last().expect("trajectory holds at least level 0")
    }

    pub fn steps(&self) -> usize {
        self.reports.len()
    }

    /// Stored level closest to `t` (earlier one on ties).
    pub fn nearest(&self, t: f64) -> Result<&SolverState> {
        self.check_time(t)?;
        let mut best = &self.levels[0];
        for level in &self.levels {
            if (level.t - t).abs() < (best.t - t).abs() {
                best = level;
            }
        }
        Ok(best)
    }

    /// Stored level with time exactly `t`, within rounding of the step sum.
    pub fn exactly_at(&self, t: f64) -> Result<&SolverState> {
        let level = self.nearest(t)?;
        if (level.t - t).abs() > 1e-9 * self.dt.max(t.abs()) {
            return Err(Error::TimeMismatch {
                left: level.t,
                right: t,
            });
        }
        Ok(level)
    }

    pub(crate) fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= -1e-14 && t <= self.final_time * (1.0 + 1e-12) + 1e-14) {
            return Err(Error::TimeOutOfRange {
                time: t,
                start: 0.0,
                end: self.final_time,
            });
        }
        Ok(())
    }

    /// True when every level came from a CFL-satisfying step.
    pub fn cfl_satisfied(&self) -> bool {
        self.reports.iter().all(|r| r.cfl_satisfied)
    }
}

/// Step sizes reaching `t_end` from 0: `⌈t_end/dt⌉` steps, the last one
/// shortened so the run lands on `t_end`.
pub fn step_schedule(dt: f64, t_end: f64) -> Result<Vec<f64>> {
    if !(t_end > 0.0 && t_end.is_finite()) || !(dt > 0.0) {
        return Err(Error::Config(format!(
            "need t_end > 0 and dt > 0 (t_end = {t_end}, dt = {dt})"
        )));
    }
    let ratio = t_end / dt;
    let nearest = ratio.round();
    // an exact multiple up to rounding needs no sliver of a final step
    let count = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest.max(1.0) as usize
    } else {
        ratio.ceil() as usize
    };
    let mut steps = vec![dt; count];
    steps[count - 1] = t_end - (count - 1) as f64 * dt;
    Ok(steps)
}

fn drive<S: TimeStepper + ?Sized>(
    stepper: &S,
    initial: GridFunction,
    t_end: f64,
    keep: impl Fn(usize) -> bool,
) -> Result<Trajectory> {
    let config = *stepper.config();
    let dt = config.dt(initial.grid());
    let schedule = step_schedule(dt, t_end)?;
    let count = schedule.len();
    let mut state = SolverState::initial(initial);
    let mut levels = vec![state.clone()];
    let mut reports = Vec::with_capacity(count);
    for (k, &h) in schedule.iter().enumerate() {
        let (mut next, report) = stepper.step_by(&state, h)?;
        // times of full steps are k·Δt exactly; the landing level is t_end
        next.t = if k + 1 == count { t_end } else { (k + 1) as f64 * dt };
        reports.push(report);
        if k + 1 == count || keep(k + 1) {
            levels.push(next.clone());
        }
        state = next;
    }
    Ok(Trajectory {
        config,
        dt,
        final_time: t_end,
        levels,
        reports,
    })
}

/// Runs to `t_end`, storing level 0, the level nearest each snapshot time
/// and the landing level.
pub fn run<S: TimeStepper + ?Sized>(
    stepper: &S,
    initial: GridFunction,
    t_end: f64,
    snapshot_times: &[f64],
) -> Result<Trajectory> {
    let dt = stepper.config().dt(initial.grid());
    for &s in snapshot_times {
        if !(0.0..=t_end).contains(&s) {
            return Err(Error::TimeOutOfRange {
                time: s,
                start: 0.0,
                end: t_end,
            });
        }
    }
    // level index nearest to each snapshot, resolved up front from the schedule
    let schedule = step_schedule(dt, t_end)?;
    let count = schedule.len();
    let time_of = |k: usize| if k == count { t_end } else { k as f64 * dt };
    let mut wanted: Vec<usize> = snapshot_times
        .iter()
        .map(|&s| {
            let k = ((s / dt).floor() as usize).min(count);
            let up = (k + 1).min(count);
            if (time_of(up) - s).abs() < (time_of(k) - s).abs() {
                up
            } else {
                k
            }
        })
        .collect();
    wanted.sort_unstable();
    wanted.dedup();
    drive(stepper, initial, t_end, |k| wanted.binary_search(&k).is_ok())
}

/// Runs to `t_end`, storing every level.
pub fn run_full<S: TimeStepper + ?Sized>(stepper: &S, initial: GridFunction, t_end: f64) -> Result<Trajectory> {
    drive(stepper, initial, t_end, |_| true)
}
