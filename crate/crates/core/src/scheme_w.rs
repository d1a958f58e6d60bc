//! The θ-scheme `D_t⁺wⁿ_j = B(w^{n+θ}_j)·D²w^{n+θ}_j` on a periodic grid.
//!
//! Implicit steps are solved by Newton's method with the exact cyclic
//! tridiagonal Jacobian, starting from `wⁿ`, with a frozen-coefficient
//! predictor as fallback.

use crate::coefficients::CoefficientModel;
use crate::error::{Error, Result};
use crate::grid::{second_diff_at, GridFunction, PeriodicGrid};
use crate::stepping::{InitMode, SolverState, StepReport, ThetaSchemeConfig, TimeStepper};
use crate::tridiag::solve_cyclic;

/// Backtracking halvings tried per Newton update before taking the step anyway.
const MAX_BACKTRACK: usize = 8;

/// The `w`-scheme bound to one coefficient model.
#[derive(Debug, Clone)]
pub struct WScheme {
    pub model: CoefficientModel,
    pub config: ThetaSchemeConfig,
}

impl WScheme {
    pub fn new(model: CoefficientModel, config: ThetaSchemeConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { model, config })
    }

    /// Residual `F_j(W) = W_j − wⁿ_j − Δt·B(m_j)·D²m_j`, `m = θW + (1−θ)wⁿ`.
    pub fn residual(&self, old: &[f64], new: &[f64], dt: f64, dx: f64) -> Result<Vec<f64>> {
        let m = blend(old, new, self.config.theta);
        (0..m.len())
            .map(|j| {
                let b = self.model.diffusivity(m[j])?;
                Ok(new[j] - old[j] - dt * b * second_diff_at(&m, j, dx))
            })
            .collect()
    }

    /// Cyclic tridiagonal Jacobian of [`residual`](Self::residual) in `W`,
    /// as `(lower, diag, upper)`.
    pub fn jacobian(&self, old: &[f64], new: &[f64], dt: f64, dx: f64) -> Result<[Vec<f64>; 3]> {
        let theta = self.config.theta;
        let lambda = dt / (dx * dx);
        let m = blend(old, new, theta);
        let n = m.len();
        let (mut lower, mut diag, mut upper) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for j in 0..n {
            let (b, db) = self.model.b_and_slope(m[j])?;
            diag[j] = 1.0 - dt * theta * db * second_diff_at(&m, j, dx) + 2.0 * lambda * theta * b;
            lower[j] = -lambda * theta * b;
            upper[j] = lower[j];
        }
        Ok([lower, diag, upper])
    }

    /// One frozen-coefficient sweep: solves
    /// `W − θΔt·B(m)D²W = wⁿ + (1−θ)Δt·B(m)D²wⁿ` with `m` taken from `guess`.
    fn picard(&self, old: &[f64], guess: &[f64], dt: f64, dx: f64) -> Result<Vec<f64>> {
        let theta = self.config.theta;
        let lambda = dt / (dx * dx);
        let m = blend(old, guess, theta);
        let n = m.len();
        let (mut lower, mut diag, mut rhs) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for j in 0..n {
            let b = self.model.diffusivity(m[j])?;
            lower[j] = -lambda * theta * b;
            diag[j] = 1.0 + 2.0 * lambda * theta * b;
            rhs[j] = old[j] + dt * (1.0 - theta) * b * second_diff_at(old, j, dx);
        }
        solve_cyclic(&lower, &diag, &lower, &rhs)
    }

    fn explicit(&self, old: &[f64], dt: f64, dx: f64) -> Result<Vec<f64>> {
        (0..old.len())
            .map(|j| Ok(old[j] + dt * self.model.diffusivity(old[j])? * second_diff_at(old, j, dx)))
            .collect()
    }
}

fn blend(old: &[f64], new: &[f64], theta: f64) -> Vec<f64> {
    old.iter()
        .zip(new)
        .map(|(a, b)| theta * b + (1.0 - theta) * a)
        .collect()
}

pub(crate) fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Residual level at which a Picard predictor hands over to Newton.
const PICARD_HANDOVER: f64 = 1e-6;
/// Picard sweeps allowed per fallback.
const PICARD_MAX_ITER: usize = 2000;

/// Damped Newton from `old`, shared by both schemes. Iterates are projected
/// onto `bounds` when given. If Newton fails and a frozen-coefficient
/// `picard` map is supplied, Picard sweeps bring the iterate close to the
/// root and Newton is restarted from there.
/// Frozen-coefficient sweep `W ↦ W′`.
pub(crate) type PicardMap<'a> = dyn Fn(&[f64]) -> Result<Vec<f64>> + 'a;

pub(crate) fn newton_solve(
    old: &[f64],
    config: &ThetaSchemeConfig,
    step: usize,
    bounds: Option<(f64, f64)>,
    picard: Option<&PicardMap<'_>>,
    residual: impl Fn(&[f64]) -> Result<Vec<f64>>,
    jacobian: impl Fn(&[f64]) -> Result<[Vec<f64>; 3]>,
) -> Result<(Vec<f64>, usize, f64)> {
    let first = newton_from(old.to_vec(), config, step, bounds, &residual, &jacobian);
    let (Err(failure), Some(picard)) = (&first, picard) else {
        return first;
    };
    let mut w = old.to_vec();
    let mut sweeps = 0;
    let mut norm = sup(&residual(&w)?);
    let mut handed_over = false;
    while sweeps < PICARD_MAX_ITER {
        if norm <= config.newton_tol {
            return Ok((w, sweeps, norm));
        }
        if norm <= PICARD_HANDOVER && !handed_over {
            handed_over = true;
            if let Ok((v, iters, r)) = newton_from(w.clone(), config, step, bounds, &residual, &jacobian) {
                return Ok((v, sweeps + iters, r));
            }
        }
        w = picard(&w)?;
        norm = sup(&residual(&w)?);
        if !norm.is_finite() {
            return Err(Error::NonfiniteState { step });
        }
        sweeps += 1;
    }
    Err(failure.clone())
}

fn newton_from(
    mut w: Vec<f64>,
    config: &ThetaSchemeConfig,
    step: usize,
    bounds: Option<(f64, f64)>,
    residual: &impl Fn(&[f64]) -> Result<Vec<f64>>,
    jacobian: &impl Fn(&[f64]) -> Result<[Vec<f64>; 3]>,
) -> Result<(Vec<f64>, usize, f64)> {
    let mut f = residual(&w)?;
    let mut norm = sup(&f);
    for iter in 0..config.newton_max_iter {
        if !norm.is_finite() {
            return Err(Error::NonfiniteState { step });
        }
        if norm <= config.newton_tol {
            return Ok((w, iter, norm));
        }
        let [lower, diag, upper] = jacobian(&w)?;
        let rhs: Vec<f64> = f.iter().map(|r| -r).collect();
        let delta = solve_cyclic(&lower, &diag, &upper, &rhs)?;
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_BACKTRACK {
            let trial: Vec<f64> = w
                .iter()
                .zip(&delta)
                .map(|(a, d)| {
                    let x = a + alpha * d;
                    bounds.map_or(x, |(lo, hi)| x.clamp(lo, hi))
                })
                .collect();
            // out-of-range trials count as a failed decrease
            if let Ok(ft) = residual(&trial) {
                let nt = sup(&ft);
                if nt.is_finite() && (nt < norm || accepted.is_none()) {
                    let done = nt < norm;
                    accepted = Some((trial, ft, nt));
                    if done {
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        let Some((trial, ft, nt)) = accepted else {
            return Err(Error::NewtonDivergence {
                step,
                iterations: iter + 1,
                residual: norm,
            });
        };
        w = trial;
        f = ft;
        norm = nt;
    }
    if norm <= config.newton_tol {
        return Ok((w, config.newton_max_iter, norm));
    }
    Err(Error::NewtonDivergence {
        step,
        iterations: config.newton_max_iter,
        residual: norm,
    })
}

impl WScheme {
    /// Under the CFL condition, with `B ≥ 0` between the extremes of `old`,
    /// the new level stays inside `[min old, max old]`; Newton iterates are
    /// projected onto that box so they cannot drift to a root where `B < 0`.
    fn invariant_box(&self, old: &[f64], cfl_satisfied: bool) -> Result<Option<(f64, f64)>> {
        if !cfl_satisfied {
            return Ok(None);
        }
        let lo = old.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = old.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let admissible = match self.model.w_range() {
            (a, b) if a.is_finite() && b.is_finite() => lo >= a && hi <= b,
            _ => {
                // closed-form models: sample B across the box
                let mut ok = true;
                for k in 0..=64 {
                    ok &= self.model.b_and_slope(lo + (hi - lo) * k as f64 / 64.0)?.0 >= 0.0;
                }
                ok
            }
        };
        Ok(admissible.then_some((lo, hi)))
    }
}

impl TimeStepper for WScheme {
    fn config(&self) -> &ThetaSchemeConfig {
        &self.config
    }

    fn step_by(&self, state: &SolverState, dt: f64) -> Result<(SolverState, StepReport)> {
        let cfl_satisfied = self.config.enforce_cfl()?;
        let grid = *state.grid();
        let dx = grid.dx();
        let old = state.values.values();
        let index = state.step_index + 1;
        let (values, iterations, residual) = if self.config.theta == 0.0 {
            (self.explicit(old, dt, dx)?, 0, 0.0)
        } else {
            newton_solve(
                old,
                &self.config,
                index,
                self.invariant_box(old, cfl_satisfied)?,
                Some(&|w: &[f64]| self.picard(old, w, dt, dx)),
                |w| self.residual(old, w, dt, dx),
                |w| self.jacobian(old, w, dt, dx),
            )?
        };
        let values = GridFunction::new(grid, values).map_err(|_| Error::NonfiniteState { step: index })?;
        Ok((
            SolverState {
                values,
                t: state.t + dt,
                step_index: index,
            },
            StepReport {
                step_index: index,
                dt,
                newton_iterations: iterations,
                final_residual: residual,
                cfl_satisfied,
            },
        ))
    }
}

/// Initial data on the grid: cell averages over `[x_j − Δx/2, x_j + Δx/2]`
/// or point values `w0(x_j)`.
pub fn project_initial(w0: impl Fn(f64) -> f64, grid: PeriodicGrid, mode: InitMode) -> Result<GridFunction> {
    match mode {
        InitMode::PointSample => GridFunction::from_fn(grid, w0),
        InitMode::CellAverage => {
            // 4 subcells, 3-point Gauss–Legendre on each
            const SUB: usize = 4;
            let r = (0.6_f64).sqrt();
            let nodes = [(-r, 5.0 / 9.0), (0.0, 8.0 / 9.0), (r, 5.0 / 9.0)];
            let dx = grid.dx();
            let h = dx / SUB as f64;
            GridFunction::from_fn(grid, |x| {
                let mut sum = 0.0;
                for s in 0..SUB {
                    let centre = x - 0.5 * dx + (s as f64 + 0.5) * h;
                    for (xi, wt) in nodes {
                        sum += wt * w0(centre + 0.5 * h * xi);
                    }
                }
                // each subcell contributes (h/2)·Σ; divide by Δx
                sum * 0.5 * h / dx
            })
        }
    }
}

/// `z = D₊w` and `y = D₋z = D²w`.
pub fn derivative_sequences(state: &SolverState) -> (GridFunction, GridFunction) {
    let z = state.values.forward_diff();
    let y = z.backward_diff();
    (z, y)
}
