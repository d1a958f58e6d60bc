//! Residual of the weak formulation
//! `∫∫ wφ_t − B(w)w_xφ_x − B′(w)w_x²φ dx dt + ∫ w₀φ(·,0) dx = 0`
//! evaluated on a stored trajectory.
//!
//! Space: `w` is the cell-constant `w̄` and `w_x` the interval-constant `z̄`,
//! so every half cell `[x_j, x_{j+1/2})`, `[x_{j+1/2}, x_{j+1})` carries a
//! constant `(w, z)` pair; each half cell is integrated by its midpoint.
//! Time: the solution is constant on `[tⁿ, tⁿ⁺¹)`, so the `φ_t` term is the
//! exact difference `φ(·,tⁿ⁺¹) − φ(·,tⁿ)` and the other terms use the left
//! endpoint `tⁿ`.

use serde::Serialize;

use crate::coefficients::CoefficientModel;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::stepping::Trajectory;

/// A smooth test function with its space derivative.
pub trait TestFunction: Sync {
    fn value(&self, x: f64, t: f64) -> f64;
    fn dx(&self, x: f64, t: f64) -> f64;
}

/// Product `η(x)·ψ(t)` of a periodic-safe spatial bump
/// `η(x) = exp(1 − 1/(1 − ((x−centre)/radius)²))` and the time cutoff
/// `ψ(t) = exp(1 − 1/(1 − (t/t_end)²))`, which vanishes with all derivatives
/// at `t_end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BumpTestFunction {
    pub centre: f64,
    pub radius: f64,
    pub t_end: f64,
}

fn bump(s: f64) -> (f64, f64) {
    // value and derivative of exp(1 − 1/(1 − s²)) for |s| < 1
    if s.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - s * s;
    let v = (1.0 - 1.0 / q).exp();
    (v, -2.0 * s / (q * q) * v)
}

impl BumpTestFunction {
    pub fn new(centre: f64, radius: f64, t_end: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < 0.5 && t_end > 0.0) {
            return Err(Error::Config(format!(
                "bump needs 0 < radius < 1/2 and t_end > 0 (radius {radius})"
            )));
        }
        Ok(Self { centre, radius, t_end })
    }

    fn offset(&self, x: f64) -> f64 {
        // nearest periodic image of the centre
        let d = (x - self.centre).rem_euclid(1.0);
        if d > 0.5 {
            d - 1.0
        } else {
            d
        }
    }
}

impl TestFunction for BumpTestFunction {
    fn value(&self, x: f64, t: f64) -> f64 {
        bump(self.offset(x) / self.radius).0 * bump(t / self.t_end).0
    }

    fn dx(&self, x: f64, t: f64) -> f64 {
        bump(self.offset(x) / self.radius).1 / self.radius * bump(t / self.t_end).0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakResidual {
    pub value: f64,
    /// Set when `φ(·, T)` is not negligible, i.e. the test function is not
    /// supported inside the trajectory's time span and the residual misses
    /// the tail of the time integral.
    pub support_warning: bool,
}

/// `Σ` over half cells of `f(w, z, x)·Δx/2`.
fn half_cell_sum(w: &[f64], z: &[f64], dx: f64, mut f: impl FnMut(f64, f64, f64) -> f64) -> f64 {
    let n = w.len();
    let mut sum = 0.0;
    for j in 0..n {
        let x = j as f64 * dx;
        sum += f(w[j], z[j], x + 0.25 * dx);
        sum += f(w[(j + 1) % n], z[j], x + 0.75 * dx);
    }
    0.5 * dx * sum
}

/// Residual of the weak form on a trajectory holding every level.
pub fn weak_residual(
    trajectory: &Trajectory,
    model: &CoefficientModel,
    phi: &dyn TestFunction,
) -> Result<WeakResidual> {
    if trajectory.levels.len() != trajectory.steps() + 1 {
        return Err(Error::Config("the weak residual needs every level stored".into()));
    }
    let dx = trajectory.grid().dx();
    let levels = &trajectory.levels;

    let w0 = levels[0].values.values();
    let z0 = levels[0].values.forward_diff();
    let mut total = half_cell_sum(w0, z0.values(), dx, |w, _, x| w * phi.value(x, 0.0));

    for pair in levels.windows(2) {
        let (now, next) = (&pair[0], &pair[1]);
        let (t0, t1) = (now.t, next.t);
        let w = now.values.values();
        let z: GridFunction = now.values.forward_diff();
        let mut coefficient_error = None;
        let space = half_cell_sum(w, z.values(), dx, |w, z, x| {
            let (b, db) = match model.b_and_slope(w) {
                Ok(v) => v,
                Err(e) => {
                    coefficient_error.get_or_insert(e);
                    (f64::NAN, f64::NAN)
                }
            };
            let time = w * (phi.value(x, t1) - phi.value(x, t0));
            time - (t1 - t0) * (b * z * phi.dx(x, t0) + db * z * z * phi.value(x, t0))
        });
        if let Some(e) = coefficient_error {
            return Err(e);
        }
        total += space;
    }

    let t_end = trajectory.last().t;
    let tail = (0..trajectory.grid().n())
        .map(|j| phi.value(j as f64 * dx, t_end).abs())
        .fold(0.0, f64::max);
    Ok(WeakResidual {
        value: total,
        support_warning: tail > 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use crate::scheme_w::WScheme;
    use crate::stepping::{run_full, ThetaSchemeConfig};
    use crate::testing::adaptive_simpson;
    use std::f64::consts::PI;

    #[test]
    fn bump_derivative_matches_quadrature() {
        let phi = BumpTestFunction::new(0.9, 0.3, 1.0).unwrap();
        // ∫ φ_x over a full period vanishes; φ(b) − φ(a) = ∫ φ_x
        let (a, b) = (0.65, 0.95);
        let integral = adaptive_simpson(&|x| phi.dx(x, 0.2), a, b, 1e-13);
        assert!((integral - (phi.value(b, 0.2) - phi.value(a, 0.2))).abs() < 1e-10);
        assert_eq!(phi.value(0.3, 0.1), 0.0);
        assert_eq!(phi.value(0.9, 1.0), 0.0);
        // the support wraps around x = 1
        assert!(phi.value(0.05, 0.0) > 0.0);
    }

    #[test]
    fn constant_trajectory_has_zero_residual() {
        let grid = PeriodicGrid::new(40).unwrap();
        let s = WScheme::new(CoefficientModel::quadratic(), ThetaSchemeConfig::new(0.5, 2.0).unwrap()).unwrap();
        let traj = run_full(&s, GridFunction::constant(grid, 0.4), 0.05).unwrap();
        let phi = BumpTestFunction::new(0.5, 0.2, 0.05).unwrap();
        let r = weak_residual(&traj, &s.model, &phi).unwrap();
        assert!(r.value.abs() < 1e-15, "{r:?}");
        assert!(!r.support_warning);
        let short = BumpTestFunction::new(0.5, 0.2, 0.5).unwrap();
        assert!(weak_residual(&traj, &s.model, &short).unwrap().support_warning);
    }

    #[test]
    fn heat_solution_residual_decays() {
        let model = CoefficientModel::constant(1.0);
        let phi = BumpTestFunction::new(0.3, 0.25, 0.02).unwrap();
        let mut previous = f64::INFINITY;
        for n in [25, 50, 100, 200] {
            let grid = PeriodicGrid::new(n).unwrap();
            let s = WScheme::new(model.clone(), ThetaSchemeConfig::new(1.0, 0.5).unwrap()).unwrap();
            let w0 = GridFunction::from_fn(grid, |x| (2.0 * PI * x).sin()).unwrap();
            let r = weak_residual(&run_full(&s, w0, 0.02).unwrap(), &model, &phi)
                .unwrap()
                .value
                .abs();
            assert!(r < previous, "n = {n}: {r} vs {previous}");
            previous = r;
        }
        assert!(previous < 1e-3);
    }

    #[test]
    fn residual_is_linear_in_phi() {
        struct Sum<'a>(&'a BumpTestFunction, &'a BumpTestFunction, f64);
        impl TestFunction for Sum<'_> {
            fn value(&self, x: f64, t: f64) -> f64 {
                self.0.value(x, t) + self.2 * self.1.value(x, t)
            }
            fn dx(&self, x: f64, t: f64) -> f64 {
                self.0.dx(x, t) + self.2 * self.1.dx(x, t)
            }
        }
        let grid = PeriodicGrid::new(32).unwrap();
        let s = WScheme::new(CoefficientModel::quadratic(), ThetaSchemeConfig::new(0.5, 4.0).unwrap()).unwrap();
        let w0 = GridFunction::from_fn(grid, |x| -(2.0 * PI * x).sin()).unwrap();
        let traj = run_full(&s, w0, 0.02).unwrap();
        let (p, q) = (
            BumpTestFunction::new(0.2, 0.15, 0.02).unwrap(),
            BumpTestFunction::new(0.7, 0.2, 0.02).unwrap(),
        );
        let rp = weak_residual(&traj, &s.model, &p).unwrap().value;
        let rq = weak_residual(&traj, &s.model, &q).unwrap().value;
        let rs = weak_residual(&traj, &s.model, &Sum(&p, &q, -2.5)).unwrap().value;
        assert!((rs - (rp - 2.5 * rq)).abs() < 1e-13);
    }
}
