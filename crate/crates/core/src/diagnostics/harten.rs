//! Executable form of the extended Harten lemma.
//!
//! For half-index sequences `A, B, C, D` the update
//! `v_j = u_j − A_{j−1/2}Δ₋u_j + B_{j+1/2}Δ₊u_j − C_{j−1/2}Δ₋v_j + D_{j+1/2}Δ₊v_j`
//! is total-variation diminishing under condition (i) and obeys the
//! maximum principle under condition (ii). Entry `k` of each array holds the
//! value at `k + 1/2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, PeriodicGrid};
use crate::tridiag::solve_cyclic;

#[derive(Debug, Clone, PartialEq)]
pub struct HartenCoefficients {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HartenCondition {
    /// `A_{j+1/2} + B_{j+1/2} ≤ 1`: BV bound.
    I,
    /// `A_{j−1/2} + B_{j+1/2} ≤ 1`: maximum principle.
    II,
}

impl HartenCoefficients {
    pub fn new(a: Vec<f64>, b: Vec<f64>, c: Vec<f64>, d: Vec<f64>) -> Result<Self> {
        let n = a.len();
        if n < 3 || b.len() != n || c.len() != n || d.len() != n {
            return Err(Error::InvalidGrid(format!(
                "coefficient arrays need equal length >= 3 (got {n})"
            )));
        }
        if let Some(k) = a.iter().chain(&b).chain(&c).chain(&d).position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index: k % n });
        }
        Ok(Self { a, b, c, d })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Coefficients of one `w`-scheme step: `A_{j−1/2} = B_{j+1/2} = (1−θ)λB_j`
    /// and `C_{j−1/2} = D_{j+1/2} = θλB_j`, with `B_j = B(w^{n+θ}_j)`.
    pub fn for_w_step(diffusivity: &[f64], theta: f64, lambda: f64) -> Result<Self> {
        let n = diffusivity.len();
        let explicit: Vec<f64> = diffusivity.iter().map(|b| (1.0 - theta) * lambda * b).collect();
        let implicit: Vec<f64> = diffusivity.iter().map(|b| theta * lambda * b).collect();
        // A_{k+1/2} belongs to node k + 1
        let shift = |v: &[f64]| (0..n).map(|k| v[(k + 1) % n]).collect::<Vec<_>>();
        Self::new(shift(&explicit), explicit, shift(&implicit), implicit)
    }

    /// Coefficients of the derived `z`-step: `A_{j−1/2} = (1−θ)λB_j`,
    /// `B_{j+1/2} = (1−θ)λB_{j+1}`, and likewise for `C, D` with `θλ`.
    pub fn for_z_step(diffusivity: &[f64], theta: f64, lambda: f64) -> Result<Self> {
        let n = diffusivity.len();
        let explicit: Vec<f64> = (0..n)
            .map(|k| (1.0 - theta) * lambda * diffusivity[(k + 1) % n])
            .collect();
        let implicit: Vec<f64> = (0..n).map(|k| theta * lambda * diffusivity[(k + 1) % n]).collect();
        Self::new(explicit.clone(), explicit, implicit.clone(), implicit)
    }
}

/// Exact test of a condition; `Err(k)` names the first failing index `k`
/// (the half-index `k + 1/2`).
pub fn harten_check(coeffs: &HartenCoefficients, condition: HartenCondition) -> std::result::Result<(), usize> {
    let n = coeffs.len();
    for k in 0..n {
        if coeffs.a[k] < 0.0 || coeffs.b[k] < 0.0 || coeffs.c[k] < 0.0 || coeffs.d[k] < 0.0 {
            return Err(k);
        }
        let sum = match condition {
            HartenCondition::I => coeffs.a[k] + coeffs.b[k],
            HartenCondition::II => coeffs.a[(k + n - 1) % n] + coeffs.b[k],
        };
        if sum > 1.0 {
            return Err(k);
        }
    }
    Ok(())
}

/// Solves the implicit relation for `v` as a cyclic tridiagonal system.
pub fn harten_solve(coeffs: &HartenCoefficients, u: &GridFunction) -> Result<GridFunction> {
    let n = coeffs.len();
    if u.len() != n {
        return Err(Error::GridMismatch {
            left: n,
            right: u.len(),
        });
    }
    let uv = u.values();
    let (mut lower, mut diag, mut upper, mut rhs) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for j in 0..n {
        let (jm, jp) = ((j + n - 1) % n, (j + 1) % n);
        lower[j] = -coeffs.c[jm];
        upper[j] = -coeffs.d[j];
        diag[j] = 1.0 + coeffs.c[jm] + coeffs.d[j];
        rhs[j] = uv[j] - coeffs.a[jm] * (uv[j] - uv[jm]) + coeffs.b[j] * (uv[jp] - uv[j]);
    }
    let v = solve_cyclic(&lower, &diag, &upper, &rhs)?;
    GridFunction::new(*u.grid(), v)
}

/// Largest nodal violation of the defining relation; used as a substitution check.
pub fn harten_residual(coeffs: &HartenCoefficients, u: &GridFunction, v: &GridFunction) -> f64 {
    let n = coeffs.len();
    let (u, v) = (u.values(), v.values());
    (0..n)
        .map(|j| {
            let (jm, jp) = ((j + n - 1) % n, (j + 1) % n);
            let rhs = u[j] - coeffs.a[jm] * (u[j] - u[jm]) + coeffs.b[j] * (u[jp] - u[j])
                - coeffs.c[jm] * (v[j] - v[jm])
                + coeffs.d[j] * (v[jp] - v[j]);
            (v[j] - rhs).abs()
        })
        .fold(0.0, f64::max)
}

/// Random coefficients satisfying `condition` exactly.
pub fn random_admissible(rng: &mut impl Rng, n: usize, condition: HartenCondition) -> HartenCoefficients {
    let mut a = vec![0.0; n];
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..4.0)).collect();
    let d: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..4.0)).collect();
    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    for k in 0..n {
        // the partner of A_{k+1/2} is B_{k+1/2} under (i), B_{k+3/2} under (ii)
        let partner = match condition {
            HartenCondition::I => b[k],
            HartenCondition::II => b[(k + 1) % n],
        };
        a[k] = rng.gen_range(0.0..=1.0) * (1.0 - partner);
    }
    HartenCoefficients { a, b, c, d }
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub condition: HartenCondition,
    pub trials: usize,
    pub violations: usize,
    /// Worst excess over the lemma's bound across all trials (≤ 0 when none).
    pub worst_excess: f64,
}

/// Per-trial seed derived from the master seed.
fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 + 1);
    rng
}

fn random_u(rng: &mut impl Rng, grid: PeriodicGrid) -> GridFunction {
    // a mix of smooth and jumpy data
    let values = (0..grid.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    GridFunction::new(grid, values).expect("finite draws")
}

/// Draws admissible instances and checks the lemma's conclusion with
/// tolerance `1e-10`. Trials run in parallel; results do not depend on the
/// thread count.
pub fn harten_property_test(trials: usize, n: usize, seed: u64, condition: HartenCondition) -> Result<PropertyReport> {
    let grid = PeriodicGrid::new(n)?;
    let excesses: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let coeffs = random_admissible(&mut rng, n, condition);
            let u = if trial % 10 == 0 {
                GridFunction::constant(grid, rng.gen_range(-1.0..1.0))
            } else {
                random_u(&mut rng, grid)
            };
            let v = harten_solve(&coeffs, &u)?;
            Ok(match condition {
                HartenCondition::I => v.bv() - u.bv(),
                HartenCondition::II => (v.max() - u.max()).max(u.min() - v.min()),
            })
        })
        .collect::<Result<_>>()?;
    Ok(PropertyReport {
        condition,
        trials,
        violations: excesses.iter().filter(|&&e| e > 1e-10).count(),
        worst_excess: excesses.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// An instance with nonnegative coefficients that breaks condition (i)
/// and increases the total variation.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub coeffs: HartenCoefficients,
    pub u: GridFunction,
    pub v: GridFunction,
}

/// Random search with condition (i) disabled: explicit coefficients are
/// drawn up to 3, so `A + B` can exceed 1.
pub fn counterexample_search(trials: usize, n: usize, seed: u64) -> Result<Option<Counterexample>> {
    let grid = PeriodicGrid::new(n)?;
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let draw = |rng: &mut ChaCha8Rng, hi: f64| (0..n).map(|_| rng.gen_range(0.0..hi)).collect::<Vec<_>>();
        let (a, b) = (draw(&mut rng, 3.0), draw(&mut rng, 3.0));
        let (c, d) = (draw(&mut rng, 0.5), draw(&mut rng, 0.5));
        let coeffs = HartenCoefficients::new(a, b, c, d)?;
        let u = random_u(&mut rng, grid);
        let v = harten_solve(&coeffs, &u)?;
        if harten_check(&coeffs, HartenCondition::I).is_err() && v.bv() > u.bv() + 1e-10 {
            return Ok(Some(Counterexample { coeffs, u, v }));
        }
    }
    Ok(None)
}
