//! Property suites run by `check`: each returns named outcomes and never
//! panics on a failed property.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coefficients::CoefficientModel;
use crate::diagnostics::{harten_property_test, monitor_bounds, weak_residual, BumpTestFunction, HartenCondition};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, PeriodicGrid};
use crate::scheme_w::WScheme;
use crate::special::{ellip_e, ellip_f, jacobi_am};
use crate::stepping::{run_full, CflPolicy, ThetaSchemeConfig};

use super::{initial_w, ExperimentSpec, Parity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Harten,
    Bounds,
    Weakform,
    Transforms,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "harten" => Suite::Harten,
            "bounds" => Suite::Bounds,
            "weakform" => Suite::Weakform,
            "transforms" => Suite::Transforms,
            _ => return Err(Error::Config(format!("unknown suite `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub suite: Suite,
    pub outcomes: Vec<CheckOutcome>,
}

impl CheckReport {
    pub fn passed(&self) -> usize {
        self.outcomes.iter().filter(|o| o.passed).count()
    }

    pub fn failed(&self) -> usize {
        self.outcomes.len() - self.passed()
    }
}

fn outcome(name: impl Into<String>, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        name: name.into(),
        passed,
        detail,
    }
}

pub fn run_check(suite: Suite, seed: u64) -> Result<CheckReport> {
    let outcomes = match suite {
        Suite::Harten => harten_suite(seed)?,
        Suite::Bounds => bounds_suite(seed)?,
        Suite::Weakform => weakform_suite()?,
        Suite::Transforms => transforms_suite()?,
    };
    Ok(CheckReport { suite, outcomes })
}

/// 1000 admissible instances per condition at `n = 16`.
pub fn harten_suite(seed: u64) -> Result<Vec<CheckOutcome>> {
    [HartenCondition::I, HartenCondition::II]
        .into_iter()
        .map(|condition| {
            let r = harten_property_test(1000, 16, seed, condition)?;
            Ok(outcome(
                format!("harten {condition:?}"),
                r.violations == 0,
                format!(
                    "{} trials, {} violations, worst excess {:e}",
                    r.trials, r.violations, r.worst_excess
                ),
            ))
        })
        .collect()
}

/// Random initial data: a mix of node-wise noise and random step profiles,
/// all inside `(−0.95, 0.95)`.
pub fn random_bv_data(rng: &mut impl Rng, n: usize) -> Result<GridFunction> {
    let values = if rng.gen_bool(0.5) {
        (0..n).map(|_| rng.gen_range(-0.95..0.95)).collect()
    } else {
        let jumps = rng.gen_range(1..=8);
        let mut cuts: Vec<usize> = (0..jumps).map(|_| rng.gen_range(0..n)).collect();
        cuts.sort_unstable();
        let levels: Vec<f64> = (0..=jumps).map(|_| rng.gen_range(-0.95..0.95)).collect();
        (0..n).map(|j| levels[cuts.partition_point(|&c| c <= j)]).collect()
    };
    GridFunction::new(PeriodicGrid::new(n)?, values)
}

/// Parameter pairs of the bound property suite.
pub const BOUND_PARAMETERS: [(f64, f64); 3] = [(1.0, 5.0), (0.0, 0.4), (0.5, 0.9)];

/// Bound monitors on 20 random data sets per `(θ, λ)`, `n = 64`, 200 steps,
/// `B = 1 − w²`.
pub fn bounds_suite(seed: u64) -> Result<Vec<CheckOutcome>> {
    BOUND_PARAMETERS
        .iter()
        .map(|&(theta, lambda)| {
            let config = ThetaSchemeConfig::new(theta, lambda)?.with_policy(CflPolicy::Strict);
            let scheme = WScheme::new(CoefficientModel::quadratic(), config)?;
            let results: Vec<(usize, f64)> = (0..20u64)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(trial + 1);
                    let w0 = random_bv_data(&mut rng, 64)?;
                    let t_end = 200.0 * config.dt(w0.grid());
                    let traj = run_full(&scheme, w0, t_end)?;
                    let report = monitor_bounds(&traj);
                    debug_assert_eq!(traj.steps(), 200);
                    let worst = report
                        .records
                        .iter()
                        .map(|r| r.w_bv - report.records[0].w_bv)
                        .fold(f64::NEG_INFINITY, f64::max);
                    Ok((report.violations(), worst))
                })
                .collect::<Result<_>>()?;
            let violations: usize = results.iter().map(|r| r.0).sum();
            let growth = results.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
            Ok(outcome(
                format!("bounds theta={theta} lambda={lambda}"),
                violations == 0,
                format!("20 runs x 200 steps, {violations} violating levels, max BV growth {growth:e}"),
            ))
        })
        .collect()
}

/// Weak residuals of the odd-grid runs at `N + 1 = 100, 200, 400, 800`
/// against a fixed bump; returns `(cells, |residual|)` per level.
pub fn weak_residual_ladder() -> Result<Vec<(usize, f64)>> {
    let spec = ExperimentSpec::default();
    let model = spec.model()?;
    let phi = BumpTestFunction::new(0.35, 0.2, spec.t_end)?;
    [100usize, 200, 400, 800]
        .par_iter()
        .map(|&label| {
            let grid = PeriodicGrid::new(Parity::Odd.cells(label)?)?;
            let scheme = WScheme::new(model.clone(), spec.config()?)?;
            let traj = run_full(&scheme, initial_w(&model, grid, spec.init)?, spec.t_end)?;
            Ok((grid.n(), weak_residual(&traj, &model, &phi)?.value.abs()))
        })
        .collect()
}

/// Residual ratio per halving must be at least 1.5.
pub fn weakform_suite() -> Result<Vec<CheckOutcome>> {
    let ladder = weak_residual_ladder()?;
    Ok(ladder
        .windows(2)
        .map(|p| {
            let ratio = p[0].1 / p[1].1;
            outcome(
                format!("weak residual {} -> {} cells", p[0].0, p[1].0),
                ratio >= 1.5,
                format!("{:.3e} -> {:.3e}, ratio {ratio:.2}", p[0].1, p[1].1),
            )
        })
        .collect())
}

/// Largest round-trip error `|k̄(k(u)) − u|` over sample angles.
fn round_trip_error(model: &CoefficientModel, v_side: bool) -> Result<f64> {
    let mut worst = 0.0_f64;
    for i in 1..200 {
        let u = PI * i as f64 / 200.0;
        let back = if v_side {
            model.kv_inverse(model.k_v(u)?)?
        } else {
            model.kw_inverse(model.k_w(u)?)?
        };
        worst = worst.max((back - u).abs());
    }
    Ok(worst)
}

/// Observed order of the centred difference of `f` against `df` at `x`.
fn difference_order(f: impl Fn(f64) -> Result<f64>, df: impl Fn(f64) -> Result<f64>, x: f64) -> Result<f64> {
    let err = |h: f64| -> Result<f64> { Ok(((f(x + h)? - f(x - h)?) / (2.0 * h) - df(x)?).abs()) };
    Ok((err(2e-3)? / err(1e-3)?).log2())
}

pub fn transforms_suite() -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for (k1, k2) in [(0.0, 1.0), (0.3, 1.0), (1.0, 1.0), (2.0, 0.5), (1e-4, 3.0)] {
        let model = CoefficientModel::oseen_frank(k1, k2)?;
        let w = round_trip_error(&model, false)?;
        let v = round_trip_error(&model, true)?;
        out.push(outcome(
            format!("k_w round trip k1={k1} k2={k2}"),
            w <= 1e-9,
            format!("{w:e}"),
        ));
        out.push(outcome(
            format!("k_v round trip k1={k1} k2={k2}"),
            v <= 1e-9,
            format!("{v:e}"),
        ));
    }

    let mut f0 = 0.0_f64;
    let mut e1 = 0.0_f64;
    let mut inverse = 0.0_f64;
    for i in -20..=20 {
        let phi = 0.07 * i as f64;
        f0 = f0.max((ellip_f(phi, 0.0)? - phi).abs());
        e1 = e1.max((ellip_e(phi, 1.0)? - phi.sin()).abs());
        for m in [0.0, 0.3, 0.9, 0.999] {
            let x = phi;
            inverse = inverse.max((ellip_f(jacobi_am(x, m)?, m)? - x).abs());
        }
    }
    out.push(outcome("F(phi|0) = phi", f0 <= 1e-10, format!("{f0:e}")));
    out.push(outcome("E(phi|1) = sin phi", e1 <= 1e-10, format!("{e1:e}")));
    out.push(outcome("F(am(x|m)|m) = x", inverse <= 1e-10, format!("{inverse:e}")));

    for (k1, k2) in [(0.5, 1.0), (2.0, 1.0)] {
        let model = CoefficientModel::oseen_frank(k1, k2)?;
        let (lo, hi) = model.w_range();
        let mut worst = (f64::INFINITY, f64::INFINITY);
        // off the symmetry point w = 0, where B′ vanishes exactly
        for s in [0.2, 0.35, 0.8] {
            let w = lo + s * (hi - lo);
            let db = difference_order(|w| Ok(model.b_of_w(w)?.b), |w| Ok(model.b_of_w(w)?.db), w)?;
            let d2b = difference_order(|w| Ok(model.b_of_w(w)?.db), |w| Ok(model.b_of_w(w)?.d2b), w)?;
            worst = (worst.0.min(db), worst.1.min(d2b));
        }
        out.push(outcome(
            format!("B' difference order k1={k1}"),
            worst.0 >= 1.9,
            format!("{:.3}", worst.0),
        ));
        out.push(outcome(
            format!("B'' difference order k1={k1}"),
            worst.1 >= 1.9,
            format!("{:.3}", worst.1),
        ));
    }
    Ok(out)
}
