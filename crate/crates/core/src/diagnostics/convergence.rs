//! Errors against a fine reference solution and observed rates.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientModel;
use crate::error::{Error, Result};
use crate::grid::{coarse_point_error, cross_grid_error, GridFunction, InterpolantKind, Norm};
use crate::scheme_v::{u_from_v, u_from_w};

/// Which variable a solution is stored in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    W,
    V,
}

/// Variable in which errors are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareIn {
    #[default]
    W,
    U,
}

/// Where the interpolants of a run and the reference are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorSampling {
    /// Centres of the reference's pieces, weighted by the fine `Δx`: the
    /// `L^p` distance of the two interpolants. Two step functions on
    /// different grids differ by `O(Δx)` in `L¹`, which caps the observed
    /// rate of the solution errors at one.
    #[default]
    FineMidpoints,
    /// Centres of the run's own pieces, weighted by its `Δx`. On nested
    /// grids this compares nodal values and has no such floor.
    CoarsePoints,
}

/// A solution at the comparison time.
#[derive(Debug, Clone)]
pub struct FinalState {
    pub values: GridFunction,
    pub t: f64,
    pub formulation: Formulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    /// Grid label `N + 1` with `N` cells.
    pub n_plus_1: usize,
    /// `[err_1, err_{1,1}, err_∞, err_{1,∞}]`
    pub errors: [f64; 4],
    /// `log2` of consecutive error ratios; `None` on the first row.
    pub rates: Option<[f64; 4]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

pub const CSV_HEADER: &str = "N_plus_1,err1,rate1,err11,rate11,errinf,rateinf,err1inf,rate1inf";

impl ConvergenceTable {
    /// Builds rows from per-level errors, filling in the rates.
    pub fn from_errors(levels: &[(usize, [f64; 4])]) -> Self {
        let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels.len());
        for (i, &(n_plus_1, errors)) in levels.iter().enumerate() {
            let rates = (i > 0).then(|| {
                let prev = levels[i - 1].1;
                std::array::from_fn(|k| (prev[k] / errors[k]).log2())
            });
            rows.push(ConvergenceRow {
                n_plus_1,
                errors,
                rates,
            });
        }
        Self { rows }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{}", row.n_plus_1);
            for k in 0..4 {
                let rate = row.rates.map(|r| format!("{:.1}", r[k])).unwrap_or_default();
                let _ = write!(out, ",{},{}", format_error(row.errors[k]), rate);
            }
            out.push('\n');
        }
        out
    }
}

/// Two significant digits with a signed two-digit exponent, e.g. `1.2e-01`.
pub fn format_error(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.1e}");
    let (mantissa, exponent) = s.split_once('e').expect("exponent form");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    let sign = if exponent < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exponent.abs())
}

fn to_variable(state: &FinalState, compare_in: CompareIn, model: &CoefficientModel) -> Result<GridFunction> {
    match (compare_in, state.formulation) {
        (CompareIn::W, Formulation::W) => Ok(state.values.clone()),
        (CompareIn::U, Formulation::W) => u_from_w(&state.values, model),
        (CompareIn::U, Formulation::V) => u_from_v(&state.values, model),
        (CompareIn::W, Formulation::V) => u_from_v(&state.values, model)?.try_map(|u| model.k_w(u)),
    }
}

/// `[err_1, err_{1,1}, err_∞, err_{1,∞}]` of one solution against the
/// reference. Solution errors use the cell-constant interpolant, derivative
/// errors the interval-constant `D₊` interpolant.
pub fn errors_against(run: &GridFunction, reference: &GridFunction, sampling: ErrorSampling) -> Result<[f64; 4]> {
    let (dr, dref) = (run.forward_diff(), reference.forward_diff());
    let cell = InterpolantKind::ConstantCell;
    let interval = InterpolantKind::ConstantInterval;
    let distance = match sampling {
        ErrorSampling::CoarsePoints => coarse_point_error,
        ErrorSampling::FineMidpoints => cross_grid_error,
    };
    Ok([
        distance(run, reference, Norm::L1, cell)?,
        distance(&dr, &dref, Norm::L1, interval)?,
        distance(run, reference, Norm::LInf, cell)?,
        distance(&dr, &dref, Norm::LInf, interval)?,
    ])
}

/// Error table of a refinement ladder against a finer reference.
pub fn error_table(
    runs: &[FinalState],
    reference: &FinalState,
    compare_in: CompareIn,
    sampling: ErrorSampling,
    model: &CoefficientModel,
) -> Result<ConvergenceTable> {
    let reference_values = to_variable(reference, compare_in, model)?;
    let mut levels = Vec::with_capacity(runs.len());
    for run in runs {
        let scale = reference.t.abs().max(1.0);
        if (run.t - reference.t).abs() > 1e-12 * scale {
            return Err(Error::TimeMismatch {
                left: run.t,
                right: reference.t,
            });
        }
        let grid = run.values.grid();
        if grid.n() > reference.values.grid().n() {
            return Err(Error::Config(format!(
                "reference ({} cells) must be finer than every run ({} cells)",
                reference.values.grid().n(),
                grid.n()
            )));
        }
        let values = to_variable(run, compare_in, model)?;
        levels.push((grid.n_plus_1(), errors_against(&values, &reference_values, sampling)?));
    }
    Ok(ConvergenceTable::from_errors(&levels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use std::f64::consts::PI;

    #[test]
    fn error_formatting() {
        assert_eq!(format_error(0.12), "1.2e-01");
        assert_eq!(format_error(1.5), "1.5e+00");
        assert_eq!(format_error(7.4e-3), "7.4e-03");
        assert_eq!(format_error(0.0), "0.0e+00");
        assert_eq!(format_error(2.5e-100), "2.5e-100");
    }

    #[test]
    fn rates_are_log_ratios() {
        let table = ConvergenceTable::from_errors(&[(100, [0.4, 1.0, 0.2, 3.0]), (200, [0.1, 0.5, 0.2, 0.75])]);
        assert!(table.rows[0].rates.is_none());
        assert_eq!(table.rows[1].rates.unwrap(), [2.0, 1.0, 0.0, 2.0]);
        let csv = table.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("100,4.0e-01,,1.0e+00,,2.0e-01,,3.0e+00,"));
        assert_eq!(
            lines.next(),
            Some("200,1.0e-01,2.0,5.0e-01,1.0,2.0e-01,0.0,7.5e-01,2.0")
        );
    }

    #[test]
    fn self_comparison_is_exact() {
        let grid = PeriodicGrid::new(64).unwrap();
        let reference = FinalState {
            values: GridFunction::from_fn(grid, |x| -(2.0 * PI * x).sin()).unwrap(),
            t: 0.04,
            formulation: Formulation::W,
        };
        let model = CoefficientModel::quadratic();
        for compare_in in [CompareIn::W, CompareIn::U] {
            let table = error_table(
                std::slice::from_ref(&reference),
                &reference,
                compare_in,
                ErrorSampling::default(),
                &model,
            )
            .unwrap();
            assert_eq!(table.rows[0].errors, [0.0; 4]);
            assert_eq!(table.rows[0].n_plus_1, 65);
        }
    }

    #[test]
    fn mismatched_times_and_coarse_references_are_rejected() {
        let model = CoefficientModel::quadratic();
        let state = |n: usize, t: f64| FinalState {
            values: GridFunction::constant(PeriodicGrid::new(n).unwrap(), 0.1),
            t,
            formulation: Formulation::W,
        };
        assert!(matches!(
            error_table(
                &[state(8, 0.03)],
                &state(16, 0.04),
                CompareIn::W,
                ErrorSampling::default(),
                &model
            ),
            Err(Error::TimeMismatch { .. })
        ));
        assert!(error_table(
            &[state(32, 0.04)],
            &state(16, 0.04),
            CompareIn::W,
            ErrorSampling::default(),
            &model
        )
        .is_err());
    }

    #[test]
    fn sampling_modes_on_a_smooth_profile() {
        // nested grids: coarse nodes are reference nodes, so only the fine
        // midpoint sampling sees the Δx/4·BV offset between step functions
        let profile =
            |n: usize| GridFunction::from_fn(PeriodicGrid::new(n).unwrap(), |x| -(2.0 * PI * x).sin()).unwrap();
        let (coarse, fine) = (profile(100), profile(800));
        let at_points = errors_against(&coarse, &fine, ErrorSampling::CoarsePoints).unwrap();
        let at_midpoints = errors_against(&coarse, &fine, ErrorSampling::FineMidpoints).unwrap();
        assert!(at_points[0] < 1e-15 && at_points[2] < 1e-15);
        // ∫|w − w̄| ≈ (Δx/4)·|w|_BV with |w|_BV = 4
        assert!((at_midpoints[0] - 0.01).abs() < 1e-3, "{}", at_midpoints[0]);
    }

    #[test]
    fn v_states_convert_consistently() {
        let model = CoefficientModel::quadratic();
        let grid = PeriodicGrid::new(20).unwrap();
        let u = GridFunction::from_fn(grid, |x| 1.0 + 0.5 * (2.0 * PI * x).cos()).unwrap();
        let w = FinalState {
            values: u.map(|u| -u.cos()).unwrap(),
            t: 0.0,
            formulation: Formulation::W,
        };
        let v = FinalState {
            values: u.map(|u| (0.5 * u).tan().ln()).unwrap(),
            t: 0.0,
            formulation: Formulation::V,
        };
        for compare_in in [CompareIn::W, CompareIn::U] {
            let table = error_table(
                std::slice::from_ref(&v),
                &w,
                compare_in,
                ErrorSampling::default(),
                &model,
            )
            .unwrap();
            assert!(table.rows[0].errors.iter().all(|&e| e < 1e-9), "{:?}", table.rows[0]);
        }
    }
}
