//! Conservative scheme for `v_t = (c²(k̄_v(v)) v_x)_x` with θ time-weighting:
//! `D_t⁺vⁿ_j = D₊(a_{j−1/2}(m)·D₋m_j)`, `m = θV + (1−θ)vⁿ`, where
//! `a_{j−1/2}` is the arithmetic mean of `g = c²∘k̄_v` at `m_{j−1}, m_j`.
//!
//! The implicit system is solved by Newton's method with the exact Jacobian.
//! `g′` is bounded for the Oseen–Frank family, so the chain-rule terms cause
//! no trouble.

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientModel;
use crate::error::{Error, Result};
use crate::experiments::builtin;
use crate::grid::{GridFunction, PeriodicGrid};
use crate::scheme_w::newton_solve;
use crate::stepping::{StepReport, ThetaSchemeConfig, TimeStepper, VState};

/// Where the initial `v` data comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VInitSource {
    /// Piecewise `∓tan 2πx`.
    TanProfile,
    /// `k_v(u0(x_j))`.
    #[default]
    ExactTransform,
}

/// `v⁰_j` for the built-in angle profile.
pub fn v_initial(grid: PeriodicGrid, source: VInitSource, model: &CoefficientModel) -> Result<GridFunction> {
    let n = grid.n();
    let mut values = Vec::with_capacity(n);
    for j in 0..n {
        let x = grid.node(j) / grid.length();
        let degenerate = || Error::DegenerateNode {
            index: j,
            x: grid.node(j),
        };
        let v = match source {
            VInitSource::TanProfile => {
                // x_j/L = j/n sits on a kink iff 4j ∈ {n, 3n}
                if 4 * j == n || 4 * j == 3 * n {
                    return Err(degenerate());
                }
                builtin::v0_tan(x)
            }
            VInitSource::ExactTransform => match model.k_v(builtin::u0(x)) {
                Ok(v) => v,
                Err(Error::DivergentIntegral(_)) => return Err(degenerate()),
                Err(e) => return Err(e),
            },
        };
        if !v.is_finite() {
            return Err(degenerate());
        }
        values.push(v);
    }
    GridFunction::new(grid, values)
}

#[derive(Debug, Clone)]
pub struct VScheme {
    pub model: CoefficientModel,
    pub config: ThetaSchemeConfig,
}

impl VScheme {
    pub fn new(model: CoefficientModel, config: ThetaSchemeConfig) -> Result<Self> {
        config.validate()?;
        model.transform().ok_or(Error::NoTransform("v"))?;
        Ok(Self { model, config })
    }

    fn coefficient(&self, m: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut g = Vec::with_capacity(m.len());
        let mut dg = Vec::with_capacity(m.len());
        for &v in m {
            let (a, b) = self.model.v_diffusivity(v)?;
            g.push(a);
            dg.push(b);
        }
        Ok((g, dg))
    }

    /// `D₊(A₋g·D₋m)` at every node, in the order of the explicit update.
    fn flux_divergence(m: &[f64], g: &[f64], dx: f64) -> Vec<f64> {
        let n = m.len();
        (0..n)
            .map(|j| {
                let (jm, jp) = ((j + n - 1) % n, (j + 1) % n);
                let right = 0.5 * (g[jp] + g[j]) * ((m[jp] - m[j]) / dx);
                let left = 0.5 * (g[j] + g[jm]) * ((m[j] - m[jm]) / dx);
                (right - left) / dx
            })
            .collect()
    }

    /// `F_j(V) = V_j − vⁿ_j − Δt·D₊(A₋g(m)·D₋m)_j`.
    pub fn residual(&self, old: &[f64], new: &[f64], dt: f64, dx: f64) -> Result<Vec<f64>> {
        let theta = self.config.theta;
        let m: Vec<f64> = old
            .iter()
            .zip(new)
            .map(|(a, b)| theta * b + (1.0 - theta) * a)
            .collect();
        let (g, _) = self.coefficient(&m)?;
        let div = Self::flux_divergence(&m, &g, dx);
        Ok((0..m.len()).map(|j| new[j] - old[j] - dt * div[j]).collect())
    }

    /// Exact cyclic tridiagonal Jacobian of [`residual`](Self::residual).
    pub fn jacobian(&self, old: &[f64], new: &[f64], dt: f64, dx: f64) -> Result<[Vec<f64>; 3]> {
        let theta = self.config.theta;
        let tl = theta * dt / (dx * dx);
        let m: Vec<f64> = old
            .iter()
            .zip(new)
            .map(|(a, b)| theta * b + (1.0 - theta) * a)
            .collect();
        let (g, dg) = self.coefficient(&m)?;
        let n = m.len();
        let (mut lower, mut diag, mut upper) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for j in 0..n {
            let (jm, jp) = ((j + n - 1) % n, (j + 1) % n);
            let a_right = 0.5 * (g[j] + g[jp]);
            let a_left = 0.5 * (g[j] + g[jm]);
            upper[j] = -tl * (a_right + 0.5 * dg[jp] * (m[jp] - m[j]));
            lower[j] = tl * (0.5 * dg[jm] * (m[j] - m[jm]) - a_left);
            diag[j] = 1.0 + tl * (a_right + a_left - 0.5 * dg[j] * (m[jp] - 2.0 * m[j] + m[jm]));
        }
        Ok([lower, diag, upper])
    }
}

impl TimeStepper for VScheme {
    fn config(&self) -> &ThetaSchemeConfig {
        &self.config
    }

    fn step_by(&self, state: &VState, dt: f64) -> Result<(VState, StepReport)> {
        let cfl_satisfied = self.config.enforce_cfl()?;
        let grid = *state.grid();
        let dx = grid.dx();
        let old = state.values.values();
        let index = state.step_index + 1;
        let (values, iterations, residual) = if self.config.theta == 0.0 {
            let (g, _) = self.coefficient(old)?;
            let div = Self::flux_divergence(old, &g, dx);
            (old.iter().zip(&div).map(|(v, d)| v + dt * d).collect(), 0, 0.0)
        } else {
            newton_solve(
                old,
                &self.config,
                index,
                // g = c² ∈ [0, 1], so the CFL condition keeps v in its old range
                cfl_satisfied.then(|| {
                    let lo = old.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = old.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    (lo, hi)
                }),
                None,
                |v| self.residual(old, v, dt, dx),
                |v| self.jacobian(old, v, dt, dx),
            )?
        };
        let values = GridFunction::new(grid, values).map_err(|_| Error::NonfiniteState { step: index })?;
        Ok((
            VState {
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

/// Nodewise `k̄_v`.
pub fn u_from_v(v: &GridFunction, model: &CoefficientModel) -> Result<GridFunction> {
    v.try_map(|x| model.kv_inverse(x))
}

/// Nodewise `k̄_w`.
pub fn u_from_w(w: &GridFunction, model: &CoefficientModel) -> Result<GridFunction> {
    w.try_map(|x| model.kw_inverse(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme_w::WScheme;
    use crate::stepping::SolverState;
    use crate::tridiag::tests::dense_cyclic;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_8, PI};

    fn config(theta: f64, lambda: f64) -> ThetaSchemeConfig {
        ThetaSchemeConfig::new(theta, lambda).unwrap()
    }

    fn state(values: Vec<f64>) -> VState {
        SolverState::initial(GridFunction::new(PeriodicGrid::new(values.len()).unwrap(), values).unwrap())
    }

    #[test]
    fn initial_data_sources() {
        let model = CoefficientModel::quadratic();
        let grid = PeriodicGrid::new(8).unwrap();
        // x = 1/4 is a node of the 8-cell grid
        for source in [VInitSource::TanProfile, VInitSource::ExactTransform] {
            assert!(matches!(
                v_initial(grid, source, &model),
                Err(Error::DegenerateNode { index: 2, .. })
            ));
        }
        let grid = PeriodicGrid::new(10).unwrap();
        let tan = v_initial(grid, VInitSource::TanProfile, &model).unwrap();
        let exact = v_initial(grid, VInitSource::ExactTransform, &model).unwrap();
        assert_eq!(tan.values()[0], 0.0);
        assert!(exact.values()[0].abs() < 1e-15);
        assert!(tan.values()[5].abs() < 1e-15 && exact.values()[5].abs() < 1e-15);
        // x = 3/8: −1 against ln tan(π/8)
        assert!((builtin::v0_tan(0.375) + 1.0).abs() < 1e-14);
        let at = model.k_v(builtin::u0(0.375)).unwrap();
        assert!((at - FRAC_PI_8.tan().ln()).abs() < 1e-12);
        assert!((at + 0.8814).abs() < 1e-4);
    }

    #[test]
    fn constants_are_steady() {
        let model = CoefficientModel::oseen_frank(0.3, 1.0).unwrap();
        for theta in [0.0, 0.5, 1.0] {
            let s = VScheme::new(model.clone(), config(theta, 0.4)).unwrap();
            let st = state(vec![0.6; 5]);
            let (next, _) = s.step(&st).unwrap();
            assert!(next.values.values().iter().all(|&v| (v - 0.6).abs() < 1e-15));
        }
    }

    #[test]
    fn isotropic_model_reduces_to_heat_stencil() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let values: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let vs = VScheme::new(CoefficientModel::oseen_frank(1.0, 1.0).unwrap(), config(0.0, 0.3)).unwrap();
        let ws = WScheme::new(CoefficientModel::constant(1.0), config(0.0, 0.3)).unwrap();
        let (a, _) = vs.step(&state(values.clone())).unwrap();
        let (b, _) = ws.step(&state(values)).unwrap();
        for (x, y) in a.values.values().iter().zip(b.values.values()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn explicit_step_matches_transcription() {
        let model = CoefficientModel::quadratic();
        let s = VScheme::new(model, config(0.0, 0.1)).unwrap();
        let v = [0.0, 1.0, 0.0, -1.0];
        let (next, _) = s.step(&state(v.to_vec())).unwrap();
        // c² = sin²(k̄_v(v)) with k̄_v(v) = 2·atan(eᵛ) for k1 = 0
        let g: Vec<f64> = v.iter().map(|&x: &f64| (2.0 * x.exp().atan()).sin().powi(2)).collect();
        let (dx, dt) = (0.25, 0.1 * 0.0625);
        for j in 0..4 {
            let (jm, jp) = ((j + 3) % 4, (j + 1) % 4);
            let right = 0.5 * (g[jp] + g[j]) * ((v[jp] - v[j]) / dx);
            let left = 0.5 * (g[j] + g[jm]) * ((v[j] - v[jm]) / dx);
            let expected = v[j] + dt * ((right - left) / dx);
            assert!((next.values.values()[j] - expected).abs() < 1e-15, "node {j}");
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 16;
        let grid = PeriodicGrid::new(n).unwrap();
        for (k1, theta) in [(0.0, 0.5), (0.1, 1.0), (2.0, 0.3)] {
            let s = VScheme::new(CoefficientModel::oseen_frank(k1, 1.0).unwrap(), config(theta, 3.0)).unwrap();
            let dt = s.config.dt(&grid);
            let old: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let new: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let [lower, diag, upper] = s.jacobian(&old, &new, dt, grid.dx()).unwrap();
            let dense = dense_cyclic(&lower, &diag, &upper);
            let h = 1e-6;
            for k in 0..n {
                let (mut plus, mut minus) = (new.clone(), new.clone());
                plus[k] += h;
                minus[k] -= h;
                let fp = s.residual(&old, &plus, dt, grid.dx()).unwrap();
                let fm = s.residual(&old, &minus, dt, grid.dx()).unwrap();
                for j in 0..n {
                    let fd = (fp[j] - fm[j]) / (2.0 * h);
                    let scale = dense[j][k].abs().max(1.0);
                    assert!((fd - dense[j][k]).abs() / scale < 1e-6, "k1={k1} ({j},{k})");
                }
            }
        }
    }

    #[test]
    fn implicit_step_in_large_step_regime_converges() {
        let model = CoefficientModel::quadratic();
        let s = VScheme::new(model.clone(), config(0.5, 100.0)).unwrap();
        let grid = PeriodicGrid::new(99).unwrap();
        let v0 = v_initial(grid, VInitSource::ExactTransform, &model).unwrap();
        let (_, report) = s.step(&SolverState::initial(v0)).unwrap();
        assert!(report.final_residual <= 1e-12);
    }

    #[test]
    fn transforms_back_to_angles() {
        let model = CoefficientModel::quadratic();
        let grid = PeriodicGrid::new(6).unwrap();
        let u = u_from_v(&GridFunction::constant(grid, 0.0), &model).unwrap();
        assert!(u.values().iter().all(|&x| (x - FRAC_PI_2).abs() < 1e-15));
        let u = u_from_w(&GridFunction::constant(grid, 0.0), &model).unwrap();
        assert!(u.values().iter().all(|&x| (x - FRAC_PI_2).abs() < 1e-12));
        let angles: Vec<f64> = (1..7).map(|i| PI * i as f64 / 7.0).collect();
        let w = GridFunction::new(grid, angles.iter().map(|u| -u.cos()).collect()).unwrap();
        for (a, b) in u_from_w(&w, &model).unwrap().values().iter().zip(&angles) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
