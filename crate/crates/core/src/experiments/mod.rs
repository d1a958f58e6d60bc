//! Experiment configuration and the drivers behind the command-line
//! subcommands: single runs, refinement ladders, the `k1 → 0` sweep and the
//! property suites.

pub mod builtin;
pub mod checks;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::coefficients::CoefficientModel;
use crate::diagnostics::{
    error_table, monitor_bounds, BoundReport, CompareIn, ConvergenceTable, ErrorSampling, FinalState, Formulation,
};
use crate::error::{Error, Result};
use crate::grid::{cross_grid_error, GridFunction, InterpolantKind, Norm, PeriodicGrid};
use crate::scheme_v::{u_from_w, v_initial, VInitSource, VScheme};
use crate::scheme_w::{project_initial, WScheme};
use crate::stepping::{run, CflPolicy, InitMode, ThetaSchemeConfig, Trajectory};

pub use checks::{run_check, CheckOutcome, CheckReport, Suite};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    W,
    V,
}

/// How a grid label `N + 1` is turned into a cell count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Odd,
    Even,
    AsGiven,
}

impl Parity {
    /// `N = label − 1`, bumped up by one if it has the wrong parity.
    pub fn cells(self, label: usize) -> Result<usize> {
        if label < 4 {
            return Err(Error::Config(format!("grid label {label} is too small")));
        }
        let n = label - 1;
        Ok(match self {
            Parity::Odd if n.is_multiple_of(2) => n + 1,
            Parity::Even if n % 2 == 1 => n + 1,
            _ => n,
        })
    }
}

/// Full description of an experiment. Every field can be set from a
/// `key = value` line; see [`ExperimentSpec::set`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub scheme: SchemeKind,
    pub k1: f64,
    pub k2: f64,
    /// Use the closed form `B = 1 − w²` when `(k1, k2) = (0, 1)`.
    pub quadratic: bool,
    pub theta: f64,
    pub lambda: f64,
    /// Grid labels `N + 1`, strictly increasing.
    pub ladder: Vec<usize>,
    /// Label of the reference grid for convergence tables.
    pub reference: usize,
    pub parity: Parity,
    pub t_end: f64,
    pub init: InitMode,
    pub v_init: Vec<VInitSource>,
    pub compare_in: CompareIn,
    pub sampling: ErrorSampling,
    pub cfl: CflPolicy,
    /// Snapshot times for single runs; empty means five equally spaced.
    pub snapshots: Vec<f64>,
    pub k1_list: Vec<f64>,
    /// Cell count for the `k1 > 0` runs of the sweep.
    pub k1_grid: usize,
    pub seed: u64,
    pub out: Option<String>,
}

impl Default for ExperimentSpec {
    /// The desk-scale odd-grid convergence study.
    fn default() -> Self {
        Self {
            scheme: SchemeKind::W,
            k1: 0.0,
            k2: 1.0,
            quadratic: true,
            theta: 0.5,
            lambda: 100.0,
            ladder: (0..5).map(|k| 100 << k).collect(),
            reference: 100 << 5,
            parity: Parity::Odd,
            t_end: 0.04,
            init: InitMode::PointSample,
            v_init: vec![VInitSource::ExactTransform],
            compare_in: CompareIn::W,
            sampling: ErrorSampling::FineMidpoints,
            cfl: CflPolicy::Warn,
            snapshots: Vec::new(),
            k1_list: vec![1e-1, 1e-2, 1e-3, 1e-4],
            k1_grid: 400,
            seed: 0,
            out: None,
        }
    }
}

/// Named starting points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Odd grids, `w`-scheme.
    OddGrid,
    /// `v`-scheme with both initial data sources, compared in `u`.
    VScheme,
    /// Even grids, where `x = 1/4, 3/4` are nodes.
    EvenGrid,
    /// Long even-grid run towards the steady state.
    Steady,
    /// The desk-scale ladders extended to the full `100·2⁸` reference.
    FullScale,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "odd" => Preset::OddGrid,
            "v" => Preset::VScheme,
            "even" => Preset::EvenGrid,
            "steady" => Preset::Steady,
            "full" => Preset::FullScale,
            _ => return Err(Error::Config(format!("unknown preset `{s}`"))),
        })
    }
}

impl ExperimentSpec {
    pub fn preset(preset: Preset) -> Self {
        let base = Self::default();
        match preset {
            Preset::OddGrid => base,
            Preset::VScheme => Self {
                scheme: SchemeKind::V,
                v_init: vec![VInitSource::ExactTransform, VInitSource::TanProfile],
                compare_in: CompareIn::U,
                ..base
            },
            Preset::EvenGrid => Self {
                parity: Parity::Even,
                ladder: (0..4).map(|k| 100 << k).collect(),
                ..base
            },
            Preset::Steady => Self {
                parity: Parity::Even,
                ladder: vec![201],
                t_end: 2.0,
                ..base
            },
            Preset::FullScale => Self {
                ladder: (0..8).map(|k| 100 << k).collect(),
                reference: 100 << 8,
                ..base
            },
        }
    }

    /// Parses a flat `key = value` file; `#` starts a comment.
    pub fn from_config(text: &str, base: Self) -> Result<Self> {
        let mut spec = base;
        for (number, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", number + 1)))?;
            spec.set(key.trim(), value.trim())?;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = || Error::Config(format!("bad value `{value}` for `{key}`"));
        match key {
            "scheme" => {
                self.scheme = match value {
                    "w" => SchemeKind::W,
                    "v" => SchemeKind::V,
                    _ => return Err(bad()),
                }
            }
            "k1" => self.k1 = parse(value, key)?,
            "k2" => self.k2 = parse(value, key)?,
            "quadratic" => self.quadratic = parse(value, key)?,
            "theta" => self.theta = parse(value, key)?,
            "lambda" => self.lambda = parse(value, key)?,
            "grid" | "ladder" => self.ladder = parse_list(value, key)?,
            "reference" => self.reference = parse(value, key)?,
            "parity" => {
                self.parity = match value {
                    "odd" => Parity::Odd,
                    "even" => Parity::Even,
                    "as_given" => Parity::AsGiven,
                    _ => return Err(bad()),
                }
            }
            "T" | "t_end" => self.t_end = parse(value, key)?,
            "init" => {
                self.init = match value {
                    "point" => InitMode::PointSample,
                    "cell" => InitMode::CellAverage,
                    _ => return Err(bad()),
                }
            }
            "v_init" => {
                self.v_init = match value {
                    "exact" => vec![VInitSource::ExactTransform],
                    "tan" => vec![VInitSource::TanProfile],
                    "both" => vec![VInitSource::ExactTransform, VInitSource::TanProfile],
                    _ => return Err(bad()),
                }
            }
            "compare_in" => {
                self.compare_in = match value {
                    "w" => CompareIn::W,
                    "u" => CompareIn::U,
                    _ => return Err(bad()),
                }
            }
            "sampling" => {
                self.sampling = match value {
                    "coarse" => ErrorSampling::CoarsePoints,
                    "fine" => ErrorSampling::FineMidpoints,
                    _ => return Err(bad()),
                }
            }
            "cfl" => {
                self.cfl = match value {
                    "strict" => CflPolicy::Strict,
                    "warn" => CflPolicy::Warn,
                    "off" => CflPolicy::Off,
                    _ => return Err(bad()),
                }
            }
            "snapshots" => self.snapshots = parse_list(value, key)?,
            "k1_list" => self.k1_list = parse_list(value, key)?,
            "k1_grid" => self.k1_grid = parse(value, key)?,
            "seed" => self.seed = parse(value, key)?,
            "out" => self.out = Some(value.to_string()),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.config()?;
        if self.ladder.is_empty() {
            return Err(Error::Config("empty grid ladder".into()));
        }
        if self.ladder.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::Config(format!(
                "ladder {:?} is not strictly increasing",
                self.ladder
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("T = {} must be positive", self.t_end)));
        }
        if self.v_init.is_empty() {
            return Err(Error::Config("no v initial data source".into()));
        }
        if self.k1_grid < 4 {
            return Err(Error::Config(format!("k1_grid = {} is too small", self.k1_grid)));
        }
        self.model()?;
        Ok(())
    }

    pub fn config(&self) -> Result<ThetaSchemeConfig> {
        Ok(ThetaSchemeConfig::new(self.theta, self.lambda)?
            .with_policy(self.cfl)
            .with_init_mode(self.init))
    }

    pub fn model(&self) -> Result<CoefficientModel> {
        model_for(self.k1, self.k2, self.quadratic)
    }

    pub fn grid(&self, label: usize) -> Result<PeriodicGrid> {
        PeriodicGrid::new(self.parity.cells(label)?)
    }

    fn snapshot_times(&self) -> Vec<f64> {
        if self.snapshots.is_empty() {
            (0..=4).map(|k| self.t_end * k as f64 / 4.0).collect()
        } else {
            self.snapshots.clone()
        }
    }
}

fn parse<T: FromStr>(value: &str, key: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_list<T: FromStr>(value: &str, key: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(s, key))
        .collect()
}

fn model_for(k1: f64, k2: f64, quadratic: bool) -> Result<CoefficientModel> {
    if quadratic && k1 == 0.0 && k2 == 1.0 {
        Ok(CoefficientModel::quadratic())
    } else {
        CoefficientModel::oseen_frank(k1, k2)
    }
}

/// `w⁰ = k_w(u₀)` on `grid`; models without a transform get `−sin 2πx`.
pub fn initial_w(model: &CoefficientModel, grid: PeriodicGrid, mode: InitMode) -> Result<GridFunction> {
    if matches!(model, CoefficientModel::Quadratic(_) | CoefficientModel::ClosedForm(_)) {
        return project_initial(builtin::w0, grid, mode);
    }
    // k_w is defined on [0, π], which contains the range of u₀
    project_initial(|x| model.k_w(builtin::u0(x)).unwrap_or(f64::NAN), grid, mode)
}

/// One solve with its stored levels.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub formulation: Formulation,
    pub trajectory: Trajectory,
    /// Bound monitor over the stored levels (`w`-scheme only).
    pub bounds: Option<BoundReport>,
}

impl RunOutput {
    pub fn final_state(&self) -> FinalState {
        let last = self.trajectory.last();
        FinalState {
            values: last.values.clone(),
            t: last.t,
            formulation: self.formulation,
        }
    }
}

fn solve_w(model: CoefficientModel, spec: &ExperimentSpec, grid: PeriodicGrid, times: &[f64]) -> Result<RunOutput> {
    let config = spec.config()?;
    let w0 = initial_w(&model, grid, spec.init)?;
    let scheme = WScheme::new(model, config)?;
    let trajectory = run(&scheme, w0, spec.t_end, times)?;
    Ok(RunOutput {
        formulation: Formulation::W,
        bounds: Some(monitor_bounds(&trajectory)),
        trajectory,
    })
}

fn solve_v(
    model: CoefficientModel,
    spec: &ExperimentSpec,
    grid: PeriodicGrid,
    source: VInitSource,
    times: &[f64],
) -> Result<RunOutput> {
    let v0 = v_initial(grid, source, &model)?;
    let scheme = VScheme::new(model, spec.config()?)?;
    Ok(RunOutput {
        formulation: Formulation::V,
        trajectory: run(&scheme, v0, spec.t_end, times)?,
        bounds: None,
    })
}

/// A single run on the grid with label `label`, storing the snapshot levels.
/// The `v`-scheme uses the first configured initial data source.
pub fn run_single(spec: &ExperimentSpec, label: usize) -> Result<RunOutput> {
    spec.validate()?;
    let grid = spec.grid(label)?;
    let times = spec.snapshot_times();
    match spec.scheme {
        SchemeKind::W => solve_w(spec.model()?, spec, grid, &times),
        SchemeKind::V => solve_v(spec.model()?, spec, grid, spec.v_init[0], &times),
    }
}

/// One convergence table.
#[derive(Debug, Clone, Serialize)]
pub struct LabelledTable {
    pub label: String,
    pub cells: Vec<usize>,
    pub reference_cells: usize,
    pub table: ConvergenceTable,
}

/// Runs the ladder (and the `w`-scheme reference) in parallel and tabulates
/// the errors at `T`. For the `v`-scheme one table per initial data source
/// is produced, all against the same reference.
pub fn converge(spec: &ExperimentSpec) -> Result<Vec<LabelledTable>> {
    spec.validate()?;
    let model = spec.model()?;
    let cells: Vec<usize> = spec
        .ladder
        .iter()
        .map(|&l| spec.parity.cells(l))
        .collect::<Result<_>>()?;
    let reference_cells = spec.parity.cells(spec.reference)?;
    if cells.iter().any(|&n| n >= reference_cells) {
        return Err(Error::Config(format!(
            "reference with {reference_cells} cells is not finer than the ladder {cells:?}"
        )));
    }
    let sources: Vec<Option<VInitSource>> = match spec.scheme {
        SchemeKind::W => vec![None],
        SchemeKind::V => spec.v_init.iter().copied().map(Some).collect(),
    };
    // job list: the reference first, then every (source, level) pair
    let mut jobs = vec![(None, reference_cells)];
    for source in &sources {
        jobs.extend(cells.iter().map(|&n| (*source, n)));
    }
    let finals: Vec<FinalState> = jobs
        .par_iter()
        .map(|&(source, n)| {
            let grid = PeriodicGrid::new(n)?;
            let out = match source {
                None => solve_w(model.clone(), spec, grid, &[])?,
                Some(src) => solve_v(model.clone(), spec, grid, src, &[])?,
            };
            Ok(out.final_state())
        })
        .collect::<Result<_>>()?;
    let (reference, runs) = finals.split_first().expect("reference job");
    sources
        .iter()
        .zip(runs.chunks(cells.len()))
        .map(|(source, chunk)| {
            let label = match source {
                None => "w".to_string(),
                Some(VInitSource::ExactTransform) => "v_exact".to_string(),
                Some(VInitSource::TanProfile) => "v_tan".to_string(),
            };
            Ok(LabelledTable {
                label,
                cells: cells.clone(),
                reference_cells,
                table: error_table(chunk, reference, spec.compare_in, spec.sampling, &model)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct K1Distance {
    pub k1: f64,
    pub cells: usize,
    /// `L¹` distance of the cell-constant `w` interpolants.
    pub l1_w: f64,
    /// Same in `u = k̄_w(w)`.
    pub l1_u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct K1Comparison {
    pub baseline_cells: usize,
    pub rows: Vec<K1Distance>,
}

impl fmt::Display for K1Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "k1,N,l1_w,l1_u")?;
        for r in &self.rows {
            writeln!(f, "{:e},{},{:.6e},{:.6e}", r.k1, r.cells, r.l1_w, r.l1_u)?;
        }
        Ok(())
    }
}

/// Distances at `T` between `k1 > 0` runs on `k1_grid` cells and the
/// `k1 = 0` run on the nearest odd grid below.
pub fn compare_k1(spec: &ExperimentSpec) -> Result<K1Comparison> {
    spec.validate()?;
    if spec.k1_list.iter().any(|&k| !(k > 0.0)) {
        return Err(Error::Config("the k1 list must be positive".into()));
    }
    let baseline_cells = if spec.k1_grid.is_multiple_of(2) {
        spec.k1_grid - 1
    } else {
        spec.k1_grid
    };
    let mut jobs = vec![(0.0, baseline_cells)];
    jobs.extend(spec.k1_list.iter().map(|&k| (k, spec.k1_grid)));
    let finals: Vec<(CoefficientModel, GridFunction)> = jobs
        .par_iter()
        .map(|&(k1, n)| {
            let model = model_for(k1, spec.k2, spec.quadratic)?;
            let out = solve_w(model.clone(), spec, PeriodicGrid::new(n)?, &[])?;
            Ok((model, out.trajectory.last().values.clone()))
        })
        .collect::<Result<_>>()?;
    let (base_model, base_w) = &finals[0];
    let base_u = u_from_w(base_w, base_model)?;
    let rows = finals[1..]
        .iter()
        .zip(&spec.k1_list)
        .map(|((model, w), &k1)| {
            let u = u_from_w(w, model)?;
            let (coarse_w, fine_w, coarse_u, fine_u) = if w.len() > base_w.len() {
                (base_w, w, &base_u, &u)
            } else {
                (w, base_w, &u, &base_u)
            };
            Ok(K1Distance {
                k1,
                cells: w.len(),
                l1_w: cross_grid_error(coarse_w, fine_w, Norm::L1, InterpolantKind::ConstantCell)?,
                l1_u: cross_grid_error(coarse_u, fine_u, Norm::L1, InterpolantKind::ConstantCell)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(K1Comparison { baseline_cells, rows })
}
