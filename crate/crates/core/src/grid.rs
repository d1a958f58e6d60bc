//! Periodic equidistant grids, nodal functions and the discrete operators
//! acting on them.
//!
//! Nodes are `x_j = j·Δx` for `j = 0..n`, and node `n` is identified with
//! node `0`. Every operator wraps indices modulo `n`; there are no ghost
//! cells.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equidistant periodic grid with `n` cells on `[0, length)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    n: usize,
    length: f64,
}

impl PeriodicGrid {
    /// Grid on the unit interval.
    pub fn new(n: usize) -> Result<Self> {
        Self::with_length(n, 1.0)
    }

    pub fn with_length(n: usize, length: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 cells, got {n}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("domain length {length}")));
        }
        Ok(Self { n, length })
    }

    /// Number of cells, equal to the number of distinct nodes.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Coordinate of node `j`, computed as `j·length/n` so that nodes at
    /// rational positions such as `1/4` are exact when representable.
    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.length / self.n as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.node(j))
    }

    /// Periodic index wrap.
    #[inline]
    pub fn wrap(&self, j: isize) -> usize {
        j.rem_euclid(self.n as isize) as usize
    }

    /// Label used by the convergence tables: number of grid points on the
    /// closed interval, counting both identified endpoints.
    pub fn n_plus_1(&self) -> usize {
        self.n + 1
    }

    fn check_same(&self, other: &PeriodicGrid) -> Result<()> {
        if self.n != other.n {
            return Err(Error::GridMismatch {
                left: self.n,
                right: other.n,
            });
        }
        if self.length != other.length {
            return Err(Error::IncompatibleDomains {
                left: self.length,
                right: other.length,
            });
        }
        Ok(())
    }
}

/// Which piecewise interpolant to reconstruct from nodal values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InterpolantKind {
    /// Linear between consecutive nodes.
    Linear,
    /// Constant `g_j` on the cell `[x_{j-1/2}, x_{j+1/2})`.
    ConstantCell,
    /// Constant `g_j` on the interval `[x_j, x_{j+1})`.
    ConstantInterval,
}

/// Discrete `L^p` exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    LInf,
}

/// The three discrete norms of a grid function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteNorms {
    pub sup: f64,
    pub l1: f64,
    pub bv: f64,
}

/// Nodal values on a periodic grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch {
                left: grid.n(),
                right: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: PeriodicGrid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.n()],
        }
    }

    /// Samples `f` at the nodes.
    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().map(f).collect())
    }

    /// Fallible sampling, for transforms that can fail at individual nodes.
    pub fn try_from_fn(grid: PeriodicGrid, f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let values = grid.nodes().map(f).collect::<Result<Vec<_>>>()?;
        Self::new(grid, values)
    }

    /// Builds from values already known to be finite and of the right length.
    pub(crate) fn from_vec_unchecked(grid: PeriodicGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at a periodically wrapped index.
    #[inline]
    pub fn at(&self, j: isize) -> f64 {
        self.values[self.grid.wrap(j)]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn try_map(&self, f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let values = self.values.iter().map(|&v| f(v)).collect::<Result<Vec<_>>>()?;
        Self::new(self.grid, values)
    }

    /// `D₊g_j = (g_{j+1} − g_j)/Δx`.
    pub fn forward_diff(&self) -> Self {
        let n = self.len();
        let dx = self.grid.dx();
        let values = (0..n)
            .map(|j| (self.values[(j + 1) % n] - self.values[j]) / dx)
            .collect();
        Self::from_vec_unchecked(self.grid, values)
    }

    /// `D₋g_j = (g_j − g_{j−1})/Δx`.
    pub fn backward_diff(&self) -> Self {
        let n = self.len();
        let dx = self.grid.dx();
        let values = (0..n)
            .map(|j| (self.values[j] - self.values[(j + n - 1) % n]) / dx)
            .collect();
        Self::from_vec_unchecked(self.grid, values)
    }

    /// `D²g = D₊D₋g`. The rounding matches the composition exactly.
    pub fn second_diff(&self) -> Self {
        let n = self.len();
        let values = (0..n)
            .map(|j| second_diff_at(&self.values, j, self.grid.dx()))
            .collect();
        Self::from_vec_unchecked(self.grid, values)
    }

    pub fn norms(&self) -> DiscreteNorms {
        let n = self.len();
        let sup = self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let l1 = self.grid.dx() * self.values.iter().map(|v| v.abs()).sum::<f64>();
        DiscreteNorms {
            sup,
            l1,
            bv: total_variation(&self.values, n),
        }
    }

    /// Periodic total variation, including the wrap jump.
    pub fn bv(&self) -> f64 {
        total_variation(&self.values, self.len())
    }

    /// Evaluates the chosen interpolant at `x`, reduced modulo the domain
    /// length.
    pub fn interpolate(&self, x: f64, kind: InterpolantKind) -> f64 {
        let length = self.grid.length();
        let mut pos = x.rem_euclid(length) * self.len() as f64 / length;
        // snap to a node when x was produced by `PeriodicGrid::node`
        let nearest = pos.round();
        if (pos - nearest).abs() <= 4.0 * f64::EPSILON * nearest.max(1.0) {
            pos = nearest;
        }
        self.interpolate_in_cells(pos, kind)
    }

    /// Evaluation at `pos` measured in cell widths from node 0.
    fn interpolate_in_cells(&self, pos: f64, kind: InterpolantKind) -> f64 {
        let n = self.len();
        match kind {
            InterpolantKind::Linear => {
                let j = pos.floor();
                let frac = pos - j;
                let j = (j as isize).rem_euclid(n as isize) as usize;
                let a = self.values[j];
                let b = self.values[(j + 1) % n];
                (1.0 - frac) * a + frac * b
            }
            InterpolantKind::ConstantCell => {
                let j = (pos + 0.5).floor() as isize;
                self.values[j.rem_euclid(n as isize) as usize]
            }
            InterpolantKind::ConstantInterval => {
                let j = pos.floor() as isize;
                self.values[j.rem_euclid(n as isize) as usize]
            }
        }
    }

    /// Evaluation at the exact rational position `num/den` (in cell widths).
    /// Piece boundaries are resolved in integer arithmetic.
    fn interpolate_rational(&self, num: u128, den: u128, kind: InterpolantKind) -> f64 {
        let n = self.len();
        match kind {
            InterpolantKind::Linear => {
                let j = (num / den) as usize % n;
                let frac = (num % den) as f64 / den as f64;
                (1.0 - frac) * self.values[j] + frac * self.values[(j + 1) % n]
            }
            InterpolantKind::ConstantCell => {
                let j = ((2 * num + den) / (2 * den)) as usize % n;
                self.values[j]
            }
            InterpolantKind::ConstantInterval => self.values[(num / den) as usize % n],
        }
    }
}

#[inline]
pub(crate) fn second_diff_at(values: &[f64], j: usize, dx: f64) -> f64 {
    let n = values.len();
    let forward = (values[(j + 1) % n] - values[j]) / dx;
    let backward = (values[j] - values[(j + n - 1) % n]) / dx;
    (forward - backward) / dx
}

fn total_variation(values: &[f64], n: usize) -> f64 {
    (0..n).map(|j| (values[j] - values[(j + n - 1) % n]).abs()).sum()
}

/// `θ·b + (1−θ)·a`, where `a` is the old and `b` the new time level.
pub fn theta_combination(a: &GridFunction, b: &GridFunction, theta: f64) -> Result<GridFunction> {
    a.grid.check_same(&b.grid)?;
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::Domain(format!("theta = {theta} outside [0, 1]")));
    }
    let values = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(&old, &new)| theta * new + (1.0 - theta) * old)
        .collect();
    Ok(GridFunction::from_vec_unchecked(a.grid, values))
}

/// Distance between the interpolants of `coarse` and `fine`.
///
/// Both interpolants are sampled at the centres of the pieces of the fine
/// interpolant: the nodes for [`InterpolantKind::ConstantCell`], the interval
/// midpoints otherwise. The `L¹` distance is weighted by the fine `Δx`.
pub fn cross_grid_error(coarse: &GridFunction, fine: &GridFunction, p: Norm, kind: InterpolantKind) -> Result<f64> {
    let (cg, fg) = (coarse.grid(), fine.grid());
    if cg.length() != fg.length() {
        return Err(Error::IncompatibleDomains {
            left: cg.length(),
            right: fg.length(),
        });
    }
    let (nc, nf) = (cg.n() as u128, fg.n() as u128);
    let mut sum = 0.0;
    let mut max = 0.0_f64;
    for i in 0..fg.n() {
        let (fine_value, num, den) = match kind {
            // node i of the fine grid sits at i·nc/nf coarse cells
            InterpolantKind::ConstantCell => (fine.values[i], i as u128 * nc, nf),
            InterpolantKind::Linear => (
                0.5 * (fine.values[i] + fine.values[(i + 1) % fg.n()]),
                (2 * i as u128 + 1) * nc,
                2 * nf,
            ),
            InterpolantKind::ConstantInterval => (fine.values[i], (2 * i as u128 + 1) * nc, 2 * nf),
        };
        let diff = (coarse.interpolate_rational(num, den, kind) - fine_value).abs();
        sum += diff;
        max = max.max(diff);
    }
    Ok(match p {
        Norm::L1 => sum * fg.dx(),
        Norm::LInf => max,
    })
}

/// Distance between the interpolants of `coarse` and `fine`, sampled at the
/// centres of the coarse pieces (coarse nodes for
/// [`InterpolantKind::ConstantCell`], coarse interval midpoints otherwise)
/// and weighted by the coarse `Δx`. On nested grids this compares nodal
/// values directly, without the `O(Δx)` offset between two step functions.
pub fn coarse_point_error(coarse: &GridFunction, fine: &GridFunction, p: Norm, kind: InterpolantKind) -> Result<f64> {
    let (cg, fg) = (coarse.grid(), fine.grid());
    if cg.length() != fg.length() {
        return Err(Error::IncompatibleDomains {
            left: cg.length(),
            right: fg.length(),
        });
    }
    let (nc, nf) = (cg.n() as u128, fg.n() as u128);
    let mut sum = 0.0;
    let mut max = 0.0_f64;
    for j in 0..cg.n() {
        let (coarse_value, num, den) = match kind {
            // coarse node j sits at j·nf/nc fine cells
            InterpolantKind::ConstantCell => (coarse.values[j], j as u128 * nf, nc),
            InterpolantKind::Linear => (
                0.5 * (coarse.values[j] + coarse.values[(j + 1) % cg.n()]),
                (2 * j as u128 + 1) * nf,
                2 * nc,
            ),
            InterpolantKind::ConstantInterval => (coarse.values[j], (2 * j as u128 + 1) * nf, 2 * nc),
        };
        let diff = (fine.interpolate_rational(num, den, kind) - coarse_value).abs();
        sum += diff;
        max = max.max(diff);
    }
    Ok(match p {
        Norm::L1 => sum * cg.dx(),
        Norm::LInf => max,
    })
}
