//! Direct solver for periodic (cyclic) tridiagonal systems.
//!
//! Row `j` reads `lower[j]·x[j−1] + diag[j]·x[j] + upper[j]·x[j+1] = rhs[j]`
//! with indices taken modulo `n`, so `lower[0]` and `upper[n−1]` are the two
//! corner entries. The corners are removed by a Sherman–Morrison rank-one
//! correction around two Thomas sweeps.

use crate::error::{Error, Result};

/// Tridiagonal Thomas sweep without the corner entries.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64], out: &mut [f64], scratch: &mut [f64]) -> Result<()> {
    let n = diag.len();
    let mut beta = diag[0];
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::SingularSystem { row: 0, pivot: beta });
    }
    out[0] = rhs[0] / beta;
    for j in 1..n {
        scratch[j] = upper[j - 1] / beta;
        beta = diag[j] - lower[j] * scratch[j];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::SingularSystem { row: j, pivot: beta });
        }
        out[j] = (rhs[j] - lower[j] * out[j - 1]) / beta;
    }
    for j in (0..n - 1).rev() {
        out[j] -= scratch[j + 1] * out[j + 1];
    }
    Ok(())
}

/// Solves the cyclic tridiagonal system. Requires `n ≥ 3`.
pub fn solve_cyclic(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n < 3 || lower.len() != n || upper.len() != n || rhs.len() != n {
        return Err(Error::InvalidGrid(format!(
            "cyclic system needs n >= 3 and matching lengths (n = {n})"
        )));
    }
    let alpha = upper[n - 1];
    let beta = lower[0];
    let mut scratch = vec![0.0; n];
    let mut x = vec![0.0; n];
    if alpha == 0.0 && beta == 0.0 {
        thomas(lower, diag, upper, rhs, &mut x, &mut scratch)?;
        return Ok(x);
    }
    let gamma = if diag[0] != 0.0 { -diag[0] } else { -1.0 };

    let mut modified = diag.to_vec();
    modified[0] -= gamma;
    modified[n - 1] -= alpha * beta / gamma;

    thomas(lower, &modified, upper, rhs, &mut x, &mut scratch)?;

    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let mut z = vec![0.0; n];
    thomas(lower, &modified, upper, &u, &mut z, &mut scratch)?;

    let denom = 1.0 + z[0] + beta * z[n - 1] / gamma;
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::SingularSystem {
            row: n - 1,
            pivot: denom,
        });
    }
    let fact = (x[0] + beta * x[n - 1] / gamma) / denom;
    for (xi, zi) in x.iter_mut().zip(&z) {
        *xi -= fact * zi;
    }
    Ok(x)
}
