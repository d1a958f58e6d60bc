//! Incomplete elliptic integrals and the Jacobi amplitude.
//!
//! Parameter convention is `m = k²` throughout, so
//! `F(φ|m) = ∫₀^φ dθ / √(1 − m sin²θ)` and
//! `E(φ|m) = ∫₀^φ √(1 − m sin²θ) dθ`.
//! Both are evaluated through Carlson's symmetric forms `R_F` and `R_D`
//! using the duplication theorem.
//!
//! Negative `m` is accepted: it arises for Oseen–Frank models with
//! `k1 > k2` and the symmetric forms remain well conditioned there.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

const MAX_DUPLICATIONS: usize = 200;

/// Carlson's `R_F(x, y, z)`; at most one argument may be zero.
pub fn carlson_rf(x: f64, y: f64, z: f64) -> Result<f64> {
    const ERRTOL: f64 = 8e-4;
    if x < 0.0 || y < 0.0 || z < 0.0 || [x + y, y + z, z + x].contains(&0.0) {
        return Err(Error::Domain(format!("R_F({x}, {y}, {z})")));
    }
    let (mut x, mut y, mut z) = (x, y, z);
    for _ in 0..MAX_DUPLICATIONS {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        z = 0.25 * (z + lambda);
        let mean = (x + y + z) / 3.0;
        let (dx, dy, dz) = (1.0 - x / mean, 1.0 - y / mean, 1.0 - z / mean);
        if dx.abs().max(dy.abs()).max(dz.abs()) < ERRTOL {
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            return Ok((1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0) / mean.sqrt());
        }
    }
    Err(Error::NoConvergence {
        what: "R_F duplication",
        iterations: MAX_DUPLICATIONS,
        residual: f64::NAN,
    })
}

/// Carlson's `R_D(x, y, z)`; `z > 0` and at most one of `x`, `y` zero.
pub fn carlson_rd(x: f64, y: f64, z: f64) -> Result<f64> {
    const ERRTOL: f64 = 5e-4;
    if x < 0.0 || y < 0.0 || z <= 0.0 || x + y == 0.0 {
        return Err(Error::Domain(format!("R_D({x}, {y}, {z})")));
    }
    let (mut x, mut y, mut z) = (x, y, z);
    let mut sum = 0.0;
    let mut fac = 1.0;
    for _ in 0..MAX_DUPLICATIONS {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        sum += fac / (sz * (z + lambda));
        fac *= 0.25;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        z = 0.25 * (z + lambda);
        let mean = 0.2 * (x + y + 3.0 * z);
        let (dx, dy, dz) = ((mean - x) / mean, (mean - y) / mean, (mean - z) / mean);
        if dx.abs().max(dy.abs()).max(dz.abs()) < ERRTOL {
            let ea = dx * dy;
            let eb = dz * dz;
            let ec = ea - eb;
            let ed = ea - 6.0 * eb;
            let ee = ed + ec + ec;
            let series = 1.0
                + ed * (-3.0 / 14.0 + 9.0 / 88.0 * ed - 9.0 / 52.0 * dz * ee)
                + dz * (ee / 6.0 + dz * (-9.0 / 22.0 * ec + dz * 3.0 / 26.0 * ea));
            return Ok(3.0 * sum + fac * series / (mean * mean.sqrt()));
        }
    }
    Err(Error::NoConvergence {
        what: "R_D duplication",
        iterations: MAX_DUPLICATIONS,
        residual: f64::NAN,
    })
}

fn check_phi_m(phi: f64, m: f64) -> Result<()> {
    if !phi.is_finite() || phi.abs() > FRAC_PI_2 * (1.0 + 4.0 * f64::EPSILON) {
        return Err(Error::Domain(format!("amplitude {phi} outside [-pi/2, pi/2]")));
    }
    if !m.is_finite() || m > 1.0 {
        return Err(Error::Domain(format!("parameter m = {m} > 1")));
    }
    Ok(())
}

/// `(sin φ, cos²φ, 1 − m sin²φ)`, the last formed without cancellation
/// from the complementary parameter `mc = 1 − m`.
#[inline]
fn carlson_args(phi: f64, m: f64, mc: f64) -> (f64, f64, f64) {
    let (s, c) = phi.sin_cos();
    let c2 = c * c;
    let y = if m > 0.5 { c2 + mc * s * s } else { 1.0 - m * s * s };
    (s, c2, y)
}

/// Incomplete elliptic integral of the first kind `F(φ|m)`.
pub fn ellip_f(phi: f64, m: f64) -> Result<f64> {
    ellip_f_mc(phi, m, 1.0 - m)
}

/// `F(φ|m)` with the complementary parameter supplied separately, for
/// callers that know `1 − m` more accurately than `m`.
pub(crate) fn ellip_f_mc(phi: f64, m: f64, mc: f64) -> Result<f64> {
    check_phi_m(phi, m)?;
    if phi == 0.0 {
        return Ok(0.0);
    }
    if m == 0.0 {
        return Ok(phi);
    }
    if mc == 0.0 {
        if (phi.abs() - FRAC_PI_2).abs() <= 4.0 * f64::EPSILON {
            return Err(Error::DivergentIntegral(format!("F({phi}|1)")));
        }
        return Ok(phi.tan().asinh());
    }
    let (s, c2, y) = carlson_args(phi, m, mc);
    Ok(s * carlson_rf(c2, y, 1.0)?)
}

/// Incomplete elliptic integral of the second kind `E(φ|m)`.
pub fn ellip_e(phi: f64, m: f64) -> Result<f64> {
    ellip_e_mc(phi, m, 1.0 - m)
}

pub(crate) fn ellip_e_mc(phi: f64, m: f64, mc: f64) -> Result<f64> {
    check_phi_m(phi, m)?;
    if phi == 0.0 {
        return Ok(0.0);
    }
    if m == 0.0 {
        return Ok(phi);
    }
    if mc == 0.0 {
        return Ok(phi.clamp(-FRAC_PI_2, FRAC_PI_2).sin());
    }
    let (s, c2, y) = carlson_args(phi, m, mc);
    Ok(s * carlson_rf(c2, y, 1.0)? - m / 3.0 * s * s * s * carlson_rd(c2, y, 1.0)?)
}

/// Complete integral `K(m) = F(π/2|m)`.
pub fn ellip_k(m: f64) -> Result<f64> {
    if !m.is_finite() || m >= 1.0 {
        return Err(Error::Domain(format!("K(m) needs m < 1, got {m}")));
    }
    carlson_rf(0.0, 1.0 - m, 1.0)
}

/// Jacobi amplitude `am(x|m)`, the inverse of `φ ↦ F(φ|m)`.
///
/// For `m < 1` the result is extended beyond the principal range through
/// `am(x + 2K) = am(x) + π`. For `m = 1` it is the Gudermannian, which
/// saturates at `±π/2`.
pub fn jacobi_am(x: f64, m: f64) -> Result<f64> {
    jacobi_am_mc(x, m, 1.0 - m)
}

pub(crate) fn jacobi_am_mc(x: f64, m: f64, mc: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("am({x}|{m})")));
    }
    if !m.is_finite() || m > 1.0 {
        return Err(Error::Domain(format!("parameter m = {m} > 1")));
    }
    if m == 0.0 {
        return Ok(x);
    }
    if mc == 0.0 {
        return Ok(2.0 * (0.5 * x).tanh().atan());
    }
    let k = carlson_rf(0.0, mc, 1.0)?;
    let periods = (x / (2.0 * k)).round();
    let r = x - periods * 2.0 * k;
    Ok(principal_am(r, m, mc, k)? + periods * std::f64::consts::PI)
}

/// Safeguarded Newton inversion of `F(·|m)` on `[−π/2, π/2]` for
/// `|r| ≤ K(m)`.
fn principal_am(r: f64, m: f64, mc: f64, k: f64) -> Result<f64> {
    const MAX_ITER: usize = 100;
    if r == 0.0 {
        return Ok(0.0);
    }
    let r = r.clamp(-k, k);
    let (mut lo, mut hi) = (-FRAC_PI_2, FRAC_PI_2);
    let mut phi = r * FRAC_PI_2 / k;
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITER {
        residual = ellip_f_mc(phi, m, mc)? - r;
        if residual == 0.0 {
            return Ok(phi);
        }
        if residual > 0.0 {
            hi = phi;
        } else {
            lo = phi;
        }
        let (s, c) = phi.sin_cos();
        let slope_inv = (c * c + mc * s * s).sqrt();
        let mut next = phi - residual * slope_inv;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - phi).abs();
        phi = next;
        if step <= 2.0 * f64::EPSILON * phi.abs().max(1e-300) || hi - lo <= 2.0 * f64::EPSILON {
            return Ok(phi);
        }
    }
    Err(Error::NoConvergence {
        what: "Jacobi amplitude inversion",
        iterations: MAX_ITER,
        residual,
    })
}
