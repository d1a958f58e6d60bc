//! Closed-form data of the `k1 = 0, k2 = 1` experiments on `[0, 1]`.

use std::f64::consts::{FRAC_PI_2, PI};

/// Angle profile: a tent in `u` with kinks at `x = 1/4, 3/4`.
pub fn u0(x: f64) -> f64 {
    let x = x.rem_euclid(1.0);
    if x <= 0.25 {
        -2.0 * PI * x + FRAC_PI_2
    } else if x <= 0.75 {
        2.0 * PI * x - FRAC_PI_2
    } else {
        -2.0 * PI * x + 2.5 * PI
    }
}

/// `w0 = k_w(u0) = −cos u0 = −sin 2πx`.
pub fn w0(x: f64) -> f64 {
    -(2.0 * PI * x).sin()
}

/// The piecewise `∓tan 2πx` profile.
///
/// Infinite at `x = 1/4, 3/4`; it is not `k_v(u0)`, which is
/// `ln |tan(u0/2)|` for `k1 = 0`.
pub fn v0_tan(x: f64) -> f64 {
    let x = x.rem_euclid(1.0);
    let t = (2.0 * PI * x).tan();
    if (0.25..=0.75).contains(&x) {
        t
    } else {
        -t
    }
}

/// Limit of the even-grid solution as `t → ∞`: linear between the pinned
/// values `w = ∓1` at `x = 1/4, 3/4`.
pub fn w_inf(x: f64) -> f64 {
    let x = x.rem_euclid(1.0);
    if x <= 0.25 {
        -4.0 * x
    } else if x <= 0.75 {
        4.0 * x - 2.0
    } else {
        4.0 - 4.0 * x
    }
}

/// `u_∞ = k̄_w(w_∞) = arccos(−w_∞)`.
pub fn u_inf(x: f64) -> f64 {
    (-w_inf(x)).clamp(-1.0, 1.0).acos()
}
