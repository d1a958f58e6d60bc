//! Coefficient models `B(w)` and the angle transforms behind them.
//!
//! For the Oseen–Frank speed `c(u) = √(k1 cos²u + k2 sin²u)` the two
//! transforms anchored at `u = π/2` are
//!
//! ```text
//! k_w(u) = ∫_{π/2}^u c(ξ) dξ   = √k2 · E(u − π/2 | m)
//! k_v(u) = ∫_{π/2}^u 1/c(ξ) dξ = F(u − π/2 | m) / √k2,     m = 1 − k1/k2
//! ```
//!
//! and `B(w) = c²(k̄_w(w))`. When `max(k1, k2) > 1` the speed is rescaled by
//! `1/max(√k1, √k2)` so that `0 ≤ B ≤ 1`; the factor is kept in
//! [`OseenFrankTransform::scale`].

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{ellip_e_mc, ellip_f_mc, jacobi_am_mc};

/// Below this speed a node counts as degenerate.
pub const DEGENERATE_EPS: f64 = 1e-8;

/// Oseen–Frank elastic constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OseenFrankModel {
    pub k1: f64,
    pub k2: f64,
}

impl OseenFrankModel {
    pub fn new(k1: f64, k2: f64) -> Result<Self> {
        if !(k1.is_finite() && k1 >= 0.0) || !(k2.is_finite() && k2 > 0.0) {
            return Err(Error::Domain(format!("elastic constants k1 = {k1}, k2 = {k2}")));
        }
        Ok(Self { k1, k2 })
    }
}

/// `c(u) = √(k1 cos²u + k2 sin²u)`, unnormalized.
pub fn c_of_u(u: f64, model: &OseenFrankModel) -> f64 {
    let (s, c) = u.sin_cos();
    (model.k1.sqrt() * c).hypot(model.k2.sqrt() * s)
}

/// Controls for the scalar inversions `k̄_w`, `k̄_v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub bracket_fallback: bool,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 60,
            bracket_fallback: true,
        }
    }
}

/// `B`, `B′`, `B″` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BValues {
    pub b: f64,
    pub db: f64,
    pub d2b: f64,
}

/// Precomputed Oseen–Frank transform data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OseenFrankTransform {
    model: OseenFrankModel,
    scale: f64,
    m: f64,
    mc: f64,
    /// `s·√k2`: prefactor of `k_w`, reciprocal prefactor of `k_v`.
    amplitude: f64,
    w_max: f64,
    inversion: InversionConfig,
}

impl OseenFrankTransform {
    pub fn new(model: OseenFrankModel, inversion: InversionConfig) -> Result<Self> {
        if !(inversion.tol > 0.0) || inversion.max_iter == 0 {
            return Err(Error::Config(format!("inversion config {inversion:?}")));
        }
        let OseenFrankModel { k1, k2 } = model;
        let largest = k1.max(k2);
        let scale = if largest > 1.0 { 1.0 / largest.sqrt() } else { 1.0 };
        let mc = k1 / k2;
        let m = 1.0 - mc;
        let amplitude = scale * k2.sqrt();
        let w_max = amplitude * ellip_e_mc(FRAC_PI_2, m, mc)?;
        Ok(Self {
            model,
            scale,
            m,
            mc,
            amplitude,
            w_max,
            inversion,
        })
    }

    pub fn model(&self) -> OseenFrankModel {
        self.model
    }

    /// Normalization factor applied to `c`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Elliptic parameter `m = 1 − k1/k2`.
    pub fn parameter(&self) -> f64 {
        self.m
    }

    fn degenerate(&self) -> bool {
        self.model.k1 == 0.0
    }

    /// Normalized speed.
    pub fn c(&self, u: f64) -> f64 {
        self.scale * c_of_u(u, &self.model)
    }

    /// `(c, c′, c″)` of the normalized speed.
    fn c_derivatives(&self, u: f64) -> (f64, f64, f64) {
        let (s, co) = u.sin_cos();
        let OseenFrankModel { k1, k2 } = self.model;
        if self.degenerate() {
            // c = s√k2·sin u on [0, π]
            let a = self.amplitude;
            return (a * s, a * co, -a * s);
        }
        let c = c_of_u(u, &self.model);
        let dc = (k2 - k1) * s * co / c;
        let d2c = (2.0 * (k2 - k1) * (2.0 * u).cos() - 2.0 * dc * dc) / (2.0 * c);
        (self.scale * c, self.scale * dc, self.scale * d2c)
    }

    pub fn w_range(&self) -> (f64, f64) {
        (-self.w_max, self.w_max)
    }

    /// `k_w(u)` for `u ∈ [0, π]`.
    pub fn k_w(&self, u: f64) -> Result<f64> {
        check_angle(u)?;
        if self.degenerate() {
            return Ok(-self.amplitude * u.cos());
        }
        Ok(self.amplitude * ellip_e_mc(u - FRAC_PI_2, self.m, self.mc)?)
    }

    /// Inverse of [`Self::k_w`] on `[k_w(0), k_w(π)]`.
    pub fn kw_inverse(&self, w: f64) -> Result<f64> {
        let w = self.clamp_w(w)?;
        if self.degenerate() {
            return Ok((-w / self.amplitude).clamp(-1.0, 1.0).acos());
        }
        let cfg = self.inversion;
        // exact for k1 = 0, a good start otherwise
        let mut u = (-w / self.w_max).clamp(-1.0, 1.0).acos();
        let (mut lo, mut hi) = (0.0, PI);
        let mut residual = f64::INFINITY;
        for _ in 0..cfg.max_iter {
            residual = self.k_w(u)? - w;
            if residual > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let slope = self.c(u);
            let newton = u - residual / slope;
            if residual.abs() <= cfg.tol {
                // one polishing step, then stop
                return Ok(if newton.is_finite() && newton >= lo && newton <= hi {
                    newton
                } else {
                    u
                });
            }
            let next = if newton > lo && newton < hi && newton.is_finite() {
                newton
            } else if cfg.bracket_fallback {
                0.5 * (lo + hi)
            } else {
                break;
            };
            if (next - u).abs() <= 4.0 * f64::EPSILON || hi - lo <= 4.0 * f64::EPSILON {
                return Ok(next);
            }
            u = next;
        }
        Err(Error::NoConvergence {
            what: "k_w inversion",
            iterations: cfg.max_iter,
            residual,
        })
    }

    fn clamp_w(&self, w: f64) -> Result<f64> {
        let slack = 1e-12 * self.w_max.max(1.0);
        if !w.is_finite() || w.abs() > self.w_max + slack {
            return Err(Error::OutOfRange {
                value: w,
                min: -self.w_max,
                max: self.w_max,
            });
        }
        Ok(w.clamp(-self.w_max, self.w_max))
    }

    /// Reflects `w` across the nearer end of the range. `c²` is even about
    /// `u = 0` and `u = π`, so this is the smooth continuation of `B`.
    fn reflect(&self, w: f64) -> Result<(f64, f64)> {
        let (lo, hi) = self.w_range();
        if w >= lo && w <= hi {
            return Ok((w, 1.0));
        }
        let reflected = if w < lo { 2.0 * lo - w } else { 2.0 * hi - w };
        if !(reflected >= lo && reflected <= hi) {
            return Err(Error::OutOfRange {
                value: w,
                min: lo,
                max: hi,
            });
        }
        Ok((reflected, -1.0))
    }

    fn b_plain(&self, w: f64) -> Result<(f64, f64)> {
        let (w, sign) = self.reflect(w)?;
        let u = self.kw_inverse(w)?;
        let (c, dc, _) = self.c_derivatives(u);
        Ok((c * c, sign * 2.0 * dc))
    }

    fn b_values(&self, w: f64) -> Result<BValues> {
        let (wr, sign) = self.reflect(w)?;
        let u = self.kw_inverse(wr)?;
        let (c, dc, d2c) = self.c_derivatives(u);
        let d2b = if c < DEGENERATE_EPS {
            // removable singularity of 2c″/c: difference B′ towards the interior
            let h = f64::EPSILON.sqrt() * wr.abs().max(1.0);
            let dir = if wr > 0.0 { -1.0 } else { 1.0 };
            let (_, db_shift) = self.b_plain(wr + dir * h)?;
            (db_shift - 2.0 * dc) / (dir * h)
        } else {
            2.0 * d2c / c
        };
        Ok(BValues {
            b: c * c,
            db: sign * 2.0 * dc,
            d2b,
        })
    }

    /// `k_v(u)`; diverges at the zeros of `c` when `k1 = 0`.
    pub fn k_v(&self, u: f64) -> Result<f64> {
        check_angle(u)?;
        if self.degenerate() {
            let t = (0.5 * u).tan();
            if u.sin().abs() <= 4.0 * f64::EPSILON || t == 0.0 || !t.is_finite() {
                return Err(Error::DivergentIntegral(format!("k_v({u}) with k1 = 0")));
            }
            return Ok(t.abs().ln() / self.amplitude);
        }
        Ok(ellip_f_mc(u - FRAC_PI_2, self.m, self.mc)? / self.amplitude)
    }

    /// `k̄_v(v) = am(s√k2·v | m) + π/2`.
    pub fn kv_inverse(&self, v: f64) -> Result<f64> {
        Ok(jacobi_am_mc(self.amplitude * v, self.m, self.mc)? + FRAC_PI_2)
    }

    /// `g(v) = c²(k̄_v(v))` and `g′(v)`.
    pub fn v_diffusivity(&self, v: f64) -> Result<(f64, f64)> {
        let blowup = || Error::CoefficientBlowup { value: v };
        if !v.is_finite() {
            return Err(blowup());
        }
        let a = self.amplitude;
        let (g, dg) = if self.degenerate() {
            // c² = a²·dn²(a v | 1) = a²·sech²(a v)
            let x = a * v;
            let sech = 1.0 / x.cosh();
            let g = a * a * sech * sech;
            (g, -2.0 * a * g * x.tanh())
        } else {
            let u = self.kv_inverse(v)?;
            let c = self.c(u);
            let OseenFrankModel { k1, k2 } = self.model;
            let s2 = self.scale * self.scale;
            (c * c, s2 * (k2 - k1) * (2.0 * u).sin() * c)
        };
        if !g.is_finite() || !dg.is_finite() {
            return Err(blowup());
        }
        Ok((g, dg))
    }
}

fn check_angle(u: f64) -> Result<()> {
    if !(u.is_finite() && (-4.0 * f64::EPSILON..=PI + 4.0 * f64::EPSILON).contains(&u)) {
        return Err(Error::Domain(format!("angle {u} outside [0, pi]")));
    }
    Ok(())
}

/// User-supplied closed form for `(B, B′, B″)` on a fixed `w` range.
#[derive(Clone)]
pub struct ClosedForm {
    name: String,
    eval: Arc<dyn Fn(f64) -> BValues + Send + Sync>,
    range: (f64, f64),
}

impl ClosedForm {
    pub fn new(
        name: impl Into<String>,
        range: (f64, f64),
        eval: impl Fn(f64) -> BValues + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            range,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosedForm")
            .field("name", &self.name)
            .field("range", &self.range)
            .finish()
    }
}

/// The coefficient `B(w)` of `∂ₜw = B(w)∂ₓₓw`, with its angle transforms
/// when it comes from an Oseen–Frank speed.
#[derive(Debug, Clone)]
pub enum CoefficientModel {
    OseenFrank(OseenFrankTransform),
    /// `B(w) = 1 − w²`, the `k1 = 0, k2 = 1` case in closed form.
    Quadratic(OseenFrankTransform),
    ClosedForm(ClosedForm),
}

impl CoefficientModel {
    pub fn oseen_frank(k1: f64, k2: f64) -> Result<Self> {
        Self::oseen_frank_with(k1, k2, InversionConfig::default())
    }

    pub fn oseen_frank_with(k1: f64, k2: f64, inversion: InversionConfig) -> Result<Self> {
        Ok(Self::OseenFrank(OseenFrankTransform::new(
            OseenFrankModel::new(k1, k2)?,
            inversion,
        )?))
    }

    pub fn quadratic() -> Self {
        let transform = OseenFrankTransform::new(OseenFrankModel { k1: 0.0, k2: 1.0 }, InversionConfig::default())
            .expect("k1 = 0, k2 = 1 is valid");
        Self::Quadratic(transform)
    }

    /// `B ≡ value` on the whole line.
    pub fn constant(value: f64) -> Self {
        Self::ClosedForm(ClosedForm::new(
            format!("constant {value}"),
            (f64::NEG_INFINITY, f64::INFINITY),
            move |_| BValues {
                b: value,
                db: 0.0,
                d2b: 0.0,
            },
        ))
    }

    pub fn transform(&self) -> Option<&OseenFrankTransform> {
        match self {
            Self::OseenFrank(t) | Self::Quadratic(t) => Some(t),
            Self::ClosedForm(_) => None,
        }
    }

    fn require_transform(&self, what: &'static str) -> Result<&OseenFrankTransform> {
        self.transform().ok_or(Error::NoTransform(what))
    }

    pub fn w_range(&self) -> (f64, f64) {
        match self {
            Self::OseenFrank(t) | Self::Quadratic(t) => t.w_range(),
            Self::ClosedForm(cf) => cf.range,
        }
    }

    /// `(B, B′, B″)` at `w`.
    pub fn b_of_w(&self, w: f64) -> Result<BValues> {
        match self {
            Self::Quadratic(_) => Ok(BValues {
                b: 1.0 - w * w,
                db: -2.0 * w,
                d2b: -2.0,
            }),
            Self::OseenFrank(t) => t.b_values(w),
            Self::ClosedForm(cf) => Ok((cf.eval)(w)),
        }
    }

    /// `(B, B′)`, skipping the second derivative.
    pub fn b_and_slope(&self, w: f64) -> Result<(f64, f64)> {
        match self {
            Self::Quadratic(_) => Ok((1.0 - w * w, -2.0 * w)),
            Self::OseenFrank(t) => t.b_plain(w),
            Self::ClosedForm(cf) => {
                let v = (cf.eval)(w);
                Ok((v.b, v.db))
            }
        }
    }

    pub fn diffusivity(&self, w: f64) -> Result<f64> {
        self.b_and_slope(w).map(|(b, _)| b)
    }

    /// Normalized speed `c(u)`.
    pub fn c(&self, u: f64) -> Result<f64> {
        Ok(self.require_transform("angle")?.c(u))
    }

    pub fn k_w(&self, u: f64) -> Result<f64> {
        self.require_transform("w")?.k_w(u)
    }

    pub fn kw_inverse(&self, w: f64) -> Result<f64> {
        self.require_transform("w")?.kw_inverse(w)
    }

    pub fn k_v(&self, u: f64) -> Result<f64> {
        self.require_transform("v")?.k_v(u)
    }

    pub fn kv_inverse(&self, v: f64) -> Result<f64> {
        self.require_transform("v")?.kv_inverse(v)
    }

    pub fn v_diffusivity(&self, v: f64) -> Result<(f64, f64)> {
        self.require_transform("v")?.v_diffusivity(v)
    }

    pub fn describe(&self) -> String {
        match self {
            Self::OseenFrank(t) => format!("oseen-frank k1={} k2={}", t.model.k1, t.model.k2),
            Self::Quadratic(_) => "quadratic B(w)=1-w^2".to_string(),
            Self::ClosedForm(cf) => cf.name.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::adaptive_simpson;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_8};

    fn kw_oracle(model: OseenFrankModel, u: f64) -> f64 {
        adaptive_simpson(&|x| c_of_u(x, &model), FRAC_PI_2, u, 1e-14)
    }

    fn transform(k1: f64, k2: f64) -> OseenFrankTransform {
        OseenFrankTransform::new(OseenFrankModel::new(k1, k2).unwrap(), InversionConfig::default()).unwrap()
    }

    #[test]
    fn speed_values() {
        let m = OseenFrankModel::new(0.0, 1.0).unwrap();
        assert!((c_of_u(FRAC_PI_2, &m) - 1.0).abs() < 1e-16);
        let iso = OseenFrankModel::new(0.7, 0.7).unwrap();
        for u in [0.0, 0.4, 2.0, 3.1] {
            assert!((c_of_u(u, &iso) - 0.7_f64.sqrt()).abs() < 1e-15);
        }
        let m = OseenFrankModel::new(0.01, 1.0).unwrap();
        assert!((c_of_u(FRAC_PI_4, &m) - 0.505_f64.sqrt()).abs() < 1e-15);
        assert!(OseenFrankModel::new(-1.0, 1.0).is_err());
        assert!(OseenFrankModel::new(1.0, 0.0).is_err());
    }

    #[test]
    fn kw_base_point_and_closed_form() {
        for (k1, k2) in [(0.0, 1.0), (0.01, 1.0), (0.25, 1.0), (2.0, 1.0), (0.3, 4.0)] {
            assert!(transform(k1, k2).k_w(FRAC_PI_2).unwrap().abs() < 1e-15);
            assert!((transform(k1, k2).kw_inverse(0.0).unwrap() - FRAC_PI_2).abs() < 1e-12);
        }
        let t = transform(0.0, 1.0);
        assert!((t.k_w(PI).unwrap() - 1.0).abs() < 1e-15);
        assert!((t.k_w(0.0).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn kw_matches_quadrature() {
        let model = OseenFrankModel::new(0.01, 1.0).unwrap();
        let t = transform(0.01, 1.0);
        assert!((t.k_w(FRAC_PI_4).unwrap() - kw_oracle(model, FRAC_PI_4)).abs() < 1e-10);
        for (k1, k2) in [(0.1, 1.0), (0.5, 0.8), (3.0, 1.0)] {
            let model = OseenFrankModel::new(k1, k2).unwrap();
            let t = transform(k1, k2);
            for u in [0.0, 0.3, 1.4, 2.6, PI] {
                let oracle = t.scale() * kw_oracle(model, u);
                assert!((t.k_w(u).unwrap() - oracle).abs() < 1e-10, "k1={k1} u={u}");
            }
        }
    }

    #[test]
    fn kw_round_trips() {
        let t = transform(0.0, 1.0);
        for u in [0.2_f64, 1.0, 2.9] {
            assert!((t.kw_inverse(-u.cos()).unwrap() - u).abs() < 1e-9);
        }
        let t = transform(0.1, 1.0);
        let model = OseenFrankModel::new(0.1, 1.0).unwrap();
        for i in 0..=100 {
            let u = PI * i as f64 / 100.0;
            let w = kw_oracle(model, u);
            assert!((t.kw_inverse(w).unwrap() - u).abs() < 1e-9, "u = {u}");
        }
        assert!(matches!(t.kw_inverse(5.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn kw_monotone() {
        for k1 in [0.0, 0.01, 1.0] {
            let t = transform(k1, 1.0);
            let mut prev = f64::NEG_INFINITY;
            for i in 0..=1000 {
                let u = PI * i as f64 / 1000.0;
                let w = t.k_w(u).unwrap();
                if t.c(u) > 0.0 && i > 0 {
                    assert!(w > prev, "k1 = {k1}, u = {u}");
                }
                assert!(w >= prev);
                prev = w;
            }
        }
    }

    #[test]
    fn quadratic_case_values() {
        let q = CoefficientModel::quadratic();
        assert_eq!(
            q.b_of_w(0.0).unwrap(),
            BValues {
                b: 1.0,
                db: 0.0,
                d2b: -2.0
            }
        );
        assert_eq!(q.b_of_w(1.0).unwrap().b, 0.0);
        assert_eq!(q.b_of_w(-1.0).unwrap().b, 0.0);
        assert_eq!(q.w_range(), (-1.0, 1.0));
    }

    #[test]
    fn general_path_at_base_point() {
        let model = CoefficientModel::oseen_frank(0.25, 1.0).unwrap();
        let bv = model.b_of_w(0.0).unwrap();
        assert!((bv.b - 1.0).abs() < 1e-12);
        assert!(bv.db.abs() < 1e-12);
    }

    #[test]
    fn general_path_agrees_with_quadratic_for_k1_zero() {
        let general = CoefficientModel::oseen_frank(0.0, 1.0).unwrap();
        let q = CoefficientModel::quadratic();
        for w in [-0.99, -0.5, 0.0, 0.3, 0.95] {
            let (a, b) = (general.b_of_w(w).unwrap(), q.b_of_w(w).unwrap());
            assert!((a.b - b.b).abs() < 1e-12);
            assert!((a.db - b.db).abs() < 1e-12);
            assert!((a.d2b - b.d2b).abs() < 1e-9);
        }
        // removable singularity at the ends
        let end = general.b_of_w(1.0).unwrap();
        assert!(end.b.abs() < 1e-15);
        assert!((end.d2b + 2.0).abs() < 1e-4, "{}", end.d2b);
    }

    #[test]
    fn b_slope_matches_centered_difference() {
        let model = CoefficientModel::oseen_frank(0.25, 1.0).unwrap();
        let w = model.k_w(FRAC_PI_3).unwrap();
        let h = 1e-5;
        let fd = (model.diffusivity(w + h).unwrap() - model.diffusivity(w - h).unwrap()) / (2.0 * h);
        assert!((model.b_of_w(w).unwrap().db - fd).abs() < 1e-6);
    }

    #[test]
    fn b_equals_speed_squared_on_samples() {
        let model = CoefficientModel::oseen_frank(0.3, 1.0).unwrap();
        for i in 1..20 {
            let u = PI * i as f64 / 20.0;
            let w = model.k_w(u).unwrap();
            let c = model.c(u).unwrap();
            assert!((model.diffusivity(w).unwrap() - c * c).abs() < 1e-9);
        }
    }

    #[test]
    fn derivative_consistency_is_second_order() {
        for model in [
            CoefficientModel::oseen_frank(0.25, 1.0).unwrap(),
            CoefficientModel::oseen_frank(0.05, 2.0).unwrap(),
        ] {
            for u in [0.7, 1.3, 2.2] {
                let w = model.k_w(u).unwrap();
                let exact = model.b_of_w(w).unwrap();
                let errs: Vec<(f64, f64)> = [1e-3, 1e-4]
                    .iter()
                    .map(|&h| {
                        let (bp, bm) = (model.b_of_w(w + h).unwrap(), model.b_of_w(w - h).unwrap());
                        let d1 = (bp.b - bm.b) / (2.0 * h);
                        let d2 = (bp.db - bm.db) / (2.0 * h);
                        ((d1 - exact.db).abs(), (d2 - exact.d2b).abs())
                    })
                    .collect();
                let slope1 = (errs[0].0 / errs[1].0).log10();
                let slope2 = (errs[0].1 / errs[1].1).log10();
                assert!(slope1 >= 1.9, "B' slope {slope1} at u={u}");
                assert!(slope2 >= 1.9, "B'' slope {slope2} at u={u}");
            }
        }
    }

    #[test]
    fn b_range_after_normalization() {
        for (k1, k2) in [(0.0, 1.0), (0.2, 0.5), (4.0, 1.0), (0.5, 9.0)] {
            let model = CoefficientModel::oseen_frank(k1, k2).unwrap();
            let (lo, hi) = model.w_range();
            for i in 0..=200 {
                let w = lo + (hi - lo) * i as f64 / 200.0;
                let b = model.diffusivity(w).unwrap();
                assert!((-1e-15..=1.0 + 1e-12).contains(&b), "k1={k1} k2={k2} w={w}: {b}");
            }
        }
    }

    #[test]
    fn reflection_continues_b_smoothly() {
        let model = CoefficientModel::oseen_frank(0.01, 1.0).unwrap();
        let (lo, _) = model.w_range();
        let inside = model.b_of_w(lo + 1e-3).unwrap();
        let outside = model.b_of_w(lo - 1e-3).unwrap();
        assert!((inside.b - outside.b).abs() < 1e-12);
        assert!((inside.db + outside.db).abs() < 1e-12);
        assert!(model.b_of_w(lo - 10.0).is_err());
    }

    #[test]
    fn kv_values() {
        for k1 in [0.0, 0.3, 1.0] {
            assert!(transform(k1, 1.0).k_v(FRAC_PI_2).unwrap().abs() < 1e-15);
            assert!((transform(k1, 1.0).kv_inverse(0.0).unwrap() - FRAC_PI_2).abs() < 1e-15);
        }
        let model = OseenFrankModel::new(0.5, 1.0).unwrap();
        let oracle = adaptive_simpson(&|x| 1.0 / c_of_u(x, &model), FRAC_PI_2, 1.0, 1e-14);
        assert!((transform(0.5, 1.0).k_v(1.0).unwrap() - oracle).abs() < 1e-10);

        let t = transform(0.0, 1.0);
        let closed = FRAC_PI_8.tan().ln();
        assert!((t.k_v(FRAC_PI_4).unwrap() - closed).abs() < 1e-14);
        let model = OseenFrankModel::new(0.0, 1.0).unwrap();
        let quad = adaptive_simpson(&|x| 1.0 / c_of_u(x, &model), FRAC_PI_2, FRAC_PI_4, 1e-14);
        assert!((closed - quad).abs() < 1e-10);
        assert!((t.kv_inverse(closed).unwrap() - FRAC_PI_4).abs() < 1e-9);
        assert!(matches!(t.k_v(0.0), Err(Error::DivergentIntegral(_))));
        assert!(matches!(t.k_v(PI), Err(Error::DivergentIntegral(_))));
    }

    #[test]
    fn kv_round_trips() {
        let t = transform(0.3, 1.0);
        for u in [1.0, 2.0, 0.1, 3.0] {
            assert!((t.kv_inverse(t.k_v(u).unwrap()).unwrap() - u).abs() < 1e-9);
        }
        let t = transform(0.3, 2.5);
        for u in [0.05, 1.0, 2.0] {
            assert!((t.kv_inverse(t.k_v(u).unwrap()).unwrap() - u).abs() < 1e-9);
        }
    }

    #[test]
    fn v_diffusivity_slope_matches_difference() {
        for (k1, k2) in [(0.0, 1.0), (0.2, 1.0), (1.0, 1.0), (2.0, 1.0)] {
            let t = transform(k1, k2);
            for v in [-2.0, -0.3, 0.0, 0.8, 1.7] {
                let (g, dg) = t.v_diffusivity(v).unwrap();
                let u = t.kv_inverse(v).unwrap();
                assert!((g - t.c(u).powi(2)).abs() < 1e-12);
                let h = 1e-6;
                let fd = (t.v_diffusivity(v + h).unwrap().0 - t.v_diffusivity(v - h).unwrap().0) / (2.0 * h);
                assert!((dg - fd).abs() < 1e-7, "k1={k1} v={v}: {dg} vs {fd}");
            }
        }
        // k1 = 0: finite and tiny far out
        let (g, _) = transform(0.0, 1.0).v_diffusivity(500.0).unwrap();
        assert!(g >= 0.0 && g < 1e-200);
        assert!(transform(0.0, 1.0).v_diffusivity(f64::NAN).is_err());
    }

    #[test]
    fn closed_form_models_have_no_transforms() {
        let m = CoefficientModel::constant(1.0);
        assert_eq!(m.diffusivity(123.0).unwrap(), 1.0);
        assert!(matches!(m.kw_inverse(0.0), Err(Error::NoTransform(_))));
    }
}
