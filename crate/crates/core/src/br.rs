//! Closed forms for the Brown-Resnick process with dependence function
//! `delta`: `Phi~`, the bivariate exponent measure, true and finite-threshold
//! extremograms, tail dependence and the extremal coefficient.
//!
//! Each quantity has a `*_delta` version taking the value of `delta` at the
//! lag and a model version taking a model and a lag.

use serde::{Deserialize, Serialize};

use crate::domain::{integer_ball, LagNorm};
use crate::error::{Error, Result};
use crate::models::DependenceModel;
use crate::normal;

/// Interval `(lower, upper)` with `0 < lower < upper <= inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    lower: f64,
    upper: f64,
}

impl IntervalSet {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && lower.is_finite() && upper > lower) {
            return Err(Error::InvalidSet { lower, upper });
        }
        Ok(Self { lower, upper })
    }

    /// `(lower, inf)`.
    pub fn ray(lower: f64) -> Result<Self> {
        Self::new(lower, f64::INFINITY)
    }

    /// `(1, inf)`.
    pub fn unit_ray() -> Self {
        Self {
            lower: 1.0,
            upper: f64::INFINITY,
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn is_ray(&self) -> bool {
        self.upper.is_infinite()
    }

    /// Open-interval membership.
    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        x > self.lower && x < self.upper
    }

    /// `mu((l, u)) = 1/l - 1/u` for the unit Frechet exponent measure.
    fn measure(&self) -> f64 {
        1.0 / self.lower - recip(self.upper)
    }
}

fn recip(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta >= 0.0 && !delta.is_nan() {
        Ok(())
    } else {
        Err(Error::Numerical(format!(
            "dependence value {delta} is not >= 0"
        )))
    }
}

fn phi_arg(delta: f64, ratio: f64) -> f64 {
    let s = (2.0 * delta).sqrt();
    ratio.ln() / s + s / 2.0
}

/// `Phi(log(ratio)/sqrt(2 delta) + sqrt(delta/2))`.
///
/// At `delta = 0` the value is 1/2 for `ratio = 1` and a
/// [`Error::SingularLag`] otherwise.
pub fn tilde_phi_delta(delta: f64, ratio: f64) -> Result<f64> {
    check_delta(delta)?;
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ratio must be positive, got {ratio}"
        )));
    }
    if delta == 0.0 {
        return if ratio == 1.0 {
            Ok(0.5)
        } else {
            Err(Error::SingularLag { lag: vec![], ratio })
        };
    }
    Ok(normal::cdf(phi_arg(delta, ratio)))
}

/// `V2(y1, y2) = Phi~(y2/y1)/y1 + Phi~(y1/y2)/y2`.
pub fn v2_delta(delta: f64, y1: f64, y2: f64) -> Result<f64> {
    for y in [y1, y2] {
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "V2 arguments must be positive, got {y}"
            )));
        }
    }
    Ok(tilde_phi_delta(delta, y2 / y1)? / y1 + tilde_phi_delta(delta, y1 / y2)? / y2)
}

/// `V2` extended to `delta = 0` (complete dependence) and infinite arguments.
fn v2_ext(delta: f64, y1: f64, y2: f64) -> f64 {
    match (y1.is_infinite(), y2.is_infinite()) {
        (true, true) => 0.0,
        (true, false) => 1.0 / y2,
        (false, true) => 1.0 / y1,
        (false, false) if delta == 0.0 => 1.0 / y1.min(y2),
        (false, false) => {
            normal::cdf(phi_arg(delta, y2 / y1)) / y1 + normal::cdf(phi_arg(delta, y1 / y2)) / y2
        }
    }
}

/// Limiting extremogram `rho_AB` for a lag with dependence value `delta`.
/// `delta = 0` gives the complete-dependence value `mu(A n B)/mu(A)`.
pub fn extremogram_delta(delta: f64, a: &IntervalSet, b: &IntervalSet) -> Result<f64> {
    check_delta(delta)?;
    if delta == 0.0 {
        let lo = a.lower.max(b.lower);
        let hi = a.upper.min(b.upper);
        if lo >= hi {
            return Ok(0.0);
        }
        return Ok((1.0 / lo - recip(hi)) / a.measure());
    }
    if a.is_ray() && b.is_ray() {
        let (al, bl) = (a.lower, b.lower);
        let v = al
            * (normal::sf(phi_arg(delta, bl / al)) / al + normal::sf(phi_arg(delta, al / bl)) / bl);
        return Ok(v);
    }
    let (a1, a2, b1, b2) = (a.lower, a.upper, b.lower, b.upper);
    let combo = -v2_ext(delta, a2, b2) + v2_ext(delta, a2, b1) + v2_ext(delta, a1, b2)
        - v2_ext(delta, a1, b1);
    Ok((combo / a.measure()).max(0.0))
}

/// `P(X(0)/t in A, X(h)/t in B) / P(X(0)/t in A)` for unit Frechet margins
/// with bivariate law `exp(-V2)`.
pub fn pre_asymptotic_delta(
    delta: f64,
    a: &IntervalSet,
    b: &IntervalSet,
    threshold: f64,
) -> Result<f64> {
    check_delta(delta)?;
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::NonPositiveThreshold(threshold));
    }
    let t = threshold;
    let (x1, x2, y1, y2) = (t * a.lower, t * a.upper, t * b.lower, t * b.upper);
    // rectangle of exp(-V); the four signs sum to zero, so expm1 is exact
    let g = |x: f64, y: f64| (-v2_ext(delta, x, y)).exp_m1();
    let joint = g(x2, y2) - g(x1, y2) - g(x2, y1) + g(x1, y1);
    let marginal = (-recip(x2)).exp_m1() - (-1.0 / x1).exp_m1();
    if marginal <= 0.0 {
        return Err(Error::Numerical(format!(
            "P(X/{t} in A) underflows for A = ({}, {})",
            a.lower, a.upper
        )));
    }
    Ok((joint / marginal).max(0.0))
}

/// `2(1 - Phi(sqrt(delta/2)))`.
pub fn tail_dependence_delta(delta: f64) -> f64 {
    2.0 * normal::sf((delta / 2.0).sqrt())
}

/// `2 Phi(sqrt(delta/2))`.
pub fn extremal_coefficient_delta(delta: f64) -> f64 {
    2.0 * normal::cdf((delta / 2.0).sqrt())
}

fn singular_at(lag: &[f64], e: Error) -> Error {
    match e {
        Error::SingularLag { ratio, .. } => Error::SingularLag {
            lag: lag.to_vec(),
            ratio,
        },
        e => e,
    }
}

pub fn tilde_phi(model: &DependenceModel, lag: &[f64], ratio: f64) -> Result<f64> {
    tilde_phi_delta(model.dependence(lag)?, ratio).map_err(|e| singular_at(lag, e))
}

pub fn exponent_measure_v2(model: &DependenceModel, lag: &[f64], y1: f64, y2: f64) -> Result<f64> {
    v2_delta(model.dependence(lag)?, y1, y2).map_err(|e| singular_at(lag, e))
}

pub fn true_extremogram(
    model: &DependenceModel,
    lag: &[f64],
    a: &IntervalSet,
    b: &IntervalSet,
) -> Result<f64> {
    extremogram_delta(model.dependence(lag)?, a, b)
}

pub fn pre_asymptotic_extremogram(
    model: &DependenceModel,
    lag: &[f64],
    a: &IntervalSet,
    b: &IntervalSet,
    threshold: f64,
) -> Result<f64> {
    pre_asymptotic_delta(model.dependence(lag)?, a, b, threshold)
}

pub fn tail_dependence(model: &DependenceModel, lag: &[f64]) -> Result<f64> {
    Ok(tail_dependence_delta(model.dependence(lag)?))
}

pub fn extremal_coefficient(model: &DependenceModel, lag: &[f64]) -> Result<f64> {
    Ok(extremal_coefficient_delta(model.dependence(lag)?))
}

/// Outcome of [`check_variogram_growth`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthCheck {
    pub pass: bool,
    /// Lag `(v_F, v_I)` minimising `delta(v) - C ||v_I||^alpha`.
    pub worst_lag: Vec<i64>,
    pub worst_margin: f64,
}

/// Checks `delta(v) >= C ||v_I||^alpha` for `v_F` in `fixed_lags` and `v_I`
/// in the integer ball of `radius` over the increasing coordinates.
pub fn check_variogram_growth(
    model: &DependenceModel,
    c: f64,
    alpha: f64,
    fixed_lags: &[Vec<i64>],
    radius: i64,
    norm: LagNorm,
) -> Result<GrowthCheck> {
    if !(c > 0.0) || !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::InvalidArgument(format!(
            "growth bound needs C > 0 and alpha in (0, 2], got C = {c}, alpha = {alpha}"
        )));
    }
    if radius < 1 {
        return Err(Error::InvalidArgument(format!(
            "radius must be >= 1, got {radius}"
        )));
    }
    let default_fixed = [Vec::new()];
    let fixed: &[Vec<i64>] = if fixed_lags.is_empty() {
        &default_fixed
    } else {
        fixed_lags
    };
    let q = fixed[0].len();
    if fixed.iter().any(|f| f.len() != q) || q >= model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim().saturating_sub(1),
            got: q,
        });
    }
    let w = model.dim() - q;
    let ball = integer_ball(radius, w, norm);
    let mut worst: Option<(f64, Vec<i64>)> = None;
    let mut lag = vec![0.0; model.dim()];
    for vf in fixed {
        for vi in &ball {
            for (k, &x) in vf.iter().chain(vi.iter()).enumerate() {
                lag[k] = x as f64;
            }
            let margin = model.eval(&lag) - c * norm.norm_i64(vi).powf(alpha);
            if worst.as_ref().map_or(true, |(m, _)| margin < *m) {
                worst = Some((margin, vf.iter().chain(vi.iter()).copied().collect()));
            }
        }
    }
    let (worst_margin, worst_lag) = worst.expect("ball contains the origin");
    Ok(GrowthCheck {
        pass: worst_margin >= -1e-12,
        worst_lag,
        worst_margin,
    })
}
