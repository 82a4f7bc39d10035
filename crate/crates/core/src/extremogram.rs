//! Empirical extremograms on `F x {1..n}^w`, quantile thresholds and the
//! first-order Frechet bias correction.

use std::io::{Read, Write};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::br::IntervalSet;
use crate::domain::{Lag, SpaceTimeField};
use crate::error::{Error, Result};
use crate::stats;

/// Threshold `a` taken as an empirical quantile of the field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSpec {
    pub quantile_level: f64,
    pub realized: f64,
    /// Set when every field value is equal.
    #[serde(default)]
    pub degenerate: bool,
}

impl ThresholdSpec {
    /// A fixed threshold not tied to a field.
    pub fn fixed(realized: f64) -> Result<Self> {
        if !(realized > 0.0 && realized.is_finite()) {
            return Err(Error::NonPositiveThreshold(realized));
        }
        Ok(Self {
            quantile_level: f64::NAN,
            realized,
            degenerate: false,
        })
    }
}

/// Order statistic of rank `ceil(level * N)` of the field values.
pub fn select_threshold(field: &SpaceTimeField, level: f64) -> Result<ThresholdSpec> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "quantile level must lie in (0, 1), got {level}"
        )));
    }
    let v = field.values();
    let realized = stats::quantile(v, level);
    let degenerate = v.iter().all(|&x| x == v[0]);
    if degenerate {
        warn!(
            "all {} field values are equal; the threshold is degenerate",
            v.len()
        );
    }
    if !(realized > 0.0) {
        return Err(Error::NonPositiveThreshold(realized));
    }
    Ok(ThresholdSpec {
        quantile_level: level,
        realized,
        degenerate,
    })
}

/// One lag of an empirical (possibly bias-corrected) extremogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremogramEstimate {
    pub lag: Lag,
    pub value: f64,
    pub numerator_count: u64,
    pub numerator_sites: u64,
    pub denominator_count: u64,
    pub denominator_sites: u64,
    pub bias_corrected: bool,
    pub threshold: ThresholdSpec,
    pub sets: (IntervalSet, IntervalSet),
}

/// `rho_hat(h) = [#{s in D(h): X(s)/a in A, X(s+h)/a in B} / |D(h)|]
/// / [#{s in D: X(s)/a in A} / |D|]` for every lag.
pub fn empirical_extremogram(
    field: &SpaceTimeField,
    lags: &[Lag],
    threshold: &ThresholdSpec,
    a: &IntervalSet,
    b: &IntervalSet,
) -> Result<Vec<ExtremogramEstimate>> {
    let t = threshold.realized;
    if !(t > 0.0) {
        return Err(Error::NonPositiveThreshold(t));
    }
    let domain = field.domain();
    let in_a: Vec<bool> = field.values().iter().map(|&x| a.contains(x / t)).collect();
    let in_b: Vec<bool> = field.values().iter().map(|&x| b.contains(x / t)).collect();
    let den = in_a.iter().filter(|&&x| x).count() as u64;
    if den == 0 {
        return Err(Error::ZeroDenominator { threshold: t });
    }
    let den_sites = domain.site_count() as u64;
    lags.par_iter()
        .map(|lag| {
            let closure = domain.closure(lag)?;
            if closure.is_empty() {
                return Err(Error::EmptyLagClosure(lag.full()));
            }
            let mut num = 0u64;
            closure.for_each_pair(|s, p| num += (in_a[s] & in_b[p]) as u64);
            let num_sites = closure.len() as u64;
            Ok(ExtremogramEstimate {
                lag: lag.clone(),
                value: (num as f64 / num_sites as f64) / (den as f64 / den_sites as f64),
                numerator_count: num,
                numerator_sites: num_sites,
                denominator_count: den,
                denominator_sites: den_sites,
                bias_corrected: false,
                threshold: *threshold,
                sets: (*a, *b),
            })
        })
        .collect()
}

/// Correction applied to raw estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BiasRegime {
    None,
    FirstOrder,
}

/// Outcome of [`regime_advise`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RegimeAdvice {
    None,
    FirstOrder,
    Unsupported,
}

/// `rho~ = rho^ - (rho^ - 2A/B)(rho^ - 1) / (2 a A)` for ray sets
/// `A = (A, inf)`, `B = (B, inf)`; negative results are clamped to 0.
pub fn bias_correct(
    estimates: &[ExtremogramEstimate],
    regime: BiasRegime,
) -> Result<Vec<ExtremogramEstimate>> {
    match regime {
        BiasRegime::None => Ok(estimates.to_vec()),
        BiasRegime::FirstOrder => estimates
            .iter()
            .map(|e| {
                let (a, b) = e.sets;
                if !a.is_ray() || !b.is_ray() {
                    return Err(Error::UnsupportedCorrection);
                }
                let (al, bl) = (a.lower(), b.lower());
                let r = e.value;
                let t = e.threshold.realized;
                let corrected = r - (r - 2.0 * al / bl) * (r - 1.0) / (2.0 * t * al);
                Ok(ExtremogramEstimate {
                    value: corrected.max(0.0),
                    bias_corrected: true,
                    ..e.clone()
                })
            })
            .collect(),
    }
}

/// Chooses the correction from the threshold rate exponent `beta1`:
/// first order on `(w/5d, w/3d]`, none on `(w/3d, w/2d)`, unsupported below.
pub fn regime_advise(n: usize, w: usize, d: usize, beta1: f64) -> Result<RegimeAdvice> {
    if n == 0 || w == 0 || d < w {
        return Err(Error::InvalidArgument(format!(
            "invalid sizes n={n}, w={w}, d={d}"
        )));
    }
    let (w, d) = (w as f64, d as f64);
    if !(beta1 > 0.0 && beta1 < w / (2.0 * d)) {
        return Err(Error::InvalidArgument(format!(
            "beta1 = {beta1} outside (0, {})",
            w / (2.0 * d)
        )));
    }
    Ok(if beta1 <= w / (5.0 * d) {
        RegimeAdvice::Unsupported
    } else if beta1 <= w / (3.0 * d) {
        RegimeAdvice::FirstOrder
    } else {
        RegimeAdvice::None
    })
}

pub fn estimates_header(q: usize, w: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=q).map(|k| format!("hf{k}")).collect();
    h.extend((1..=w).map(|k| format!("hi{k}")));
    h.extend(
        [
            "value",
            "num_count",
            "num_sites",
            "den_count",
            "den_sites",
            "corrected",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    h
}

pub fn write_estimates<W: Write>(estimates: &[ExtremogramEstimate], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let (q, w) = estimates
        .first()
        .map(|e| (e.lag.fixed.len(), e.lag.increasing.len()))
        .unwrap_or((0, 0));
    wtr.write_record(estimates_header(q, w))?;
    for e in estimates {
        let mut rec: Vec<String> = e.lag.full().iter().map(|x| x.to_string()).collect();
        rec.push(format!("{:?}", e.value));
        rec.push(e.numerator_count.to_string());
        rec.push(e.numerator_sites.to_string());
        rec.push(e.denominator_count.to_string());
        rec.push(e.denominator_sites.to_string());
        rec.push(e.bias_corrected.to_string());
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// A row of an estimates file.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRecord {
    pub lag: Lag,
    pub value: f64,
    pub numerator_count: u64,
    pub numerator_sites: u64,
    pub denominator_count: u64,
    pub denominator_sites: u64,
    pub corrected: bool,
}

/// Reads an estimates file; `q` and `w` are taken from the header.
pub fn read_estimates<R: Read>(input: R) -> Result<Vec<EstimateRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let q = header.iter().filter(|h| h.starts_with("hf")).count();
    let w = header.iter().filter(|h| h.starts_with("hi")).count();
    if header != estimates_header(q, w) || w == 0 {
        return Err(Error::Config(format!(
            "unexpected estimates header {header:?}"
        )));
    }
    let bad = |line: usize, what: &str| Error::Config(format!("estimates line {line}: bad {what}"));
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let int = |k: usize| rec[k].trim().parse::<i64>().map_err(|_| bad(line, "lag"));
        let count = |k: usize| rec[k].trim().parse::<u64>().map_err(|_| bad(line, "count"));
        let full = (0..q + w).map(int).collect::<Result<Vec<_>>>()?;
        let value: f64 = rec[q + w].trim().parse().map_err(|_| bad(line, "value"))?;
        out.push(EstimateRecord {
            lag: Lag::split(&full, q)?,
            value,
            numerator_count: count(q + w + 1)?,
            numerator_sites: count(q + w + 2)?,
            denominator_count: count(q + w + 3)?,
            denominator_sites: count(q + w + 4)?,
            corrected: rec[q + w + 5]
                .trim()
                .parse()
                .map_err(|_| bad(line, "corrected flag"))?,
        });
    }
    Ok(out)
}

/// One cell of a threshold stability table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub level: f64,
    pub realized: f64,
    pub lag: Vec<i64>,
    /// `None` when no value exceeds the threshold.
    pub value: Option<f64>,
}

/// Estimates over a list of quantile levels.
pub fn threshold_sweep(
    field: &SpaceTimeField,
    lags: &[Lag],
    levels: &[f64],
    a: &IntervalSet,
    b: &IntervalSet,
    regime: BiasRegime,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &level in levels {
        let th = select_threshold(field, level)?;
        match empirical_extremogram(field, lags, &th, a, b) {
            Ok(est) => {
                for e in bias_correct(&est, regime)? {
                    rows.push(SweepRow {
                        level,
                        realized: th.realized,
                        lag: e.lag.full(),
                        value: Some(e.value),
                    });
                }
            }
            Err(Error::ZeroDenominator { .. }) => rows.extend(lags.iter().map(|l| SweepRow {
                level,
                realized: th.realized,
                lag: l.full(),
                value: None,
            })),
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}
