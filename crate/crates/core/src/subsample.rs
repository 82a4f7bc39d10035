//! Block subsampling confidence intervals for GLSE parameters.
//!
//! Windows of side `b` slide over every increasing dimension while the
//! fixed part of the domain is kept whole. The law of
//! `tau_b (theta_b - theta_n)` over the windows, with
//! `tau_m = m^((w - beta1 d) / 2)`, gives the interval
//! `[theta_n - q_hi / tau_n, theta_n - q_lo / tau_n]`.

use indexmap::IndexMap;
use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::SpaceTimeField;
use crate::error::{Error, Result};
use crate::pipeline::{estimate_field, EstimationSpec};
use crate::simulate::stream_rng;
use crate::stats::quantile_interp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsampleConfig {
    /// Window side `b`; defaults to `floor(n^0.7)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_length: Option<usize>,
    /// Defaults to `max(1, floor(b / 3))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[serde(default = "default_level")]
    pub level: f64,
    /// Rate exponent; defaults to `5w / (12d)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    /// Reuse the full-sample threshold in every window.
    #[serde(default)]
    pub reuse_threshold: bool,
    /// Quasi-random starts per window fit, in addition to the full-sample estimate.
    #[serde(default = "default_block_starts")]
    pub block_starts: usize,
}

/// Midpoint of `(w/3d, w/2d)`, where no bias correction is needed.
pub fn default_beta1(w: usize, d: usize) -> f64 {
    5.0 * w as f64 / (12.0 * d as f64)
}

fn default_level() -> f64 {
    0.95
}

fn default_block_starts() -> usize {
    4
}

impl Default for SubsampleConfig {
    fn default() -> Self {
        Self {
            block_length: None,
            stride: None,
            level: default_level(),
            beta1: None,
            reuse_threshold: false,
            block_starts: default_block_starts(),
        }
    }
}

/// Block length, stride and `beta1` after defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSubsample {
    pub block_length: usize,
    pub stride: usize,
    pub level: f64,
    pub beta1: f64,
}

impl SubsampleConfig {
    pub fn resolve(&self, n: usize, w: usize, d: usize) -> Result<ResolvedSubsample> {
        let b = self
            .block_length
            .unwrap_or_else(|| ((n as f64).powf(0.7).floor() as usize).max(1));
        let stride = self.stride.unwrap_or((b / 3).max(1));
        let beta1 = self.beta1.unwrap_or(default_beta1(w, d));
        let (wf, df) = (w as f64, d as f64);
        if b == 0 || b > n {
            return Err(Error::InvalidArgument(format!(
                "block length {b} must lie in [1, {n}]"
            )));
        }
        if stride == 0 {
            return Err(Error::InvalidArgument("stride must be positive".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "level {} outside (0, 1)",
                self.level
            )));
        }
        if !(beta1 > wf / (5.0 * df) && beta1 < wf / (2.0 * df)) {
            return Err(Error::InvalidArgument(format!(
                "beta1 = {beta1} outside ({}, {})",
                wf / (5.0 * df),
                wf / (2.0 * df)
            )));
        }
        Ok(ResolvedSubsample {
            block_length: b,
            stride,
            level: self.level,
            beta1,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleCi {
    pub point_estimate: IndexMap<String, f64>,
    /// Per parameter `[lower, upper]`.
    pub intervals: IndexMap<String, [f64; 2]>,
    pub n_blocks: usize,
    pub dropped_blocks: usize,
    pub config: ResolvedSubsample,
}

/// Window start offsets (0-based) along one increasing dimension.
pub fn block_starts(n: usize, b: usize, stride: usize) -> Vec<usize> {
    (0..=n - b).step_by(stride).collect()
}

/// Confidence intervals around `theta_n` (the fit on the whole field).
/// Window fits use the streams `stream_base + j` of `seed`.
pub fn subsample_ci(
    field: &SpaceTimeField,
    spec: &EstimationSpec,
    theta_n: &IndexMap<String, f64>,
    full_threshold: f64,
    config: &SubsampleConfig,
    seed: u64,
    stream_base: u64,
) -> Result<SubsampleCi> {
    let domain = field.domain();
    let (n, w, d) = (domain.n(), domain.w(), domain.d());
    let rs = config.resolve(n, w, d)?;
    let theta: Vec<f64> = theta_n.values().copied().collect();
    if rs.block_length == n {
        return Ok(SubsampleCi {
            point_estimate: theta_n.clone(),
            intervals: theta_n.iter().map(|(k, &v)| (k.clone(), [v, v])).collect(),
            n_blocks: 1,
            dropped_blocks: 0,
            config: rs,
        });
    }
    let starts_1d = block_starts(n, rs.block_length, rs.stride);
    let mut blocks: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..w {
        blocks = blocks
            .into_iter()
            .flat_map(|b| {
                starts_1d.iter().map(move |&s| {
                    let mut v = b.clone();
                    v.push(s);
                    v
                })
            })
            .collect();
    }
    if blocks.len() < 10 {
        return Err(Error::InvalidArgument(format!(
            "only {} blocks for n = {n}, b = {}, stride = {}; at least 10 are required",
            blocks.len(),
            rs.block_length,
            rs.stride
        )));
    }
    let mut block_spec = spec.clone();
    block_spec.fit.starts = config.block_starts;
    block_spec.fit.warm_start = Some(theta.clone());
    let threshold = if config.reuse_threshold {
        Some(crate::extremogram::ThresholdSpec {
            quantile_level: spec.quantile_level,
            realized: full_threshold,
            degenerate: false,
        })
    } else {
        None
    };
    let fits: Vec<Option<Vec<f64>>> = blocks
        .par_iter()
        .enumerate()
        .map(|(j, starts)| {
            let sub = field.window(starts, rs.block_length).ok()?;
            let mut rng = stream_rng(seed, stream_base + j as u64);
            match estimate_field(&sub, &block_spec, threshold, &mut rng) {
                Ok(fit) if fit.result.converged => Some(fit.result.theta()),
                Ok(_) => {
                    warn!("block {starts:?}: fit did not converge; dropped");
                    None
                }
                Err(e) => {
                    warn!("block {starts:?}: {e}; dropped");
                    None
                }
            }
        })
        .collect();
    let dropped = fits.iter().filter(|f| f.is_none()).count();
    if dropped * 5 > blocks.len() {
        return Err(Error::TooManyFailures {
            what: "subsampling blocks".into(),
            failed: dropped,
            total: blocks.len(),
        });
    }
    let expo = (w as f64 - rs.beta1 * d as f64) / 2.0;
    let tau_b = (rs.block_length as f64).powf(expo);
    let tau_n = (n as f64).powf(expo);
    let alpha = 1.0 - rs.level;
    let mut intervals = IndexMap::new();
    for (i, name) in theta_n.keys().enumerate() {
        let mut dev: Vec<f64> = fits
            .iter()
            .flatten()
            .map(|t| tau_b * (t[i] - theta[i]))
            .collect();
        dev.sort_by(f64::total_cmp);
        let q_lo = quantile_interp(&dev, alpha / 2.0);
        let q_hi = quantile_interp(&dev, 1.0 - alpha / 2.0);
        intervals.insert(
            name.clone(),
            [theta[i] - q_hi / tau_n, theta[i] - q_lo / tau_n],
        );
    }
    Ok(SubsampleCi {
        point_estimate: theta_n.clone(),
        intervals,
        n_blocks: blocks.len(),
        dropped_blocks: dropped,
        config: rs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let rs = SubsampleConfig::default().resolve(200, 1, 3).unwrap();
        assert_eq!(rs.block_length, 40);
        assert_eq!(rs.stride, 13);
        assert!((rs.beta1 - 5.0 / 36.0).abs() < 1e-15);
        assert_eq!(block_starts(10, 4, 3), vec![0, 3, 6]);
        let bad = SubsampleConfig {
            beta1: Some(0.05),
            ..Default::default()
        };
        assert!(bad.resolve(200, 1, 3).is_err());
    }
}
