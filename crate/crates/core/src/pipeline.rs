//! Field to fitted parameters: threshold, extremogram, correction, weights, GLSE.

use log::debug;
use rand::Rng;

use crate::br::IntervalSet;
use crate::domain::{Lag, SpaceTimeField};
use crate::error::{Error, Result};
use crate::extremogram::{
    bias_correct, empirical_extremogram, select_threshold, BiasRegime, ExtremogramEstimate,
    ThresholdSpec,
};
use crate::glse::{fit_glse, weight_matrix, FitOptions, GlseProblem, GlseResult, WeightKind};
use crate::models::DependenceModel;

/// Everything needed to turn one field into a parameter estimate.
#[derive(Debug, Clone)]
pub struct EstimationSpec {
    pub lags: Vec<Lag>,
    pub quantile_level: f64,
    pub a: IntervalSet,
    pub b: IntervalSet,
    pub regime: BiasRegime,
    pub weights: WeightKind,
    /// Used instead of `weights` when those are invalid for the estimates.
    pub fallback_weights: Option<WeightKind>,
    /// Family and parameter box; its parameter values are not used.
    pub template: DependenceModel,
    pub fit: FitOptions,
}

#[derive(Debug, Clone)]
pub struct FieldFit {
    pub threshold: ThresholdSpec,
    pub estimates: Vec<ExtremogramEstimate>,
    pub result: GlseResult,
    pub weights: WeightKind,
}

/// Runs the estimation chain on `field`. With `threshold` given the quantile
/// is not recomputed.
pub fn estimate_field<R: Rng + ?Sized>(
    field: &SpaceTimeField,
    spec: &EstimationSpec,
    threshold: Option<ThresholdSpec>,
    rng: &mut R,
) -> Result<FieldFit> {
    let threshold = match threshold {
        Some(t) => t,
        None => select_threshold(field, spec.quantile_level)?,
    };
    let raw = empirical_extremogram(field, &spec.lags, &threshold, &spec.a, &spec.b)?;
    let estimates = bias_correct(&raw, spec.regime)?;
    let values: Vec<f64> = estimates.iter().map(|e| e.value).collect();
    let (result, kind) = fit_values(&spec.lags, &values, spec, rng)?;
    Ok(FieldFit {
        threshold,
        estimates,
        result,
        weights: kind,
    })
}

/// GLSE fit to given extremogram values at `lags`; `spec.lags` is ignored.
pub fn fit_values<R: Rng + ?Sized>(
    lags: &[Lag],
    values: &[f64],
    spec: &EstimationSpec,
    rng: &mut R,
) -> Result<(GlseResult, WeightKind)> {
    let (weights, kind) = match (
        weight_matrix(spec.weights, lags, Some(values)),
        spec.fallback_weights,
    ) {
        (Ok(w), _) => (w, spec.weights),
        (Err(Error::InvalidWeight(msg)), Some(fb)) => {
            debug!("{msg}; using {fb:?} weights");
            (weight_matrix(fb, lags, Some(values))?, fb)
        }
        (Err(e), _) => return Err(e),
    };
    let problem = GlseProblem::new(lags, values, &weights, spec.a, spec.b)?;
    Ok((fit_glse(&problem, &spec.template, &spec.fit, rng)?, kind))
}
