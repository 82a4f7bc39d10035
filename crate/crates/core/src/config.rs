//! JSON run configuration shared by every command, with presets for the
//! simulation scenarios.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use log::warn;
use serde::{Deserialize, Serialize};

use crate::br::IntervalSet;
use crate::domain::{Lag, ObservationDomain};
use crate::error::{Error, Result};
use crate::extremogram::{regime_advise, BiasRegime, RegimeAdvice};
use crate::glse::{FitOptions, WeightKind};
use crate::models::{DependenceModel, Family, ModelSpec};
use crate::pipeline::EstimationSpec;
use crate::simulate::SamplerKind;
use crate::study::{preset_lags, Scenario};
use crate::subsample::{default_beta1, SubsampleConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    /// Rectangle `{1..a} x {1..b} x ..` of fixed sites.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_shape: Option<Vec<usize>>,
    /// Explicit fixed sites.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_sites: Option<Vec<Vec<i64>>>,
    /// Side of the increasing part.
    pub n: usize,
    #[serde(default = "one")]
    pub w: usize,
}

fn one() -> usize {
    1
}

impl DomainSpec {
    pub fn build(&self) -> Result<ObservationDomain> {
        match (&self.fixed_shape, &self.fixed_sites) {
            (Some(_), Some(_)) => Err(Error::Config(
                "domain: give either fixed_shape or fixed_sites, not both".into(),
            )),
            (Some(shape), None) => ObservationDomain::rectangle(shape, self.n, self.w),
            (None, Some(sites)) => ObservationDomain::new(sites.clone(), self.n, self.w),
            (None, None) => ObservationDomain::increasing_only(self.n, self.w),
        }
    }
}

/// A named lag set (`"H"`, `"H1"`..`"H5"`) or explicit full lag vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LagSpec {
    Preset(String),
    Explicit(Vec<Vec<i64>>),
}

impl Default for LagSpec {
    fn default() -> Self {
        LagSpec::Preset("H".into())
    }
}

impl LagSpec {
    pub fn label(&self) -> String {
        match self {
            LagSpec::Preset(name) => name.clone(),
            LagSpec::Explicit(l) => format!("{} lags", l.len()),
        }
    }

    /// Lags split into fixed and increasing parts for a domain with `q` fixed coordinates.
    pub fn resolve(&self, q: usize) -> Result<Vec<Lag>> {
        let full = match self {
            LagSpec::Preset(name) => preset_lags(name)
                .ok_or_else(|| Error::Config(format!("unknown lag set `{name}`")))?,
            LagSpec::Explicit(l) => l.clone(),
        };
        if full.is_empty() {
            return Err(Error::Config("empty lag set".into()));
        }
        full.iter().map(|l| Lag::split(l, q)).collect()
    }
}

/// Interval `(lower, upper)`; a missing upper bound means infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalSpec {
    pub lower: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
}

impl Default for IntervalSpec {
    fn default() -> Self {
        Self {
            lower: 1.0,
            upper: None,
        }
    }
}

impl IntervalSpec {
    pub fn build(&self) -> Result<IntervalSet> {
        IntervalSet::new(self.lower, self.upper.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BiasMode {
    /// Chosen from the threshold rate exponent.
    #[default]
    Auto,
    On,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationConfig {
    /// Defaults to the level used for the family in the simulation study.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantile_level: Option<f64>,
    #[serde(default)]
    pub lags: LagSpec,
    #[serde(default)]
    pub a: IntervalSpec,
    #[serde(default)]
    pub b: IntervalSpec,
    #[serde(default = "default_weights")]
    pub weights: WeightKind,
    /// Weights used when `weights` are invalid for a data set.
    #[serde(default = "default_fallback")]
    pub fallback_weights: Option<WeightKind>,
    #[serde(default)]
    pub bias_correct: BiasMode,
    /// Threshold rate exponent; defaults to `5w / (12d)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(default = "default_starts")]
    pub starts: usize,
}

fn default_weights() -> WeightKind {
    WeightKind::Empirical
}

fn default_fallback() -> Option<WeightKind> {
    Some(WeightKind::ExpDecay)
}

fn default_starts() -> usize {
    16
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            quantile_level: None,
            lags: LagSpec::default(),
            a: IntervalSpec::default(),
            b: IntervalSpec::default(),
            weights: default_weights(),
            fallback_weights: default_fallback(),
            bias_correct: BiasMode::Auto,
            beta1: None,
            starts: default_starts(),
        }
    }
}

/// Quantile level used for each family in the simulation study.
pub fn default_quantile_level(family: Family) -> f64 {
    match family {
        Family::IsoFrac | Family::AxisAniso => 0.96,
        Family::IsoFracGeoAniso | Family::AxisAnisoRot => 0.97,
        Family::TimeShifted => 0.95,
    }
}

/// Configuration of every command; sections a command does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// True model for simulation; family and box for fitting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub estimation: EstimationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsampling: Option<SubsampleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sampler: SamplerKind,
    /// Field CSV read by `extremogram`, `fit` and `ci`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Estimates CSV read by `fit`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimates: Option<PathBuf>,
    /// Quantile levels for the threshold stability table of `extremogram`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_levels: Option<Vec<f64>>,
    /// Lag sets compared by `lagscan`; defaults to `H1`..`H5`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lag_sets: Option<Vec<LagSpec>>,
    /// Lengths of the increasing dimensions compared by `ratecheck`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<usize>>,
    /// Precomputed RMSEs per length for `ratecheck`; skips the simulation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rmse_by_length: Option<BTreeMap<usize, Vec<f64>>>,
    /// Parameter names for `rmse_by_length`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameters: Option<Vec<String>>,
    /// `beta1` range of the rate band; defaults to `(w/5d, w/2d)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta1_range: Option<[f64; 2]>,
    #[serde(default = "default_tolerance")]
    pub rate_tolerance: f64,
    /// `w` and `d` for `rmse_by_length` when no domain is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<[usize; 2]>,
    /// Output directory; not echoed, so runs into different directories
    /// produce identical files.
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
}

fn default_tolerance() -> f64 {
    0.05
}

impl Default for Config {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config")
    }
}

/// Reads a config file; schema errors name the offending field.
pub fn parse_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        e => e,
    })
}

pub fn parse_config_str(text: &str) -> Result<Config> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Config(format!("at `{path}`: {}", e.into_inner()))
    })
}

impl Config {
    pub fn model_spec(&self) -> Result<&ModelSpec> {
        self.model
            .as_ref()
            .ok_or_else(|| Error::Config("`model` is required".into()))
    }

    /// The model with all parameter and box checks applied.
    pub fn model(&self) -> Result<DependenceModel> {
        self.model_spec()?.build()
    }

    /// Family and box; parameters missing from the config take the box midpoint.
    pub fn template(&self) -> Result<DependenceModel> {
        let spec = self.model_spec()?;
        let layout = spec.family.layout(spec.dim())?;
        let mut filled = spec.clone();
        let mut params = IndexMap::new();
        for (name, kind) in &layout {
            let v = match spec.params.get(name) {
                Some(&v) => v,
                None => {
                    let (lo, hi) = spec
                        .bounds
                        .get(name)
                        .map(|b| (b[0], b[1]))
                        .unwrap_or_else(|| kind.default_bounds());
                    0.5 * (lo + hi)
                }
            };
            params.insert(name.clone(), v);
        }
        filled.params = params;
        filled.build()
    }

    pub fn domain(&self) -> Result<ObservationDomain> {
        self.domain
            .as_ref()
            .ok_or_else(|| Error::Config("`domain` is required".into()))?
            .build()
    }

    pub fn quantile_level(&self) -> Result<f64> {
        let level = match self.estimation.quantile_level {
            Some(l) => l,
            None => default_quantile_level(self.model_spec()?.family),
        };
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::Config(format!(
                "quantile level {level} outside (0, 1)"
            )));
        }
        Ok(level)
    }

    pub fn beta1(&self, domain: &ObservationDomain) -> f64 {
        self.estimation
            .beta1
            .unwrap_or(default_beta1(domain.w(), domain.d()))
    }

    pub fn regime(&self, domain: &ObservationDomain) -> Result<BiasRegime> {
        Ok(match self.estimation.bias_correct {
            BiasMode::On => BiasRegime::FirstOrder,
            BiasMode::Off => BiasRegime::None,
            BiasMode::Auto => {
                match regime_advise(domain.n(), domain.w(), domain.d(), self.beta1(domain))? {
                    RegimeAdvice::FirstOrder => BiasRegime::FirstOrder,
                    RegimeAdvice::None => BiasRegime::None,
                    RegimeAdvice::Unsupported => {
                        warn!("beta1 below w/(5d): no supported correction, estimates are not corrected");
                        BiasRegime::None
                    }
                }
            }
        })
    }

    /// Estimation settings for fields on `domain`, fitting over the box of `template`.
    pub fn estimation_spec(
        &self,
        template: &DependenceModel,
        domain: &ObservationDomain,
    ) -> Result<EstimationSpec> {
        let lags = self.estimation.lags.resolve(domain.q())?;
        if let Some(l) = lags.iter().find(|l| l.dim() != template.dim()) {
            return Err(Error::Config(format!(
                "lag {:?} has dimension {}, the model has {}",
                l.full(),
                l.dim(),
                template.dim()
            )));
        }
        if template.dim() != domain.d() {
            return Err(Error::Config(format!(
                "model dimension {} differs from domain dimension {}",
                template.dim(),
                domain.d()
            )));
        }
        Ok(EstimationSpec {
            lags,
            quantile_level: self.quantile_level()?,
            a: self.estimation.a.build()?,
            b: self.estimation.b.build()?,
            regime: self.regime(domain)?,
            weights: self.estimation.weights,
            fallback_weights: self.estimation.fallback_weights,
            template: template.clone(),
            fit: FitOptions {
                starts: self.estimation.starts,
                ..FitOptions::default()
            },
        })
    }

    pub fn scenario(&self, default_replicates: usize) -> Result<Scenario> {
        let truth = self.model()?;
        let domain = self.domain()?;
        let spec = self.estimation_spec(&truth, &domain)?;
        Ok(Scenario {
            name: self.name.clone().unwrap_or_else(|| "scenario".into()),
            truth,
            domain,
            spec,
            replicates: self.replicates.unwrap_or(default_replicates),
            seed: self.seed,
            sampler: self.sampler,
            subsampling: self.subsampling.clone(),
        })
    }

    /// Checks what can be checked without knowing the command, and fills in
    /// defaults that depend on other fields.
    pub fn effective(mut self) -> Result<Self> {
        if let Some(spec) = &self.model {
            spec.build()?;
            if self.estimation.quantile_level.is_none() {
                self.estimation.quantile_level = Some(default_quantile_level(spec.family));
            }
            self.quantile_level()?;
        }
        if let Some(d) = &self.domain {
            let domain = d.build()?;
            if self.estimation.beta1.is_none() {
                self.estimation.beta1 = Some(default_beta1(domain.w(), domain.d()));
            }
            self.estimation.lags.resolve(domain.q())?;
            if let Some(sets) = &self.lag_sets {
                for s in sets {
                    s.resolve(domain.q())?;
                }
            }
        }
        self.estimation.a.build()?;
        self.estimation.b.build()?;
        if self.estimation.starts == 0 {
            return Err(Error::Config("estimation.starts must be positive".into()));
        }
        if !(self.rate_tolerance >= 0.0) {
            return Err(Error::Config("rate_tolerance must be non-negative".into()));
        }
        Ok(self)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

fn model_spec(
    family: Family,
    names_values: &[(&str, f64)],
    bounds: &[(&str, [f64; 2])],
) -> ModelSpec {
    ModelSpec {
        family,
        dim: Some(3),
        params: names_values
            .iter()
            .map(|(n, v)| (n.to_string(), *v))
            .collect(),
        bounds: bounds.iter().map(|(n, b)| (n.to_string(), *b)).collect(),
    }
}

/// True model of study scenario `i`, `ii` or `iii`.
pub fn scenario_model(scenario: &str) -> Option<ModelSpec> {
    Some(match scenario {
        "i" => model_spec(
            Family::IsoFrac,
            &[("C1", 0.8), ("C2", 0.4), ("alpha1", 1.5), ("alpha2", 1.0)],
            &[],
        ),
        "ii" => model_spec(
            Family::IsoFracGeoAniso,
            &[
                ("C1", 0.8),
                ("C2", 0.4),
                ("alpha1", 1.5),
                ("alpha2", 0.5),
                ("c", 3.0),
                ("phi", PI / 4.0),
            ],
            &[("alpha1", [1.0, 2.0])],
        ),
        "iii" => model_spec(
            Family::TimeShifted,
            &[
                ("C1", 0.4),
                ("C2", 0.8),
                ("C3", 0.5),
                ("alpha1", 1.5),
                ("alpha2", 1.5),
                ("alpha3", 1.0),
                ("tau1", 1.0),
                ("tau2", 1.0),
            ],
            &[("alpha1", [1.0, 2.0]), ("alpha2", [1.0, 2.0])],
        ),
        _ => return None,
    })
}

fn grid(shape: &[usize], n: usize, w: usize) -> DomainSpec {
    DomainSpec {
        fixed_shape: (!shape.is_empty()).then(|| shape.to_vec()),
        fixed_sites: None,
        n,
        w,
    }
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 9] = [
    "i", "ii", "iii", "i-full", "ii-full", "iii-full", "lagscan", "rate", "coverage",
];

/// Built-in configurations. The `-full` variants use the grid sizes and
/// replicate count of the original study and are slow.
pub fn preset(name: &str) -> Option<Config> {
    let mut c = Config::default();
    let (scenario, domain, replicates) = match name {
        "i" => ("i", grid(&[8, 8], 150, 1), 20),
        "ii" => ("ii", grid(&[8, 8], 150, 1), 20),
        "iii" => ("iii", grid(&[], 20, 3), 20),
        "i-full" => ("i", grid(&[15, 15], 300, 1), 100),
        "ii-full" => ("ii", grid(&[15, 15], 300, 1), 100),
        "iii-full" => ("iii", grid(&[], 40, 3), 100),
        "lagscan" => {
            c.lag_sets = Some((1..=5).map(|l| LagSpec::Preset(format!("H{l}"))).collect());
            ("i", grid(&[13, 13], 100, 1), 20)
        }
        "rate" => {
            c.lengths = Some(vec![100, 200, 400]);
            ("i", grid(&[8, 8], 400, 1), 30)
        }
        "coverage" => {
            c.subsampling = Some(SubsampleConfig::default());
            ("i", grid(&[8, 8], 150, 1), 100)
        }
        _ => return None,
    };
    c.name = Some(name.into());
    c.model = scenario_model(scenario);
    c.domain = Some(domain);
    c.replicates = Some(replicates);
    c.seed = 1;
    Some(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config_str(
            r#"{"model": {"family": "ISO_FRAC", "params": {"C1": 0.8, "C2": 0.4, "alpha1": 1.5, "alpha2": 1}},
                "domain": {"fixed_shape": [8, 8], "n": 150}}"#,
        )
        .unwrap()
        .effective()
        .unwrap();
        assert_eq!(c.estimation.quantile_level, Some(0.96));
        assert_eq!(c.estimation.starts, 16);
        assert_eq!(c.estimation.weights, WeightKind::Empirical);
        let sc = c.scenario(20).unwrap();
        assert_eq!(sc.spec.lags.len(), 15);
        assert_eq!(sc.spec.regime, BiasRegime::None);
        assert_eq!(sc.domain.site_count(), 9600);
    }

    #[test]
    fn rejects_bad_values_and_unknown_keys() {
        let bad_alpha = r#"{"model": {"family": "ISO_FRAC", "params": {"C1": 0.8, "C2": 0.4, "alpha1": 2.5, "alpha2": 1}}}"#;
        let err = parse_config_str(bad_alpha)
            .unwrap()
            .effective()
            .unwrap_err()
            .to_string();
        assert!(err.contains("(0, 2]"), "{err}");
        let unknown = r#"{"model": {"family": "ISO_FRAC", "params": {"C1": 0.8, "C2": 0.4, "alpha1": 1.5, "alpha2": 1, "alpha_4": 1}}}"#;
        assert!(parse_config_str(unknown).unwrap().effective().is_err());
        let err = parse_config_str(r#"{"estimation": {"start": 3}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("estimation"), "{err}");
        let err = parse_config_str(r#"{"domain": {"n": "x"}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("domain.n"), "{err}");
    }

    #[test]
    fn echo_round_trips() {
        for name in PRESETS {
            let c = preset(name).unwrap().effective().unwrap();
            let back = parse_config_str(&c.to_json().unwrap()).unwrap();
            assert_eq!(back, c, "{name}");
            assert_eq!(back.clone().effective().unwrap(), back);
        }
    }

    #[test]
    fn presets_build() {
        for name in ["i", "ii", "iii", "lagscan", "rate", "coverage"] {
            let sc = preset(name).unwrap().scenario(20).unwrap();
            assert!(sc.domain.site_count() <= 26_000, "{name}");
            assert!(sc
                .truth
                .params()
                .iter()
                .zip(sc.truth.bounds())
                .all(|(v, (lo, hi))| lo <= v && v <= hi));
        }
        let iii = preset("iii").unwrap().scenario(20).unwrap();
        assert_eq!((iii.domain.q(), iii.domain.w()), (0, 3));
        assert_eq!(iii.spec.quantile_level, 0.95);
    }
}
