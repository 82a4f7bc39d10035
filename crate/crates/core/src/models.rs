//! Parametric dependence functions (semivariograms) `delta_theta(h, u)`.
//!
//! Lags are real vectors whose last coordinate is time and whose leading
//! coordinates are space. On a domain `F x I_n` this is the order
//! `(h_F, h_I)`, so scenario layouts must put time last.

use std::f64::consts::FRAC_PI_2;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Family {
    /// `C1 ||h||^a1 + C2 |u|^a2`
    IsoFrac,
    /// `IsoFrac` evaluated at `(T R h, u)`; two spatial dimensions
    IsoFracGeoAniso,
    /// `sum_j Cj |h_j|^aj + Cd |u|^ad`
    AxisAniso,
    /// `AxisAniso` along axes rotated by `phi`; two spatial dimensions
    AxisAnisoRot,
    /// `sum_i Ci |h_i - u tau_i|^ai + Cd |u|^ad`
    TimeShifted,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::IsoFrac,
        Family::IsoFracGeoAniso,
        Family::AxisAniso,
        Family::AxisAnisoRot,
        Family::TimeShifted,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::IsoFrac => "ISO_FRAC",
            Family::IsoFracGeoAniso => "ISO_FRAC_GEO_ANISO",
            Family::AxisAniso => "AXIS_ANISO",
            Family::AxisAnisoRot => "AXIS_ANISO_ROT",
            Family::TimeShifted => "TIME_SHIFTED",
        }
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        let ok = match self {
            Family::IsoFrac | Family::TimeShifted => dim >= 2,
            Family::IsoFracGeoAniso | Family::AxisAnisoRot => dim == 3,
            Family::AxisAniso => dim >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!(
                "{} is not defined for lag dimension {dim}",
                self.name()
            )))
        }
    }

    /// Parameter layout for lag dimension `dim`.
    pub fn layout(&self, dim: usize) -> Result<Vec<(String, ParamKind)>> {
        self.check_dim(dim)?;
        let c = |j: usize| (format!("C{j}"), ParamKind::Scale);
        let a = |j: usize| (format!("alpha{j}"), ParamKind::Exponent);
        Ok(match self {
            Family::IsoFrac => vec![c(1), c(2), a(1), a(2)],
            Family::IsoFracGeoAniso => vec![
                c(1),
                c(2),
                a(1),
                a(2),
                ("c".into(), ParamKind::Dilation),
                ("phi".into(), ParamKind::Angle),
            ],
            Family::AxisAniso => (1..=dim).map(c).chain((1..=dim).map(a)).collect(),
            Family::AxisAnisoRot => (1..=3)
                .map(c)
                .chain((1..=3).map(a))
                .chain(std::iter::once(("phi".into(), ParamKind::Angle)))
                .collect(),
            Family::TimeShifted => (1..=dim)
                .map(c)
                .chain((1..=dim).map(a))
                .chain((1..dim).map(|j| (format!("tau{j}"), ParamKind::Shift)))
                .collect(),
        })
    }
}

/// Constraint class of a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    /// `C > 0`
    Scale,
    /// `alpha in (0, 2]`
    Exponent,
    /// dilation `c > 0`
    Dilation,
    /// `phi in [0, pi/2)`
    Angle,
    /// time shift `tau`, any real
    Shift,
}

impl ParamKind {
    pub fn default_bounds(&self) -> (f64, f64) {
        match self {
            ParamKind::Scale => (1e-3, 10.0),
            ParamKind::Exponent => (1e-2, 2.0),
            ParamKind::Dilation => (1e-2, 10.0),
            ParamKind::Angle => (0.0, FRAC_PI_2 - 1e-9),
            ParamKind::Shift => (-5.0, 5.0),
        }
    }

    fn check(&self, name: &str, v: f64) -> Result<()> {
        let (ok, reason) = match self {
            ParamKind::Scale | ParamKind::Dilation => (v > 0.0 && v.is_finite(), "must be > 0"),
            ParamKind::Exponent => (v > 0.0 && v <= 2.0, "must lie in (0, 2]"),
            ParamKind::Angle => ((0.0..FRAC_PI_2).contains(&v), "must lie in [0, pi/2)"),
            ParamKind::Shift => (v.is_finite(), "must be finite"),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: name.to_string(),
                value: v,
                reason: reason.to_string(),
            })
        }
    }
}

/// A family, its lag dimension, a parameter vector and a parameter box.
#[derive(Debug, Clone, PartialEq)]
pub struct DependenceModel {
    family: Family,
    dim: usize,
    names: Vec<String>,
    kinds: Vec<ParamKind>,
    params: Vec<f64>,
    bounds: Vec<(f64, f64)>,
}

impl DependenceModel {
    pub fn new(
        family: Family,
        dim: usize,
        params: Vec<f64>,
        bounds: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let layout = family.layout(dim)?;
        if params.len() != layout.len() || bounds.len() != layout.len() {
            return Err(Error::InvalidModel(format!(
                "{} in dimension {dim} takes {} parameters",
                family.name(),
                layout.len()
            )));
        }
        let (names, kinds): (Vec<String>, Vec<ParamKind>) = layout.into_iter().unzip();
        for ((name, kind), &(lo, hi)) in names.iter().zip(&kinds).zip(&bounds) {
            if !(lo <= hi) {
                return Err(Error::InvalidModel(format!(
                    "empty box for {name}: [{lo}, {hi}]"
                )));
            }
            kind.check(name, lo)?;
            kind.check(name, hi)?;
        }
        let m = Self {
            family,
            dim,
            names,
            kinds,
            params: vec![0.0; bounds.len()],
            bounds,
        };
        m.with_params(&params)
    }

    /// Model with the default box of every parameter.
    pub fn with_default_box(family: Family, dim: usize, params: Vec<f64>) -> Result<Self> {
        let bounds = family
            .layout(dim)?
            .iter()
            .map(|(_, k)| k.default_bounds())
            .collect();
        Self::new(family, dim, params, bounds)
    }

    /// Same family and box, new parameter vector (validated).
    pub fn with_params(&self, params: &[f64]) -> Result<Self> {
        if params.len() != self.params.len() {
            return Err(Error::DimensionMismatch {
                expected: self.params.len(),
                got: params.len(),
            });
        }
        for (k, &v) in params.iter().enumerate() {
            self.kinds[k].check(&self.names[k], v)?;
            let (lo, hi) = self.bounds[k];
            if v < lo || v > hi {
                return Err(Error::InvalidParameter {
                    name: self.names[k].clone(),
                    value: v,
                    reason: format!("outside box [{lo}, {hi}]"),
                });
            }
        }
        Ok(Self {
            params: params.to_vec(),
            ..self.clone()
        })
    }

    /// Same parameters with a new box.
    pub fn with_bounds(&self, bounds: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(self.family, self.dim, self.params.clone(), bounds)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn param_names(&self) -> &[String] {
        &self.names
    }

    pub fn param_kinds(&self) -> &[ParamKind] {
        &self.kinds
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|k| self.params[k])
    }

    /// `delta_theta(lag)`.
    pub fn dependence(&self, lag: &[f64]) -> Result<f64> {
        if lag.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: lag.len(),
            });
        }
        Ok(self.eval(lag))
    }

    /// `delta_theta(lag)` without the dimension check.
    pub fn eval(&self, lag: &[f64]) -> f64 {
        eval_family(self.family, self.dim, &self.params, lag)
    }

    /// Decomposition `delta(x) = sum_c C_c ||M_c x||^{a_c}` into independent
    /// power-variogram components of linear projections of the lag.
    pub fn additive_components(&self) -> Vec<PowerComponent> {
        let d = self.dim;
        let p = &self.params;
        let unit = |j: usize| {
            let mut r = vec![0.0; d];
            r[j] = 1.0;
            r
        };
        let time = d - 1;
        match self.family {
            Family::IsoFrac => vec![
                PowerComponent {
                    map: (0..time).map(unit).collect(),
                    scale: p[0],
                    exponent: p[2],
                },
                PowerComponent {
                    map: vec![unit(time)],
                    scale: p[1],
                    exponent: p[3],
                },
            ],
            Family::IsoFracGeoAniso => {
                let (c, phi) = (p[4], p[5]);
                let (s, co) = phi.sin_cos();
                vec![
                    PowerComponent {
                        map: vec![vec![co, -s, 0.0], vec![c * s, c * co, 0.0]],
                        scale: p[0],
                        exponent: p[2],
                    },
                    PowerComponent {
                        map: vec![unit(2)],
                        scale: p[1],
                        exponent: p[3],
                    },
                ]
            }
            Family::AxisAniso => (0..d)
                .map(|j| PowerComponent {
                    map: vec![unit(j)],
                    scale: p[j],
                    exponent: p[d + j],
                })
                .collect(),
            Family::AxisAnisoRot => {
                let (s, co) = p[6].sin_cos();
                vec![
                    PowerComponent {
                        map: vec![vec![co, -s, 0.0]],
                        scale: p[0],
                        exponent: p[3],
                    },
                    PowerComponent {
                        map: vec![vec![s, co, 0.0]],
                        scale: p[1],
                        exponent: p[4],
                    },
                    PowerComponent {
                        map: vec![unit(2)],
                        scale: p[2],
                        exponent: p[5],
                    },
                ]
            }
            Family::TimeShifted => {
                let mut out: Vec<PowerComponent> = (0..time)
                    .map(|i| {
                        let mut r = unit(i);
                        r[time] = -p[2 * d + i];
                        PowerComponent {
                            map: vec![r],
                            scale: p[i],
                            exponent: p[d + i],
                        }
                    })
                    .collect();
                out.push(PowerComponent {
                    map: vec![unit(time)],
                    scale: p[time],
                    exponent: p[d + time],
                });
                out
            }
        }
    }

    pub fn to_spec(&self) -> ModelSpec {
        ModelSpec {
            family: self.family,
            dim: Some(self.dim),
            params: self
                .names
                .iter()
                .cloned()
                .zip(self.params.iter().copied())
                .collect(),
            bounds: self
                .names
                .iter()
                .cloned()
                .zip(self.bounds.iter().map(|&(a, b)| [a, b]))
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_spec())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_str(text)?;
        spec.build()
    }
}

/// One term `scale * ||map . x||^exponent` of an additive dependence function.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerComponent {
    /// Rows of the linear projection applied to the full lag vector.
    pub map: Vec<Vec<f64>>,
    pub scale: f64,
    pub exponent: f64,
}

impl PowerComponent {
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.map
            .iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Variogram of the component at a projected lag `y`.
    pub fn variogram(&self, y: &[f64]) -> f64 {
        let r = if y.len() == 1 {
            y[0].abs()
        } else {
            y.iter().map(|v| v * v).sum::<f64>().sqrt()
        };
        self.scale * r.powf(self.exponent)
    }
}

fn pw(x: f64, a: f64) -> f64 {
    x.abs().powf(a)
}

/// Family formulas on a raw parameter slice (layout order).
pub fn eval_family(family: Family, dim: usize, p: &[f64], x: &[f64]) -> f64 {
    let time = dim - 1;
    let u = x[time];
    match family {
        Family::IsoFrac => {
            let r = x[..time].iter().map(|v| v * v).sum::<f64>().sqrt();
            p[0] * r.powf(p[2]) + p[1] * pw(u, p[3])
        }
        Family::IsoFracGeoAniso => {
            let (c, phi) = (p[4], p[5]);
            let (s, co) = phi.sin_cos();
            let a1 = co * x[0] - s * x[1];
            let a2 = c * (s * x[0] + co * x[1]);
            let r = (a1 * a1 + a2 * a2).sqrt();
            p[0] * r.powf(p[2]) + p[1] * pw(u, p[3])
        }
        Family::AxisAniso => (0..dim).map(|j| p[j] * pw(x[j], p[dim + j])).sum(),
        Family::AxisAnisoRot => {
            let (s, co) = p[6].sin_cos();
            p[0] * pw(x[0] * co - x[1] * s, p[3])
                + p[1] * pw(x[0] * s + x[1] * co, p[4])
                + p[2] * pw(u, p[5])
        }
        Family::TimeShifted => {
            let spatial: f64 = (0..time)
                .map(|i| p[i] * pw(x[i] - u * p[2 * dim + i], p[dim + i]))
                .sum();
            spatial + p[time] * pw(u, p[dim + time])
        }
    }
}

/// JSON form `{"family": .., "dim": .., "params": {..}, "box": {..}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: Family,
    /// Lag dimension; defaults to 3 (two space dimensions plus time).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub params: IndexMap<String, f64>,
    #[serde(default, rename = "box", skip_serializing_if = "IndexMap::is_empty")]
    pub bounds: IndexMap<String, [f64; 2]>,
}

impl ModelSpec {
    pub fn dim(&self) -> usize {
        self.dim.unwrap_or(3)
    }

    /// Validates names, constraints and box membership.
    pub fn build(&self) -> Result<DependenceModel> {
        let dim = self.dim();
        let layout = self.family.layout(dim)?;
        for name in self.params.keys().chain(self.bounds.keys()) {
            if !layout.iter().any(|(n, _)| n == name) {
                return Err(Error::InvalidModel(format!(
                    "unknown parameter `{name}` for {} (expected {:?})",
                    self.family.name(),
                    layout.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>()
                )));
            }
        }
        let mut params = Vec::with_capacity(layout.len());
        let mut bounds = Vec::with_capacity(layout.len());
        for (name, kind) in &layout {
            let v = *self
                .params
                .get(name)
                .ok_or_else(|| Error::InvalidModel(format!("missing parameter `{name}`")))?;
            kind.check(name, v)?;
            params.push(v);
            bounds.push(
                self.bounds
                    .get(name)
                    .map(|b| (b[0], b[1]))
                    .unwrap_or_else(|| kind.default_bounds()),
            );
        }
        DependenceModel::new(self.family, dim, params, bounds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn iso() -> DependenceModel {
        DependenceModel::with_default_box(Family::IsoFrac, 3, vec![0.8, 0.4, 1.5, 1.0]).unwrap()
    }

    #[test]
    fn iso_frac_hand_value() {
        let v = iso().dependence(&[3.0, 4.0, 2.0]).unwrap();
        let expected = 0.8 * 5f64.powf(1.5) + 0.4 * 2.0;
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 9.74427).abs() < 1e-5);
    }

    #[test]
    fn time_shift_cancels_spatial_terms() {
        let m = DependenceModel::with_default_box(
            Family::TimeShifted,
            3,
            vec![0.4, 0.8, 0.5, 1.5, 1.5, 1.0, 1.0, 1.0],
        )
        .unwrap();
        assert!((m.dependence(&[2.0, 2.0, 2.0]).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_lag_and_symmetry() {
        let models = sample_models();
        for m in &models {
            assert_eq!(m.eval(&[0.0, 0.0, 0.0]), 0.0, "{:?}", m.family());
            for lag in [[1.0, -2.0, 3.0], [0.5, 0.0, -1.0], [-3.0, 1.0, 0.0]] {
                let neg: Vec<f64> = lag.iter().map(|x| -x).collect();
                let a = m.eval(&lag);
                let b = m.eval(&neg);
                assert!(a >= 0.0);
                assert!((a - b).abs() <= 1e-12 * a.max(1.0));
            }
        }
    }

    fn sample_models() -> Vec<DependenceModel> {
        vec![
            iso(),
            DependenceModel::with_default_box(
                Family::IsoFracGeoAniso,
                3,
                vec![0.8, 0.4, 1.5, 0.5, 3.0, PI / 4.0],
            )
            .unwrap(),
            DependenceModel::with_default_box(
                Family::AxisAniso,
                3,
                vec![0.4, 0.8, 0.5, 1.5, 1.5, 1.0],
            )
            .unwrap(),
            DependenceModel::with_default_box(
                Family::AxisAnisoRot,
                3,
                vec![0.4, 0.8, 0.5, 1.5, 1.5, 1.0, 0.5],
            )
            .unwrap(),
            DependenceModel::with_default_box(
                Family::TimeShifted,
                3,
                vec![0.4, 0.8, 0.5, 1.5, 1.5, 1.0, 1.0, -0.5],
            )
            .unwrap(),
        ]
    }

    #[test]
    fn rotation_and_shift_reductions() {
        let axis = DependenceModel::with_default_box(
            Family::AxisAniso,
            3,
            vec![0.4, 0.8, 0.5, 1.5, 1.2, 1.0],
        )
        .unwrap();
        let rot = DependenceModel::with_default_box(
            Family::AxisAnisoRot,
            3,
            vec![0.4, 0.8, 0.5, 1.5, 1.2, 1.0, 0.0],
        )
        .unwrap();
        let shifted = DependenceModel::with_default_box(
            Family::TimeShifted,
            3,
            vec![0.4, 0.8, 0.5, 1.5, 1.2, 1.0, 0.0, 0.0],
        )
        .unwrap();
        let geo = DependenceModel::with_default_box(
            Family::IsoFracGeoAniso,
            3,
            vec![0.8, 0.4, 1.5, 1.0, 1.0, 0.0],
        )
        .unwrap();
        for lag in [[1.0, 2.0, 3.0], [-2.0, 0.5, 1.0], [0.0, 4.0, -2.0]] {
            let a = axis.eval(&lag);
            assert!((a - rot.eval(&lag)).abs() < 1e-12);
            assert!((a - shifted.eval(&lag)).abs() < 1e-12);
            assert!((iso().eval(&lag) - geo.eval(&lag)).abs() < 1e-12);
        }
    }

    #[test]
    fn additive_components_reproduce_delta() {
        for m in sample_models() {
            for lag in [
                [1.0, -2.0, 3.0],
                [0.5, 0.0, -1.0],
                [-3.0, 1.0, 0.0],
                [2.0, 2.0, 2.0],
            ] {
                let sum: f64 = m
                    .additive_components()
                    .iter()
                    .map(|c| c.variogram(&c.project(&lag)))
                    .sum();
                let direct = m.eval(&lag);
                assert!(
                    (sum - direct).abs() < 1e-12 * direct.max(1.0),
                    "{:?}",
                    m.family()
                );
            }
        }
    }

    #[test]
    fn validation() {
        let e = DependenceModel::with_default_box(Family::IsoFrac, 3, vec![0.8, 0.4, 2.5, 1.0])
            .unwrap_err();
        assert!(e.to_string().contains("(0, 2]"), "{e}");
        assert!(
            DependenceModel::with_default_box(Family::IsoFrac, 3, vec![0.0, 0.4, 1.5, 1.0])
                .is_err()
        );
        assert!(DependenceModel::with_default_box(
            Family::IsoFracGeoAniso,
            3,
            vec![0.8, 0.4, 1.5, 1.0, 1.0, PI / 2.0]
        )
        .is_err());
        // outside a restricted box
        let m = iso()
            .with_bounds(vec![(0.1, 5.0), (0.1, 5.0), (1.0, 2.0), (0.1, 2.0)])
            .unwrap();
        assert!(m.with_params(&[0.8, 0.4, 0.9, 1.0]).is_err());
        assert!(matches!(
            iso().dependence(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn json_round_trip_and_unknown_names() {
        let m = sample_models()[4].clone();
        let text = m.to_json().unwrap();
        assert_eq!(DependenceModel::from_json(&text).unwrap(), m);
        let bad = r#"{"family": "ISO_FRAC", "params": {"C1": 0.8, "C2": 0.4, "alpha1": 1.5, "alpha2": 1, "alpha_4": 1}}"#;
        let e = DependenceModel::from_json(bad).unwrap_err();
        assert!(e.to_string().contains("alpha_4"), "{e}");
        let partial_box = r#"{"family": "ISO_FRAC", "params": {"C1": 0.8, "C2": 0.4, "alpha1": 1.5, "alpha2": 1}, "box": {"alpha1": [1, 2]}}"#;
        let m = DependenceModel::from_json(partial_box).unwrap();
        assert_eq!(m.bounds()[2], (1.0, 2.0));
        assert_eq!(m.bounds()[0], ParamKind::Scale.default_bounds());
    }
}
