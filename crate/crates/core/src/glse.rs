//! Generalised least squares fitting of dependence models to extremogram
//! estimates, with Jacobian rank and identifiability diagnostics.

use indexmap::IndexMap;
use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::br::{extremogram_delta, IntervalSet};
use crate::domain::Lag;
use crate::error::{Error, Result};
use crate::models::{eval_family, DependenceModel, Family};
use crate::optimize::{minimize, shifted_halton, NelderMeadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WeightKind {
    /// Ordinary least squares.
    Identity,
    /// `exp(-||(h, u)||^2)`
    #[default]
    ExpDecay,
    /// The estimates themselves.
    Empirical,
}

/// Diagonal weight matrix over a lag list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    pub kind: WeightKind,
    pub diag: Vec<f64>,
    pub source: String,
}

impl WeightMatrix {
    pub fn identity(p: usize) -> Self {
        Self {
            kind: WeightKind::Identity,
            diag: vec![1.0; p],
            source: "identity".into(),
        }
    }

    /// Same kind and source with every entry multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            diag: self.diag.iter().map(|w| w * factor).collect(),
            ..self.clone()
        }
    }
}

pub fn weight_matrix(
    kind: WeightKind,
    lags: &[Lag],
    estimates: Option<&[f64]>,
) -> Result<WeightMatrix> {
    let diag: Vec<f64> = match kind {
        WeightKind::Identity => vec![1.0; lags.len()],
        WeightKind::ExpDecay => lags
            .iter()
            .map(|l| (-l.to_f64().iter().map(|x| x * x).sum::<f64>()).exp())
            .collect(),
        WeightKind::Empirical => {
            let est = estimates
                .ok_or_else(|| Error::InvalidWeight("empirical weights need estimates".into()))?;
            if est.len() != lags.len() {
                return Err(Error::Misaligned(format!(
                    "{} lags but {} estimates",
                    lags.len(),
                    est.len()
                )));
            }
            if let Some((i, v)) = est
                .iter()
                .enumerate()
                .find(|(_, &v)| !(v > 0.0 && v.is_finite()))
            {
                return Err(Error::InvalidWeight(format!(
                    "empirical weight at lag {:?} is {v}; all estimates must be > 0",
                    lags[i].full()
                )));
            }
            est.to_vec()
        }
    };
    if let Some(v) = diag.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::InvalidWeight(format!("non-positive weight {v}")));
    }
    let source = match kind {
        WeightKind::Identity => "identity",
        WeightKind::ExpDecay => "exp(-|h|^2)",
        WeightKind::Empirical => "empirical extremogram",
    };
    Ok(WeightMatrix {
        kind,
        diag,
        source: source.into(),
    })
}

/// Data of a GLS fit: lags, target estimates, weights and the sets `A`, `B`.
#[derive(Debug, Clone)]
pub struct GlseProblem {
    lags: Vec<Lag>,
    lag_f64: Vec<Vec<f64>>,
    targets: Vec<f64>,
    weights: Vec<f64>,
    a: IntervalSet,
    b: IntervalSet,
}

impl GlseProblem {
    pub fn new(
        lags: &[Lag],
        targets: &[f64],
        weights: &WeightMatrix,
        a: IntervalSet,
        b: IntervalSet,
    ) -> Result<Self> {
        if lags.len() != targets.len() || lags.len() != weights.diag.len() {
            return Err(Error::Misaligned(format!(
                "{} lags, {} estimates, {} weights",
                lags.len(),
                targets.len(),
                weights.diag.len()
            )));
        }
        if let Some(v) = weights.diag.iter().find(|&&v| !(v > 0.0)) {
            return Err(Error::InvalidWeight(format!("non-positive weight {v}")));
        }
        Ok(Self {
            lags: lags.to_vec(),
            lag_f64: lags.iter().map(Lag::to_f64).collect(),
            targets: targets.to_vec(),
            weights: weights.diag.clone(),
            a,
            b,
        })
    }

    pub fn lags(&self) -> &[Lag] {
        &self.lags
    }

    fn residual_sum(&self, family: Family, dim: usize, theta: &[f64]) -> f64 {
        self.lag_f64
            .iter()
            .zip(&self.targets)
            .zip(&self.weights)
            .map(|((lag, &t), &w)| {
                let rho = model_rho(family, dim, theta, lag, &self.a, &self.b);
                w * (t - rho).powi(2)
            })
            .sum()
    }
}

fn model_rho(
    family: Family,
    dim: usize,
    theta: &[f64],
    lag: &[f64],
    a: &IntervalSet,
    b: &IntervalSet,
) -> f64 {
    let delta = eval_family(family, dim, theta, lag);
    extremogram_delta(delta, a, b).unwrap_or(f64::NAN)
}

/// `g^T V g` with `g_i = rho_hat(h_i) - rho_theta(h_i)`.
pub fn glse_objective(model: &DependenceModel, problem: &GlseProblem) -> Result<f64> {
    if problem.lag_f64.iter().any(|l| l.len() != model.dim()) {
        return Err(Error::Misaligned(
            "lag dimension differs from the model".into(),
        ));
    }
    Ok(problem.residual_sum(model.family(), model.dim(), model.params()))
}

/// Multi-start settings.
#[derive(Debug, Clone)]
pub struct FitOptions {
    pub starts: usize,
    pub warm_start: Option<Vec<f64>>,
    pub nelder_mead: NelderMeadOptions,
    /// Finite-difference step for the Jacobian, relative to the box width.
    pub jacobian_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            starts: 16,
            warm_start: None,
            nelder_mead: NelderMeadOptions::default(),
            jacobian_step: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlseResult {
    pub family: Family,
    pub theta_hat: IndexMap<String, f64>,
    pub objective: f64,
    pub converged: bool,
    pub n_starts: usize,
    pub best_start_index: usize,
    pub jacobian_rank_ok: bool,
    pub jacobian_rank: usize,
    pub jacobian_condition: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl GlseResult {
    pub fn theta(&self) -> Vec<f64> {
        self.theta_hat.values().copied().collect()
    }
}

/// Minimises the GLS objective over the box of `template` (its parameter
/// values are ignored except as the shape of the vector).
pub fn fit_glse<R: Rng + ?Sized>(
    problem: &GlseProblem,
    template: &DependenceModel,
    opts: &FitOptions,
    rng: &mut R,
) -> Result<GlseResult> {
    let bounds = template.bounds().to_vec();
    let k_free = bounds.iter().filter(|(lo, hi)| hi > lo).count();
    if problem.lags.len() < k_free {
        return Err(Error::TooFewLags {
            needed: k_free,
            params: k_free,
            got: problem.lags.len(),
        });
    }
    if bounds.iter().any(|(lo, hi)| !(lo <= hi)) {
        return Err(Error::InvalidModel("infeasible parameter box".into()));
    }
    if problem.lag_f64.iter().any(|l| l.len() != template.dim()) {
        return Err(Error::Misaligned(
            "lag dimension differs from the model".into(),
        ));
    }
    let (family, dim) = (template.family(), template.dim());
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(w) = &opts.warm_start {
        if w.len() != bounds.len() {
            return Err(Error::DimensionMismatch {
                expected: bounds.len(),
                got: w.len(),
            });
        }
        starts.push(
            w.iter()
                .zip(&bounds)
                .map(|(&x, &(lo, hi))| x.clamp(lo, hi))
                .collect(),
        );
    }
    for u in shifted_halton(opts.starts, bounds.len(), rng) {
        starts.push(
            u.iter()
                .zip(&bounds)
                .map(|(&t, &(lo, hi))| lo + t * (hi - lo))
                .collect(),
        );
    }
    if starts.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one start is required".into(),
        ));
    }
    let objective = |x: &[f64]| problem.residual_sum(family, dim, x);
    let minima: Vec<_> = starts
        .par_iter()
        .map(|s| minimize(objective, &bounds, s, &opts.nelder_mead))
        .collect();
    let mut best = 0;
    for (i, m) in minima.iter().enumerate() {
        if m.f < minima[best].f {
            best = i;
        }
    }
    let theta = minima[best].x.clone();
    let f_best = minima[best].f;
    let converged = f_best == 0.0 || minima.iter().any(|m| m.f < m.f_start);
    let model = template.with_params(&theta)?;
    let jac = jacobian_inner(
        &model,
        problem.lags(),
        &problem.a,
        &problem.b,
        opts.jacobian_step,
    )?;
    let mut notes = Vec::new();
    if model
        .param_names()
        .iter()
        .zip(&bounds)
        .any(|(n, (lo, _))| n.starts_with("alpha") && *lo < 1.0)
    {
        notes.push(
            "box allows alpha < 1, where the model is not differentiable at some lags".into(),
        );
    }
    if !converged {
        notes.push("no start improved on its starting objective".into());
    }
    Ok(GlseResult {
        family,
        theta_hat: model
            .param_names()
            .iter()
            .cloned()
            .zip(theta.iter().copied())
            .collect(),
        objective: f_best,
        converged,
        n_starts: starts.len(),
        best_start_index: best,
        jacobian_rank_ok: jac.rank_ok,
        jacobian_rank: jac.rank,
        jacobian_condition: jac.condition,
        notes,
    })
}

/// Finite-difference Jacobian of `-rho_theta(h_i)` with its numerical rank.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobianReport {
    /// `p x k`, row-major by lag.
    pub matrix: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub rank_ok: bool,
    pub condition: f64,
}

/// Central differences with absolute step `step`; `theta` must lie at least
/// `step` inside the box in every free coordinate.
pub fn jacobian_p(
    model: &DependenceModel,
    lags: &[Lag],
    a: &IntervalSet,
    b: &IntervalSet,
    step: f64,
) -> Result<JacobianReport> {
    for ((name, &x), &(lo, hi)) in model
        .param_names()
        .iter()
        .zip(model.params())
        .zip(model.bounds())
    {
        if hi > lo && (x - lo < step || hi - x < step) {
            return Err(Error::InvalidArgument(format!(
                "parameter {name} = {x} is within {step} of its box [{lo}, {hi}]"
            )));
        }
    }
    let steps = vec![step; model.n_params()];
    jacobian_with_steps(model, lags, a, b, &steps)
}

fn jacobian_inner(
    model: &DependenceModel,
    lags: &[Lag],
    a: &IntervalSet,
    b: &IntervalSet,
    rel_step: f64,
) -> Result<JacobianReport> {
    let steps: Vec<f64> = model
        .bounds()
        .iter()
        .map(|(lo, hi)| rel_step * (hi - lo).max(1e-3))
        .collect();
    jacobian_with_steps(model, lags, a, b, &steps)
}

/// Central differences where possible, one-sided at the box faces.
fn jacobian_with_steps(
    model: &DependenceModel,
    lags: &[Lag],
    a: &IntervalSet,
    b: &IntervalSet,
    steps: &[f64],
) -> Result<JacobianReport> {
    let (family, dim) = (model.family(), model.dim());
    let theta = model.params();
    let lagf: Vec<Vec<f64>> = lags.iter().map(Lag::to_f64).collect();
    if lagf.iter().any(|l| l.len() != dim) {
        return Err(Error::Misaligned(
            "lag dimension differs from the model".into(),
        ));
    }
    let p = lags.len();
    let free: Vec<usize> = (0..theta.len())
        .filter(|&i| model.bounds()[i].1 > model.bounds()[i].0)
        .collect();
    let k = free.len();
    let mut jm = DMatrix::<f64>::zeros(p, k);
    for (col, &i) in free.iter().enumerate() {
        let (lo, hi) = model.bounds()[i];
        let h = steps[i];
        let up = (theta[i] + h).min(hi);
        let dn = (theta[i] - h).max(lo);
        let mut tp = theta.to_vec();
        let mut tm = theta.to_vec();
        tp[i] = up;
        tm[i] = dn;
        for (row, lag) in lagf.iter().enumerate() {
            let rp = model_rho(family, dim, &tp, lag, a, b);
            let rm = model_rho(family, dim, &tm, lag, a, b);
            jm[(row, col)] = -(rp - rm) / (up - dn);
        }
    }
    if jm.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite Jacobian entry".into()));
    }
    let sv: Vec<f64> = if p == 0 || k == 0 {
        Vec::new()
    } else {
        let mut s: Vec<f64> = jm
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .collect();
        s.sort_by(|x, y| y.total_cmp(x));
        s
    };
    let smax = sv.first().copied().unwrap_or(0.0);
    let tol = p.max(1) as f64 * f64::EPSILON * smax;
    let rank = sv.iter().filter(|&&s| s > tol).count();
    let smin = sv.last().copied().unwrap_or(0.0);
    let condition = if k > p || smin <= tol {
        f64::INFINITY
    } else {
        smax / smin
    };
    let matrix = (0..p)
        .map(|r| (0..k).map(|c| jm[(r, c)]).collect())
        .collect();
    Ok(JacobianReport {
        matrix,
        singular_values: sv,
        rank,
        rank_ok: rank == k,
        condition,
    })
}

/// Result of [`identifiability_scan`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentifiabilityReport {
    pub pairs_checked: usize,
    /// Minimum of `sum_i (rho_1(h_i) - rho_2(h_i))^2` over separated pairs.
    pub min_sum_sq: f64,
    pub argmin: Option<(Vec<f64>, Vec<f64>)>,
    pub flagged: bool,
    /// Parameters whose single-coordinate perturbations left every value unchanged.
    pub unidentifiable: Vec<String>,
}

/// Random and single-coordinate parameter pairs from the box of `template`.
pub fn identifiability_scan<R: Rng + ?Sized>(
    template: &DependenceModel,
    lags: &[Lag],
    a: &IntervalSet,
    b: &IntervalSet,
    samples: usize,
    rng: &mut R,
) -> Result<IdentifiabilityReport> {
    if samples < 2 {
        return Err(Error::InvalidArgument(
            "identifiability scan needs at least 2 samples".into(),
        ));
    }
    let (family, dim) = (template.family(), template.dim());
    let bounds = template.bounds();
    let lagf: Vec<Vec<f64>> = lags.iter().map(Lag::to_f64).collect();
    let draw = |rng: &mut R| -> Vec<f64> {
        bounds
            .iter()
            .map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..=hi) } else { lo })
            .collect()
    };
    let values = |t: &[f64]| -> Vec<f64> {
        lagf.iter()
            .map(|l| model_rho(family, dim, t, l, a, b))
            .collect()
    };
    let mut report = IdentifiabilityReport {
        pairs_checked: 0,
        min_sum_sq: f64::INFINITY,
        argmin: None,
        flagged: false,
        unidentifiable: Vec::new(),
    };
    let consider = |t1: &[f64], t2: &[f64], report: &mut IdentifiabilityReport| -> bool {
        let sep = t1
            .iter()
            .zip(t2)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        if sep < 1e-3 {
            return false;
        }
        report.pairs_checked += 1;
        let ss: f64 = values(t1)
            .iter()
            .zip(values(t2))
            .map(|(x, y)| (x - y).powi(2))
            .sum();
        if ss < report.min_sum_sq {
            report.min_sum_sq = ss;
            report.argmin = Some((t1.to_vec(), t2.to_vec()));
        }
        ss <= 1e-14
    };
    for _ in 0..samples {
        let t1 = draw(rng);
        let t2 = draw(rng);
        consider(&t1, &t2, &mut report);
        for (i, name) in template.param_names().iter().enumerate() {
            let (lo, hi) = bounds[i];
            if hi <= lo {
                continue;
            }
            let mut t2 = t1.clone();
            t2[i] = rng.gen_range(lo..=hi);
            if consider(&t1, &t2, &mut report) && !report.unidentifiable.contains(name) {
                report.unidentifiable.push(name.clone());
            }
        }
    }
    report.flagged = report.min_sum_sq <= 1e-14;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal;
    use crate::simulate::stream_rng;
    use std::f64::consts::PI;

    fn lag(v: &[i64]) -> Lag {
        Lag::split(v, 2).unwrap()
    }

    fn iso() -> DependenceModel {
        DependenceModel::with_default_box(Family::IsoFrac, 3, vec![0.8, 0.4, 1.5, 1.0]).unwrap()
    }

    fn paper_lags() -> Vec<Lag> {
        [
            [0, 0, 1],
            [0, 0, 2],
            [0, 0, 3],
            [0, 0, 4],
            [1, 0, 0],
            [2, 0, 0],
            [3, 0, 0],
            [4, 0, 0],
            [2, 1, 0],
            [4, 2, 0],
            [1, 2, 0],
            [2, 4, 0],
            [1, 1, 1],
            [2, 2, 2],
            [1, 3, 2],
        ]
        .iter()
        .map(|v| lag(v))
        .collect()
    }

    #[test]
    fn weights() {
        let w = weight_matrix(WeightKind::ExpDecay, &[lag(&[0, 0, 1])], None).unwrap();
        assert!((w.diag[0] - 0.367_879_441_171_442_33).abs() < 1e-15);
        let w = weight_matrix(WeightKind::Identity, &paper_lags(), None).unwrap();
        assert!(w.diag.iter().all(|&x| x == 1.0));
        let e = weight_matrix(
            WeightKind::Empirical,
            &[lag(&[0, 0, 1]), lag(&[1, 0, 0])],
            Some(&[0.3, 0.0]),
        );
        assert!(matches!(e, Err(Error::InvalidWeight(_))));
    }

    #[test]
    fn objective_hand_values() {
        let m = iso();
        let r = IntervalSet::unit_ray();
        let lags = vec![lag(&[0, 0, 1]), lag(&[1, 0, 0])];
        let rho: Vec<f64> = lags
            .iter()
            .map(|l| extremogram_delta(m.eval(&l.to_f64()), &r, &r).unwrap())
            .collect();
        let targets = [rho[0] + 0.1, rho[1] - 0.2];
        let w = WeightMatrix {
            kind: WeightKind::Identity,
            diag: vec![2.0, 1.0],
            source: "test".into(),
        };
        let p = GlseProblem::new(&lags, &targets, &w, r, r).unwrap();
        assert!((glse_objective(&m, &p).unwrap() - 0.06).abs() < 1e-14);
        let exact = GlseProblem::new(&lags, &rho, &w, r, r).unwrap();
        assert_eq!(glse_objective(&m, &exact).unwrap(), 0.0);
        assert!(matches!(
            GlseProblem::new(&lags, &rho[..1], &w, r, r),
            Err(Error::Misaligned(_))
        ));
    }

    fn exact_problem(m: &DependenceModel, lags: &[Lag], kind: WeightKind) -> GlseProblem {
        let r = IntervalSet::unit_ray();
        let rho: Vec<f64> = lags
            .iter()
            .map(|l| extremogram_delta(m.eval(&l.to_f64()), &r, &r).unwrap())
            .collect();
        let w = weight_matrix(kind, lags, Some(&rho)).unwrap();
        GlseProblem::new(lags, &rho, &w, r, r).unwrap()
    }

    #[test]
    fn noiseless_iso_recovery_and_scale_invariance() {
        let m = iso();
        let p = exact_problem(&m, &paper_lags(), WeightKind::ExpDecay);
        let fit = fit_glse(&p, &m, &FitOptions::default(), &mut stream_rng(5, 0)).unwrap();
        let err = fit
            .theta()
            .iter()
            .zip(m.params())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "{:?}", fit.theta());
        assert!(fit.jacobian_rank_ok && fit.converged);

        let r = IntervalSet::unit_ray();
        let w = weight_matrix(WeightKind::ExpDecay, &paper_lags(), None)
            .unwrap()
            .scaled(7.5);
        let targets: Vec<f64> = paper_lags()
            .iter()
            .map(|l| extremogram_delta(m.eval(&l.to_f64()), &r, &r).unwrap() + 0.01)
            .collect();
        let p1 = GlseProblem::new(&paper_lags(), &targets, &w.scaled(1.0 / 7.5), r, r).unwrap();
        let p2 = GlseProblem::new(&paper_lags(), &targets, &w, r, r).unwrap();
        let opts = FitOptions {
            starts: 4,
            ..Default::default()
        };
        let f1 = fit_glse(&p1, &m, &opts, &mut stream_rng(9, 0)).unwrap();
        let f2 = fit_glse(&p2, &m, &opts, &mut stream_rng(9, 0)).unwrap();
        let d = f1
            .theta()
            .iter()
            .zip(f2.theta())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(d < 1e-6, "{:?} vs {:?}", f1.theta(), f2.theta());
    }

    #[test]
    fn too_few_lags() {
        let m = iso();
        let p = exact_problem(&m, &[lag(&[0, 0, 1])], WeightKind::Identity);
        assert!(matches!(
            fit_glse(&p, &m, &FitOptions::default(), &mut stream_rng(1, 0)),
            Err(Error::TooFewLags { .. })
        ));
    }

    #[test]
    fn jacobian_against_chain_rule() {
        let r = IntervalSet::unit_ray();
        let lags = paper_lags();
        let mut rng = stream_rng(3, 0);
        for _ in 0..20 {
            let th = vec![
                rng.gen_range(0.2..3.0),
                rng.gen_range(0.2..3.0),
                rng.gen_range(0.5..1.9),
                rng.gen_range(0.5..1.9),
            ];
            let m = iso().with_params(&th).unwrap();
            let jac = jacobian_p(&m, &lags, &r, &r, 1e-6).unwrap();
            for (row, l) in lags.iter().enumerate() {
                let x = l.to_f64();
                let hn = (x[0] * x[0] + x[1] * x[1]).sqrt();
                let u = x[2].abs();
                let delta = m.eval(&x);
                let drho = -normal::pdf((delta / 2.0).sqrt()) / (2.0 * delta).sqrt();
                let pw = |b: f64, e: f64| if b == 0.0 { 0.0 } else { b.powf(e) };
                let lnp = |b: f64, e: f64| if b == 0.0 { 0.0 } else { b.powf(e) * b.ln() };
                let grad = [
                    pw(hn, th[2]),
                    pw(u, th[3]),
                    th[0] * lnp(hn, th[2]),
                    th[1] * lnp(u, th[3]),
                ];
                for c in 0..4 {
                    let analytic = -drho * grad[c];
                    let fd = jac.matrix[row][c];
                    assert!(
                        (fd - analytic).abs() <= 1e-6 * analytic.abs().max(1e-3),
                        "lag {row} param {c}: {fd} vs {analytic}"
                    );
                }
            }
        }
        // d rho / d delta at delta = 2 is -phi(1)/2
        let d = -normal::pdf(1.0) / 2.0;
        assert!((d + 0.120_985_362_259_571_7).abs() < 1e-12);
    }

    #[test]
    fn jacobian_rank() {
        let r = IntervalSet::unit_ray();
        let jac = jacobian_p(&iso(), &paper_lags(), &r, &r, 1e-6).unwrap();
        assert!(jac.rank_ok && jac.rank == 4);
        let dup = vec![lag(&[1, 0, 1]); 6];
        let jac = jacobian_p(&iso(), &dup, &r, &r, 1e-6).unwrap();
        assert!(!jac.rank_ok);
        let edge = iso().with_params(&[10.0, 0.4, 1.5, 1.0]).unwrap();
        assert!(jacobian_p(&edge, &paper_lags(), &r, &r, 1e-6).is_err());
    }

    #[test]
    fn identifiability() {
        let r = IntervalSet::unit_ray();
        let geo = DependenceModel::new(
            Family::IsoFracGeoAniso,
            3,
            vec![0.8, 0.4, 1.5, 1.0, 1.0, 0.3],
            vec![
                (0.1, 3.0),
                (0.1, 3.0),
                (0.5, 2.0),
                (0.5, 2.0),
                (1.0, 1.0),
                (0.0, PI / 2.0 - 1e-9),
            ],
        )
        .unwrap();
        let spatial: Vec<Lag> = [
            [1, 0, 0],
            [0, 1, 0],
            [2, 1, 0],
            [1, 2, 0],
            [3, 1, 0],
            [2, 2, 0],
        ]
        .iter()
        .map(|v| lag(v))
        .collect();
        let rep = identifiability_scan(&geo, &spatial, &r, &r, 20, &mut stream_rng(2, 0)).unwrap();
        assert!(rep.flagged);
        // the temporal parameters are invisible to spatial lags as well
        assert!(rep.unidentifiable.contains(&"phi".to_string()));
        assert!(!rep.unidentifiable.contains(&"C1".to_string()));
        let rep =
            identifiability_scan(&iso(), &paper_lags(), &r, &r, 50, &mut stream_rng(2, 0)).unwrap();
        assert!(!rep.flagged && rep.min_sum_sq > 0.0);
    }
}
