//! Monte Carlo studies: replicated simulate-and-fit runs, error metrics,
//! lag-set comparisons and the sample-size rate check.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{Lag, ObservationDomain, SpaceTimeField};
use crate::error::{Error, Result};
use crate::models::DependenceModel;
use crate::pipeline::{estimate_field, EstimationSpec};
use crate::simulate::{stream_rng, SamplerKind, Simulator};
use crate::subsample::{subsample_ci, SubsampleConfig};

/// Stream of a replicate's seed used for simulation.
pub const SIM_STREAM: u64 = 0;
/// Stream used for the full-sample fit.
pub const FIT_STREAM: u64 = 1;
/// First stream used by subsampling windows.
pub const BLOCK_STREAM: u64 = 16;

/// Seed of replicate `r`, derived with SplitMix64 so that replicates do not
/// share streams whatever the worker count.
pub fn replicate_seed(seed: u64, r: usize) -> u64 {
    let mut z = seed.wrapping_add((r as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Lag sets used in the simulation study.
pub fn preset_lags(name: &str) -> Option<Vec<Vec<i64>>> {
    let h1: Vec<Vec<i64>> = vec![vec![0, 0, 1], vec![1, 0, 0], vec![0, 0, 2]];
    let add2 = [[2, 0, 0], [2, 1, 0], [1, 2, 0], [1, 1, 1], [1, 3, 2]];
    let add3 = [
        [0, 0, 3],
        [0, 0, 4],
        [3, 0, 0],
        [4, 0, 0],
        [4, 2, 0],
        [2, 4, 0],
        [2, 2, 2],
        [2, 6, 4],
    ];
    let add4 = [
        [0, 0, 5],
        [0, 0, 6],
        [5, 0, 0],
        [6, 0, 0],
        [8, 4, 0],
        [4, 8, 0],
        [3, 3, 3],
        [3, 9, 6],
    ];
    let add5 = [
        [0, 0, 7],
        [0, 0, 8],
        [7, 0, 0],
        [8, 0, 0],
        [10, 5, 0],
        [5, 10, 0],
        [4, 4, 4],
        [4, 12, 8],
    ];
    let grow = |base: Vec<Vec<i64>>, extra: &[[i64; 3]]| -> Vec<Vec<i64>> {
        base.into_iter()
            .chain(extra.iter().map(|l| l.to_vec()))
            .collect()
    };
    let h2 = grow(h1.clone(), &add2);
    let h3 = grow(h2.clone(), &add3);
    let h4 = grow(h3.clone(), &add4);
    Some(match name {
        "H" => [
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
        .map(|l| l.to_vec())
        .collect(),
        "H1" => h1,
        "H2" => h2,
        "H3" => h3,
        "H4" => h4.clone(),
        "H5" => grow(h4, &add5),
        _ => return None,
    })
}

/// A fully built simulation scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    /// True parameters and the estimation box.
    pub truth: DependenceModel,
    pub domain: ObservationDomain,
    pub spec: EstimationSpec,
    pub replicates: usize,
    pub seed: u64,
    pub sampler: SamplerKind,
    pub subsampling: Option<SubsampleConfig>,
}

/// Per-parameter error summary over replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub parameters: Vec<String>,
    pub truth: Vec<f64>,
    pub mean: Vec<f64>,
    pub mae: Vec<f64>,
    pub rmse: Vec<f64>,
    /// `None` where the true value is 0.
    pub rel: Vec<Option<f64>>,
    pub replicates: usize,
}

/// MEAN, MAE, RMSE and `REL = sqrt(mean((est - truth)^2 / truth^2))`.
/// With `with_rel` a zero true value is an error; otherwise its REL is `None`.
pub fn metrics(
    estimates: &[Vec<f64>],
    truth: &[f64],
    names: &[String],
    with_rel: bool,
) -> Result<MetricsTable> {
    if estimates.is_empty() {
        return Err(Error::InvalidArgument(
            "metrics need at least one replicate".into(),
        ));
    }
    let k = truth.len();
    if names.len() != k || estimates.iter().any(|e| e.len() != k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: estimates
                .iter()
                .map(|e| e.len())
                .find(|&l| l != k)
                .unwrap_or(names.len()),
        });
    }
    if with_rel {
        if let Some(i) = truth.iter().position(|&t| t == 0.0) {
            return Err(Error::InvalidArgument(format!(
                "REL undefined: true value of `{}` is 0",
                names[i]
            )));
        }
    }
    let m = estimates.len() as f64;
    let col = |f: &dyn Fn(f64, f64) -> f64, i: usize| {
        estimates.iter().map(|e| f(e[i], truth[i])).sum::<f64>() / m
    };
    let mut t = MetricsTable {
        parameters: names.to_vec(),
        truth: truth.to_vec(),
        mean: Vec::with_capacity(k),
        mae: Vec::with_capacity(k),
        rmse: Vec::with_capacity(k),
        rel: Vec::with_capacity(k),
        replicates: estimates.len(),
    };
    for i in 0..k {
        t.mean.push(col(&|x, _| x, i));
        t.mae.push(col(&|x, s| (x - s).abs(), i));
        let mse = col(&|x, s| (x - s).powi(2), i);
        t.rmse.push(mse.sqrt());
        t.rel
            .push((truth[i] != 0.0).then(|| (mse / (truth[i] * truth[i])).sqrt()));
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub threshold: Option<f64>,
    pub objective: Option<f64>,
    pub converged: bool,
    pub theta: Option<Vec<f64>>,
    pub ci: Option<Vec<[f64; 2]>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub family: String,
    pub parameters: Vec<String>,
    pub truth: Vec<f64>,
    pub sites: usize,
    pub metrics: MetricsTable,
    pub failures: usize,
    /// Fraction of replicates whose interval contains the true value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_failures: Option<usize>,
    pub replicates: Vec<ReplicateRecord>,
}

fn check_failures(what: &str, failed: usize, total: usize) -> Result<()> {
    if failed * 5 > total {
        return Err(Error::TooManyFailures {
            what: what.into(),
            failed,
            total,
        });
    }
    if failed > 0 {
        warn!("{failed} of {total} {what} failed");
    }
    Ok(())
}

fn simulate_fields(scenario: &Scenario, domain: &ObservationDomain) -> Result<Vec<SpaceTimeField>> {
    let sim = Simulator::new(&scenario.truth, domain, scenario.sampler)?;
    (0..scenario.replicates)
        .into_par_iter()
        .map(|r| {
            sim.simulate(&mut stream_rng(
                replicate_seed(scenario.seed, r),
                SIM_STREAM,
            ))
        })
        .collect()
}

fn fit_replicate(
    field: &SpaceTimeField,
    spec: &EstimationSpec,
    seed: u64,
    r: usize,
) -> ReplicateRecord {
    let rs = replicate_seed(seed, r);
    match estimate_field(field, spec, None, &mut stream_rng(rs, FIT_STREAM)) {
        Ok(fit) => ReplicateRecord {
            replicate: r,
            threshold: Some(fit.threshold.realized),
            objective: Some(fit.result.objective),
            converged: fit.result.converged,
            theta: Some(fit.result.theta()),
            ci: None,
            error: None,
        },
        Err(e) => {
            warn!("replicate {r}: {e}");
            ReplicateRecord {
                replicate: r,
                threshold: None,
                objective: None,
                converged: false,
                theta: None,
                ci: None,
                error: Some(e.to_string()),
            }
        }
    }
}

/// Simulates, estimates and fits every replicate; with subsampling
/// configured each replicate also gets confidence intervals.
pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioReport> {
    if scenario.replicates == 0 {
        return Err(Error::InvalidArgument(
            "at least one replicate is required".into(),
        ));
    }
    let fields = simulate_fields(scenario, &scenario.domain)?;
    let names = scenario.truth.param_names().to_vec();
    let records: Vec<ReplicateRecord> = fields
        .par_iter()
        .enumerate()
        .map(|(r, field)| {
            let mut rec = fit_replicate(field, &scenario.spec, scenario.seed, r);
            if let (Some(cfg), Some(theta), Some(thr)) =
                (&scenario.subsampling, &rec.theta, rec.threshold)
            {
                let point = names.iter().cloned().zip(theta.iter().copied()).collect();
                let rs = replicate_seed(scenario.seed, r);
                match subsample_ci(field, &scenario.spec, &point, thr, cfg, rs, BLOCK_STREAM) {
                    Ok(ci) => rec.ci = Some(ci.intervals.values().copied().collect()),
                    Err(e) => warn!("replicate {r}: subsampling failed: {e}"),
                }
            }
            rec
        })
        .collect();
    drop(fields);
    let failures = records.iter().filter(|r| r.theta.is_none()).count();
    check_failures("replicates", failures, records.len())?;
    let estimates: Vec<Vec<f64>> = records.iter().filter_map(|r| r.theta.clone()).collect();
    let truth = scenario.truth.params().to_vec();
    let metrics = metrics(&estimates, &truth, &names, false)?;
    let (coverage, ci_failures) = if scenario.subsampling.is_some() {
        let with_ci: Vec<&Vec<[f64; 2]>> = records.iter().filter_map(|r| r.ci.as_ref()).collect();
        let ci_failures = records.len() - failures - with_ci.len();
        check_failures(
            "confidence intervals",
            ci_failures,
            records.len() - failures,
        )?;
        let cov = (0..truth.len())
            .map(|i| {
                let hit = with_ci
                    .iter()
                    .filter(|ci| ci[i][0] <= truth[i] && truth[i] <= ci[i][1])
                    .count();
                hit as f64 / records.len() as f64
            })
            .collect();
        (Some(cov), Some(ci_failures))
    } else {
        (None, None)
    };
    Ok(ScenarioReport {
        name: scenario.name.clone(),
        family: scenario.truth.family().name().into(),
        parameters: names,
        truth,
        sites: scenario.domain.site_count(),
        metrics,
        failures,
        coverage,
        ci_failures,
        replicates: records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagSetResult {
    pub label: String,
    pub size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsTable>,
    pub failures: usize,
    /// Wall-clock seconds per replicate for estimation and fitting.
    #[serde(skip)]
    pub seconds_per_replicate: f64,
}

/// Fits the scenario once per lag set on a shared set of simulated fields.
/// Lag sets that cannot identify the parameters, or contain lags that do
/// not fit in the domain, are skipped with a warning.
pub fn lag_sensitivity(
    scenario: &Scenario,
    lag_sets: &[(String, Vec<Lag>)],
) -> Result<Vec<LagSetResult>> {
    if lag_sets.len() < 2 {
        return Err(Error::InvalidArgument(
            "lag sensitivity needs at least two lag sets".into(),
        ));
    }
    let fields = simulate_fields(scenario, &scenario.domain)?;
    let names = scenario.truth.param_names().to_vec();
    let truth = scenario.truth.params().to_vec();
    let k_free = scenario
        .truth
        .bounds()
        .iter()
        .filter(|(lo, hi)| hi > lo)
        .count();
    let mut out = Vec::with_capacity(lag_sets.len());
    for (label, lags) in lag_sets {
        let mut res = LagSetResult {
            label: label.clone(),
            size: lags.len(),
            skipped: None,
            metrics: None,
            failures: 0,
            seconds_per_replicate: 0.0,
        };
        let problem = if lags.len() < k_free {
            Some(format!("{} lags for {k_free} free parameters", lags.len()))
        } else {
            lags.iter().find_map(|l| match scenario.domain.closure(l) {
                Ok(c) if !c.is_empty() => None,
                Ok(_) => Some(format!("lag {:?} has an empty closure", l.full())),
                Err(e) => Some(e.to_string()),
            })
        };
        if let Some(reason) = problem {
            warn!("lag set {label} skipped: {reason}");
            res.skipped = Some(reason);
            out.push(res);
            continue;
        }
        let spec = EstimationSpec {
            lags: lags.clone(),
            ..scenario.spec.clone()
        };
        let start = Instant::now();
        let records: Vec<ReplicateRecord> = fields
            .par_iter()
            .enumerate()
            .map(|(r, f)| fit_replicate(f, &spec, scenario.seed, r))
            .collect();
        res.seconds_per_replicate = start.elapsed().as_secs_f64() / fields.len() as f64;
        res.failures = records.iter().filter(|r| r.theta.is_none()).count();
        check_failures(
            &format!("replicates for lag set {label}"),
            res.failures,
            records.len(),
        )?;
        let est: Vec<Vec<f64>> = records.into_iter().filter_map(|r| r.theta).collect();
        res.metrics = Some(metrics(&est, &truth, &names, false)?);
        out.push(res);
    }
    Ok(out)
}

/// Fits every replicate on nested prefixes of one simulated field of the
/// longest length, giving metrics per length.
pub fn rate_study(scenario: &Scenario, lengths: &[usize]) -> Result<BTreeMap<usize, MetricsTable>> {
    let &max = lengths
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidArgument("no lengths given".into()))?;
    if lengths.contains(&0) {
        return Err(Error::InvalidArgument("lengths must be positive".into()));
    }
    let domain = scenario.domain.with_side(max)?;
    let fields = simulate_fields(scenario, &domain)?;
    let names = scenario.truth.param_names().to_vec();
    let truth = scenario.truth.params().to_vec();
    let mut out = BTreeMap::new();
    for &t in lengths {
        let records: Vec<ReplicateRecord> = fields
            .par_iter()
            .enumerate()
            .map(|(r, f)| match f.prefix(t) {
                Ok(p) => fit_replicate(&p, &scenario.spec, scenario.seed, r),
                Err(e) => ReplicateRecord {
                    replicate: r,
                    threshold: None,
                    objective: None,
                    converged: false,
                    theta: None,
                    ci: None,
                    error: Some(e.to_string()),
                },
            })
            .collect();
        let failed = records.iter().filter(|r| r.theta.is_none()).count();
        check_failures(&format!("replicates at length {t}"), failed, records.len())?;
        let est: Vec<Vec<f64>> = records.into_iter().filter_map(|r| r.theta).collect();
        out.insert(t, metrics(&est, &truth, &names, false)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BandStatus {
    Inside,
    /// Outside the band by at most the tolerance.
    Near,
    Outside,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub length: usize,
    pub k: f64,
    pub band: [f64; 2],
    pub factors: Vec<f64>,
    pub status: Vec<BandStatus>,
    pub mean_factor: f64,
    pub mean_status: BandStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub base_length: usize,
    pub parameters: Vec<String>,
    pub beta1: [f64; 2],
    pub tolerance: f64,
    pub rows: Vec<RateRow>,
}

/// Band of `(1/k)^((w - beta1 d) / 2)` over `beta1 in [lo, hi]`, ascending.
pub fn rate_band(k: f64, w: usize, d: usize, beta1_low: f64, beta1_high: f64) -> [f64; 2] {
    let f = |b: f64| (1.0 / k).powf((w as f64 - b * d as f64) / 2.0);
    let (x, y) = (f(beta1_low), f(beta1_high));
    [x.min(y), x.max(y)]
}

fn band_status(x: f64, band: [f64; 2], tol: f64) -> BandStatus {
    if x >= band[0] && x <= band[1] {
        BandStatus::Inside
    } else if x >= band[0] - tol && x <= band[1] + tol {
        BandStatus::Near
    } else {
        BandStatus::Outside
    }
}

/// Compares `RMSE(k T0) / RMSE(T0)` with the theoretical band, `T0` being the
/// smallest length.
pub fn rate_check(
    rmse_by_length: &BTreeMap<usize, Vec<f64>>,
    parameters: &[String],
    w: usize,
    d: usize,
    beta1_low: f64,
    beta1_high: f64,
    tolerance: f64,
) -> Result<RateReport> {
    if rmse_by_length.len() < 2 {
        return Err(Error::InvalidArgument(
            "rate check needs at least two lengths".into(),
        ));
    }
    let (&t0, base) = rmse_by_length.iter().next().unwrap();
    if base.len() != parameters.len() {
        return Err(Error::DimensionMismatch {
            expected: parameters.len(),
            got: base.len(),
        });
    }
    if let Some(i) = base.iter().position(|&r| !(r > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "base RMSE of `{}` at length {t0} is {}",
            parameters[i], base[i]
        )));
    }
    let mut rows = Vec::new();
    for (&t, rmse) in rmse_by_length.iter().skip(1) {
        if rmse.len() != base.len() {
            return Err(Error::DimensionMismatch {
                expected: base.len(),
                got: rmse.len(),
            });
        }
        let k = t as f64 / t0 as f64;
        let band = rate_band(k, w, d, beta1_low, beta1_high);
        let factors: Vec<f64> = rmse.iter().zip(base).map(|(r, b)| r / b).collect();
        let mean_factor = factors.iter().sum::<f64>() / factors.len() as f64;
        rows.push(RateRow {
            length: t,
            k,
            band,
            status: factors
                .iter()
                .map(|&f| band_status(f, band, tolerance))
                .collect(),
            factors,
            mean_factor,
            mean_status: band_status(mean_factor, band, tolerance),
        });
    }
    Ok(RateReport {
        base_length: t0,
        parameters: parameters.to_vec(),
        beta1: [beta1_low, beta1_high],
        tolerance,
        rows,
    })
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn write_metrics<W: Write>(m: &MetricsTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["parameter", "true", "mean", "mae", "rmse", "rel"])?;
    for i in 0..m.parameters.len() {
        w.write_record([
            m.parameters[i].clone(),
            num(m.truth[i]),
            num(m.mean[i]),
            num(m.mae[i]),
            num(m.rmse[i]),
            opt_num(m.rel[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `estimates.csv`, `metrics.csv`, `plot.csv` and `summary.json`.
pub fn write_scenario_outputs(report: &ScenarioReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("estimates.csv"))?;
    let mut header = vec![
        "replicate".to_string(),
        "converged".into(),
        "objective".into(),
        "threshold".into(),
    ];
    header.extend(report.parameters.iter().cloned());
    header.push("error".into());
    w.write_record(&header)?;
    for r in &report.replicates {
        let mut row = vec![
            r.replicate.to_string(),
            r.converged.to_string(),
            opt_num(r.objective),
            opt_num(r.threshold),
        ];
        match &r.theta {
            Some(t) => row.extend(t.iter().map(|&x| num(x))),
            None => row.extend(report.parameters.iter().map(|_| String::new())),
        }
        row.push(r.error.clone().unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;

    write_metrics(
        &report.metrics,
        std::fs::File::create(dir.join("metrics.csv"))?,
    )?;

    let mut w = csv::Writer::from_path(dir.join("plot.csv"))?;
    w.write_record(["replicate", "parameter", "estimate", "ci_low", "ci_high"])?;
    for r in &report.replicates {
        let Some(t) = &r.theta else { continue };
        for (i, name) in report.parameters.iter().enumerate() {
            let (lo, hi) = match &r.ci {
                Some(ci) => (num(ci[i][0]), num(ci[i][1])),
                None => (String::new(), String::new()),
            };
            w.write_record([r.replicate.to_string(), name.clone(), num(t[i]), lo, hi])?;
        }
    }
    w.flush()?;

    #[derive(Serialize)]
    struct Summary<'a> {
        name: &'a str,
        family: &'a str,
        sites: usize,
        replicates: usize,
        failures: usize,
        metrics: &'a MetricsTable,
        #[serde(skip_serializing_if = "Option::is_none")]
        coverage: Option<&'a Vec<f64>>,
        #[serde(skip_serializing_if = "Option::is_none")]
        ci_failures: Option<usize>,
    }
    write_json(
        &Summary {
            name: &report.name,
            family: &report.family,
            sites: report.sites,
            replicates: report.replicates.len(),
            failures: report.failures,
            metrics: &report.metrics,
            coverage: report.coverage.as_ref(),
            ci_failures: report.ci_failures,
        },
        &dir.join("summary.json"),
    )
}

/// Writes `lagscan.csv` and `lagscan.json`; timings are not included.
pub fn write_lagscan(results: &[LagSetResult], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("lagscan.csv"))?;
    w.write_record(["lag_set", "size", "parameter", "true", "mean", "rmse"])?;
    for r in results {
        let Some(m) = &r.metrics else { continue };
        for i in 0..m.parameters.len() {
            w.write_record([
                r.label.clone(),
                r.size.to_string(),
                m.parameters[i].clone(),
                num(m.truth[i]),
                num(m.mean[i]),
                num(m.rmse[i]),
            ])?;
        }
    }
    w.flush()?;
    write_json(&results, &dir.join("lagscan.json"))
}

pub fn write_timings<W: Write>(results: &[LagSetResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lag_set", "size", "seconds_per_replicate"])?;
    for r in results.iter().filter(|r| r.skipped.is_none()) {
        w.write_record([
            r.label.clone(),
            r.size.to_string(),
            format!("{:.4}", r.seconds_per_replicate),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `rate.csv` and `rate.json`.
pub fn write_rate(
    report: &RateReport,
    metrics: Option<&BTreeMap<usize, MetricsTable>>,
    dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("rate.csv"))?;
    w.write_record([
        "length",
        "k",
        "band_low",
        "band_high",
        "parameter",
        "factor",
        "status",
    ])?;
    let status = |s: BandStatus| match s {
        BandStatus::Inside => "INSIDE",
        BandStatus::Near => "NEAR",
        BandStatus::Outside => "OUTSIDE",
    };
    for row in &report.rows {
        let base = [
            row.length.to_string(),
            num(row.k),
            num(row.band[0]),
            num(row.band[1]),
        ];
        for (i, p) in report.parameters.iter().enumerate() {
            let mut rec = base.to_vec();
            rec.extend([p.clone(), num(row.factors[i]), status(row.status[i]).into()]);
            w.write_record(&rec)?;
        }
        let mut rec = base.to_vec();
        rec.extend([
            "mean".into(),
            num(row.mean_factor),
            status(row.mean_status).into(),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    #[derive(Serialize)]
    struct Out<'a> {
        check: &'a RateReport,
        #[serde(skip_serializing_if = "Option::is_none")]
        metrics: Option<&'a BTreeMap<usize, MetricsTable>>,
    }
    write_json(
        &Out {
            check: report,
            metrics,
        },
        &dir.join("rate.json"),
    )
}
