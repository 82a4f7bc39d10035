use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use extremo::config::{parse_config, preset, BiasMode, Config, PRESETS};
use extremo::domain::Lag;
use extremo::error::{Error, Result};
use extremo::extremogram::BiasRegime;
use extremo::extremogram::{read_estimates, threshold_sweep, write_estimates};
use extremo::field_io::{load_field, save_field};
use extremo::glse::FitOptions;
use extremo::pipeline::{estimate_field, fit_values, EstimationSpec};
use extremo::simulate::{stream_rng, Simulator};
use extremo::study::{
    lag_sensitivity, rate_check, rate_study, replicate_seed, run_scenario, write_json,
    write_lagscan, write_rate, write_scenario_outputs, write_timings, BLOCK_STREAM, FIT_STREAM,
    SIM_STREAM,
};
use extremo::subsample::subsample_ci;

#[derive(Parser)]
#[command(
    name = "extremo",
    version,
    about = "Brown-Resnick space-time extremes: simulate, estimate, fit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate fields from the configured model.
    Simulate(Common),
    /// Empirical extremogram of a field.
    Extremogram(Common),
    /// GLSE fit to an estimates file.
    Fit(Common),
    /// Fit a field and add subsampling confidence intervals.
    Ci(Common),
    /// Monte Carlo study of one scenario.
    Study(Common),
    /// Compare lag sets on shared simulated fields.
    Lagscan(Common),
    /// Compare RMSE decay across lengths with the theoretical rate.
    Ratecheck(Common),
    /// Write the effective configuration only.
    Config(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in configuration, used as the base for `--config` overrides.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    quantile_level: Option<f64>,
    #[arg(long, value_enum)]
    bias_correct: Option<BiasMode>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Field CSV.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Estimates CSV.
    #[arg(long)]
    estimates: Option<PathBuf>,
    /// Write lag-set timings here instead of stderr.
    #[arg(long)]
    timings: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<Config> {
        let mut c = match (&self.preset, &self.config) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either --preset or --config".into()));
            }
            (Some(p), None) => {
                preset(p).ok_or_else(|| Error::Config(format!("unknown preset `{p}`")))?
            }
            (None, Some(path)) => parse_config(path)?,
            (None, None) => {
                return Err(Error::Config(
                    "one of --config or --preset is required".into(),
                ))
            }
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(o) = &self.out {
            c.out = Some(o.clone());
        }
        if let Some(q) = self.quantile_level {
            c.estimation.quantile_level = Some(q);
        }
        if let Some(b) = self.bias_correct {
            c.estimation.bias_correct = b;
        }
        if let Some(r) = self.replicates {
            c.replicates = Some(r);
        }
        if let Some(i) = &self.input {
            c.input = Some(i.clone());
        }
        if let Some(e) = &self.estimates {
            c.estimates = Some(e.clone());
        }
        c.effective()
    }
}

fn out_dir(c: &Config) -> Result<PathBuf> {
    let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("effective_config.json"), c.to_json()?)?;
    Ok(dir)
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::Config(format!("`{what}` is required (config key or --{what})")))
}

fn simulate(c: &Config) -> Result<()> {
    let dir = out_dir(c)?;
    let model = c.model()?;
    let domain = c.domain()?;
    let sim = Simulator::new(&model, &domain, c.sampler)?;
    let reps = c.replicates.unwrap_or(1);
    for r in 0..reps {
        let field = sim.simulate(&mut stream_rng(replicate_seed(c.seed, r), SIM_STREAM))?;
        let name = if reps == 1 {
            "field.csv".to_string()
        } else {
            format!("field_{r:04}.csv")
        };
        save_field(&field, &dir.join(name))?;
    }
    info!(
        "wrote {reps} field(s) of {} sites to {}",
        domain.site_count(),
        dir.display()
    );
    Ok(())
}

fn extremogram(c: &Config) -> Result<()> {
    let dir = out_dir(c)?;
    let domain = c.domain()?;
    let field = load_field(required(&c.input, "input")?, &domain, true)?;
    let template = c.template()?;
    let spec = c.estimation_spec(&template, &domain)?;
    let th = extremo::extremogram::select_threshold(&field, spec.quantile_level)?;
    let raw =
        extremo::extremogram::empirical_extremogram(&field, &spec.lags, &th, &spec.a, &spec.b)?;
    let est = extremo::extremogram::bias_correct(&raw, spec.regime)?;
    let mut w = BufWriter::new(File::create(dir.join("estimates.csv"))?);
    write_estimates(&est, &mut w)?;
    w.flush()?;
    write_json(&th, &dir.join("threshold.json"))?;
    if let Some(levels) = &c.sweep_levels {
        let rows = threshold_sweep(&field, &spec.lags, levels, &spec.a, &spec.b, spec.regime)?;
        let mut w = csv::Writer::from_path(dir.join("sweep.csv"))?;
        w.write_record(["level", "realized", "lag", "value"])?;
        for r in rows {
            let lag = r
                .lag
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            w.write_record([
                format!("{:?}", r.level),
                format!("{:?}", r.realized),
                lag,
                r.value.map(|v| format!("{v:?}")).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
    }
    Ok(())
}

fn fit(c: &Config) -> Result<()> {
    let dir = out_dir(c)?;
    let path = required(&c.estimates, "estimates")?;
    let records = read_estimates(File::open(path)?)?;
    let lags: Vec<Lag> = records.iter().map(|r| r.lag.clone()).collect();
    let values: Vec<f64> = records.iter().map(|r| r.value).collect();
    let template = c.template()?;
    if let Some(l) = lags.iter().find(|l| l.dim() != template.dim()) {
        return Err(Error::Config(format!(
            "lag {:?} does not match the model dimension {}",
            l.full(),
            template.dim()
        )));
    }
    let spec = EstimationSpec {
        lags: lags.clone(),
        quantile_level: c.quantile_level()?,
        a: c.estimation.a.build()?,
        b: c.estimation.b.build()?,
        regime: BiasRegime::None,
        weights: c.estimation.weights,
        fallback_weights: c.estimation.fallback_weights,
        template,
        fit: FitOptions {
            starts: c.estimation.starts,
            ..FitOptions::default()
        },
    };
    let (result, kind) = fit_values(&lags, &values, &spec, &mut stream_rng(c.seed, FIT_STREAM))?;
    if kind != spec.weights {
        warn!(
            "{:?} weights invalid for these estimates; used {kind:?}",
            spec.weights
        );
    }
    write_json(&result, &dir.join("fit.json"))
}

fn ci(c: &Config) -> Result<()> {
    let dir = out_dir(c)?;
    let domain = c.domain()?;
    let field = load_field(required(&c.input, "input")?, &domain, true)?;
    let template = c.template()?;
    let spec = c.estimation_spec(&template, &domain)?;
    let full = estimate_field(&field, &spec, None, &mut stream_rng(c.seed, FIT_STREAM))?;
    let sub = c.subsampling.clone().unwrap_or_default();
    let res = subsample_ci(
        &field,
        &spec,
        &full.result.theta_hat,
        full.threshold.realized,
        &sub,
        c.seed,
        BLOCK_STREAM,
    )?;
    if res.dropped_blocks > 0 {
        warn!("{} of {} blocks dropped", res.dropped_blocks, res.n_blocks);
    }
    write_json(&res, &dir.join("ci.json"))?;
    let mut w = csv::Writer::from_path(dir.join("ci.csv"))?;
    w.write_record(["parameter", "estimate", "lower", "upper"])?;
    for (name, iv) in &res.intervals {
        w.write_record([
            name.clone(),
            format!("{:?}", res.point_estimate[name]),
            format!("{:?}", iv[0]),
            format!("{:?}", iv[1]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn study(c: &Config) -> Result<()> {
    let dir = out_dir(c)?;
    let report = run_scenario(&c.scenario(20)?)?;
    write_scenario_outputs(&report, &dir)
}

fn lagscan(c: &Config, timings: Option<&Path>) -> Result<()> {
    let dir = out_dir(c)?;
    let scenario = c.scenario(20)?;
    let q = scenario.domain.q();
    let sets: Vec<(String, Vec<Lag>)> = c
        .lag_sets
        .clone()
        .unwrap_or_else(|| {
            (1..=5)
                .map(|l| extremo::config::LagSpec::Preset(format!("H{l}")))
                .collect()
        })
        .iter()
        .map(|s| Ok((s.label(), s.resolve(q)?)))
        .collect::<Result<_>>()?;
    let results = lag_sensitivity(&scenario, &sets)?;
    write_lagscan(&results, &dir)?;
    match timings {
        Some(p) => write_timings(&results, File::create(p)?),
        None => write_timings(&results, std::io::stderr()),
    }
}

fn ratecheck(c: &Config) -> Result<()> {
    let dir = out_dir(c)?;
    let (w, d) = match (&c.domain, c.dims) {
        (Some(dom), _) => {
            let dom = dom.build()?;
            (dom.w(), dom.d())
        }
        (None, Some([w, d])) => (w, d),
        (None, None) => return Err(Error::Config("ratecheck needs `domain` or `dims`".into())),
    };
    let [lo, hi] = c
        .beta1_range
        .unwrap_or([w as f64 / (5.0 * d as f64), w as f64 / (2.0 * d as f64)]);
    let (rmse, params, metrics) = match &c.rmse_by_length {
        Some(r) => {
            let params = c.parameters.clone().ok_or_else(|| {
                Error::Config("`parameters` is required with `rmse_by_length`".into())
            })?;
            (r.clone(), params, None)
        }
        None => {
            let scenario = c.scenario(20)?;
            let lengths = c.lengths.clone().unwrap_or_else(|| vec![100, 200, 400]);
            let m = rate_study(&scenario, &lengths)?;
            let rmse: BTreeMap<usize, Vec<f64>> =
                m.iter().map(|(&t, t_m)| (t, t_m.rmse.clone())).collect();
            (rmse, scenario.truth.param_names().to_vec(), Some(m))
        }
    };
    let report = rate_check(&rmse, &params, w, d, lo, hi, c.rate_tolerance)?;
    write_rate(&report, metrics.as_ref(), &dir)
}

fn run(cli: Cli) -> Result<()> {
    let common = match &cli.command {
        Command::Simulate(x)
        | Command::Extremogram(x)
        | Command::Fit(x)
        | Command::Ci(x)
        | Command::Study(x)
        | Command::Lagscan(x)
        | Command::Ratecheck(x)
        | Command::Config(x) => x.clone(),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads)
        .build_global()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let c = common.load()?;
    match cli.command {
        Command::Simulate(_) => simulate(&c),
        Command::Extremogram(_) => extremogram(&c),
        Command::Fit(_) => fit(&c),
        Command::Ci(_) => ci(&c),
        Command::Study(_) => study(&c),
        Command::Lagscan(_) => lagscan(&c, common.timings.as_deref()),
        Command::Ratecheck(_) => ratecheck(&c),
        Command::Config(_) => out_dir(&c).map(|_| ()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
