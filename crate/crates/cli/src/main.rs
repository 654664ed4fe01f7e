//! `tvssv` command-line driver.
//!
//! Every file written starts with header metadata (config hash, seed, code
//! version and variable ordering): `#` comment lines for CSV and text, a
//! `header` object wrapping the `body` for JSON.

mod output;
mod svg;

use clap::{Args, Parser, Subcommand, ValueEnum};
use output::{Header, OutDir};
use std::path::PathBuf;
use std::process::ExitCode;
use tvssv::config::RunConfig;
use tvssv::dataio::load_csv;
use tvssv::draws::{ModelKind, PosteriorDraws};
use tvssv::forecast::write_draws_csv;
use tvssv::pipeline::{self, ModelForecasts};
use tvssv::random::derive_seed;
use tvssv::scoring::{ScoreReport, SCORE_NAMES};
use tvssv::synthetic::{simulate, SyntheticSpec};
use tvssv::{Error, Result};

#[derive(Parser)]
#[command(name = "tvssv", version, about = "Stochastic volatility and time-varying skewness: estimation, density forecasts and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sampler on the full sample; write draws, parameter summaries and latent-path bands.
    Estimate(EstimateArgs),
    /// Predictive densities at the end of the sample, from fresh or saved draws.
    Forecast(ForecastArgs),
    /// Expanding-window backtest against the quantile-regression baseline, with scores.
    Backtest(BacktestArgs),
    /// Score saved backtest forecasts; the first file is the comparison baseline.
    Evaluate(EvaluateArgs),
    /// Write a synthetic growth / financial-conditions CSV drawn from the model.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the model kind.
    #[arg(long, value_enum)]
    model: Option<KindArg>,
    /// Override the VAR lag order.
    #[arg(long)]
    lags: Option<usize>,
    /// Override the total number of MCMC iterations.
    #[arg(long)]
    iters: Option<usize>,
    /// Override the burn-in.
    #[arg(long)]
    burn_in: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Uni,
    Var,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    common: Common,
    /// Also write SVG plots.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct ForecastArgs {
    #[command(flatten)]
    common: Common,
    /// Draws written by `estimate`; the chain is rerun when absent.
    #[arg(long)]
    draws: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct BacktestArgs {
    #[command(flatten)]
    common: Common,
    /// Worker threads for the origins (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Also write SVG plots.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Forecast files written by `backtest`; the first is the baseline.
    #[arg(long, num_args = 2.., required = true)]
    forecasts: Vec<PathBuf>,
    /// Scored variable (default: the first forecast's variable).
    #[arg(long)]
    variable: Option<String>,
    /// Scored horizon.
    #[arg(long, default_value_t = 1)]
    horizon: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write SVG plots.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of periods.
    #[arg(long, default_value_t = 300)]
    periods: usize,
    /// Response of the shape state to the lagged driver.
    #[arg(long, default_value_t = -0.3, allow_negative_numbers = true)]
    beta_lambda: f64,
    /// Skew-t degrees of freedom; omit for Skew-Normal shocks.
    #[arg(long)]
    nu: Option<f64>,
    /// Optional TOML file with every generator parameter; flags above are ignored when given.
    #[arg(long)]
    spec: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Forecast(a) => cmd_forecast(a),
        Command::Backtest(a) => cmd_backtest(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 config, 3 data, 4 numerical failure.
fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        4
    } else if e.is_data() || matches!(e.root(), Error::Json(_)) {
        3
    } else {
        2
    }
}

fn load_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::from_path(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(k) = c.model {
        cfg.model.kind = match k {
            KindArg::Uni => ModelKind::Univariate,
            KindArg::Var => ModelKind::Var,
        };
    }
    if let Some(p) = c.lags {
        cfg.model.lags = p;
    }
    if let Some(n) = c.iters {
        cfg.mcmc.iters = n;
    }
    if let Some(n) = c.burn_in {
        cfg.mcmc.burn_in = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn model_variables(cfg: &RunConfig) -> Vec<String> {
    match cfg.model.kind {
        ModelKind::Univariate => pipeline::univariate_columns(cfg),
        ModelKind::Var => cfg.var_variables(),
    }
}

fn setup(c: &Common) -> Result<(RunConfig, tvssv::dataio::SeriesFrame, Header, OutDir)> {
    let cfg = load_config(c)?;
    let frame = load_csv(&cfg.data.path, &cfg.series_specs()?)?;
    let header = Header::for_config(&cfg, model_variables(&cfg))?;
    let out = OutDir::create(&c.out)?;
    Ok((cfg, frame, header, out))
}

fn cmd_estimate(a: EstimateArgs) -> Result<()> {
    let (cfg, frame, header, out) = setup(&a.common)?;
    let draws = pipeline::estimate(&cfg, &frame, derive_seed(cfg.seed, 0))?;
    write_estimates(&cfg, &frame, &draws, &header, &out, a.plot)?;
    eprintln!("{} draws written to {}", draws.len(), out.path("draws.json").display());
    Ok(())
}

fn write_estimates(
    cfg: &RunConfig,
    frame: &tvssv::dataio::SeriesFrame,
    draws: &PosteriorDraws,
    header: &Header,
    out: &OutDir,
    plot: bool,
) -> Result<()> {
    let mut body = Vec::new();
    draws.write_json(&mut body)?;
    out.json("draws.json", header, serde_json::from_slice(&body)?)?;
    out.csv("posterior_summary.csv", header, |w| draws.write_summary_csv(w))?;
    let periods = pipeline::effective_periods(cfg, frame);
    out.csv("latent_paths.csv", header, |w| draws.write_path_quantiles_csv(w, Some(&periods)))?;
    if plot && draws.meta.full_paths {
        out.text("latent_paths.svg", &svg::latent_paths(draws))?;
    }
    Ok(())
}

fn cmd_forecast(a: ForecastArgs) -> Result<()> {
    let (cfg, frame, header, out) = setup(&a.common)?;
    let draws = match &a.draws {
        Some(p) => {
            let (h, body) = output::read_json(p)?;
            if h.config_sha256 != header.config_sha256 {
                eprintln!("warning: {} was produced under a different configuration", p.display());
            }
            PosteriorDraws::read_json(body.to_string().as_bytes())?
        }
        None => pipeline::estimate(&cfg, &frame, derive_seed(cfg.seed, 0))?,
    };
    let pds = pipeline::forecast(&cfg, &frame, &draws, derive_seed(cfg.seed, 1))?;
    out.csv("forecast_draws.csv", &header, |w| write_draws_csv(w, &pds))?;
    out.csv("forecast_summary.csv", &header, |w| output::write_forecast_summary(w, &pds))?;
    if a.plot {
        out.text("forecast_fan.svg", &svg::fan_chart(&pds, &cfg.model.target))?;
    }
    for pd in pds.iter().filter(|p| p.variable == cfg.model.target) {
        eprintln!(
            "{} h={}: mean {:.3}, GaR5 {:.3}, ES5 {:.3}, P(<0) {:.3}",
            pd.origin,
            pd.horizon,
            pd.mean(),
            pd.gar_quantile(0.05),
            pd.expected_shortfall(0.05),
            pd.recession_prob()
        );
    }
    Ok(())
}

fn cmd_backtest(a: BacktestArgs) -> Result<()> {
    let (mut cfg, frame, header, out) = setup(&a.common)?;
    if let (Some(t), Some(bt)) = (a.threads, cfg.backtest.as_mut()) {
        bt.threads = Some(t);
    }
    let result = pipeline::backtest(&cfg, &frame)?;
    for m in &result.models {
        out.json(&forecast_file(&m.model), &header, serde_json::to_value(m)?)?;
    }
    if !result.baseline_fits.is_empty() {
        out.csv("baseline_fits.csv", &header, |w| pipeline::write_baseline_fits_csv(w, &result.baseline_fits))?;
    }
    for h in 1..=cfg.forecast.horizon {
        match pipeline::evaluate(&result.models, &cfg.model.target, h) {
            Ok(report) => write_report(&report, &header, &out, &format!("_h{h}"), a.plot)?,
            Err(e) if e.is_data() => eprintln!("horizon {h}: nothing to score ({e})"),
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

fn forecast_file(model: &str) -> String {
    format!("forecasts_{model}.json")
}

fn write_report(report: &ScoreReport, header: &Header, out: &OutDir, suffix: &str, plot: bool) -> Result<()> {
    out.csv(&format!("scores{suffix}.csv"), header, |w| report.write_scores_csv(w))?;
    out.csv(&format!("summary{suffix}.csv"), header, |w| report.write_summary_csv(w))?;
    out.csv(&format!("pit{suffix}.csv"), header, |w| output::write_pit_histogram(w, report))?;
    let table = report.to_table();
    out.text(&format!("report{suffix}.txt"), &format!("{}{table}", header.comment_lines()))?;
    print!("{table}");
    if plot {
        out.text(&format!("pit{suffix}.svg"), &svg::pit_histograms(report))?;
        out.text(&format!("scores{suffix}.svg"), &svg::score_paths(report, SCORE_NAMES[1]))?;
    }
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let mut models = Vec::new();
    let mut inputs = Vec::new();
    let mut seed = None;
    for p in &a.forecasts {
        let bytes = std::fs::read(p).map_err(|e| Error::Data(format!("cannot read {}: {e}", p.display())))?;
        let (h, body) = output::parse_json(&bytes, p)?;
        seed.get_or_insert(h.seed);
        let m: ModelForecasts = serde_json::from_value(body)?;
        models.push(m);
        inputs.push(bytes);
    }
    let variable = match a.variable {
        Some(v) => v,
        None => models[0]
            .entries
            .first()
            .map(|e| e.pd.variable.clone())
            .ok_or_else(|| Error::Data("first forecast file is empty".into()))?,
    };
    let report = pipeline::evaluate(&models, &variable, a.horizon)?;
    let header = Header::for_inputs(&inputs, seed.unwrap_or(0), vec![variable]);
    let out = OutDir::create(&a.out)?;
    write_report(&report, &header, &out, &format!("_h{}", a.horizon), a.plot)
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let spec = match &a.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str::<SyntheticSpec>(&text).map_err(|e| Error::Config(e.message().to_string()))?
        }
        None => SyntheticSpec {
            n_obs: a.periods,
            beta_lambda: a.beta_lambda,
            family: match a.nu {
                Some(nu) => tvssv::skewdist::ShockFamily::SkewT { nu },
                None => tvssv::skewdist::ShockFamily::SkewNormal,
            },
            warmup: 100,
            ..Default::default()
        },
    };
    let data = simulate(&spec, a.seed)?;
    let text = toml::to_string(&spec).map_err(|e| Error::Config(e.to_string()))?;
    let header = Header::for_inputs(&[text.into_bytes()], a.seed, data.frame.names.clone());
    let mut buf = header.comment_lines().into_bytes();
    data.frame.write_csv(&mut buf)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(&a.out, buf)?;
    Ok(())
}
