//! Estimation, forecasting and expanding-window backtests driven by a
//! [`RunConfig`].
//!
//! Every data-based prior ingredient (Minnesota scales, the log h₀ centre)
//! is computed from the frame handed in, so a frame cut at an origin keeps
//! the whole pipeline inside that origin's information set.

use crate::abg_qr::{fit_quantile_regression, interpolate_skew_t};
use crate::config::RunConfig;
use crate::dataio::{Period, SeriesFrame};
use crate::design::{UniDesign, UniDesignData};
use crate::draws::{ModelKind, PosteriorDraws};
use crate::error::{Error, Result};
use crate::forecast::{forecast_uni, forecast_var, ForecastConfig, PredictiveDensity};
use crate::priors::{
    ar_residual_variance, estimate_scales, log_h0_center, minnesota_cov, minnesota_mean, univariate_minnesota,
    NormalPrior,
};
use crate::random::{derive_seed, seeded, ChainRng};
use crate::scoring::{score_forecast, ScoreReport};
use crate::states::StateEqSpec;
use crate::uni_sampler::{run_chain, StatePriors, UniModelSpec, UniPriorSpec};
use crate::var_sampler::{run_var_chain, VarModelSpec, VarPriorSpec};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Starting values of the state-equation parameters.
const PHI_START: f64 = 0.9;
const SIGMA2_START: f64 = 0.04;

pub const BASELINE_NAME: &str = "qr-skewt";

pub fn model_name(cfg: &RunConfig) -> String {
    let kind = match cfg.model.kind {
        ModelKind::Univariate => "uni",
        ModelKind::Var => "var",
    };
    let fam = if cfg.model.shock.is_skew_t() { "skewt" } else { "skewnormal" };
    format!("tvssv-{kind}-{fam}")
}

fn state_priors(cfg: &RunConfig, log_h0_center: f64) -> StatePriors {
    let p = &cfg.prior;
    StatePriors {
        phi_h: p.phi_h,
        phi_lambda: p.phi_lambda,
        beta_h: p.beta_h,
        beta_lambda: p.beta_lambda,
        sigma2_eta: p.sigma2_eta,
        sigma2_xi: p.sigma2_xi,
        log_h0: NormalPrior::new(log_h0_center, p.log_h0_var),
        lambda0: p.lambda0,
    }
}

/// Inputs of a univariate estimation on one frame.
#[derive(Debug, Clone)]
pub struct UniSetup {
    pub design: UniDesign,
    /// Target then exogenous columns, all rows of the frame.
    pub data: DMatrix<f64>,
    pub built: UniDesignData,
    pub model: UniModelSpec,
    pub prior: UniPriorSpec,
}

pub fn univariate_design(cfg: &RunConfig) -> UniDesign {
    let m = &cfg.model;
    let idx = |names: &[String]| names.iter().filter_map(|n| m.exo.iter().position(|e| e == n)).collect();
    UniDesign {
        y_lags: m.y_lags,
        exo_lags: m.exo_lags,
        n_exo: m.exo.len(),
        vol_exo: idx(&m.vol_exo),
        shape_exo: idx(&m.shape_exo),
    }
}

pub fn univariate_columns(cfg: &RunConfig) -> Vec<String> {
    let mut cols = vec![cfg.model.target.clone()];
    cols.extend(cfg.model.exo.iter().cloned());
    cols
}

pub fn setup_univariate(cfg: &RunConfig, frame: &SeriesFrame) -> Result<UniSetup> {
    let design = univariate_design(cfg);
    let cols = univariate_columns(cfg);
    let data = frame.select(&cols)?;
    let built = design.build(&data)?;
    let col = |j: usize| -> Vec<f64> { data.column(j).iter().copied().collect() };
    let lags = cfg.prior.scale_ar_lags;
    let s_y = ar_residual_variance(&col(0), lags)?;
    let s_x = (1..cols.len()).map(|j| ar_residual_variance(&col(j), lags)).collect::<Result<Vec<_>>>()?;
    let hyper = &cfg.prior.minnesota;
    let var = univariate_minnesota(hyper, s_y, design.y_lags, &s_x, design.exo_lags)?;
    let mut mean = DVector::zeros(var.len());
    if design.y_lags > 0 {
        mean[1] = hyper.own_lag_center.first().copied().unwrap_or(0.0);
    }
    let states = state_priors(cfg, log_h0_center(&col(0))?);
    let mut vol_eq = StateEqSpec::new(PHI_START, SIGMA2_START);
    if let Some(x) = &built.vol_exo {
        vol_eq = vol_eq.with_exo(vec![0.0; x.ncols()], x.clone())?;
    }
    let mut shape_eq = StateEqSpec::new(PHI_START, SIGMA2_START);
    if let Some(x) = &built.shape_exo {
        shape_eq = shape_eq.with_exo(vec![0.0; x.ncols()], x.clone())?;
    }
    let model = UniModelSpec {
        regressors: built.x.clone(),
        regressor_names: design.regressor_names(&cols),
        family: cfg.model.shock,
        vol_eq,
        shape_eq,
    };
    let prior = UniPriorSpec { pi_mean: mean, pi_cov: DMatrix::from_diagonal(&DVector::from_vec(var)), states };
    Ok(UniSetup { design, data, built, model, prior })
}

#[derive(Debug, Clone)]
pub struct VarSetup {
    pub levels: DMatrix<f64>,
    pub model: VarModelSpec,
    pub prior: VarPriorSpec,
}

pub fn setup_var(cfg: &RunConfig, frame: &SeriesFrame) -> Result<VarSetup> {
    let names = cfg.var_variables();
    let levels = frame.select(&names)?;
    let n = names.len();
    let p = cfg.model.lags;
    let scales = estimate_scales(&levels, cfg.prior.scale_ar_lags)?;
    let hyper = &cfg.prior.minnesota;
    let states = (0..n)
        .map(|j| {
            let col: Vec<f64> = levels.column(j).iter().copied().collect();
            Ok(state_priors(cfg, log_h0_center(&col)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let model = VarModelSpec {
        names: names.clone(),
        lags: p,
        family: cfg.model.shock,
        vol_eqs: vec![StateEqSpec::new(PHI_START, SIGMA2_START); n],
        shape_eqs: vec![StateEqSpec::new(PHI_START, SIGMA2_START); n],
    };
    let prior = VarPriorSpec {
        pi_mean: DVector::from_vec(minnesota_mean(hyper, n, p)),
        pi_cov: minnesota_cov(hyper, &scales, n, p)?,
        a: cfg.prior.a,
        states,
    };
    Ok(VarSetup { levels, model, prior })
}

/// Labels of the effective-sample periods of an estimation on `frame`.
pub fn effective_periods(cfg: &RunConfig, frame: &SeriesFrame) -> Vec<String> {
    let skip = match cfg.model.kind {
        ModelKind::Univariate => univariate_design(cfg).max_lag(),
        ModelKind::Var => cfg.model.lags,
    };
    frame.dates.iter().skip(skip).map(|d| d.to_string()).collect()
}

/// Run the configured model's chain on `frame`.
pub fn estimate(cfg: &RunConfig, frame: &SeriesFrame, seed: u64) -> Result<PosteriorDraws> {
    let mcmc = cfg.mcmc.with_seed(seed);
    match cfg.model.kind {
        ModelKind::Univariate => {
            let s = setup_univariate(cfg, frame)?;
            let mut draws = run_chain(&s.model, &s.prior, &s.built.y, &mcmc)?;
            draws.meta.variables = vec![cfg.model.target.clone()];
            Ok(draws)
        }
        ModelKind::Var => {
            let s = setup_var(cfg, frame)?;
            run_var_chain(&s.model, &s.prior, &s.levels, &mcmc)
        }
    }
}

/// Predictive densities for horizons 1..=H from draws estimated on `frame`.
pub fn forecast(cfg: &RunConfig, frame: &SeriesFrame, draws: &PosteriorDraws, seed: u64) -> Result<Vec<PredictiveDensity>> {
    let fc = ForecastConfig { horizon: cfg.forecast.horizon, sims_per_draw: cfg.forecast.sims_per_draw, seed };
    let origin = frame.dates.last().map(|d| d.to_string()).unwrap_or_default();
    match cfg.model.kind {
        ModelKind::Univariate => {
            let design = univariate_design(cfg);
            let data = frame.select(&univariate_columns(cfg))?;
            let mut pds = forecast_uni(draws, &design, &data, &fc, &origin)?;
            for pd in &mut pds {
                pd.variable = cfg.model.target.clone();
            }
            Ok(pds)
        }
        ModelKind::Var => forecast_var(draws, &frame.select(&cfg.var_variables())?, &fc, &origin),
    }
}

/// Fitted Skew-t of the baseline at one origin and horizon, for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineFit {
    pub origin: String,
    pub horizon: usize,
    pub location: f64,
    pub scale: f64,
    pub lambda: f64,
    pub nu: f64,
    pub objective: f64,
    pub rms_error: f64,
    /// RMS quantile error above 1e-2.
    pub poor_fit: bool,
    pub iterations: u64,
}

/// Two-step baseline at the last row of `frame`: direct quantile
/// regressions of `y_{t+h-1}` on the regressors of period `t`, then the
/// Skew-t through the predicted quantiles.
pub fn baseline_forecast(cfg: &RunConfig, frame: &SeriesFrame, seed: u64) -> Result<(Vec<PredictiveDensity>, Vec<BaselineFit>)> {
    let design = univariate_design(cfg);
    let data = frame.select(&univariate_columns(cfg))?;
    let m = design.max_lag();
    let n = data.nrows();
    let origin = frame.dates.last().map(|d| d.to_string()).unwrap_or_default();
    let b = &cfg.baseline;
    let mut rng: ChainRng = seeded(seed);
    let mut pds = Vec::new();
    let mut fits = Vec::new();
    for h in 1..=cfg.forecast.horizon {
        if n < m + h + design.n_coef() + 1 {
            return Err(Error::InsufficientData(format!("baseline at horizon {h} has too few observations")));
        }
        let rows = n + 1 - h - m;
        let x = DMatrix::from_fn(rows, design.n_coef(), |r, c| design.regressor_row(&data, m + r)[c]);
        let y = DVector::from_fn(rows, |r, _| data[(m + r + h - 1, 0)]);
        let qr = fit_quantile_regression(&x, &y, &b.taus)?;
        let xt = design.regressor_row(&data, n);
        let targets: Vec<f64> = qr.predict_at(&xt, &b.interpolation_taus)?.into_iter().map(|(_, q)| q).collect();
        let fit = interpolate_skew_t(&b.interpolation_taus, &targets)?;
        let rms = fit.rms_error(targets.len());
        fits.push(BaselineFit {
            origin: origin.clone(),
            horizon: h,
            location: fit.dist.location,
            scale: fit.dist.scale,
            lambda: fit.dist.lambda,
            nu: fit.nu(),
            objective: fit.objective,
            rms_error: rms,
            poor_fit: rms > 1e-2,
            iterations: fit.iterations,
        });
        pds.push(PredictiveDensity {
            origin: origin.clone(),
            horizon: h,
            variable: cfg.model.target.clone(),
            draws: (0..b.draws).map(|_| fit.dist.sample(&mut rng)).collect(),
            components: vec![fit.dist],
        });
    }
    Ok((pds, fits))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastEntry {
    pub pd: PredictiveDensity,
    pub realized: Option<f64>,
}

/// One model's forecasts over a backtest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelForecasts {
    pub model: String,
    pub entries: Vec<ForecastEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestOutput {
    /// The baseline, when enabled, comes first.
    pub models: Vec<ModelForecasts>,
    pub baseline_fits: Vec<BaselineFit>,
    pub origins: Vec<Period>,
}

/// Row indices of the origins `start..=end`.
pub fn origin_rows(frame: &SeriesFrame, start: Period, end: Period) -> Result<Vec<usize>> {
    let a = frame
        .position(start)
        .ok_or_else(|| Error::Config(format!("backtest start {start} outside the data")))?;
    let b = frame.position(end).ok_or_else(|| Error::Config(format!("backtest end {end} outside the data")))?;
    Ok((a..=b).collect())
}

/// Confirm that nothing dated after `origin` is in the estimation frame.
pub fn audit_information_set(frame: &SeriesFrame, origin: Period) -> Result<()> {
    match frame.dates.last() {
        Some(&last) if last == origin => Ok(()),
        Some(&last) => Err(Error::Data(format!("estimation frame ends at {last}, origin is {origin}"))),
        None => Err(Error::Data("empty estimation frame".into())),
    }
}

struct OriginResult {
    model: Vec<ForecastEntry>,
    baseline: Vec<ForecastEntry>,
    fits: Vec<BaselineFit>,
}

fn run_origin(cfg: &RunConfig, frame: &SeriesFrame, row: usize) -> Result<OriginResult> {
    let origin = frame.dates[row];
    let sub = frame.through(row);
    audit_information_set(&sub, origin)?;
    let stream = 3 * row as u64;
    let draws = estimate(cfg, &sub, derive_seed(cfg.seed, stream))?;
    let target = frame.column_index(&cfg.model.target)?;
    let realized = |h: usize| (row + h < frame.n_obs()).then(|| frame.values[(row + h, target)]);
    let model = forecast(cfg, &sub, &draws, derive_seed(cfg.seed, stream + 1))?
        .into_iter()
        .map(|pd| {
            let r = if pd.variable == cfg.model.target { realized(pd.horizon) } else { None };
            ForecastEntry { realized: r, pd }
        })
        .collect();
    let (baseline, fits) = if cfg.baseline.enabled {
        let (pds, fits) = baseline_forecast(cfg, &sub, derive_seed(cfg.seed, stream + 2))?;
        (pds.into_iter().map(|pd| ForecastEntry { realized: realized(pd.horizon), pd }).collect(), fits)
    } else {
        (Vec::new(), Vec::new())
    };
    Ok(OriginResult { model, baseline, fits })
}

/// Expanding-window backtest: re-estimate at every origin, forecast, and
/// attach the realized target where available. Origins run in parallel;
/// all seeds derive from the master seed and the origin row.
pub fn backtest(cfg: &RunConfig, frame: &SeriesFrame) -> Result<BacktestOutput> {
    let bt = cfg.backtest.as_ref().ok_or_else(|| Error::Config("missing [backtest] section".into()))?;
    let rows = origin_rows(frame, bt.start, bt.end)?;
    let work = || -> Vec<Result<OriginResult>> {
        rows.par_iter()
            .map(|&r| run_origin(cfg, frame, r).map_err(|e| e.at_origin(frame.dates[r].to_string())))
            .collect()
    };
    let results = match bt.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let mut model = ModelForecasts { model: model_name(cfg), entries: Vec::new() };
    let mut base = ModelForecasts { model: BASELINE_NAME.into(), entries: Vec::new() };
    let mut fits = Vec::new();
    for r in results {
        let r = r?;
        model.entries.extend(r.model);
        base.entries.extend(r.baseline);
        fits.extend(r.fits);
    }
    let mut models = Vec::new();
    if cfg.baseline.enabled {
        models.push(base);
    }
    models.push(model);
    Ok(BacktestOutput { models, baseline_fits: fits, origins: rows.iter().map(|&r| frame.dates[r]).collect() })
}

/// Score every model on `variable` at `horizon` over the origins where all
/// models have a forecast and the outcome is known. The first model is the
/// comparison baseline.
pub fn evaluate(models: &[ModelForecasts], variable: &str, horizon: usize) -> Result<ScoreReport> {
    let Some(first) = models.first() else {
        return Err(Error::Config("no forecasts to evaluate".into()));
    };
    fn pick<'a>(m: &'a ModelForecasts, origin: &str, variable: &str, horizon: usize) -> Option<&'a ForecastEntry> {
        m.entries.iter().find(|e| e.pd.origin == origin && e.pd.horizon == horizon && e.pd.variable == variable)
    }
    let origins: Vec<String> = first
        .entries
        .iter()
        .filter(|e| e.pd.horizon == horizon && e.pd.variable == variable && e.realized.is_some())
        .map(|e| e.pd.origin.clone())
        .filter(|o| models.iter().all(|m| pick(m, o, variable, horizon).is_some()))
        .collect();
    if origins.is_empty() {
        return Err(Error::Data(format!("no scored origins for {variable} at horizon {horizon}")));
    }
    let scores = models
        .iter()
        .map(|m| {
            let rows = origins
                .iter()
                .map(|o| {
                    let e = pick(m, o, variable, horizon).expect("filtered above");
                    let y = e.realized.or_else(|| pick(first, o, variable, horizon).and_then(|f| f.realized)).expect("filtered above");
                    score_forecast(&e.pd, y)
                })
                .collect();
            (m.model.clone(), rows)
        })
        .collect();
    ScoreReport::new(scores, horizon)
}

pub fn write_baseline_fits_csv<W: Write>(w: W, fits: &[BaselineFit]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for f in fits {
        out.serialize(f)?;
    }
    out.flush()?;
    Ok(())
}
