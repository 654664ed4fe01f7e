//! Density-forecast scores, forecast-comparison tests and the comparison
//! report. Every score is negatively oriented: smaller is better.
//!
//! Definitions used here:
//! - log score `-log f(y)` from the Rao-Blackwellized mixture;
//! - CRPS in energy form `E|X-y| - ½E|X-X'|` over the draws;
//! - quantile score `QS_α(q, y) = 2(1{y ≤ q} - α)(q - y)`;
//! - twCRPS `∫ QS_α(F⁻¹(α), y) (1-α)² dα` by the trapezoid rule on
//!   α = 0.01, 0.02, …, 0.99 with type-7 draw quantiles.

use crate::draws::quantile_sorted;
use crate::error::{Error, Result};
use crate::forecast::PredictiveDensity;
use crate::special::norm_cdf;
use serde::Serialize;
use std::io::Write;

/// Levels of the reported quantile scores.
pub const QS_LEVELS: [f64; 3] = [0.05, 0.10, 0.20];

/// The fixed α grid of the quantile-integral scores.
pub fn alpha_grid() -> impl Iterator<Item = f64> {
    (1..=99).map(|i| i as f64 / 100.0)
}

pub fn quantile_score(q: f64, y: f64, alpha: f64) -> f64 {
    let ind = if y <= q { 1.0 } else { 0.0 };
    2.0 * (ind - alpha) * (q - y)
}

pub fn log_score(pd: &PredictiveDensity, y: f64) -> f64 {
    -pd.log_density(y)
}

/// Energy-form CRPS of an ascending sample; O(M) given the sort.
pub fn crps_sorted(sorted: &[f64], y: f64) -> f64 {
    let m = sorted.len() as f64;
    let abs_dev = sorted.iter().map(|x| (x - y).abs()).sum::<f64>() / m;
    // Σ_{i,j} |x_i - x_j| = 2 Σ_i (2i - M + 1) x_(i)
    let spread = sorted.iter().enumerate().map(|(i, x)| (2.0 * i as f64 - m + 1.0) * x).sum::<f64>() / (m * m);
    abs_dev - spread
}

pub fn crps(pd: &PredictiveDensity, y: f64) -> f64 {
    crps_sorted(&pd.sorted_draws(), y)
}

/// Trapezoid integral of `QS_α · weight(α)` over the α grid.
pub fn quantile_integral_sorted(sorted: &[f64], y: f64, weight: impl Fn(f64) -> f64) -> f64 {
    let vals: Vec<f64> =
        alpha_grid().map(|a| quantile_score(quantile_sorted(sorted, a), y, a) * weight(a)).collect();
    let inner: f64 = vals[1..vals.len() - 1].iter().sum();
    0.01 * (inner + 0.5 * (vals[0] + vals[vals.len() - 1]))
}

/// CRPS as the unweighted quantile-score integral, for cross-checks.
pub fn crps_quantile_form(pd: &PredictiveDensity, y: f64) -> f64 {
    quantile_integral_sorted(&pd.sorted_draws(), y, |_| 1.0)
}

pub fn twcrps_sorted(sorted: &[f64], y: f64) -> f64 {
    quantile_integral_sorted(sorted, y, |a| (1.0 - a) * (1.0 - a))
}

pub fn twcrps(pd: &PredictiveDensity, y: f64) -> f64 {
    twcrps_sorted(&pd.sorted_draws(), y)
}

/// Fraction of predictive draws at or below `y`.
pub fn pit(pd: &PredictiveDensity, y: f64) -> f64 {
    pd.draws.iter().filter(|&&x| x <= y).count() as f64 / pd.draws.len() as f64
}

/// Shortest loss series accepted by [`dm_test`]; shorter comparisons are
/// reported without a p-value.
pub const DM_MIN_LEN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DmResult {
    pub stat: f64,
    pub p_value: f64,
    /// Long-run variance of the loss differential was zero.
    pub degenerate: bool,
}

/// Diebold–Mariano test on `d_t = loss_a - loss_b`. The long-run variance is
/// Newey–West with `horizon - 1` Bartlett lags (plain variance at one step).
/// One-sided p-values are `Φ(stat)`: small when `a` has lower expected loss.
/// A zero long-run variance yields `stat = ±∞` by the sign of the mean
/// differential (0 when the differential is identically zero).
pub fn dm_test(loss_a: &[f64], loss_b: &[f64], horizon: usize, one_sided: bool) -> Result<DmResult> {
    if loss_a.len() != loss_b.len() {
        return Err(Error::Dimension("loss series differ in length".into()));
    }
    let n = loss_a.len();
    if n < DM_MIN_LEN {
        return Err(Error::InsufficientData(format!("Diebold-Mariano test needs 10 losses, got {n}")));
    }
    let d: Vec<f64> = loss_a.iter().zip(loss_b).map(|(a, b)| a - b).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let gamma = |k: usize| (k..n).map(|t| (d[t] - mean) * (d[t - k] - mean)).sum::<f64>() / n as f64;
    let lags = horizon.saturating_sub(1).min(n - 1);
    let mut lrv = gamma(0);
    for k in 1..=lags {
        lrv += 2.0 * (1.0 - k as f64 / (lags + 1) as f64) * gamma(k);
    }
    let scale = mean.abs().max(1.0);
    let degenerate = !(lrv > 1e-28 * scale * scale);
    let stat = if degenerate {
        if mean.abs() <= f64::EPSILON * scale {
            0.0
        } else {
            mean.signum() * f64::INFINITY
        }
    } else {
        mean / (lrv / n as f64).sqrt()
    };
    let p_value = if one_sided { norm_cdf(stat) } else { 2.0 * norm_cdf(-stat.abs()) };
    Ok(DmResult { stat, p_value, degenerate })
}

/// All scores of one forecast against its realization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredForecast {
    pub origin: String,
    pub horizon: usize,
    pub variable: String,
    pub y: f64,
    pub logscore: f64,
    pub crps: f64,
    pub twcrps: f64,
    pub qs: [f64; 3],
    pub pit: f64,
}

pub fn score_forecast(pd: &PredictiveDensity, y: f64) -> ScoredForecast {
    let sorted = pd.sorted_draws();
    ScoredForecast {
        origin: pd.origin.clone(),
        horizon: pd.horizon,
        variable: pd.variable.clone(),
        y,
        logscore: log_score(pd, y),
        crps: crps_sorted(&sorted, y),
        twcrps: twcrps_sorted(&sorted, y),
        qs: QS_LEVELS.map(|a| quantile_score(quantile_sorted(&sorted, a), y, a)),
        pit: pit(pd, y),
    }
}

pub const SCORE_NAMES: [&str; 6] = ["logscore", "crps", "twcrps", "qs05", "qs10", "qs20"];

impl ScoredForecast {
    pub fn losses(&self) -> [f64; 6] {
        [self.logscore, self.crps, self.twcrps, self.qs[0], self.qs[1], self.qs[2]]
    }
}

/// Mean scores of a model, and its comparison against the baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub model: String,
    pub n: usize,
    pub means: [f64; 6],
    /// Baseline minus model for the log score, model over baseline otherwise.
    pub relative: Option<[f64; 6]>,
    /// One-sided tests against the baseline; absent for the baseline itself
    /// and for fewer than [`DM_MIN_LEN`] origins.
    pub dm: Option<[DmResult; 6]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub baseline: String,
    pub horizon: usize,
    pub scores: Vec<(String, Vec<ScoredForecast>)>,
    pub summaries: Vec<ModelSummary>,
}

impl ScoreReport {
    /// Build from per-model scored forecasts aligned by origin. The first
    /// entry is the baseline.
    pub fn new(scores: Vec<(String, Vec<ScoredForecast>)>, horizon: usize) -> Result<Self> {
        let Some((baseline, base)) = scores.first() else {
            return Err(Error::Config("no models to evaluate".into()));
        };
        for (name, s) in &scores {
            if s.len() != base.len() || s.iter().zip(base).any(|(a, b)| a.origin != b.origin) {
                return Err(Error::Dimension(format!("model {name} is not aligned with the baseline origins")));
            }
        }
        let cols = |s: &[ScoredForecast], j: usize| s.iter().map(|f| f.losses()[j]).collect::<Vec<_>>();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let base_means: [f64; 6] = std::array::from_fn(|j| mean(&cols(base, j)));
        let mut summaries = Vec::with_capacity(scores.len());
        for (i, (name, s)) in scores.iter().enumerate() {
            let means: [f64; 6] = std::array::from_fn(|j| mean(&cols(s, j)));
            let (relative, dm) = if i == 0 {
                (None, None)
            } else {
                let rel = std::array::from_fn(|j| if j == 0 { base_means[0] - means[0] } else { means[j] / base_means[j] });
                let dm = if s.len() >= DM_MIN_LEN {
                    let mut dm = [DmResult { stat: 0.0, p_value: 0.5, degenerate: true }; 6];
                    for (j, slot) in dm.iter_mut().enumerate() {
                        *slot = dm_test(&cols(s, j), &cols(base, j), horizon, true)?;
                    }
                    Some(dm)
                } else {
                    None
                };
                (Some(rel), dm)
            };
            summaries.push(ModelSummary { model: name.clone(), n: s.len(), means, relative, dm });
        }
        Ok(Self { baseline: baseline.clone(), horizon, scores, summaries })
    }

    pub fn write_scores_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["model", "origin", "horizon", "variable", "y", "logscore", "crps", "twcrps", "qs05", "qs10", "qs20", "pit"])?;
        for (model, rows) in &self.scores {
            for r in rows {
                let mut rec = vec![model.clone(), r.origin.clone(), r.horizon.to_string(), r.variable.clone(), f(r.y)];
                rec.extend(r.losses().iter().map(|&x| f(x)));
                rec.push(f(r.pit));
                out.write_record(&rec)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["model".to_string(), "n".into()];
        for s in SCORE_NAMES {
            header.extend([format!("{s}_mean"), format!("{s}_rel"), format!("{s}_dm_stat"), format!("{s}_dm_p")]);
        }
        out.write_record(&header)?;
        for m in &self.summaries {
            let mut rec = vec![m.model.clone(), m.n.to_string()];
            for j in 0..6 {
                rec.push(f(m.means[j]));
                rec.push(m.relative.map_or(String::new(), |r| f(r[j])));
                match &m.dm {
                    Some(d) => rec.extend([f(d[j].stat), f(d[j].p_value)]),
                    None => rec.extend([String::new(), String::new()]),
                }
            }
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Text table: baseline levels in the first column; for other models the
    /// log-score difference (baseline minus model, positive favours the
    /// model) and score ratios (below one favours the model), each with its
    /// one-sided Diebold–Mariano p-value in parentheses.
    pub fn to_table(&self) -> String {
        let labels = ["Logscore", "CRPS", "twCRPS", "QS 5%", "QS 10%", "QS 20%"];
        let mut s = format!("{:<10}", "");
        for m in &self.summaries {
            s.push_str(&format!("{:>20}", m.model));
        }
        s.push('\n');
        for (j, label) in labels.iter().enumerate() {
            s.push_str(&format!("{label:<10}"));
            for m in &self.summaries {
                let cell = match (&m.relative, &m.dm) {
                    (Some(r), Some(d)) => format!("{:.4} ({:.3})", r[j], d[j].p_value),
                    (Some(r), None) => format!("{:.4} (n/a)", r[j]),
                    _ => format!("{:.4}", m.means[j]),
                };
                s.push_str(&format!("{cell:>20}"));
            }
            s.push('\n');
        }
        s
    }
}

fn f(x: f64) -> String {
    format!("{x:.10e}")
}
