//! Predictive densities simulated from posterior draws, and the tail-risk
//! functionals computed from them.
//!
//! Each retained draw is propagated forward through the state equations and
//! the observation equation. At every horizon the shock distribution given
//! the simulated past is an exact Skew-Normal / Skew-t; those components form
//! a Rao-Blackwellized mixture used for density evaluation, while the
//! simulated outcomes serve the sample-based scores.

use crate::design::UniDesign;
use crate::draws::{quantile_sorted, ModelKind, PosteriorDraws};
use crate::error::{Error, Result};
use crate::random::{seeded, std_normal, ChainRng};
use crate::skewdist::{ShockConstants, SkewLocScale};
use crate::var_sampler::a_from_free;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForecastConfig {
    pub horizon: usize,
    /// Simulated paths per retained draw.
    pub sims_per_draw: usize,
    pub seed: u64,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self { horizon: 1, sims_per_draw: 1, seed: 0 }
    }
}

impl ForecastConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.sims_per_draw == 0 {
            return Err(Error::Config("horizon and sims_per_draw must be at least 1".into()));
        }
        Ok(())
    }
}

/// Simulated outcomes and mixture components for one origin, horizon and
/// variable. For simulated forecasts `components[i]` generated `draws[i]`;
/// a parametric forecast carries a single component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveDensity {
    pub origin: String,
    pub horizon: usize,
    pub variable: String,
    pub draws: Vec<f64>,
    pub components: Vec<SkewLocScale>,
}

impl PredictiveDensity {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn sorted_draws(&self) -> Vec<f64> {
        let mut s = self.draws.clone();
        s.sort_by(f64::total_cmp);
        s
    }

    /// log of the mixture density at `y`, in log-sum-exp form.
    pub fn log_density(&self, y: f64) -> f64 {
        let lp: Vec<f64> = self.components.iter().map(|c| c.logpdf(y)).collect();
        log_mean_exp(&lp)
    }

    /// Type-7 empirical quantile of the draws.
    pub fn gar_quantile(&self, tau: f64) -> f64 {
        quantile_sorted(&self.sorted_draws(), tau)
    }

    /// Mean of the draws at or below the τ-quantile; the quantile itself if
    /// no draw qualifies.
    pub fn expected_shortfall(&self, tau: f64) -> f64 {
        expected_shortfall_sorted(&self.sorted_draws(), tau)
    }

    /// Fraction of draws below zero.
    pub fn recession_prob(&self) -> f64 {
        self.draws.iter().filter(|&&x| x < 0.0).count() as f64 / self.draws.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.draws.iter().sum::<f64>() / self.draws.len() as f64
    }
}

pub fn expected_shortfall_sorted(sorted: &[f64], tau: f64) -> f64 {
    let q = quantile_sorted(sorted, tau);
    let below = sorted.partition_point(|&x| x <= q);
    if below == 0 {
        q
    } else {
        sorted[..below].iter().sum::<f64>() / below as f64
    }
}

pub fn log_mean_exp(lp: &[f64]) -> f64 {
    let m = lp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + (lp.iter().map(|l| (l - m).exp()).sum::<f64>() / lp.len() as f64).ln()
}

/// Draws as CSV rows `origin,horizon,variable,draw_index,value`.
pub fn write_draws_csv<W: Write>(w: W, pds: &[PredictiveDensity]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["origin", "horizon", "variable", "draw_index", "value"])?;
    for pd in pds {
        for (i, x) in pd.draws.iter().enumerate() {
            out.write_record([&pd.origin, &pd.horizon.to_string(), &pd.variable, &i.to_string(), &format!("{x:.10e}")])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Shock distribution `√h ε` shifted by `mean`.
#[inline]
fn component(consts: &ShockConstants, mean: f64, log_h: f64, lambda: f64) -> SkewLocScale {
    let ls = consts.loc_scale(lambda);
    let sd = (0.5 * log_h).exp();
    SkewLocScale { location: mean + sd * ls.zeta, scale: sd * ls.omega, lambda, nu: consts.nu }
}

#[inline]
fn step<R: Rng + ?Sized>(prev: f64, phi: f64, beta: &[f64], exo: &[f64], sigma2: f64, rng: &mut R) -> f64 {
    let drift: f64 = beta.iter().zip(exo).map(|(b, x)| b * x).sum();
    phi * prev + drift + sigma2.sqrt() * std_normal(rng)
}

/// Predictive densities for horizons `1..=cfg.horizon` of a univariate model
/// estimated on `data` (all rows through the origin). Exogenous columns are
/// held at their last observed value beyond the origin.
pub fn forecast_uni(
    draws: &PosteriorDraws,
    design: &UniDesign,
    data: &DMatrix<f64>,
    cfg: &ForecastConfig,
    origin: &str,
) -> Result<Vec<PredictiveDensity>> {
    cfg.validate()?;
    design.validate()?;
    if draws.meta.kind != ModelKind::Univariate {
        return Err(Error::Config("univariate forecast needs univariate draws".into()));
    }
    if draws.is_empty() {
        return Err(Error::Config("no posterior draws".into()));
    }
    if data.ncols() != 1 + design.n_exo || data.nrows() < design.max_lag() {
        return Err(Error::Dimension("forecast history does not match the design".into()));
    }
    let consts = draws.meta.family.constants()?;
    let m = design.max_lag();
    let hz = cfg.horizon;
    let last = data.rows(data.nrows() - m, m).into_owned();
    let mut buf = DMatrix::zeros(m + hz, data.ncols());
    let n = draws.len() * cfg.sims_per_draw;
    let mut out: Vec<PredictiveDensity> = (1..=hz)
        .map(|h| PredictiveDensity {
            origin: origin.to_string(),
            horizon: h,
            variable: draws.meta.variables.first().cloned().unwrap_or_default(),
            draws: Vec::with_capacity(n),
            components: Vec::with_capacity(n),
        })
        .collect();
    let mut rng: ChainRng = seeded(cfg.seed);
    for d in &draws.draws {
        let eq = &d.equations[0];
        let (Some(&h_last), Some(&l_last)) = (eq.paths.h.last(), eq.paths.lambda.last()) else {
            return Err(Error::Config("posterior draws carry no latent paths".into()));
        };
        for _ in 0..cfg.sims_per_draw {
            buf.rows_mut(0, m).copy_from(&last);
            let (mut lh, mut lam) = (h_last.ln(), l_last);
            for s in 0..hz {
                let t = m + s;
                for j in 1..data.ncols() {
                    buf[(t, j)] = buf[(t - 1, j)];
                }
                let (dv, ds) = design.state_exo_row(&buf, t);
                lh = step(lh, eq.phi_h, &eq.beta_h, &dv, eq.sigma2_eta, &mut rng);
                lam = step(lam, eq.phi_lambda, &eq.beta_lambda, &ds, eq.sigma2_xi, &mut rng);
                let x = design.regressor_row(&buf, t);
                let mean: f64 = x.iter().zip(&d.coef).map(|(a, b)| a * b).sum();
                let c = component(&consts, mean, lh, lam);
                let y = c.sample(&mut rng);
                buf[(t, 0)] = y;
                out[s].draws.push(y);
                out[s].components.push(c);
            }
        }
    }
    Ok(out)
}

/// Predictive densities of every VAR variable for horizons `1..=cfg.horizon`
/// from `levels` (all rows through the origin). Component `i` conditions on
/// the simulated shocks of the variables ordered before it.
pub fn forecast_var(
    draws: &PosteriorDraws,
    levels: &DMatrix<f64>,
    cfg: &ForecastConfig,
    origin: &str,
) -> Result<Vec<PredictiveDensity>> {
    cfg.validate()?;
    if draws.meta.kind != ModelKind::Var {
        return Err(Error::Config("VAR forecast needs VAR draws".into()));
    }
    if draws.is_empty() {
        return Err(Error::Config("no posterior draws".into()));
    }
    let n = draws.meta.variables.len();
    let p = draws.meta.lags;
    let k = n * p + 1;
    if levels.ncols() != n || levels.nrows() < p {
        return Err(Error::Dimension("forecast history does not match the VAR".into()));
    }
    let consts = draws.meta.family.constants()?;
    let hz = cfg.horizon;
    let total = draws.len() * cfg.sims_per_draw;
    let mut out: Vec<PredictiveDensity> = (0..n)
        .flat_map(|i| {
            (1..=hz).map(move |h| (i, h))
        })
        .map(|(i, h)| PredictiveDensity {
            origin: origin.to_string(),
            horizon: h,
            variable: draws.meta.variables[i].clone(),
            draws: Vec::with_capacity(total),
            components: Vec::with_capacity(total),
        })
        .collect();
    let last = levels.rows(levels.nrows() - p, p).into_owned();
    let mut buf = DMatrix::zeros(p + hz, n);
    let mut rng: ChainRng = seeded(cfg.seed);
    for d in &draws.draws {
        if d.equations.iter().any(|e| !e.beta_h.is_empty() || !e.beta_lambda.is_empty()) {
            return Err(Error::Config("VAR forecasting with exogenous state drivers is not supported".into()));
        }
        if d.coef.len() != n * k {
            return Err(Error::Dimension(format!("draw has {} coefficients, VAR needs {}", d.coef.len(), n * k)));
        }
        let pi = DMatrix::from_fn(n, k, |i, c| d.coef[i * k + c]);
        let mut rows = Vec::with_capacity(n);
        let mut it = d.a_free.iter().copied();
        for i in 0..n {
            rows.push((0..i).map(|_| it.next().unwrap_or(0.0)).collect::<Vec<_>>());
        }
        let a_inv = a_from_free(&rows)
            .try_inverse()
            .ok_or_else(|| Error::NotPositiveDefinite("singular A".into()))?;
        for _ in 0..cfg.sims_per_draw {
            buf.rows_mut(0, p).copy_from(&last);
            let mut lh: Vec<f64> = d.equations.iter().map(|e| e.paths.h.last().copied().unwrap_or(1.0).ln()).collect();
            let mut lam: Vec<f64> = d.equations.iter().map(|e| e.paths.lambda.last().copied().unwrap_or(0.0)).collect();
            for s in 0..hz {
                let t = p + s;
                let mut x = DVector::zeros(k);
                x[0] = 1.0;
                for l in 1..=p {
                    for j in 0..n {
                        x[1 + (l - 1) * n + j] = buf[(t - l, j)];
                    }
                }
                let mean = &pi * x;
                let mut e = vec![0.0; n];
                for i in 0..n {
                    let eq = &d.equations[i];
                    lh[i] = step(lh[i], eq.phi_h, &[], &[], eq.sigma2_eta, &mut rng);
                    lam[i] = step(lam[i], eq.phi_lambda, &[], &[], eq.sigma2_xi, &mut rng);
                    // y_i = mean_i + Σ_{j<i} (A⁻¹)_{ij} e_j + e_i
                    let shift: f64 = (0..i).map(|j| a_inv[(i, j)] * e[j]).sum();
                    let c = component(&consts, mean[i] + shift, lh[i], lam[i]);
                    let y = c.sample(&mut rng);
                    e[i] = y - mean[i] - shift;
                    buf[(t, i)] = y;
                    let slot = &mut out[i * hz + s];
                    slot.draws.push(y);
                    slot.components.push(c);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pd(draws: Vec<f64>) -> PredictiveDensity {
        PredictiveDensity { origin: "o".into(), horizon: 1, variable: "y".into(), draws, components: vec![] }
    }

    #[test]
    fn functionals_on_small_sets() {
        let p = pd(vec![3.0, 1.0, 2.0, 4.0]);
        assert_eq!(p.gar_quantile(0.5), 2.5);
        assert_eq!(p.expected_shortfall(0.0), 1.0);
        assert_eq!(p.recession_prob(), 0.0);
        let q = pd(vec![-1.0, 1.0]);
        assert_eq!(q.recession_prob(), 0.5);
    }

    #[test]
    fn es_falls_back_to_quantile() {
        assert_eq!(expected_shortfall_sorted(&[5.0], 0.05), 5.0);
    }

    #[test]
    fn log_mean_exp_matches_direct() {
        let lp = [-1.0f64, -2.0, -3.0];
        let direct = (lp.iter().map(|x| x.exp()).sum::<f64>() / 3.0).ln();
        assert!((log_mean_exp(&lp) - direct).abs() < 1e-15);
        assert!((log_mean_exp(&[-1000.0, -1000.0]) + 1000.0).abs() < 1e-12);
    }
}
