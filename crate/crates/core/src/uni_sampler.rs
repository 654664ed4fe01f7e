//! Gibbs sampler for the univariate time-varying-skewness SV model.
//!
//! Observation: `y_t = x_t π + √h_t ε_t` with ε_t a zero-mean, unit-variance
//! Skew-Normal or Skew-t shock of shape λ_t. Conditional on the mixing
//! variables (v_t, o_t) the shock is Gaussian:
//! `y_t | · ~ N(x_t π + √h_t (ζ_t + ω_t δ_t o_t^{-1/2} v_t), h_t ω_t² (1-δ_t²) / o_t)`,
//! which is the observation weight used by both latent-path updates.
//!
//! Per-iteration order: o (Skew-t only), v, π, σ²_η, σ²_ξ, φ_h, φ_λ, h₀,
//! h path, λ₀, λ path.

use crate::draws::{ChainMeta, Draw, EquationDraw, ModelKind, PathMethod, PosteriorDraws};
use crate::error::{Error, Result};
use crate::pgas::{csmc_ancestor_sampling, mh_path_update, GaussianAr1};
use crate::priors::{InvGammaPrior, NormalPrior, EXO_COEFF_PRIOR, LAMBDA0_PRIOR, PHI_PRIOR, SIGMA2_PRIOR};
use crate::random::{gamma_rate, inverse_gamma, mvn_from_precision, seeded, std_normal, truncated_normal_positive, ChainRng};
use crate::skewdist::{ShockConstants, ShockFamily};
use crate::special::LN_SQRT_2PI;
use crate::states::{LatentPaths, StateEqSpec};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Current values of one equation's state-equation parameters and paths.
pub type EquationState = EquationDraw;

/// Model definition. `vol_eq` / `shape_eq` supply starting values for φ, σ²
/// and the exogenous coefficients, plus the exogenous series themselves.
#[derive(Debug, Clone)]
pub struct UniModelSpec {
    pub regressors: DMatrix<f64>,
    pub regressor_names: Vec<String>,
    pub family: ShockFamily,
    pub vol_eq: StateEqSpec,
    pub shape_eq: StateEqSpec,
}

impl UniModelSpec {
    pub fn n_obs(&self) -> usize {
        self.regressors.nrows()
    }

    pub fn n_coef(&self) -> usize {
        self.regressors.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let (t, p) = self.regressors.shape();
        if t < p + 10 {
            return Err(Error::InsufficientData(format!(
                "{t} observations for {p} regressors (need at least {})",
                p + 10
            )));
        }
        self.family.constants()?;
        for (name, eq) in [("volatility", &self.vol_eq), ("shape", &self.shape_eq)] {
            eq.validate()?;
            if let Some(x) = &eq.exo_series {
                if x.nrows() != t {
                    return Err(Error::Dimension(format!(
                        "{name} exogenous series has {} rows, sample has {t}",
                        x.nrows()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Priors on the state-equation blocks shared by the univariate and VAR samplers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePriors {
    pub phi_h: NormalPrior,
    pub phi_lambda: NormalPrior,
    pub beta_h: NormalPrior,
    pub beta_lambda: NormalPrior,
    pub sigma2_eta: InvGammaPrior,
    pub sigma2_xi: InvGammaPrior,
    pub log_h0: NormalPrior,
    pub lambda0: NormalPrior,
}

impl StatePriors {
    /// Default hyperparameters with the log h₀ prior centred at `log_h0_center`.
    pub fn with_log_h0_center(log_h0_center: f64) -> Self {
        Self {
            phi_h: PHI_PRIOR,
            phi_lambda: PHI_PRIOR,
            beta_h: EXO_COEFF_PRIOR,
            beta_lambda: EXO_COEFF_PRIOR,
            sigma2_eta: SIGMA2_PRIOR,
            sigma2_xi: SIGMA2_PRIOR,
            log_h0: NormalPrior::new(log_h0_center, crate::priors::LOG_H0_PRIOR_VAR),
            lambda0: LAMBDA0_PRIOR,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let normals = [
            ("phi_h", self.phi_h),
            ("phi_lambda", self.phi_lambda),
            ("beta_h", self.beta_h),
            ("beta_lambda", self.beta_lambda),
            ("log_h0", self.log_h0),
            ("lambda0", self.lambda0),
        ];
        for (name, p) in normals {
            if !(p.var > 0.0) || !p.mean.is_finite() {
                return Err(Error::Config(format!("prior {name} needs finite mean and positive variance")));
            }
        }
        for (name, p) in [("sigma2_eta", self.sigma2_eta), ("sigma2_xi", self.sigma2_xi)] {
            if !(p.shape > 0.0 && p.scale > 0.0) {
                return Err(Error::Config(format!("prior {name} needs positive shape and scale")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniPriorSpec {
    pub pi_mean: DVector<f64>,
    pub pi_cov: DMatrix<f64>,
    pub states: StatePriors,
}

/// MCMC settings. `iters` counts every iteration including burn-in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    pub iters: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub particles: usize,
    pub path_method: PathMethod,
    pub seed: u64,
    /// Redraw φ up to 100 times while |φ| ≥ 1, keeping the previous value otherwise.
    #[serde(default)]
    pub enforce_stationarity: bool,
    /// Keep full latent paths in the output (otherwise only the final period).
    #[serde(default = "default_true")]
    pub full_paths: bool,
}

fn default_true() -> bool {
    true
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            iters: 10_000,
            burn_in: 5_000,
            thin: 1,
            particles: 30,
            path_method: PathMethod::Pgas,
            seed: 0,
            enforce_stationarity: false,
            full_paths: true,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iters <= self.burn_in {
            return Err(Error::Config(format!(
                "iters ({}) must exceed burn_in ({})",
                self.iters, self.burn_in
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if self.path_method == PathMethod::Pgas && self.particles < 2 {
            return Err(Error::Config("particle step needs at least 2 particles".into()));
        }
        Ok(())
    }

    pub fn retained(&self) -> usize {
        (self.iters - self.burn_in).div_ceil(self.thin)
    }
}

/// Settings of the latent-state block shared with the VAR sampler.
#[derive(Debug, Clone, Copy)]
pub struct SweepConfig {
    pub particles: usize,
    pub path_method: PathMethod,
    pub enforce_stationarity: bool,
    /// Draw σ²_ξ before σ²_η (VAR ordering).
    pub xi_first: bool,
}

impl From<&McmcConfig> for SweepConfig {
    fn from(c: &McmcConfig) -> Self {
        Self {
            particles: c.particles,
            path_method: c.path_method,
            enforce_stationarity: c.enforce_stationarity,
            xi_first: false,
        }
    }
}

/// Exogenous series of the two state equations of one equation.
#[derive(Debug, Clone, Copy, Default)]
pub struct StateExo<'a> {
    pub vol: Option<&'a DMatrix<f64>>,
    pub shape: Option<&'a DMatrix<f64>>,
}

fn drift(exo: Option<&DMatrix<f64>>, beta: &[f64], len: usize) -> Vec<f64> {
    match exo {
        None => Vec::new(),
        Some(x) => (0..len).map(|t| (0..x.ncols()).map(|j| beta[j] * x[(t, j)]).sum()).collect(),
    }
}

/// Location shift `c_t = ζ_t + ω_t δ_t o_t^{-1/2} v_t` and variance factor
/// `w_t = ω_t² (1-δ_t²) / o_t` of the Gaussian conditional observation
/// density `N(√h_t c_t, h_t w_t)`.
#[inline]
fn obs_terms(consts: &ShockConstants, lambda: f64, v: f64, o: f64) -> (f64, f64) {
    let ls = consts.loc_scale(lambda);
    let c = ls.zeta + ls.omega * ls.delta * v / o.sqrt();
    let w = ls.omega * ls.omega * (1.0 - ls.delta * ls.delta) / o;
    (c, w)
}

/// Step: v_t ~ TN_{[0,∞)}(δ_t √o_t (e_t/√h_t - ζ_t) / ω_t, 1 - δ_t²),
/// with `resid` holding e_t = y_t - x_t π.
pub fn draw_mixing_v<R: Rng + ?Sized>(resid: &[f64], paths: &LatentPaths, consts: &ShockConstants, rng: &mut R) -> Vec<f64> {
    (0..resid.len())
        .map(|t| {
            let ls = consts.loc_scale(paths.lambda[t]);
            let mean = ls.delta * paths.o[t].sqrt() * (resid[t] / paths.h[t].sqrt() - ls.zeta) / ls.omega;
            truncated_normal_positive(rng, mean, 1.0 - ls.delta * ls.delta)
        })
        .collect()
}

/// Mean of the v_t full conditional; exposed for testing.
pub fn mixing_v_mean(resid: f64, h: f64, lambda: f64, o: f64, consts: &ShockConstants) -> f64 {
    let ls = consts.loc_scale(lambda);
    ls.delta * o.sqrt() * (resid / h.sqrt() - ls.zeta) / ls.omega
}

/// Step (Skew-t): independence MH for each o_t.
///
/// With `r_t = e_t/√h_t - ζ_t`, the proposal is
/// `Gamma((ν+1)/2, rate = ½[ν + r_t² / (ω_t²(1-δ_t²))])` and the acceptance
/// probability `min(1, exp(c_t (√o* - √o)))`, `c_t = r_t δ_t v_t / (ω_t (1-δ_t²))`.
/// Returns the updated vector and the number of accepted moves.
pub fn draw_mixing_o<R: Rng + ?Sized>(
    resid: &[f64],
    paths: &LatentPaths,
    consts: &ShockConstants,
    rng: &mut R,
) -> (Vec<f64>, usize) {
    let Some(nu) = consts.nu else { return (vec![1.0; resid.len()], 0) };
    let mut accepted = 0;
    let o = (0..resid.len())
        .map(|t| {
            let ls = consts.loc_scale(paths.lambda[t]);
            let one_m_d2 = 1.0 - ls.delta * ls.delta;
            let r = resid[t] / paths.h[t].sqrt() - ls.zeta;
            let rate = 0.5 * (nu + r * r / (ls.omega * ls.omega * one_m_d2));
            let proposal = gamma_rate(rng, 0.5 * (nu + 1.0), rate);
            let c = r * ls.delta * paths.v[t] / (ls.omega * one_m_d2);
            let log_alpha = c * (proposal.sqrt() - paths.o[t].sqrt());
            if log_alpha >= 0.0 || rng.random::<f64>().ln() < log_alpha {
                accepted += 1;
                proposal
            } else {
                paths.o[t]
            }
        })
        .collect();
    (o, accepted)
}

/// Step: π | · ~ N with GLS moments on the skew-adjusted target
/// `ỹ_t = y_t - √h_t c_t` and variances `σ²_t = h_t w_t`.
/// `prior_prec` is Σ_π⁻¹ and `prior_b` is Σ_π⁻¹ μ_π.
pub fn draw_pi<R: Rng + ?Sized>(
    y: &[f64],
    x: &DMatrix<f64>,
    paths: &LatentPaths,
    consts: &ShockConstants,
    prior_prec: &DMatrix<f64>,
    prior_b: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let p = x.ncols();
    let mut prec = prior_prec.clone();
    let mut b = prior_b.clone();
    for t in 0..y.len() {
        let (c, w) = obs_terms(consts, paths.lambda[t], paths.v[t], paths.o[t]);
        let h = paths.h[t];
        let y_tilde = y[t] - h.sqrt() * c;
        let inv_var = 1.0 / (h * w);
        for i in 0..p {
            let xi = x[(t, i)] * inv_var;
            b[i] += xi * y_tilde;
            for j in 0..=i {
                prec[(i, j)] += xi * x[(t, j)];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            prec[(j, i)] = prec[(i, j)];
        }
    }
    Ok(mvn_from_precision(rng, prec, &b)?.0)
}

/// Step: (φ, β) | path ~ N from the regression of s_t on [s_{t-1}, x_t]
/// over t = 1..T (s_0 included), with known innovation variance.
pub fn draw_phi<R: Rng + ?Sized>(
    path: &[f64],
    s0: f64,
    exo: Option<&DMatrix<f64>>,
    sigma2: f64,
    phi_prior: NormalPrior,
    beta_prior: NormalPrior,
    rng: &mut R,
) -> Result<(f64, Vec<f64>)> {
    let k = 1 + exo.map_or(0, |x| x.ncols());
    let mut prec = DMatrix::zeros(k, k);
    let mut b = DVector::zeros(k);
    prec[(0, 0)] = 1.0 / phi_prior.var;
    b[0] = phi_prior.mean / phi_prior.var;
    for j in 1..k {
        prec[(j, j)] = 1.0 / beta_prior.var;
        b[j] = beta_prior.mean / beta_prior.var;
    }
    let mut row = vec![0.0; k];
    for t in 0..path.len() {
        row[0] = if t == 0 { s0 } else { path[t - 1] };
        if let Some(x) = exo {
            for j in 1..k {
                row[j] = x[(t, j - 1)];
            }
        }
        for i in 0..k {
            b[i] += row[i] * path[t] / sigma2;
            for j in 0..k {
                prec[(i, j)] += row[i] * row[j] / sigma2;
            }
        }
    }
    let draw = mvn_from_precision(rng, prec, &b)?.0;
    Ok((draw[0], draw.iter().skip(1).copied().collect()))
}

/// Step: σ² | · ~ IG(a + T/2, b + ½ Σ_t (s_t - φ s_{t-1} - d_t)²).
pub fn draw_sigma2<R: Rng + ?Sized>(path: &[f64], s0: f64, phi: f64, drift: &[f64], prior: InvGammaPrior, rng: &mut R) -> f64 {
    let (shape, scale) = sigma2_posterior(path, s0, phi, drift, prior);
    inverse_gamma(rng, shape, scale)
}

/// Shape and scale of the σ² full conditional.
pub fn sigma2_posterior(path: &[f64], s0: f64, phi: f64, drift: &[f64], prior: InvGammaPrior) -> (f64, f64) {
    let mut ssr = 0.0;
    let mut prev = s0;
    for (t, &s) in path.iter().enumerate() {
        let d = if drift.is_empty() { 0.0 } else { drift[t] };
        let e = s - phi * prev - d;
        ssr += e * e;
        prev = s;
    }
    (prior.shape + 0.5 * path.len() as f64, prior.scale + 0.5 * ssr)
}

/// Moments of the initial-state full conditional given `s_1 = φ s_0 + b_1 + e`.
pub fn initial_state_posterior(s1: f64, phi: f64, b1: f64, sigma2: f64, prior: NormalPrior) -> (f64, f64) {
    let prec = 1.0 / prior.var + phi * phi / sigma2;
    let var = 1.0 / prec;
    (var * (prior.mean / prior.var + phi * (s1 - b1) / sigma2), var)
}

/// Step: h₀ or λ₀. With φ = 0 the transition carries no information and the
/// draw is from the prior.
pub fn draw_initial_state<R: Rng + ?Sized>(s1: f64, phi: f64, b1: f64, sigma2: f64, prior: NormalPrior, rng: &mut R) -> f64 {
    let (mean, var) = initial_state_posterior(s1, phi, b1, sigma2, prior);
    mean + var.sqrt() * std_normal(rng)
}

fn draw_phi_checked<R: Rng + ?Sized>(
    path: &[f64],
    s0: f64,
    exo: Option<&DMatrix<f64>>,
    sigma2: f64,
    priors: (NormalPrior, NormalPrior),
    current: (f64, &[f64]),
    enforce: bool,
    rng: &mut R,
) -> Result<(f64, Vec<f64>)> {
    if !enforce {
        return draw_phi(path, s0, exo, sigma2, priors.0, priors.1, rng);
    }
    for _ in 0..100 {
        let d = draw_phi(path, s0, exo, sigma2, priors.0, priors.1, rng)?;
        if d.0.abs() < 1.0 {
            return Ok(d);
        }
    }
    Ok((current.0, current.1.to_vec()))
}

/// Steps σ²_η, σ²_ξ, φ_h, φ_λ, h₀, h path, λ₀, λ path for one equation whose
/// observation residual (after removing the conditional mean) is `resid`.
pub fn latent_sweep<R: Rng + ?Sized>(
    resid: &[f64],
    eq: &mut EquationState,
    exo: StateExo<'_>,
    priors: &StatePriors,
    consts: &ShockConstants,
    cfg: SweepConfig,
    rng: &mut R,
) -> Result<()> {
    let n = resid.len();
    let log_h = eq.paths.log_h();

    // variances
    let d_h = drift(exo.vol, &eq.beta_h, n);
    let d_l = drift(exo.shape, &eq.beta_lambda, n);
    let draw_eta = |rng: &mut R| draw_sigma2(&log_h, eq.paths.log_h0, eq.phi_h, &d_h, priors.sigma2_eta, rng);
    let draw_xi = |rng: &mut R| draw_sigma2(&eq.paths.lambda, eq.paths.lambda0, eq.phi_lambda, &d_l, priors.sigma2_xi, rng);
    let (s_eta, s_xi) = if cfg.xi_first {
        let xi = draw_xi(rng);
        (draw_eta(rng), xi)
    } else {
        let eta = draw_eta(rng);
        (eta, draw_xi(rng))
    };
    eq.sigma2_eta = s_eta;
    eq.sigma2_xi = s_xi;

    // autoregressive and exogenous coefficients
    let (phi_h, beta_h) = draw_phi_checked(
        &log_h,
        eq.paths.log_h0,
        exo.vol,
        eq.sigma2_eta,
        (priors.phi_h, priors.beta_h),
        (eq.phi_h, &eq.beta_h),
        cfg.enforce_stationarity,
        rng,
    )?;
    eq.phi_h = phi_h;
    eq.beta_h = beta_h;
    let (phi_l, beta_l) = draw_phi_checked(
        &eq.paths.lambda,
        eq.paths.lambda0,
        exo.shape,
        eq.sigma2_xi,
        (priors.phi_lambda, priors.beta_lambda),
        (eq.phi_lambda, &eq.beta_lambda),
        cfg.enforce_stationarity,
        rng,
    )?;
    eq.phi_lambda = phi_l;
    eq.beta_lambda = beta_l;
    let d_h = drift(exo.vol, &eq.beta_h, n);
    let d_l = drift(exo.shape, &eq.beta_lambda, n);
    let first = |d: &[f64]| d.first().copied().unwrap_or(0.0);

    // volatility block
    if n > 0 {
        eq.paths.log_h0 = draw_initial_state(log_h[0], eq.phi_h, first(&d_h), eq.sigma2_eta, priors.log_h0, rng);
    } else {
        eq.paths.log_h0 = priors.log_h0.mean + priors.log_h0.var.sqrt() * std_normal(rng);
    }
    let terms: Vec<(f64, f64)> =
        (0..n).map(|t| obs_terms(consts, eq.paths.lambda[t], eq.paths.v[t], eq.paths.o[t])).collect();
    let h_obs = |t: usize, s: f64| {
        let (c, w) = terms[t];
        let e = resid[t] - (0.5 * s).exp() * c;
        -LN_SQRT_2PI - 0.5 * (s + w.ln()) - 0.5 * e * e / (s.exp() * w)
    };
    let vol_model = GaussianAr1 {
        s0: eq.paths.log_h0,
        phi: eq.phi_h,
        sigma2: eq.sigma2_eta,
        drift: &d_h,
        obs: h_obs,
        len: n,
    };
    let new_log_h = update_path(&vol_model, log_h, cfg, rng)?;
    eq.paths.h = new_log_h.iter().map(|s| s.exp()).collect();

    // shape block
    if n > 0 {
        eq.paths.lambda0 =
            draw_initial_state(eq.paths.lambda[0], eq.phi_lambda, first(&d_l), eq.sigma2_xi, priors.lambda0, rng);
    } else {
        eq.paths.lambda0 = priors.lambda0.mean + priors.lambda0.var.sqrt() * std_normal(rng);
    }
    let paths = &eq.paths;
    let l_obs = |t: usize, lambda: f64| {
        let (c, w) = obs_terms(consts, lambda, paths.v[t], paths.o[t]);
        let h = paths.h[t];
        let var = h * w;
        let e = resid[t] - h.sqrt() * c;
        -LN_SQRT_2PI - 0.5 * var.ln() - 0.5 * e * e / var
    };
    let shape_model = GaussianAr1 {
        s0: paths.lambda0,
        phi: eq.phi_lambda,
        sigma2: eq.sigma2_xi,
        drift: &d_l,
        obs: l_obs,
        len: n,
    };
    let new_lambda = update_path(&shape_model, paths.lambda.clone(), cfg, rng)?;
    eq.paths.lambda = new_lambda;
    Ok(())
}

fn update_path<F: Fn(usize, f64) -> f64, R: Rng + ?Sized>(
    model: &GaussianAr1<'_, F>,
    mut current: Vec<f64>,
    cfg: SweepConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    match cfg.path_method {
        PathMethod::Pgas => csmc_ancestor_sampling(model, &current, cfg.particles, rng),
        PathMethod::Mh => {
            mh_path_update(model, &mut current, rng);
            Ok(current)
        }
    }
}

/// Full state of the univariate chain.
#[derive(Debug, Clone, PartialEq)]
pub struct UniState {
    pub pi: DVector<f64>,
    pub eq: EquationState,
}

impl UniState {
    fn to_draw(&self, full_paths: bool) -> Draw {
        let mut eq = self.eq.clone();
        if !full_paths {
            truncate_to_last(&mut eq.paths);
        }
        Draw { coef: self.pi.iter().copied().collect(), a_free: Vec::new(), equations: vec![eq] }
    }
}

pub(crate) fn truncate_to_last(p: &mut LatentPaths) {
    let keep = |v: &mut Vec<f64>| {
        if let Some(&last) = v.last() {
            *v = vec![last];
        }
    };
    keep(&mut p.h);
    keep(&mut p.lambda);
    keep(&mut p.v);
    keep(&mut p.o);
}

/// The univariate Gibbs kernel with its fixed inputs precomputed.
pub struct UniSampler<'a> {
    model: &'a UniModelSpec,
    prior: &'a UniPriorSpec,
    prior_prec: DMatrix<f64>,
    prior_b: DVector<f64>,
    consts: ShockConstants,
    cfg: SweepConfig,
}

impl<'a> UniSampler<'a> {
    pub fn new(model: &'a UniModelSpec, prior: &'a UniPriorSpec, cfg: SweepConfig) -> Result<Self> {
        model.validate()?;
        prior.states.validate()?;
        let p = model.n_coef();
        if prior.pi_mean.len() != p || prior.pi_cov.shape() != (p, p) {
            return Err(Error::Dimension(format!("π prior must have dimension {p}")));
        }
        let prior_prec = prior
            .pi_cov
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Config("π prior covariance is singular".into()))?;
        let prior_b = &prior_prec * &prior.pi_mean;
        Ok(Self { model, prior, prior_prec, prior_b, consts: model.family.constants()?, cfg })
    }

    pub fn constants(&self) -> &ShockConstants {
        &self.consts
    }

    /// Starting point: π by OLS (prior mean if that fails), flat paths at
    /// the prior centres, φ/σ²/β from the model's state equations.
    pub fn initial_state(&self, y: &[f64]) -> UniState {
        let yv = DVector::from_column_slice(y);
        let pi = crate::linalg::ols(&self.model.regressors, &yv)
            .map(|(b, _)| b)
            .unwrap_or_else(|_| self.prior.pi_mean.clone());
        let paths = LatentPaths::constant(y.len(), self.prior.states.log_h0.mean, self.prior.states.lambda0.mean);
        UniState {
            pi,
            eq: EquationState {
                phi_h: self.model.vol_eq.phi,
                phi_lambda: self.model.shape_eq.phi,
                beta_h: self.model.vol_eq.exo_coeffs.clone(),
                beta_lambda: self.model.shape_eq.exo_coeffs.clone(),
                sigma2_eta: self.model.vol_eq.sigma2,
                sigma2_xi: self.model.shape_eq.sigma2,
                paths,
            },
        }
    }

    fn exo(&self) -> StateExo<'a> {
        StateExo { vol: self.model.vol_eq.exo_series.as_ref(), shape: self.model.shape_eq.exo_series.as_ref() }
    }

    /// One full Gibbs iteration.
    pub fn sweep<R: Rng + ?Sized>(&self, y: &[f64], state: &mut UniState, rng: &mut R) -> Result<()> {
        let x = &self.model.regressors;
        let residuals = |pi: &DVector<f64>| -> Vec<f64> {
            let fitted = x * pi;
            y.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect()
        };
        let resid = residuals(&state.pi);
        if self.consts.nu.is_some() {
            state.eq.paths.o = draw_mixing_o(&resid, &state.eq.paths, &self.consts, rng).0;
        }
        state.eq.paths.v = draw_mixing_v(&resid, &state.eq.paths, &self.consts, rng);
        state.pi = draw_pi(y, x, &state.eq.paths, &self.consts, &self.prior_prec, &self.prior_b, rng)?;
        let resid = residuals(&state.pi);
        latent_sweep(&resid, &mut state.eq, self.exo(), &self.prior.states, &self.consts, self.cfg, rng)
    }

    /// Draw parameters and latent variables from the prior.
    pub fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<UniState> {
        let p = self.model.n_coef();
        let z = DVector::from_fn(p, |_, _| std_normal(rng));
        let chol = self
            .prior
            .pi_cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("π prior covariance".into()))?;
        let pi = &self.prior.pi_mean + chol.l() * z;
        let exo = self.exo();
        let eq = sample_equation_prior(self.model.n_obs(), exo, &self.prior.states, &self.consts, rng);
        Ok(UniState { pi, eq })
    }

    /// Draw y given parameters and all latent variables.
    pub fn simulate_y<R: Rng + ?Sized>(&self, state: &UniState, rng: &mut R) -> Vec<f64> {
        let mean = &self.model.regressors * &state.pi;
        let shocks = simulate_scaled_shocks(&state.eq.paths, &self.consts, rng);
        mean.iter().zip(shocks).map(|(m, e)| m + e).collect()
    }
}

/// Latent draws from the prior for one equation of length `n`.
pub fn sample_equation_prior<R: Rng + ?Sized>(
    n: usize,
    exo: StateExo<'_>,
    priors: &StatePriors,
    consts: &ShockConstants,
    rng: &mut R,
) -> EquationState {
    let normal = |p: NormalPrior, rng: &mut R| p.mean + p.var.sqrt() * std_normal(rng);
    let phi_h = normal(priors.phi_h, rng);
    let phi_lambda = normal(priors.phi_lambda, rng);
    let beta_h: Vec<f64> = (0..exo.vol.map_or(0, |x| x.ncols())).map(|_| normal(priors.beta_h, rng)).collect();
    let beta_lambda: Vec<f64> =
        (0..exo.shape.map_or(0, |x| x.ncols())).map(|_| normal(priors.beta_lambda, rng)).collect();
    let sigma2_eta = inverse_gamma(rng, priors.sigma2_eta.shape, priors.sigma2_eta.scale);
    let sigma2_xi = inverse_gamma(rng, priors.sigma2_xi.shape, priors.sigma2_xi.scale);
    let log_h0 = normal(priors.log_h0, rng);
    let lambda0 = normal(priors.lambda0, rng);
    let d_h = drift(exo.vol, &beta_h, n);
    let d_l = drift(exo.shape, &beta_lambda, n);
    let mut h = Vec::with_capacity(n);
    let mut lambda = Vec::with_capacity(n);
    let (mut s, mut l) = (log_h0, lambda0);
    for t in 0..n {
        s = phi_h * s + d_h.get(t).copied().unwrap_or(0.0) + sigma2_eta.sqrt() * std_normal(rng);
        l = phi_lambda * l + d_l.get(t).copied().unwrap_or(0.0) + sigma2_xi.sqrt() * std_normal(rng);
        h.push(s.exp());
        lambda.push(l);
    }
    let v = (0..n).map(|_| truncated_normal_positive(rng, 0.0, 1.0)).collect();
    let o = match consts.nu {
        None => vec![1.0; n],
        Some(nu) => (0..n).map(|_| gamma_rate(rng, 0.5 * nu, 0.5 * nu)).collect(),
    };
    EquationState {
        phi_h,
        phi_lambda,
        beta_h,
        beta_lambda,
        sigma2_eta,
        sigma2_xi,
        paths: LatentPaths { h, log_h0, lambda, lambda0, v, o },
    }
}

/// `√h_t ε_t` given the mixing variables, with a fresh Gaussian component.
pub fn simulate_scaled_shocks<R: Rng + ?Sized>(paths: &LatentPaths, consts: &ShockConstants, rng: &mut R) -> Vec<f64> {
    (0..paths.len())
        .map(|t| {
            let (c, w) = obs_terms(consts, paths.lambda[t], paths.v[t], paths.o[t]);
            paths.h[t].sqrt() * (c + w.sqrt() * std_normal(rng))
        })
        .collect()
}

/// Run one chain and keep every `thin`-th post-burn-in iteration.
pub fn run_chain(model: &UniModelSpec, prior: &UniPriorSpec, y: &[f64], mcmc: &McmcConfig) -> Result<PosteriorDraws> {
    mcmc.validate()?;
    if y.len() != model.n_obs() {
        return Err(Error::Dimension(format!(
            "{} observations for a design with {} rows",
            y.len(),
            model.n_obs()
        )));
    }
    let sampler = UniSampler::new(model, prior, SweepConfig::from(mcmc))?;
    let mut rng: ChainRng = seeded(mcmc.seed);
    let mut state = sampler.initial_state(y);
    let mut draws = Vec::with_capacity(mcmc.retained());
    for m in 0..mcmc.iters {
        sampler.sweep(y, &mut state, &mut rng).map_err(|e| e.at_iteration(m))?;
        if m >= mcmc.burn_in && (m - mcmc.burn_in) % mcmc.thin == 0 {
            draws.push(state.to_draw(mcmc.full_paths));
        }
    }
    Ok(PosteriorDraws {
        meta: ChainMeta {
            kind: ModelKind::Univariate,
            family: model.family,
            seed: mcmc.seed,
            iters: mcmc.iters,
            burn_in: mcmc.burn_in,
            thin: mcmc.thin,
            particles: mcmc.particles,
            path_method: mcmc.path_method,
            variables: vec!["y".into()],
            regressors: model.regressor_names.clone(),
            lags: 0,
            full_paths: mcmc.full_paths,
        },
        draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_2_PI;

    fn sn() -> ShockConstants {
        ShockFamily::SkewNormal.constants().unwrap()
    }

    #[test]
    fn v_mean_at_zero_residual() {
        // y - xπ = 0 gives m = -δζ/ω (times √o); see the module notes
        let c = sn();
        let ls = c.loc_scale(1.5);
        let m = mixing_v_mean(0.0, 2.0, 1.5, 1.0, &c);
        assert!((m + ls.delta * ls.zeta / ls.omega).abs() < 1e-15);
        // residual exactly √h ζ gives mean zero
        assert!(mixing_v_mean(2f64.sqrt() * ls.zeta, 2.0, 1.5, 1.0, &c).abs() < 1e-15);
    }

    #[test]
    fn v_half_normal_at_zero_shape() {
        let mut rng = seeded(4);
        let paths = LatentPaths::constant(1_000_000, 0.0, 0.0);
        let resid = vec![0.7; paths.len()];
        let v = draw_mixing_v(&resid, &paths, &sn(), &mut rng);
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let se = ((1.0 - FRAC_2_PI) / n).sqrt();
        assert!((m - FRAC_2_PI.sqrt()).abs() < 3.0 * se);
    }

    #[test]
    fn sigma2_posterior_hand_update() {
        let prior = InvGammaPrior::new(5.0, 0.16);
        let path = vec![0.0; 10];
        assert_eq!(sigma2_posterior(&path, 0.0, 0.9, &[], prior), (10.0, 0.16));
        // residual sum of squares 2 over T = 10
        let mut p = vec![0.0; 10];
        p[3] = 1.0;
        // residuals: t=3 → 1, t=4 → -φ = -1 (φ = 1)
        let (a, b) = sigma2_posterior(&p, 0.0, 1.0, &[], prior);
        assert_eq!(a, 10.0);
        assert!((b - 1.16).abs() < 1e-15);
    }

    #[test]
    fn initial_state_examples() {
        let prior = NormalPrior::new(0.4, 0.3);
        let (m, _) = initial_state_posterior(1.0, 1.0, 0.0, 0.3, prior);
        assert!((m - 0.7).abs() < 1e-15);
        let (m, v) = initial_state_posterior(5.0, 0.9, 0.0, 0.1, NormalPrior::new(0.2, 1e-14));
        assert!((m - 0.2).abs() < 1e-9 && v < 1e-13);
        let (m, _) = initial_state_posterior(0.9 * 0.2, 0.9, 0.0, 0.1, NormalPrior::new(0.2, 1.0));
        assert!((m - 0.2).abs() < 1e-15);
        let (m, v) = initial_state_posterior(3.0, 0.0, 0.0, 0.1, NormalPrior::new(0.2, 1.0));
        assert_eq!((m, v), (0.2, 1.0));
    }

    #[test]
    fn pi_single_observation_hand_update() {
        // λ = 0, h = 1, v irrelevant: ỹ = y, σ² = 1; prior N(0, 1); posterior N(1, 0.5)
        let mut rng = seeded(6);
        let paths = LatentPaths::constant(1, 0.0, 0.0);
        let x = DMatrix::from_element(1, 1, 1.0);
        let prec = DMatrix::from_element(1, 1, 1.0);
        let b = DVector::from_element(1, 0.0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| draw_pi(&[2.0], &x, &paths, &sn(), &prec, &b, &mut rng).unwrap()[0])
            .collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|a| (a - m).powi(2)).sum::<f64>() / n as f64;
        assert!((m - 1.0).abs() < 0.005);
        assert!((v - 0.5).abs() < 0.005);
    }

    #[test]
    fn o_proposal_accepted_when_v_zero() {
        let c = ShockFamily::SkewT { nu: 5.0 }.constants().unwrap();
        let mut paths = LatentPaths::constant(50, 0.0, 1.0);
        paths.v = vec![0.0; 50];
        let mut rng = seeded(3);
        let (_, acc) = draw_mixing_o(&vec![0.3; 50], &paths, &c, &mut rng);
        assert_eq!(acc, 50);
    }

    #[test]
    fn mcmc_config_rejects_short_runs() {
        let c = McmcConfig { iters: 10, burn_in: 10, ..Default::default() };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
}
