//! Gibbs sampler for the VAR with per-equation stochastic volatility and
//! time-varying skewness.
//!
//! `y_t = Π X_t + A⁻¹ H_t^{1/2} ε_t`, `X_t = [1, y_{t-1}, …, y_{t-p}]`, with A
//! lower triangular with unit diagonal. Given A, the orthogonalized residuals
//! `e_t = A (y_t - Π X_t)` decouple into N univariate TVSSV observation
//! equations with zero conditional mean, so every per-equation block reuses
//! the univariate conditionals.
//!
//! Iteration order: o (Skew-t), v, Π, A, then per equation σ²_ξ, σ²_η, φ_h,
//! φ_λ, h₀, h path, λ₀, λ path.

use crate::draws::{ChainMeta, Draw, ModelKind, PosteriorDraws};
use crate::error::{Error, Result};
use crate::priors::NormalPrior;
use crate::random::{mvn_from_precision, seeded, std_normal, ChainRng};
use crate::skewdist::{ShockConstants, ShockFamily};
use crate::states::{LatentPaths, StateEqSpec};
use crate::uni_sampler::{
    draw_mixing_o, draw_mixing_v, latent_sweep, sample_equation_prior, simulate_scaled_shocks, truncate_to_last,
    EquationState, McmcConfig, StateExo, StatePriors, SweepConfig,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct VarModelSpec {
    pub names: Vec<String>,
    pub lags: usize,
    pub family: ShockFamily,
    /// Per-equation state equations (starting values plus exogenous series
    /// aligned with the effective sample).
    pub vol_eqs: Vec<StateEqSpec>,
    pub shape_eqs: Vec<StateEqSpec>,
}

impl VarModelSpec {
    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    /// Regressors per equation, `N p + 1`.
    pub fn n_coef(&self) -> usize {
        self.n_vars() * self.lags + 1
    }

    pub fn regressor_names(&self) -> Vec<String> {
        let mut out = vec!["const".to_string()];
        for l in 1..=self.lags {
            for n in &self.names {
                out.push(format!("{n}(-{l})"));
            }
        }
        out
    }

    pub fn validate(&self, total_obs: usize) -> Result<()> {
        let n = self.n_vars();
        if n < 1 || self.lags < 1 {
            return Err(Error::Config("VAR needs at least one variable and one lag".into()));
        }
        if self.vol_eqs.len() != n || self.shape_eqs.len() != n {
            return Err(Error::Dimension(format!("{n} variables need {n} volatility and shape equations")));
        }
        if total_obs <= n * self.lags + 1 + self.lags {
            return Err(Error::InsufficientData(format!(
                "{total_obs} observations for a VAR({}) in {n} variables",
                self.lags
            )));
        }
        self.family.constants()?;
        let t_eff = total_obs - self.lags;
        for eq in self.vol_eqs.iter().chain(&self.shape_eqs) {
            eq.validate()?;
            if let Some(x) = &eq.exo_series {
                if x.nrows() != t_eff {
                    return Err(Error::Dimension(format!(
                        "exogenous series has {} rows, effective sample has {t_eff}",
                        x.nrows()
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarPriorSpec {
    /// Prior mean of vec(Π), equation-major.
    pub pi_mean: DVector<f64>,
    /// Prior covariance of vec(Π), same layout.
    pub pi_cov: DMatrix<f64>,
    pub a: NormalPrior,
    pub states: Vec<StatePriors>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarState {
    /// N × (Np+1).
    pub pi: DMatrix<f64>,
    /// Row i holds a_{i,0..i}.
    pub a_free: Vec<Vec<f64>>,
    pub eqs: Vec<EquationState>,
}

impl VarState {
    /// Lower-unitriangular A.
    pub fn a_matrix(&self) -> DMatrix<f64> {
        a_from_free(&self.a_free)
    }

    fn to_draw(&self, full_paths: bool) -> Draw {
        let mut eqs = self.eqs.clone();
        if !full_paths {
            for e in &mut eqs {
                truncate_to_last(&mut e.paths);
            }
        }
        Draw {
            coef: self.pi.transpose().iter().copied().collect(),
            a_free: self.a_free.iter().flatten().copied().collect(),
            equations: eqs,
        }
    }
}

pub fn a_from_free(a_free: &[Vec<f64>]) -> DMatrix<f64> {
    let n = a_free.len();
    let mut a = DMatrix::identity(n, n);
    for (i, row) in a_free.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            a[(i, j)] = v;
        }
    }
    a
}

/// Effective-sample data: `y` (T × N) and `X` (T × K) with
/// `X_t = [1, y_{t-1}, …, y_{t-p}]`.
#[derive(Debug, Clone)]
pub struct VarData {
    pub y: DMatrix<f64>,
    pub x: DMatrix<f64>,
}

impl VarData {
    pub fn new(levels: &DMatrix<f64>, lags: usize) -> Self {
        let (total, n) = levels.shape();
        let t = total - lags;
        let y = levels.rows(lags, t).into_owned();
        let x = DMatrix::from_fn(t, n * lags + 1, |r, c| {
            if c == 0 {
                1.0
            } else {
                let l = (c - 1) / n + 1;
                let j = (c - 1) % n;
                levels[(lags + r - l, j)]
            }
        });
        Self { y, x }
    }

    pub fn n_obs(&self) -> usize {
        self.y.nrows()
    }
}

/// Conditional mean of the orthogonalized shock of equation `i` at `t`,
/// `m_{i,t} = √h (ζ + ω δ o^{-1/2} v)`, and its variance `h ω² (1-δ²) / o`.
#[inline]
fn shock_moments(consts: &ShockConstants, p: &LatentPaths, t: usize) -> (f64, f64) {
    let ls = consts.loc_scale(p.lambda[t]);
    let h = p.h[t];
    let m = h.sqrt() * (ls.zeta + ls.omega * ls.delta * p.v[t] / p.o[t].sqrt());
    let var = h * ls.omega * ls.omega * (1.0 - ls.delta * ls.delta) / p.o[t];
    (m, var)
}

/// u_t = y_t - Π X_t, as T × N.
pub fn residuals(data: &VarData, pi: &DMatrix<f64>) -> DMatrix<f64> {
    &data.y - &data.x * pi.transpose()
}

/// Step: vec(Π) | · ~ N. With `ỹ_t = y_t - A⁻¹ m_t` and
/// `Σ_t⁻¹ = Aᵀ D_t⁻¹ A` (D_t the diagonal of conditional shock variances),
/// the posterior precision is `V⁻¹ + Σ_t Σ_t⁻¹ ⊗ X_t X_tᵀ` and the
/// precision-weighted mean `V⁻¹ μ + Σ_t (Σ_t⁻¹ ỹ_t) ⊗ X_t`, equation-major.
pub fn draw_pi<R: Rng + ?Sized>(
    data: &VarData,
    state: &VarState,
    consts: &ShockConstants,
    prior_prec: &DMatrix<f64>,
    prior_b: &DVector<f64>,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let n = state.eqs.len();
    let k = data.x.ncols();
    let a = state.a_matrix();
    let a_inv = a
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotPositiveDefinite("unit-triangular A is singular".into()))?;
    let mut prec = prior_prec.clone();
    let mut b = prior_b.clone();
    // Σ_{ij} accumulators of s_ij,t X_t X_tᵀ for i ≥ j
    let mut xx = vec![DMatrix::<f64>::zeros(k, k); n * (n + 1) / 2];
    let mut m = DVector::zeros(n);
    let mut dinv = DVector::zeros(n);
    for t in 0..data.n_obs() {
        for i in 0..n {
            let (mi, vi) = shock_moments(consts, &state.eqs[i].paths, t);
            m[i] = mi;
            dinv[i] = 1.0 / vi;
        }
        let s_inv = a.transpose() * DMatrix::from_diagonal(&dinv) * &a;
        let y_tilde = data.y.row(t).transpose() - &a_inv * &m;
        let sy = &s_inv * y_tilde;
        let xt = data.x.row(t);
        for i in 0..n {
            for c in 0..k {
                b[i * k + c] += sy[i] * xt[c];
            }
        }
        let mut idx = 0;
        for i in 0..n {
            for j in 0..=i {
                let s = s_inv[(i, j)];
                let acc = &mut xx[idx];
                for r in 0..k {
                    let xr = s * xt[r];
                    for c in 0..=r {
                        acc[(r, c)] += xr * xt[c];
                    }
                }
                idx += 1;
            }
        }
    }
    let mut idx = 0;
    for i in 0..n {
        for j in 0..=i {
            let acc = &xx[idx];
            for r in 0..k {
                for c in 0..k {
                    let v = if c <= r { acc[(r, c)] } else { acc[(c, r)] };
                    prec[(i * k + r, j * k + c)] += v;
                    if i != j {
                        prec[(j * k + c, i * k + r)] += v;
                    }
                }
            }
            idx += 1;
        }
    }
    let draw = mvn_from_precision(rng, prec, &b)?.0;
    Ok(DMatrix::from_fn(n, k, |i, c| draw[i * k + c]))
}

/// Step: for each row i ≥ 1, a_i | · ~ N from the weighted regression of
/// `u_i - m_i` on `-u_j` (j < i) with weights `1 / var_i`.
pub fn draw_a<R: Rng + ?Sized>(
    u: &DMatrix<f64>,
    eqs: &[EquationState],
    consts: &ShockConstants,
    prior: NormalPrior,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let n = eqs.len();
    let mut out = vec![Vec::new(); n];
    for i in 1..n {
        let mut prec = DMatrix::from_diagonal_element(i, i, 1.0 / prior.var);
        let mut b = DVector::from_element(i, prior.mean / prior.var);
        for t in 0..u.nrows() {
            let (m, var) = shock_moments(consts, &eqs[i].paths, t);
            let target = u[(t, i)] - m;
            for r in 0..i {
                let xr = -u[(t, r)] / var;
                b[r] += xr * target;
                for c in 0..i {
                    prec[(r, c)] += xr * -u[(t, c)];
                }
            }
        }
        out[i] = mvn_from_precision(rng, prec, &b)?.0.iter().copied().collect();
    }
    Ok(out)
}

/// The VAR Gibbs kernel with its fixed inputs precomputed.
pub struct VarSampler<'a> {
    model: &'a VarModelSpec,
    prior: &'a VarPriorSpec,
    prior_prec: DMatrix<f64>,
    prior_b: DVector<f64>,
    consts: ShockConstants,
    cfg: SweepConfig,
}

impl<'a> VarSampler<'a> {
    pub fn new(model: &'a VarModelSpec, prior: &'a VarPriorSpec, total_obs: usize, cfg: SweepConfig) -> Result<Self> {
        model.validate(total_obs)?;
        let nk = model.n_vars() * model.n_coef();
        if prior.pi_mean.len() != nk || prior.pi_cov.shape() != (nk, nk) {
            return Err(Error::Dimension(format!("vec(Π) prior must have dimension {nk}")));
        }
        if prior.states.len() != model.n_vars() {
            return Err(Error::Dimension("one state prior per equation required".into()));
        }
        for s in &prior.states {
            s.validate()?;
        }
        let prior_prec = prior
            .pi_cov
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Config("vec(Π) prior covariance is singular".into()))?;
        let prior_b = &prior_prec * &prior.pi_mean;
        let cfg = SweepConfig { xi_first: true, ..cfg };
        Ok(Self { model, prior, prior_prec, prior_b, consts: model.family.constants()?, cfg })
    }

    fn exo(&self, i: usize) -> StateExo<'a> {
        StateExo { vol: self.model.vol_eqs[i].exo_series.as_ref(), shape: self.model.shape_eqs[i].exo_series.as_ref() }
    }

    /// Equation-by-equation OLS for Π, A = I, flat paths.
    pub fn initial_state(&self, data: &VarData) -> VarState {
        let n = self.model.n_vars();
        let k = self.model.n_coef();
        let mut pi = DMatrix::zeros(n, k);
        for i in 0..n {
            let yi = data.y.column(i).into_owned();
            match crate::linalg::ols(&data.x, &yi) {
                Ok((b, _)) => pi.row_mut(i).copy_from(&b.transpose()),
                Err(_) => {
                    for c in 0..k {
                        pi[(i, c)] = self.prior.pi_mean[i * k + c];
                    }
                }
            }
        }
        let t = data.n_obs();
        let eqs = (0..n)
            .map(|i| EquationState {
                phi_h: self.model.vol_eqs[i].phi,
                phi_lambda: self.model.shape_eqs[i].phi,
                beta_h: self.model.vol_eqs[i].exo_coeffs.clone(),
                beta_lambda: self.model.shape_eqs[i].exo_coeffs.clone(),
                sigma2_eta: self.model.vol_eqs[i].sigma2,
                sigma2_xi: self.model.shape_eqs[i].sigma2,
                paths: LatentPaths::constant(t, self.prior.states[i].log_h0.mean, self.prior.states[i].lambda0.mean),
            })
            .collect();
        VarState { pi, a_free: (0..n).map(|i| vec![0.0; i]).collect(), eqs }
    }

    /// One full Gibbs iteration.
    pub fn sweep<R: Rng + ?Sized>(&self, data: &VarData, state: &mut VarState, rng: &mut R) -> Result<()> {
        let n = state.eqs.len();
        let orth = |u: &DMatrix<f64>, a: &DMatrix<f64>| -> DMatrix<f64> { u * a.transpose() };
        let u = residuals(data, &state.pi);
        let e = orth(&u, &state.a_matrix());
        if self.consts.nu.is_some() {
            for i in 0..n {
                let ei: Vec<f64> = e.column(i).iter().copied().collect();
                state.eqs[i].paths.o = draw_mixing_o(&ei, &state.eqs[i].paths, &self.consts, rng).0;
            }
        }
        for i in 0..n {
            let ei: Vec<f64> = e.column(i).iter().copied().collect();
            state.eqs[i].paths.v = draw_mixing_v(&ei, &state.eqs[i].paths, &self.consts, rng);
        }
        state.pi = draw_pi(data, state, &self.consts, &self.prior_prec, &self.prior_b, rng)?;
        let u = residuals(data, &state.pi);
        state.a_free = draw_a(&u, &state.eqs, &self.consts, self.prior.a, rng)?;
        let e = orth(&u, &state.a_matrix());
        for i in 0..n {
            let ei: Vec<f64> = e.column(i).iter().copied().collect();
            latent_sweep(&ei, &mut state.eqs[i], self.exo(i), &self.prior.states[i], &self.consts, self.cfg, rng)?;
        }
        Ok(())
    }

    /// Parameters and latent variables drawn from the prior.
    pub fn sample_prior<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> Result<VarState> {
        let n = self.model.n_vars();
        let k = self.model.n_coef();
        let chol = self
            .prior
            .pi_cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("vec(Π) prior covariance".into()))?;
        let z = DVector::from_fn(n * k, |_, _| std_normal(rng));
        let v = &self.prior.pi_mean + chol.l() * z;
        let pi = DMatrix::from_fn(n, k, |i, c| v[i * k + c]);
        let a = self.prior.a;
        let a_free = (0..n).map(|i| (0..i).map(|_| a.mean + a.var.sqrt() * std_normal(rng)).collect()).collect();
        let eqs = (0..n)
            .map(|i| sample_equation_prior(t, self.exo(i), &self.prior.states[i], &self.consts, rng))
            .collect();
        Ok(VarState { pi, a_free, eqs })
    }

    /// Simulate the effective sample forward from the `presample` (p × N)
    /// given parameters and all latent variables.
    pub fn simulate_levels<R: Rng + ?Sized>(&self, presample: &DMatrix<f64>, state: &VarState, rng: &mut R) -> DMatrix<f64> {
        let n = self.model.n_vars();
        let p = self.model.lags;
        let t = state.eqs[0].paths.len();
        let a_inv = state.a_matrix().try_inverse().expect("unit-triangular A is invertible");
        let shocks: Vec<Vec<f64>> =
            state.eqs.iter().map(|e| simulate_scaled_shocks(&e.paths, &self.consts, rng)).collect();
        let mut levels = DMatrix::zeros(p + t, n);
        levels.rows_mut(0, p).copy_from(presample);
        for s in 0..t {
            let mut x = DVector::zeros(n * p + 1);
            x[0] = 1.0;
            for l in 1..=p {
                for j in 0..n {
                    x[1 + (l - 1) * n + j] = levels[(p + s - l, j)];
                }
            }
            let e = DVector::from_fn(n, |i, _| shocks[i][s]);
            let y = &state.pi * x + &a_inv * e;
            for j in 0..n {
                levels[(p + s, j)] = y[j];
            }
        }
        levels
    }
}

/// Run one VAR chain on `levels` (total T × N, including the p presample rows).
pub fn run_var_chain(
    model: &VarModelSpec,
    prior: &VarPriorSpec,
    levels: &DMatrix<f64>,
    mcmc: &McmcConfig,
) -> Result<PosteriorDraws> {
    mcmc.validate()?;
    if levels.ncols() != model.n_vars() {
        return Err(Error::Dimension(format!(
            "data has {} columns, model has {} variables",
            levels.ncols(),
            model.n_vars()
        )));
    }
    let sampler = VarSampler::new(model, prior, levels.nrows(), SweepConfig::from(mcmc))?;
    let data = VarData::new(levels, model.lags);
    let mut rng: ChainRng = seeded(mcmc.seed);
    let mut state = sampler.initial_state(&data);
    let mut draws = Vec::with_capacity(mcmc.retained());
    for m in 0..mcmc.iters {
        sampler.sweep(&data, &mut state, &mut rng).map_err(|e| e.at_iteration(m))?;
        if m >= mcmc.burn_in && (m - mcmc.burn_in) % mcmc.thin == 0 {
            draws.push(state.to_draw(mcmc.full_paths));
        }
    }
    Ok(PosteriorDraws {
        meta: ChainMeta {
            kind: ModelKind::Var,
            family: model.family,
            seed: mcmc.seed,
            iters: mcmc.iters,
            burn_in: mcmc.burn_in,
            thin: mcmc.thin,
            particles: mcmc.particles,
            path_method: mcmc.path_method,
            variables: model.names.clone(),
            regressors: model.regressor_names(),
            lags: model.lags,
            full_paths: mcmc.full_paths,
        },
        draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_is_unit_lower_triangular() {
        let a = a_from_free(&[vec![], vec![0.5], vec![0.1, -0.2]]);
        assert_eq!(a[(0, 0)], 1.0);
        assert_eq!(a[(1, 0)], 0.5);
        assert_eq!(a[(0, 1)], 0.0);
        assert_eq!(a[(2, 1)], -0.2);
        assert_eq!(a[(2, 2)], 1.0);
    }

    #[test]
    fn var_data_layout() {
        let levels = DMatrix::from_row_slice(4, 2, &[1.0, 10.0, 2.0, 20.0, 3.0, 30.0, 4.0, 40.0]);
        let d = VarData::new(&levels, 2);
        assert_eq!(d.y.nrows(), 2);
        // X_t = [1, y1_{t-1}, y2_{t-1}, y1_{t-2}, y2_{t-2}]
        assert_eq!(d.x.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 2.0, 20.0, 1.0, 10.0]);
    }
}
