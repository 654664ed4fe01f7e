//! Shared validation drivers for the integration and acceptance suites.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use tvssv::draws::PathMethod;
use tvssv::priors::{InvGammaPrior, NormalPrior};
use tvssv::random::{seeded, ChainRng};
use tvssv::skewdist::ShockFamily;
use tvssv::states::StateEqSpec;
use tvssv::stats::{batch_means_se, mean, variance, z_pvalue};
use tvssv::var_sampler::{VarData, VarModelSpec, VarPriorSpec, VarSampler, VarState};
use tvssv::uni_sampler::{StatePriors, SweepConfig, UniModelSpec, UniPriorSpec, UniSampler, UniState};

/// Proper, moderately informative priors under which prior draws stay in a
/// numerically sane region; used by the joint-distribution tests.
pub fn tame_state_priors() -> StatePriors {
    StatePriors {
        phi_h: NormalPrior::new(0.7, 0.01),
        phi_lambda: NormalPrior::new(0.7, 0.01),
        beta_h: NormalPrior::new(0.0, 0.25),
        beta_lambda: NormalPrior::new(0.0, 0.25),
        sigma2_eta: InvGammaPrior::new(5.0, 0.16),
        sigma2_xi: InvGammaPrior::new(5.0, 0.16),
        log_h0: NormalPrior::new(0.0, 0.5),
        lambda0: NormalPrior::new(0.0, 1.0),
    }
}

/// Univariate model at length `t` with an intercept and one fixed covariate;
/// `shape_exo` adds one exogenous column to the shape equation.
pub fn geweke_uni_model(t: usize, family: ShockFamily, shape_exo: bool) -> (UniModelSpec, UniPriorSpec) {
    let x = DMatrix::from_fn(t, 2, |r, c| if c == 0 { 1.0 } else { ((r as f64) * 0.7).sin() });
    let mut shape_eq = StateEqSpec::new(0.9, 0.03);
    if shape_exo {
        let z = DMatrix::from_fn(t, 1, |r, _| ((r as f64) * 0.3).cos());
        shape_eq = shape_eq.with_exo(vec![0.0], z).unwrap();
    }
    let model = UniModelSpec {
        regressors: x,
        regressor_names: vec!["const".into(), "x".into()],
        family,
        vol_eq: StateEqSpec::new(0.9, 0.03),
        shape_eq,
    };
    let prior = UniPriorSpec {
        pi_mean: DVector::zeros(2),
        pi_cov: DMatrix::identity(2, 2),
        states: tame_state_priors(),
    };
    (model, prior)
}

/// Monitored functions of the univariate state.
pub fn uni_monitors(s: &UniState) -> Vec<(String, f64)> {
    let p = &s.eq.paths;
    let n = p.len();
    let mut out = vec![
        ("phi_h".to_string(), s.eq.phi_h),
        ("phi_lambda".to_string(), s.eq.phi_lambda),
        ("sigma2_eta".to_string(), s.eq.sigma2_eta),
        ("sigma2_xi".to_string(), s.eq.sigma2_xi),
        ("pi0".to_string(), s.pi[0]),
        ("pi1".to_string(), s.pi[1]),
    ];
    for (j, b) in s.eq.beta_lambda.iter().enumerate() {
        out.push((format!("beta_lambda{j}"), *b));
    }
    for &t in &[0, n / 2, n - 1] {
        let lh = p.h[t].ln();
        out.push((format!("log_h[{t}]"), lh));
        out.push((format!("log_h[{t}]^2"), lh * lh));
        out.push((format!("lambda[{t}]"), p.lambda[t]));
        out.push((format!("lambda[{t}]^2"), p.lambda[t] * p.lambda[t]));
    }
    out
}

pub struct GewekeOutcome {
    pub names: Vec<String>,
    pub z: Vec<f64>,
    pub pvalues: Vec<f64>,
}

impl GewekeOutcome {
    /// Bonferroni-adjusted family-wise test at `level`.
    pub fn passes(&self, level: f64) -> bool {
        let m = self.pvalues.len() as f64;
        self.pvalues.iter().all(|&p| p > level / m)
    }

    pub fn min_pvalue(&self) -> (String, f64) {
        let (i, p) = self
            .pvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, p)| (i, *p))
            .unwrap();
        (self.names[i].clone(), p)
    }
}

/// Compare moment estimates from `n_marginal` independent prior draws with
/// those from an `n_successive`-step successive-conditional chain.
pub fn geweke_compare(
    marginal: &[Vec<(String, f64)>],
    successive: &[Vec<(String, f64)>],
) -> GewekeOutcome {
    let k = marginal[0].len();
    let mut names = Vec::with_capacity(k);
    let mut z = Vec::with_capacity(k);
    for j in 0..k {
        let a: Vec<f64> = marginal.iter().map(|r| r[j].1).collect();
        let b: Vec<f64> = successive.iter().map(|r| r[j].1).collect();
        let se = (variance(&a) / a.len() as f64 + batch_means_se(&b).powi(2)).sqrt();
        names.push(marginal[0][j].0.clone());
        z.push((mean(&a) - mean(&b)) / se);
    }
    let pvalues = z.iter().map(|&z| z_pvalue(z)).collect();
    GewekeOutcome { names, z, pvalues }
}

pub fn geweke_uni(
    model: &UniModelSpec,
    prior: &UniPriorSpec,
    method: PathMethod,
    n_marginal: usize,
    n_successive: usize,
    seed: u64,
) -> GewekeOutcome {
    let cfg = SweepConfig { particles: 30, path_method: method, enforce_stationarity: false, xi_first: false };
    let sampler = UniSampler::new(model, prior, cfg).unwrap();
    let mut rng: ChainRng = seeded(seed);
    let marginal: Vec<_> =
        (0..n_marginal).map(|_| uni_monitors(&sampler.sample_prior(&mut rng).unwrap())).collect();
    let mut state = sampler.sample_prior(&mut rng).unwrap();
    let mut successive = Vec::with_capacity(n_successive);
    for _ in 0..n_successive {
        let y = sampler.simulate_y(&state, &mut rng);
        sampler.sweep(&y, &mut state, &mut rng).unwrap();
        successive.push(uni_monitors(&state));
    }
    geweke_compare(&marginal, &successive)
}

/// Independent replications of: draw from the prior, simulate y, apply
/// `sweeps` Gibbs sweeps. The result must again be a prior draw, and with
/// independent replications the standard errors are exact, so slow mixing
/// of a chained run cannot masquerade as bias.
pub fn prior_invariance_uni(
    model: &UniModelSpec,
    prior: &UniPriorSpec,
    method: PathMethod,
    n: usize,
    sweeps: usize,
    seed: u64,
) -> GewekeOutcome {
    let cfg = SweepConfig { particles: 30, path_method: method, enforce_stationarity: false, xi_first: false };
    let sampler = UniSampler::new(model, prior, cfg).unwrap();
    let mut rng: ChainRng = seeded(seed);
    let reference: Vec<_> = (0..n).map(|_| uni_monitors(&sampler.sample_prior(&mut rng).unwrap())).collect();
    let swept: Vec<_> = (0..n)
        .map(|_| {
            let mut state = sampler.sample_prior(&mut rng).unwrap();
            let y = sampler.simulate_y(&state, &mut rng);
            for _ in 0..sweeps {
                sampler.sweep(&y, &mut state, &mut rng).unwrap();
            }
            uni_monitors(&state)
        })
        .collect();
    let k = reference[0].len();
    let mut names = Vec::with_capacity(k);
    let mut z = Vec::with_capacity(k);
    for j in 0..k {
        let a: Vec<f64> = reference.iter().map(|r| r[j].1).collect();
        let b: Vec<f64> = swept.iter().map(|r| r[j].1).collect();
        names.push(reference[0][j].0.clone());
        z.push((mean(&a) - mean(&b)) / ((variance(&a) + variance(&b)) / n as f64).sqrt());
    }
    let pvalues = z.iter().map(|&z| z_pvalue(z)).collect();
    GewekeOutcome { names, z, pvalues }
}

/// Bivariate VAR(1) at effective length `t` with tame priors on Π and A.
pub fn geweke_var_model(t: usize, family: ShockFamily) -> (VarModelSpec, VarPriorSpec, DMatrix<f64>) {
    let n = 2;
    let model = VarModelSpec {
        names: vec!["a".into(), "b".into()],
        lags: 1,
        family,
        vol_eqs: vec![StateEqSpec::new(0.9, 0.03); n],
        shape_eqs: vec![StateEqSpec::new(0.9, 0.03); n],
    };
    let k = model.n_coef();
    let prior = VarPriorSpec {
        pi_mean: DVector::zeros(n * k),
        pi_cov: DMatrix::from_diagonal_element(n * k, n * k, 0.09),
        a: NormalPrior::new(0.0, 0.25),
        states: vec![tame_state_priors(); n],
    };
    let presample = DMatrix::from_row_slice(1, n, &[0.3, -0.2]);
    let _ = t;
    (model, prior, presample)
}

pub fn var_monitors(s: &VarState) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for (i, row) in s.pi.row_iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            out.push((format!("pi[{i},{c}]"), *v));
        }
    }
    out.push(("a[1,0]".into(), s.a_free[1][0]));
    out.push(("a[1,0]^2".into(), s.a_free[1][0].powi(2)));
    for (i, e) in s.eqs.iter().enumerate() {
        let n = e.paths.len();
        out.push((format!("phi_h{i}"), e.phi_h));
        out.push((format!("phi_lambda{i}"), e.phi_lambda));
        out.push((format!("sigma2_eta{i}"), e.sigma2_eta));
        out.push((format!("sigma2_xi{i}"), e.sigma2_xi));
        for &t in &[0, n - 1] {
            out.push((format!("log_h{i}[{t}]"), e.paths.h[t].ln()));
            out.push((format!("lambda{i}[{t}]"), e.paths.lambda[t]));
            out.push((format!("lambda{i}[{t}]^2"), e.paths.lambda[t].powi(2)));
        }
    }
    out
}

pub fn geweke_var(
    model: &VarModelSpec,
    prior: &VarPriorSpec,
    presample: &DMatrix<f64>,
    t: usize,
    n_marginal: usize,
    n_successive: usize,
    seed: u64,
) -> GewekeOutcome {
    let cfg = SweepConfig { particles: 30, path_method: PathMethod::Pgas, enforce_stationarity: false, xi_first: true };
    let sampler = VarSampler::new(model, prior, t + model.lags, cfg).unwrap();
    let mut rng: ChainRng = seeded(seed);
    let marginal: Vec<_> =
        (0..n_marginal).map(|_| var_monitors(&sampler.sample_prior(t, &mut rng).unwrap())).collect();
    let mut state = sampler.sample_prior(t, &mut rng).unwrap();
    let mut successive = Vec::with_capacity(n_successive);
    for _ in 0..n_successive {
        let levels = sampler.simulate_levels(presample, &state, &mut rng);
        let data = VarData::new(&levels, model.lags);
        sampler.sweep(&data, &mut state, &mut rng).unwrap();
        successive.push(var_monitors(&state));
    }
    geweke_compare(&marginal, &successive)
}

/// Data-generating values of the recovery experiment.
pub const RECOVERY_TRUTH: [(&str, f64); 4] =
    [("phi_h", 0.95), ("sigma2_eta", 0.04), ("phi_lambda", 0.98), ("sigma2_xi", 0.01)];

pub fn recovery_spec(t: usize, family: ShockFamily) -> tvssv::synthetic::SyntheticSpec {
    tvssv::synthetic::SyntheticSpec {
        n_obs: t,
        family,
        intercept: 0.0,
        ar: 0.0,
        exo_coef: 0.0,
        phi_h: RECOVERY_TRUTH[0].1,
        sigma2_eta: RECOVERY_TRUTH[1].1,
        phi_lambda: RECOVERY_TRUTH[2].1,
        sigma2_xi: RECOVERY_TRUTH[3].1,
        lambda0: 0.0,
        ..Default::default()
    }
}

/// Intercept-only model with default priors on `y`.
pub fn recovery_model(y: &[f64], family: ShockFamily) -> (UniModelSpec, UniPriorSpec) {
    let t = y.len();
    let model = UniModelSpec {
        regressors: DMatrix::from_element(t, 1, 1.0),
        regressor_names: vec!["const".into()],
        family,
        vol_eq: StateEqSpec::new(0.9, 0.04),
        shape_eq: StateEqSpec::new(0.9, 0.04),
    };
    let center = tvssv::priors::log_h0_center(y).unwrap();
    let prior = UniPriorSpec {
        pi_mean: DVector::zeros(1),
        pi_cov: DMatrix::from_element(1, 1, 100.0),
        states: StatePriors::with_log_h0_center(center),
    };
    (model, prior)
}

/// 90 % equal-tailed credible interval of each recovery parameter.
pub fn recovery_intervals(draws: &tvssv::draws::PosteriorDraws) -> Vec<(f64, f64)> {
    let cols = draws.parameter_columns();
    RECOVERY_TRUTH
        .iter()
        .map(|(name, _)| {
            let mut c = cols.iter().find(|(n, _)| n == name).unwrap().1.clone();
            c.sort_by(f64::total_cmp);
            (tvssv::draws::quantile_sorted(&c, 0.05), tvssv::draws::quantile_sorted(&c, 0.95))
        })
        .collect()
}
