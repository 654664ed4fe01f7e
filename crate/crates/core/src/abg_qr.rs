//! Two-step quantile-regression baseline: linear quantile regressions on a
//! τ grid, then a Skew-t fitted through the predicted quantiles.

use crate::error::{Error, Result};
use crate::linalg::ols;
use crate::skewdist::{SkewLocScale, StandardCdf};
use argmin::core::{CostFunction, Executor, State, TerminationReason, TerminationStatus};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Default regression grid 0.05, 0.10, …, 0.95.
pub fn default_tau_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

/// Levels whose predicted quantiles feed the Skew-t interpolation.
pub const INTERPOLATION_TAUS: [f64; 4] = [0.05, 0.25, 0.75, 0.95];

/// Bounds of ν during interpolation.
pub const NU_MIN: f64 = 2.1;
pub const NU_MAX: f64 = 100.0;
/// Simplex iteration budget of one interpolation start.
pub const MAX_SIMPLEX_ITERS: u64 = 2000;

pub fn check_loss(r: f64, tau: f64) -> f64 {
    r * (tau - if r < 0.0 { 1.0 } else { 0.0 })
}

fn objective(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, tau: f64) -> f64 {
    (y - x * beta).iter().map(|&r| check_loss(r, tau)).sum()
}

/// Minimize Σ ρ_τ(y - Xβ).
///
/// Majorize-minimize IRLS on `ρ_τ(r) = ½|r| + (τ - ½)r` with
/// `|r| ≤ r²/(2a) + a/2`, `a = max(|r_k|, ε)`, annealing ε down to 1e-10;
/// then the basic solution through the p smallest residuals replaces the
/// iterate whenever it does not increase the loss.
pub fn quantile_regression(x: &DMatrix<f64>, y: &DVector<f64>, tau: f64) -> Result<DVector<f64>> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Domain(format!("quantile level {tau} outside (0, 1)")));
    }
    let (n, p) = x.shape();
    if n <= p {
        return Err(Error::InsufficientData(format!("{n} observations for {p} regressors")));
    }
    let (mut beta, _) = ols(x, y)?;
    let xt1 = x.row_sum().transpose();
    let mut eps = 1e-2 * (y.amax().max(1e-300));
    while eps >= 1e-10 {
        for _ in 0..100 {
            let r = y - x * &beta;
            let w = DVector::from_iterator(n, r.iter().map(|ri| 0.5 / ri.abs().max(eps)));
            let xw = DMatrix::from_fn(n, p, |i, j| x[(i, j)] * w[i]);
            let lhs = xw.transpose() * x;
            let rhs = xw.transpose() * y + (tau - 0.5) * &xt1;
            let next = lhs
                .cholesky()
                .ok_or_else(|| Error::NotPositiveDefinite("IRLS normal equations".into()))?
                .solve(&rhs);
            let change = (&next - &beta).amax();
            beta = next;
            if change <= 1e-12 * (1.0 + beta.amax()) {
                break;
            }
        }
        eps *= 0.1;
    }
    let r = y - x * &beta;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| r[a].abs().total_cmp(&r[b].abs()));
    let xb = DMatrix::from_fn(p, p, |i, j| x[(order[i], j)]);
    let yb = DVector::from_fn(p, |i, _| y[order[i]]);
    if let Some(vertex) = xb.lu().solve(&yb) {
        if vertex.iter().all(|v| v.is_finite()) && objective(x, y, &vertex, tau) <= objective(x, y, &beta, tau) {
            beta = vertex;
        }
    }
    Ok(beta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QrFit {
    pub taus: Vec<f64>,
    /// Row k holds β at `taus[k]`.
    pub betas: DMatrix<f64>,
}

impl QrFit {
    /// Predicted quantiles at one regressor row, in grid order.
    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        self.betas.row_iter().map(|b| b.iter().zip(x).map(|(a, c)| a * c).sum()).collect()
    }

    pub fn predict_at(&self, x: &[f64], taus: &[f64]) -> Result<Vec<(f64, f64)>> {
        let all = self.predict(x);
        taus.iter()
            .map(|&t| {
                self.taus
                    .iter()
                    .position(|&g| (g - t).abs() < 1e-9)
                    .map(|k| (t, all[k]))
                    .ok_or_else(|| Error::Config(format!("quantile level {t} not in the regression grid")))
            })
            .collect()
    }
}

pub fn fit_quantile_regression(x: &DMatrix<f64>, y: &DVector<f64>, taus: &[f64]) -> Result<QrFit> {
    if taus.is_empty() || taus.windows(2).any(|w| w[0] >= w[1]) || taus.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(Error::Config("quantile grid must be strictly increasing inside (0, 1)".into()));
    }
    let mut betas = DMatrix::zeros(taus.len(), x.ncols());
    for (k, &t) in taus.iter().enumerate() {
        betas.row_mut(k).copy_from(&quantile_regression(x, y, t)?.transpose());
    }
    Ok(QrFit { taus: taus.to_vec(), betas })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkewTFit {
    pub dist: SkewLocScale,
    /// Sum of squared quantile errors.
    pub objective: f64,
    pub iterations: u64,
}

impl SkewTFit {
    pub fn nu(&self) -> f64 {
        self.dist.nu.unwrap_or(f64::INFINITY)
    }

    pub fn rms_error(&self, n_targets: usize) -> f64 {
        (self.objective / n_targets as f64).sqrt()
    }
}

fn nu_of(theta: f64) -> f64 {
    NU_MIN + (NU_MAX - NU_MIN) / (1.0 + (-theta).exp())
}

fn theta_of(nu: f64) -> f64 {
    let u = (nu - NU_MIN) / (NU_MAX - NU_MIN);
    (u / (1.0 - u)).ln()
}

struct Profile<'a> {
    taus: &'a [f64],
    targets: &'a [f64],
}

impl Profile<'_> {
    /// Location and scale by least squares of the targets on the standard
    /// quantiles; returns (ζ, ω, SSR).
    fn solve(&self, lambda: f64, nu: f64) -> (f64, f64, f64) {
        let table = StandardCdf::new(lambda, Some(nu));
        let z: Vec<f64> = self.taus.iter().map(|&t| table.quantile(t)).collect();
        let n = z.len() as f64;
        let zm = z.iter().sum::<f64>() / n;
        let qm = self.targets.iter().sum::<f64>() / n;
        let szz: f64 = z.iter().map(|a| (a - zm) * (a - zm)).sum();
        let szq: f64 = z.iter().zip(self.targets).map(|(a, q)| (a - zm) * (q - qm)).sum();
        let omega = (szq / szz).max(1e-12);
        let zeta = qm - omega * zm;
        let ssr = z.iter().zip(self.targets).map(|(a, q)| (q - zeta - omega * a).powi(2)).sum();
        (zeta, omega, ssr)
    }
}

impl CostFunction for Profile<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        if !p[0].is_finite() || p[0].abs() > 50.0 || !p[1].is_finite() {
            return Ok(f64::INFINITY);
        }
        Ok(self.solve(p[0], nu_of(p[1])).2)
    }
}

/// Fit a Skew-t (free ζ, ω, λ, ν) whose quantiles at `taus` match `targets`
/// in least squares. ζ and ω are profiled out; (λ, ν) are searched by
/// Nelder–Mead over (λ, logit ν) from a few fixed starts.
pub fn interpolate_skew_t(taus: &[f64], targets: &[f64]) -> Result<SkewTFit> {
    if taus.len() != targets.len() || taus.len() < 4 {
        return Err(Error::Config("Skew-t interpolation needs at least four target quantiles".into()));
    }
    if taus.windows(2).any(|w| w[0] >= w[1]) || targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::Config("interpolation levels must increase and targets be finite".into()));
    }
    // quantile-based skewness of the outer pair around the inner midpoint
    let n = targets.len();
    let (lo, hi) = (targets[0], targets[n - 1]);
    let mid = 0.5 * (targets[1] + targets[n - 2]);
    let skew = if hi > lo { (hi + lo - 2.0 * mid) / (hi - lo) } else { 0.0 };
    let lambda0 = (4.0 * skew).clamp(-3.0, 3.0);
    let starts = [(lambda0, 5.0), (0.0, 5.0), (lambda0, 30.0), (-lambda0, 10.0)];
    let problem = Profile { taus, targets };
    let mut best: Option<(Vec<f64>, f64, u64, bool)> = None;
    for (l, nu) in starts {
        let th = theta_of(nu);
        let simplex = vec![vec![l, th], vec![l + 0.5, th], vec![l, th + 1.0]];
        let solver = NelderMead::new(simplex)
            .with_sd_tolerance(1e-14)
            .map_err(|e| Error::Config(format!("simplex setup: {e}")))?;
        let res = Executor::new(Profile { taus, targets }, solver)
            .configure(|s| s.max_iters(MAX_SIMPLEX_ITERS))
            .run()
            .map_err(|e| Error::Config(format!("simplex run: {e}")))?;
        let state = res.state();
        let converged = matches!(
            state.get_termination_status(),
            TerminationStatus::Terminated(TerminationReason::SolverConverged)
        );
        let Some(param) = state.get_best_param().cloned() else { continue };
        let cost = state.get_best_cost();
        if best.as_ref().is_none_or(|b| cost < b.1) {
            best = Some((param, cost, state.get_iter(), converged));
        }
    }
    let Some((param, cost, iterations, converged)) = best else {
        return Err(Error::NoConvergence { iterations: MAX_SIMPLEX_ITERS as usize, objective: f64::INFINITY });
    };
    if !converged {
        return Err(Error::NoConvergence { iterations: iterations as usize, objective: cost });
    }
    let nu = nu_of(param[1]);
    let (zeta, omega, ssr) = problem.solve(param[0], nu);
    Ok(SkewTFit {
        dist: SkewLocScale { location: zeta, scale: omega, lambda: param[0], nu: Some(nu) },
        objective: ssr,
        iterations,
    })
}
