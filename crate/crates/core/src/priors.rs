//! Prior construction: Minnesota covariance and data-based scale estimates.

use crate::error::{Error, Result};
use crate::linalg::{ar_design, ols};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Normal prior N(mean, var).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalPrior {
    pub mean: f64,
    pub var: f64,
}

impl NormalPrior {
    pub const fn new(mean: f64, var: f64) -> Self {
        Self { mean, var }
    }
}

/// Inverse-Gamma prior with density ∝ x^{-(shape+1)} exp(-scale/x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvGammaPrior {
    pub shape: f64,
    pub scale: f64,
}

impl InvGammaPrior {
    pub const fn new(shape: f64, scale: f64) -> Self {
        Self { shape, scale }
    }
}

/// Default state-equation variance prior, IG(5, 0.16) (mean 0.04).
pub const SIGMA2_PRIOR: InvGammaPrior = InvGammaPrior::new(5.0, 0.16);
/// Default autoregressive-coefficient prior, N(1, 0.01).
pub const PHI_PRIOR: NormalPrior = NormalPrior::new(1.0, 0.01);
/// Default prior on exogenous state-equation coefficients, N(0, 10).
pub const EXO_COEFF_PRIOR: NormalPrior = NormalPrior::new(0.0, 10.0);
/// Default λ₀ prior, N(0, 10).
pub const LAMBDA0_PRIOR: NormalPrior = NormalPrior::new(0.0, 10.0);
/// Prior variance of log h₀ around its data-based centre.
pub const LOG_H0_PRIOR_VAR: f64 = 100.0;
/// Prior on free elements of the VAR contemporaneous matrix, N(0, 100).
pub const A_PRIOR: NormalPrior = NormalPrior::new(0.0, 100.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinnesotaHyper {
    pub theta1: f64,
    pub theta2: f64,
    /// Intercept prior variance.
    pub theta3: f64,
    pub theta4: f64,
    /// Prior mean of each variable's first own lag (0 or 1).
    #[serde(default)]
    pub own_lag_center: Vec<f64>,
}

impl Default for MinnesotaHyper {
    fn default() -> Self {
        Self { theta1: 0.04, theta2: 0.025, theta3: 100.0, theta4: 2.0, own_lag_center: Vec::new() }
    }
}

impl MinnesotaHyper {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("theta1", self.theta1), ("theta2", self.theta2), ("theta3", self.theta3), ("theta4", self.theta4)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("Minnesota {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    fn center(&self, i: usize) -> f64 {
        self.own_lag_center.get(i).copied().unwrap_or(0.0)
    }
}

/// Prior variance of the coefficient on lag `l` of variable `j` in equation `i`.
pub fn minnesota_variance(hyper: &MinnesotaHyper, sigma2: &[f64], i: usize, j: usize, l: usize) -> f64 {
    let decay = (l as f64).powf(hyper.theta4);
    if i == j {
        hyper.theta1 / decay
    } else {
        sigma2[i] * hyper.theta1 * hyper.theta2 / (sigma2[j] * decay)
    }
}

/// Diagonal Minnesota prior covariance of vec(Π) for an `n`-variable VAR(`p`).
///
/// Coefficients are ordered equation-major: equation `i` occupies the block
/// `[i·K, (i+1)·K)` with `K = n·p + 1`, laid out as
/// `[intercept, y_{1,t-1}, …, y_{n,t-1}, …, y_{1,t-p}, …, y_{n,t-p}]`.
pub fn minnesota_cov(hyper: &MinnesotaHyper, sigma2_by_var: &[f64], n: usize, p: usize) -> Result<DMatrix<f64>> {
    Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(minnesota_variances(
        hyper,
        sigma2_by_var,
        n,
        p,
    )?)))
}

/// Diagonal of [`minnesota_cov`].
pub fn minnesota_variances(hyper: &MinnesotaHyper, sigma2_by_var: &[f64], n: usize, p: usize) -> Result<Vec<f64>> {
    hyper.validate()?;
    if sigma2_by_var.len() != n {
        return Err(Error::Dimension(format!("{} scale estimates for {n} variables", sigma2_by_var.len())));
    }
    if sigma2_by_var.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Domain("Minnesota scales must be positive".into()));
    }
    let k = n * p + 1;
    let mut out = Vec::with_capacity(n * k);
    for i in 0..n {
        out.push(hyper.theta3);
        for l in 1..=p {
            for j in 0..n {
                out.push(minnesota_variance(hyper, sigma2_by_var, i, j, l));
            }
        }
    }
    Ok(out)
}

/// Prior mean of vec(Π): the declared own-lag centre on each first own lag,
/// zero elsewhere. Same layout as [`minnesota_cov`].
pub fn minnesota_mean(hyper: &MinnesotaHyper, n: usize, p: usize) -> Vec<f64> {
    let k = n * p + 1;
    let mut out = vec![0.0; n * k];
    for i in 0..n {
        out[i * k + 1 + i] = hyper.center(i);
    }
    out
}

/// Prior variances for a single-equation regression laid out as
/// `[intercept, y_{t-1..t-p}, x_{1,t-1..t-q}, …]`: the Minnesota formula with
/// one endogenous variable, exogenous regressors treated as cross terms.
pub fn univariate_minnesota(
    hyper: &MinnesotaHyper,
    sigma2_y: f64,
    y_lags: usize,
    exo_sigma2: &[f64],
    exo_lags: usize,
) -> Result<Vec<f64>> {
    hyper.validate()?;
    let mut scales = vec![sigma2_y];
    scales.extend_from_slice(exo_sigma2);
    if scales.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Domain("Minnesota scales must be positive".into()));
    }
    let mut out = vec![hyper.theta3];
    out.extend((1..=y_lags).map(|l| minnesota_variance(hyper, &scales, 0, 0, l)));
    for j in 1..scales.len() {
        out.extend((1..=exo_lags).map(|l| minnesota_variance(hyper, &scales, 0, j, l)));
    }
    Ok(out)
}

/// Residual variance of an AR(`lags`) regression with intercept, fit by OLS,
/// for each column of `data` (T × N).
pub fn estimate_scales(data: &DMatrix<f64>, lags: usize) -> Result<Vec<f64>> {
    (0..data.ncols())
        .map(|j| {
            let col: Vec<f64> = data.column(j).iter().copied().collect();
            ar_residual_variance(&col, lags)
        })
        .collect()
}

/// Residual variance of an AR(`lags`) fit with intercept on one series.
pub fn ar_residual_variance(series: &[f64], lags: usize) -> Result<f64> {
    let n = series.len();
    let dof = n as isize - 2 * lags as isize - 1;
    if dof < 1 {
        return Err(Error::InsufficientData(format!(
            "AR({lags}) scale estimate needs more than {} observations, got {n}",
            2 * lags + 1
        )));
    }
    let first = series[0];
    if series.iter().all(|&x| x == first) {
        return Err(Error::DegenerateSeries("constant series has zero residual variance".into()));
    }
    let (x, y) = ar_design(series, lags);
    let (_, ssr) = ols(&x, &y).map_err(|e| match e {
        Error::RankDeficient => Error::DegenerateSeries("collinear lags in AR scale estimate".into()),
        other => other,
    })?;
    let s2 = ssr / dof as f64;
    if !(s2 > 1e-300) {
        return Err(Error::DegenerateSeries("zero residual variance".into()));
    }
    Ok(s2)
}

/// Centre of the log h₀ prior: log of the AR(4) residual variance over the
/// first 40 observations (or all of them if fewer).
pub fn log_h0_center(series: &[f64]) -> Result<f64> {
    let n = series.len().min(40);
    Ok(ar_residual_variance(&series[..n], 4)?.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{seeded, std_normal};

    #[test]
    fn minnesota_examples() {
        let h = MinnesotaHyper::default();
        let v = minnesota_variances(&h, &[2.0, 2.0], 2, 2).unwrap();
        // equation 0: [c, y0 l1, y1 l1, y0 l2, y1 l2]
        assert_eq!(v[0], 100.0);
        assert!((v[1] - 0.04).abs() < 1e-15);
        assert!((v[3] - 0.01).abs() < 1e-15);
        assert!((v[2] - 0.001).abs() < 1e-15);
        let cov = minnesota_cov(&h, &[2.0, 2.0], 2, 2).unwrap();
        assert_eq!(cov.shape(), (10, 10));
        assert_eq!(cov[(0, 1)], 0.0);
    }

    #[test]
    fn cross_term_is_asymmetric() {
        let h = MinnesotaHyper::default();
        assert!(minnesota_variance(&h, &[1.0, 4.0], 0, 1, 1) != minnesota_variance(&h, &[1.0, 4.0], 1, 0, 1));
    }

    #[test]
    fn own_lag_centre_in_mean() {
        let h = MinnesotaHyper { own_lag_center: vec![1.0, 0.0], ..Default::default() };
        let m = minnesota_mean(&h, 2, 1);
        assert_eq!(m, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn white_noise_scale() {
        let mut rng = seeded(8);
        let x: Vec<f64> = (0..10_000).map(|_| std_normal(&mut rng)).collect();
        let s = ar_residual_variance(&x, 12).unwrap();
        assert!((s - 1.0).abs() < 0.05);
    }

    #[test]
    fn ar1_scale_is_innovation_variance() {
        let mut rng = seeded(9);
        let mut x = vec![0.0];
        for _ in 0..20_000 {
            let last = *x.last().unwrap();
            x.push(0.9 * last + std_normal(&mut rng));
        }
        let s = ar_residual_variance(&x, 12).unwrap();
        assert!((s - 1.0).abs() < 0.05, "{s}");
    }

    #[test]
    fn degenerate_and_short() {
        assert!(matches!(ar_residual_variance(&[3.0; 100], 4), Err(Error::DegenerateSeries(_))));
        assert!(matches!(ar_residual_variance(&[1.0, 2.0, 3.0], 4), Err(Error::InsufficientData(_))));
    }
}
