//! Latent-state containers and the AR(1) state equations for log-volatility
//! and the shape parameter.

use crate::error::{Error, Result};
use crate::random::std_normal;
use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// `s_t = φ s_{t-1} + Σ_j β_j x_{t,j} + e_t`, `e_t ~ N(0, σ²)`.
///
/// Row `t` (0-based) of `exo_series` holds the exogenous values entering the
/// transition into the state of period `t + 1`, so a lagged driver such as
/// `NFCI_{t-1}` must already be lagged by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEqSpec {
    pub phi: f64,
    pub sigma2: f64,
    pub exo_coeffs: Vec<f64>,
    pub exo_series: Option<DMatrix<f64>>,
}

impl StateEqSpec {
    pub fn new(phi: f64, sigma2: f64) -> Self {
        Self { phi, sigma2, exo_coeffs: Vec::new(), exo_series: None }
    }

    pub fn with_exo(mut self, coeffs: Vec<f64>, series: DMatrix<f64>) -> Result<Self> {
        self.exo_coeffs = coeffs;
        self.exo_series = Some(series);
        self.validate()?;
        Ok(self)
    }

    pub fn n_exo(&self) -> usize {
        self.exo_coeffs.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2 > 0.0) || !self.phi.is_finite() {
            return Err(Error::Domain(format!(
                "state equation needs finite phi and sigma2 > 0 (phi = {}, sigma2 = {})",
                self.phi, self.sigma2
            )));
        }
        let cols = self.exo_series.as_ref().map_or(0, |m| m.ncols());
        if cols != self.exo_coeffs.len() {
            return Err(Error::Dimension(format!(
                "{} exogenous coefficients for {cols} exogenous columns",
                self.exo_coeffs.len()
            )));
        }
        Ok(())
    }

    /// Exogenous contribution `Σ_j β_j x_{t,j}` for 0-based period `t`.
    #[inline]
    pub fn drift(&self, t: usize) -> f64 {
        match &self.exo_series {
            None => 0.0,
            Some(x) => self.exo_coeffs.iter().enumerate().map(|(j, b)| b * x[(t, j)]).sum(),
        }
    }

    /// Drift for every period of the exogenous series.
    pub fn drifts(&self, len: usize) -> Vec<f64> {
        (0..len).map(|t| self.drift(t)).collect()
    }
}

/// Log-volatility transition without exogenous terms: `φ_h log h_{t-1} + η_t`.
pub fn transition_logh(log_h_prev: f64, spec: &StateEqSpec, innovation: f64) -> f64 {
    spec.phi * log_h_prev + innovation
}

/// Shape transition `φ_λ λ_{t-1} + β·x + ξ_t`.
pub fn transition_lambda(
    lambda_prev: f64,
    spec: &StateEqSpec,
    exo_row: &[f64],
    innovation: f64,
) -> Result<f64> {
    transition(lambda_prev, spec, exo_row, innovation)
}

/// Generic transition used by either state equation.
pub fn transition(prev: f64, spec: &StateEqSpec, exo_row: &[f64], innovation: f64) -> Result<f64> {
    if exo_row.len() != spec.exo_coeffs.len() {
        return Err(Error::Dimension(format!(
            "exogenous row has {} entries, state equation expects {}",
            exo_row.len(),
            spec.exo_coeffs.len()
        )));
    }
    let exo: f64 = spec.exo_coeffs.iter().zip(exo_row).map(|(b, x)| b * x).sum();
    Ok(spec.phi * prev + exo + innovation)
}

/// Simulate `len` periods forward from `s0`, using `spec.drift(t)` for the
/// exogenous part (zero without drivers).
pub fn simulate_path<R: Rng + ?Sized>(spec: &StateEqSpec, s0: f64, len: usize, rng: &mut R) -> Vec<f64> {
    let sd = spec.sigma2.sqrt();
    let mut out = Vec::with_capacity(len);
    let mut prev = s0;
    for t in 0..len {
        prev = spec.phi * prev + spec.drift(t) + sd * std_normal(rng);
        out.push(prev);
    }
    out
}

/// Latent paths of one equation. `h` is stored in levels; `log_h0` in logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentPaths {
    pub h: Vec<f64>,
    pub log_h0: f64,
    pub lambda: Vec<f64>,
    pub lambda0: f64,
    pub v: Vec<f64>,
    pub o: Vec<f64>,
}

impl LatentPaths {
    /// Constant starting paths: `h ≡ exp(log_h0)`, `λ ≡ λ₀`, `v ≡ √(2/π)`, `o ≡ 1`.
    pub fn constant(len: usize, log_h0: f64, lambda0: f64) -> Self {
        Self {
            h: vec![log_h0.exp(); len],
            log_h0,
            lambda: vec![lambda0; len],
            lambda0,
            v: vec![std::f64::consts::FRAC_2_PI.sqrt(); len],
            o: vec![1.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn log_h(&self) -> Vec<f64> {
        self.h.iter().map(|h| h.ln()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.h.len();
        if self.lambda.len() != n || self.v.len() != n || self.o.len() != n {
            return Err(Error::Dimension("latent paths have unequal lengths".into()));
        }
        if self.h.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::Domain("volatility path must be strictly positive".into()));
        }
        if self.v.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::Domain("mixing variable v must be non-negative".into()));
        }
        if self.o.iter().any(|&o| !(o > 0.0 && o.is_finite())) {
            return Err(Error::Domain("mixing variable o must be strictly positive".into()));
        }
        Ok(())
    }
}
