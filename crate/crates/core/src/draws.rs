//! Stored MCMC output and its on-disk formats.
//!
//! Draws are written as a versioned, columnar JSON document: one array per
//! scalar parameter, one array of rows per vector parameter, all indexed by
//! retained iteration. Summaries go to CSV.

use crate::error::{Error, Result};
use crate::skewdist::ShockFamily;
use crate::states::LatentPaths;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

pub const DRAWS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathMethod {
    Pgas,
    Mh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Univariate,
    Var,
}

/// Chain settings and model labels carried with every draw set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainMeta {
    pub kind: ModelKind,
    pub family: ShockFamily,
    pub seed: u64,
    pub iters: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub particles: usize,
    pub path_method: PathMethod,
    /// Endogenous variable names, in model order.
    pub variables: Vec<String>,
    /// Regressor labels of each equation's coefficient block.
    pub regressors: Vec<String>,
    /// VAR lag order (0 for univariate models).
    pub lags: usize,
    /// Whether full latent paths were kept (otherwise only the last period).
    pub full_paths: bool,
}

/// State-equation parameters and latent paths of one equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquationDraw {
    pub phi_h: f64,
    pub phi_lambda: f64,
    pub beta_h: Vec<f64>,
    pub beta_lambda: Vec<f64>,
    pub sigma2_eta: f64,
    pub sigma2_xi: f64,
    pub paths: LatentPaths,
}

/// One retained iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    /// π for a univariate model; vec(Π) equation-major for a VAR.
    pub coef: Vec<f64>,
    /// Free elements of A, row by row (empty for univariate models).
    pub a_free: Vec<f64>,
    pub equations: Vec<EquationDraw>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub meta: ChainMeta,
    pub draws: Vec<Draw>,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn n_equations(&self) -> usize {
        self.draws.first().map_or(0, |d| d.equations.len())
    }

    /// Named scalar and vector parameters as columns, one value per draw.
    pub fn parameter_columns(&self) -> Vec<(String, Vec<f64>)> {
        let mut cols: Vec<(String, Vec<f64>)> = Vec::new();
        let Some(first) = self.draws.first() else { return cols };
        let nvars = first.equations.len();
        let per_eq = if nvars > 0 { first.coef.len() / nvars.max(1) } else { 0 };
        for c in 0..first.coef.len() {
            let name = if self.meta.kind == ModelKind::Var {
                let (i, k) = (c / per_eq, c % per_eq);
                format!("Pi[{},{}]", self.var_name(i), self.regressor_name(k))
            } else {
                format!("pi[{}]", self.regressor_name(c))
            };
            cols.push((name, self.draws.iter().map(|d| d.coef[c]).collect()));
        }
        let mut a_idx = 0;
        for i in 1..nvars {
            for j in 0..i {
                let name = format!("a[{},{}]", self.var_name(i), self.var_name(j));
                let idx = a_idx;
                cols.push((name, self.draws.iter().map(|d| d.a_free[idx]).collect()));
                a_idx += 1;
            }
        }
        for e in 0..nvars {
            let suffix = if nvars > 1 { format!("[{}]", self.var_name(e)) } else { String::new() };
            let scalar = |f: fn(&EquationDraw) -> f64| self.draws.iter().map(|d| f(&d.equations[e])).collect();
            cols.push((format!("phi_h{suffix}"), scalar(|q| q.phi_h)));
            cols.push((format!("phi_lambda{suffix}"), scalar(|q| q.phi_lambda)));
            cols.push((format!("sigma2_eta{suffix}"), scalar(|q| q.sigma2_eta)));
            cols.push((format!("sigma2_xi{suffix}"), scalar(|q| q.sigma2_xi)));
            cols.push((format!("log_h0{suffix}"), scalar(|q| q.paths.log_h0)));
            cols.push((format!("lambda0{suffix}"), scalar(|q| q.paths.lambda0)));
            for b in 0..first.equations[e].beta_h.len() {
                cols.push((format!("beta_h{suffix}[{b}]"), self.draws.iter().map(|d| d.equations[e].beta_h[b]).collect()));
            }
            for b in 0..first.equations[e].beta_lambda.len() {
                cols.push((
                    format!("beta_lambda{suffix}[{b}]"),
                    self.draws.iter().map(|d| d.equations[e].beta_lambda[b]).collect(),
                ));
            }
        }
        cols
    }

    fn var_name(&self, i: usize) -> String {
        self.meta.variables.get(i).cloned().unwrap_or_else(|| format!("y{i}"))
    }

    fn regressor_name(&self, k: usize) -> String {
        self.meta.regressors.get(k).cloned().unwrap_or_else(|| format!("x{k}"))
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer(w, &ColumnarDraws::from(self))?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let c: ColumnarDraws = serde_json::from_reader(r)?;
        c.try_into()
    }

    /// Posterior quantiles per parameter: `parameter,mean,q05,q15,q50,q85,q95`.
    pub fn write_summary_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["parameter", "mean", "q05", "q15", "q50", "q85", "q95"])?;
        for (name, col) in self.parameter_columns() {
            let mut sorted = col.clone();
            sorted.sort_by(f64::total_cmp);
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let mut rec = vec![name, fmt(mean)];
            rec.extend([0.05, 0.15, 0.5, 0.85, 0.95].iter().map(|&p| fmt(quantile_sorted(&sorted, p))));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Pointwise 15/50/85 % bands of h_t and λ_t:
    /// `variable,t,h_q15,h_q50,h_q85,lambda_q15,lambda_q50,lambda_q85`.
    pub fn write_path_quantiles_csv<W: Write>(&self, w: W, periods: Option<&[String]>) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["variable", "period", "h_q15", "h_q50", "h_q85", "lambda_q15", "lambda_q50", "lambda_q85"])?;
        for e in 0..self.n_equations() {
            let len = self.draws[0].equations[e].paths.len();
            for t in 0..len {
                let band = |get: fn(&LatentPaths) -> &Vec<f64>| {
                    let mut xs: Vec<f64> = self.draws.iter().map(|d| get(&d.equations[e].paths)[t]).collect();
                    xs.sort_by(f64::total_cmp);
                    [0.15, 0.5, 0.85].map(|p| fmt(quantile_sorted(&xs, p)))
                };
                let period = periods
                    .and_then(|p| p.get(p.len().saturating_sub(len) + t).cloned())
                    .unwrap_or_else(|| (t + 1).to_string());
                let mut rec = vec![self.var_name(e), period];
                rec.extend(band(|p| &p.h));
                rec.extend(band(|p| &p.lambda));
                out.write_record(&rec)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.10e}")
}

/// Type-7 (linear interpolation) quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Serialize, Deserialize)]
struct ColumnarEquation {
    phi_h: Vec<f64>,
    phi_lambda: Vec<f64>,
    beta_h: Vec<Vec<f64>>,
    beta_lambda: Vec<Vec<f64>>,
    sigma2_eta: Vec<f64>,
    sigma2_xi: Vec<f64>,
    log_h0: Vec<f64>,
    lambda0: Vec<f64>,
    h: Vec<Vec<f64>>,
    lambda: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    o: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ColumnarDraws {
    schema_version: u32,
    meta: ChainMeta,
    n_draws: usize,
    coef: Vec<Vec<f64>>,
    a_free: Vec<Vec<f64>>,
    equations: Vec<ColumnarEquation>,
}

impl From<&PosteriorDraws> for ColumnarDraws {
    fn from(p: &PosteriorDraws) -> Self {
        let eqs = (0..p.n_equations())
            .map(|e| {
                let col = |f: &dyn Fn(&EquationDraw) -> f64| p.draws.iter().map(|d| f(&d.equations[e])).collect();
                let rows = |f: &dyn Fn(&EquationDraw) -> Vec<f64>| p.draws.iter().map(|d| f(&d.equations[e])).collect();
                ColumnarEquation {
                    phi_h: col(&|q| q.phi_h),
                    phi_lambda: col(&|q| q.phi_lambda),
                    beta_h: rows(&|q| q.beta_h.clone()),
                    beta_lambda: rows(&|q| q.beta_lambda.clone()),
                    sigma2_eta: col(&|q| q.sigma2_eta),
                    sigma2_xi: col(&|q| q.sigma2_xi),
                    log_h0: col(&|q| q.paths.log_h0),
                    lambda0: col(&|q| q.paths.lambda0),
                    h: rows(&|q| q.paths.h.clone()),
                    lambda: rows(&|q| q.paths.lambda.clone()),
                    v: rows(&|q| q.paths.v.clone()),
                    o: rows(&|q| q.paths.o.clone()),
                }
            })
            .collect();
        ColumnarDraws {
            schema_version: DRAWS_SCHEMA_VERSION,
            meta: p.meta.clone(),
            n_draws: p.draws.len(),
            coef: p.draws.iter().map(|d| d.coef.clone()).collect(),
            a_free: p.draws.iter().map(|d| d.a_free.clone()).collect(),
            equations: eqs,
        }
    }
}

impl TryFrom<ColumnarDraws> for PosteriorDraws {
    type Error = Error;

    fn try_from(c: ColumnarDraws) -> Result<Self> {
        if c.schema_version != DRAWS_SCHEMA_VERSION {
            return Err(Error::Data(format!(
                "draws file schema version {} is not supported (expected {DRAWS_SCHEMA_VERSION})",
                c.schema_version
            )));
        }
        let n = c.n_draws;
        let bad = |what: &str| Error::Data(format!("draws file: column {what} does not have {n} entries"));
        if c.coef.len() != n || c.a_free.len() != n {
            return Err(bad("coef/a_free"));
        }
        for q in &c.equations {
            let lens = [
                q.phi_h.len(),
                q.phi_lambda.len(),
                q.beta_h.len(),
                q.beta_lambda.len(),
                q.sigma2_eta.len(),
                q.sigma2_xi.len(),
                q.log_h0.len(),
                q.lambda0.len(),
                q.h.len(),
                q.lambda.len(),
                q.v.len(),
                q.o.len(),
            ];
            if lens.iter().any(|&l| l != n) {
                return Err(bad("equation"));
            }
        }
        let draws = (0..n)
            .map(|m| Draw {
                coef: c.coef[m].clone(),
                a_free: c.a_free[m].clone(),
                equations: c
                    .equations
                    .iter()
                    .map(|q| EquationDraw {
                        phi_h: q.phi_h[m],
                        phi_lambda: q.phi_lambda[m],
                        beta_h: q.beta_h[m].clone(),
                        beta_lambda: q.beta_lambda[m].clone(),
                        sigma2_eta: q.sigma2_eta[m],
                        sigma2_xi: q.sigma2_xi[m],
                        paths: LatentPaths {
                            h: q.h[m].clone(),
                            log_h0: q.log_h0[m],
                            lambda: q.lambda[m].clone(),
                            lambda0: q.lambda0[m],
                            v: q.v[m].clone(),
                            o: q.o[m].clone(),
                        },
                    })
                    .collect(),
            })
            .collect();
        Ok(PosteriorDraws { meta: c.meta, draws })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_quantile() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&xs, 0.0), 1.0);
        assert_eq!(quantile_sorted(&xs, 1.0), 4.0);
        assert!((quantile_sorted(&xs, 0.5) - 2.5).abs() < 1e-15);
        assert!((quantile_sorted(&xs, 0.25) - 1.75).abs() < 1e-15);
    }
}
