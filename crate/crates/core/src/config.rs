//! Run configuration, read from TOML.
//!
//! ```toml
//! seed = 7
//!
//! [data]
//! path = "gar.csv"
//! series = [{ name = "gdpgrowth" }, { name = "nfci" }]
//!
//! [model]
//! kind = "univariate"
//! target = "gdpgrowth"
//! y_lags = 2
//! exo = ["nfci"]
//! exo_lags = 1
//! shape_exo = ["nfci"]
//! shock = { family = "skew-t", nu = 5.0 }
//!
//! [mcmc]
//! iters = 10000
//! burn_in = 5000
//! ```

use crate::dataio::{Period, SeriesSpec, Transform};
use crate::draws::{ModelKind, PathMethod};
use crate::error::{Error, Result};
use crate::priors::{
    InvGammaPrior, MinnesotaHyper, NormalPrior, A_PRIOR, EXO_COEFF_PRIOR, LAMBDA0_PRIOR, LOG_H0_PRIOR_VAR, PHI_PRIOR,
    SIGMA2_PRIOR,
};
use crate::skewdist::ShockFamily;
use crate::uni_sampler::McmcConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub data: DataConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub prior: PriorConfig,
    #[serde(default)]
    pub mcmc: McmcSection,
    #[serde(default)]
    pub forecast: ForecastSection,
    #[serde(default)]
    pub backtest: Option<BacktestSection>,
    #[serde(default)]
    pub baseline: BaselineSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: PathBuf,
    pub series: Vec<SeriesEntry>,
}

/// A column with either a named transform or a FRED-MD code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesEntry {
    pub name: String,
    #[serde(default)]
    pub transform: Option<Transform>,
    #[serde(default)]
    pub tcode: Option<u32>,
}

impl SeriesEntry {
    pub fn spec(&self) -> Result<SeriesSpec> {
        let transform = match (self.transform, self.tcode) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(format!("series {}: give transform or tcode, not both", self.name)))
            }
            (Some(t), None) => t,
            (None, Some(c)) => Transform::from_tcode(c)?,
            (None, None) => Transform::Level,
        };
        Ok(SeriesSpec { name: self.name.clone(), transform })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    #[serde(default = "default_shock")]
    pub shock: ShockFamily,
    /// Scored variable; for a univariate model also the dependent variable.
    pub target: String,
    #[serde(default = "default_y_lags")]
    pub y_lags: usize,
    #[serde(default)]
    pub exo: Vec<String>,
    #[serde(default = "default_one")]
    pub exo_lags: usize,
    #[serde(default)]
    pub vol_exo: Vec<String>,
    #[serde(default)]
    pub shape_exo: Vec<String>,
    /// VAR variables in ordering; defaults to every data series.
    #[serde(default)]
    pub variables: Vec<String>,
    #[serde(default = "default_one")]
    pub lags: usize,
}

fn default_shock() -> ShockFamily {
    ShockFamily::SkewT { nu: 5.0 }
}

fn default_y_lags() -> usize {
    2
}

fn default_one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorConfig {
    pub minnesota: MinnesotaHyper,
    /// AR order of the residual-variance scale estimates.
    pub scale_ar_lags: usize,
    pub phi_h: NormalPrior,
    pub phi_lambda: NormalPrior,
    pub beta_h: NormalPrior,
    pub beta_lambda: NormalPrior,
    pub sigma2_eta: InvGammaPrior,
    pub sigma2_xi: InvGammaPrior,
    pub lambda0: NormalPrior,
    pub log_h0_var: f64,
    pub a: NormalPrior,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            minnesota: MinnesotaHyper::default(),
            scale_ar_lags: 12,
            phi_h: PHI_PRIOR,
            phi_lambda: PHI_PRIOR,
            beta_h: EXO_COEFF_PRIOR,
            beta_lambda: EXO_COEFF_PRIOR,
            sigma2_eta: SIGMA2_PRIOR,
            sigma2_xi: SIGMA2_PRIOR,
            lambda0: LAMBDA0_PRIOR,
            log_h0_var: LOG_H0_PRIOR_VAR,
            a: A_PRIOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcSection {
    pub iters: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub particles: usize,
    pub path_method: PathMethod,
    pub enforce_stationarity: bool,
    pub full_paths: bool,
}

impl Default for McmcSection {
    fn default() -> Self {
        let d = McmcConfig::default();
        Self {
            iters: d.iters,
            burn_in: d.burn_in,
            thin: d.thin,
            particles: d.particles,
            path_method: d.path_method,
            enforce_stationarity: d.enforce_stationarity,
            full_paths: d.full_paths,
        }
    }
}

impl McmcSection {
    pub fn with_seed(&self, seed: u64) -> McmcConfig {
        McmcConfig {
            iters: self.iters,
            burn_in: self.burn_in,
            thin: self.thin,
            particles: self.particles,
            path_method: self.path_method,
            seed,
            enforce_stationarity: self.enforce_stationarity,
            full_paths: self.full_paths,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForecastSection {
    pub horizon: usize,
    pub sims_per_draw: usize,
}

impl Default for ForecastSection {
    fn default() -> Self {
        Self { horizon: 1, sims_per_draw: 1 }
    }
}

/// Expanding-window evaluation. Origins are the last in-sample periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BacktestSection {
    pub start: Period,
    pub end: Period,
    #[serde(default)]
    pub threads: Option<usize>,
}

/// Quantile-regression baseline settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSection {
    pub enabled: bool,
    /// Predictive draws simulated from each fitted Skew-t.
    pub draws: usize,
    pub taus: Vec<f64>,
    pub interpolation_taus: Vec<f64>,
}

impl Default for BaselineSection {
    fn default() -> Self {
        Self {
            enabled: true,
            draws: 5000,
            taus: crate::abg_qr::default_tau_grid(),
            interpolation_taus: crate::abg_qr::INTERPOLATION_TAUS.to_vec(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse a file; a relative data path resolves against the file's directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if cfg.data.path.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.data.path = dir.join(&cfg.data.path);
            }
        }
        Ok(cfg)
    }

    /// Canonical TOML of the resolved configuration, the input of run hashes.
    pub fn canonical_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    pub fn series_specs(&self) -> Result<Vec<SeriesSpec>> {
        self.data.series.iter().map(SeriesEntry::spec).collect()
    }

    pub fn var_variables(&self) -> Vec<String> {
        if self.model.variables.is_empty() {
            self.data.series.iter().map(|s| s.name.clone()).collect()
        } else {
            self.model.variables.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let names: Vec<&str> = self.data.series.iter().map(|s| s.name.as_str()).collect();
        let known = |n: &String| -> Result<()> {
            if names.contains(&n.as_str()) {
                Ok(())
            } else {
                Err(Error::Config(format!("series {n:?} is not declared under [data]")))
            }
        };
        if self.data.series.is_empty() {
            return Err(Error::Config("no series declared under [data]".into()));
        }
        self.series_specs()?;
        known(&self.model.target)?;
        self.model.shock.constants().map_err(|e| Error::Config(e.to_string()))?;
        match self.model.kind {
            ModelKind::Univariate => {
                for n in self.model.exo.iter().chain(&self.model.vol_exo).chain(&self.model.shape_exo) {
                    known(n)?;
                    if *n == self.model.target {
                        return Err(Error::Config(format!("target {n:?} cannot also be exogenous")));
                    }
                }
                if let Some(n) = self.model.vol_exo.iter().chain(&self.model.shape_exo).find(|n| !self.model.exo.contains(n)) {
                    return Err(Error::Config(format!("state-equation driver {n:?} must also be listed in exo")));
                }
            }
            ModelKind::Var => {
                let vars = self.var_variables();
                for n in &vars {
                    known(n)?;
                }
                if !vars.contains(&self.model.target) {
                    return Err(Error::Config("VAR target must be one of the VAR variables".into()));
                }
                if self.model.lags == 0 {
                    return Err(Error::Config("VAR needs at least one lag".into()));
                }
            }
        }
        self.mcmc.with_seed(self.seed).validate()?;
        if self.forecast.horizon == 0 || self.forecast.sims_per_draw == 0 {
            return Err(Error::Config("forecast horizon and sims_per_draw must be at least 1".into()));
        }
        if let Some(b) = &self.backtest {
            if !b.start.same_frequency(&b.end) || b.end < b.start {
                return Err(Error::Config("backtest end must not precede start".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = r#"
seed = 3
[data]
path = "d.csv"
series = [{ name = "y" }, { name = "x", tcode = 5 }]
[model]
kind = "univariate"
target = "y"
exo = ["x"]
shape_exo = ["x"]
"#;

    #[test]
    fn minimal_config_with_defaults() {
        let c = RunConfig::from_toml_str(MIN).unwrap();
        assert_eq!(c.model.y_lags, 2);
        assert_eq!(c.model.shock, ShockFamily::SkewT { nu: 5.0 });
        assert_eq!(c.mcmc.iters, 10_000);
        assert_eq!(c.series_specs().unwrap()[1].transform, Transform::LogDiff);
    }

    #[test]
    fn canonical_form_round_trips() {
        let c = RunConfig::from_toml_str(MIN).unwrap();
        let back = RunConfig::from_toml_str(&c.canonical_toml().unwrap()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn missing_key_is_named() {
        let e = RunConfig::from_toml_str(&MIN.replace("target = \"y\"\n", "")).unwrap_err();
        assert!(e.to_string().contains("target"), "{e}");
    }

    #[test]
    fn unknown_series_rejected() {
        let e = RunConfig::from_toml_str(&MIN.replace("shape_exo = [\"x\"]", "shape_exo = [\"z\"]")).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
    }
}
