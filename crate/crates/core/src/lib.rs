//! Bayesian stochastic-volatility models with time-varying skewness.
//!
//! Univariate and VAR samplers with Skew-Normal / Skew-t shocks, predictive
//! tail-risk measures, a quantile-regression baseline and density-forecast
//! scoring.

pub mod abg_qr;
pub mod config;
pub mod dataio;
pub mod design;
pub mod draws;
pub mod error;
pub mod forecast;
pub mod linalg;
pub mod pgas;
pub mod pipeline;
pub mod priors;
pub mod random;
pub mod scoring;
pub mod skewdist;
pub mod special;
pub mod states;
pub mod stats;
pub mod synthetic;
pub mod uni_sampler;
pub mod var_sampler;

pub use error::{Error, Result};
