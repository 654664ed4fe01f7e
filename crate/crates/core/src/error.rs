use thiserror::Error;

/// Errors surfaced by the estimation, forecasting and evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("particle collapse at t = {t}: every particle weight is zero")]
    ParticleCollapse { t: usize },

    #[error("posterior covariance is not positive definite ({0})")]
    NotPositiveDefinite(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("rank-deficient design matrix")]
    RankDeficient,

    #[error("optimizer did not converge after {iterations} iterations (best objective {objective:e})")]
    NoConvergence { iterations: usize, objective: f64 },

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("origin {origin}: {source}")]
    AtOrigin {
        origin: String,
        #[source]
        source: Box<Error>,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        Error::AtIteration { iteration, source: Box::new(self) }
    }

    pub(crate) fn at_origin(self, origin: impl Into<String>) -> Self {
        Error::AtOrigin { origin: origin.into(), source: Box::new(self) }
    }

    /// Innermost error, skipping iteration / origin annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtIteration { source, .. } | Error::AtOrigin { source, .. } => source.root(),
            other => other,
        }
    }

    /// Whether the failure stems from numerics rather than inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::ParticleCollapse { .. }
                | Error::NotPositiveDefinite(_)
                | Error::NoConvergence { .. }
                | Error::RankDeficient
        )
    }

    /// Whether the failure stems from the input data.
    pub fn is_data(&self) -> bool {
        matches!(
            self.root(),
            Error::Data(_) | Error::Csv(_) | Error::InsufficientData(_) | Error::DegenerateSeries(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
