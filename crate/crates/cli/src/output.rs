//! Output files with header metadata.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};
use tvssv::config::RunConfig;
use tvssv::forecast::PredictiveDensity;
use tvssv::scoring::ScoreReport;
use tvssv::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Identifies the run that produced a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    /// SHA-256 of the resolved configuration, or of the input files for
    /// commands run without one.
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
    /// Model variables in model order; the ordering changes a VAR.
    pub variables: Vec<String>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl Header {
    pub fn for_config(cfg: &RunConfig, variables: Vec<String>) -> Result<Self> {
        let digest = Sha256::digest(cfg.canonical_toml()?.as_bytes());
        Ok(Self { config_sha256: hex(&digest), seed: cfg.seed, version: VERSION.into(), variables })
    }

    pub fn for_inputs(inputs: &[Vec<u8>], seed: u64, variables: Vec<String>) -> Self {
        let mut h = Sha256::new();
        for i in inputs {
            h.update((i.len() as u64).to_le_bytes());
            h.update(i);
        }
        Self { config_sha256: hex(&h.finalize()), seed, version: VERSION.into(), variables }
    }

    pub fn comment_lines(&self) -> String {
        format!(
            "# config_sha256={}\n# seed={}\n# version={}\n# variables={}\n",
            self.config_sha256,
            self.seed,
            self.version,
            self.variables.join(",")
        )
    }
}

#[derive(Serialize, Deserialize)]
struct Wrapped {
    header: Header,
    body: Value,
}

pub fn parse_json(bytes: &[u8], path: &Path) -> Result<(Header, Value)> {
    let w: Wrapped = serde_json::from_slice(bytes)
        .map_err(|e| Error::Data(format!("{} is not a tvssv output file: {e}", path.display())))?;
    Ok((w.header, w.body))
}

pub fn read_json(path: &Path) -> Result<(Header, Value)> {
    let bytes = std::fs::read(path).map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    parse_json(&bytes, path)
}

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> Result<Self> {
        std::fs::create_dir_all(path)
            .map_err(|e| Error::Config(format!("cannot create output directory {}: {e}", path.display())))?;
        Ok(Self(path.to_path_buf()))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let p = self.path(name);
        std::fs::write(&p, bytes).map_err(|e| Error::Config(format!("cannot write {}: {e}", p.display())))
    }

    /// CSV body produced by `f`, after the header comment lines.
    pub fn csv(&self, name: &str, header: &Header, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = header.comment_lines().into_bytes();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    pub fn json(&self, name: &str, header: &Header, body: Value) -> Result<()> {
        let bytes = serde_json::to_vec(&Wrapped { header: header.clone(), body })?;
        self.write(name, &bytes)
    }

    pub fn text(&self, name: &str, text: &str) -> Result<()> {
        self.write(name, text.as_bytes())
    }
}

/// `origin,horizon,variable,mean,q05,q10,q20,q50,es05,es10,recession_prob`.
pub fn write_forecast_summary<W: Write>(w: W, pds: &[PredictiveDensity]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["origin", "horizon", "variable", "mean", "q05", "q10", "q20", "q50", "es05", "es10", "recession_prob"])?;
    for pd in pds {
        let s = pd.sorted_draws();
        let q = |p: f64| tvssv::draws::quantile_sorted(&s, p);
        let es = |p: f64| tvssv::forecast::expected_shortfall_sorted(&s, p);
        let vals = [pd.mean(), q(0.05), q(0.10), q(0.20), q(0.5), es(0.05), es(0.10), pd.recession_prob()];
        let mut rec = vec![pd.origin.clone(), pd.horizon.to_string(), pd.variable.clone()];
        rec.extend(vals.iter().map(|v| format!("{v:.10e}")));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub const PIT_BINS: usize = 10;

/// PIT histogram counts: `model,bin_lo,bin_hi,count`.
pub fn write_pit_histogram<W: Write>(w: W, report: &ScoreReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["model", "bin_lo", "bin_hi", "count"])?;
    for (model, rows) in &report.scores {
        let counts = pit_counts(rows.iter().map(|r| r.pit));
        for (b, c) in counts.iter().enumerate() {
            let lo = b as f64 / PIT_BINS as f64;
            out.write_record([model.clone(), format!("{lo:.2}"), format!("{:.2}", lo + 0.1), c.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn pit_counts(pits: impl Iterator<Item = f64>) -> [usize; PIT_BINS] {
    let mut counts = [0; PIT_BINS];
    for p in pits {
        counts[((p * PIT_BINS as f64) as usize).min(PIT_BINS - 1)] += 1;
    }
    counts
}
