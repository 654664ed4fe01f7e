//! Data ingestion: periods, CSV loading and series transformations.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// A monthly or quarterly period, `YYYY-MM` or `YYYY-Qq`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Period {
    Monthly { year: i32, month: u32 },
    Quarterly { year: i32, quarter: u32 },
}

impl Period {
    /// Periods since year 0 in the native frequency.
    pub fn ordinal(&self) -> i64 {
        match *self {
            Period::Monthly { year, month } => year as i64 * 12 + month as i64 - 1,
            Period::Quarterly { year, quarter } => year as i64 * 4 + quarter as i64 - 1,
        }
    }

    pub fn same_frequency(&self, other: &Period) -> bool {
        matches!(
            (self, other),
            (Period::Monthly { .. }, Period::Monthly { .. }) | (Period::Quarterly { .. }, Period::Quarterly { .. })
        )
    }

    pub fn offset(&self, k: i64) -> Period {
        let o = self.ordinal() + k;
        match self {
            Period::Monthly { .. } => Period::Monthly { year: o.div_euclid(12) as i32, month: (o.rem_euclid(12) + 1) as u32 },
            Period::Quarterly { .. } => {
                Period::Quarterly { year: o.div_euclid(4) as i32, quarter: (o.rem_euclid(4) + 1) as u32 }
            }
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Period::Monthly { year, month } => write!(f, "{year:04}-{month:02}"),
            Period::Quarterly { year, quarter } => write!(f, "{year:04}-Q{quarter}"),
        }
    }
}

impl FromStr for Period {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Data(format!("unparseable date {s:?}; expected YYYY-MM or YYYY-Qq"));
        let (y, rest) = s.trim().split_once('-').ok_or_else(bad)?;
        let year: i32 = y.parse().map_err(|_| bad())?;
        if let Some(q) = rest.strip_prefix('Q').or_else(|| rest.strip_prefix('q')) {
            let quarter: u32 = q.parse().map_err(|_| bad())?;
            if !(1..=4).contains(&quarter) {
                return Err(bad());
            }
            Ok(Period::Quarterly { year, quarter })
        } else {
            let month: u32 = rest.parse().map_err(|_| bad())?;
            if !(1..=12).contains(&month) {
                return Err(bad());
            }
            Ok(Period::Monthly { year, month })
        }
    }
}

impl Serialize for Period {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Period {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    Level,
    Log,
    LogDiff,
    Diff,
}

impl Transform {
    /// FRED-MD transformation code: 1 level, 2 first difference, 4 log,
    /// 5 log difference.
    pub fn from_tcode(code: u32) -> Result<Self> {
        match code {
            1 => Ok(Transform::Level),
            2 => Ok(Transform::Diff),
            4 => Ok(Transform::Log),
            5 => Ok(Transform::LogDiff),
            other => Err(Error::Config(format!("unsupported transformation code {other}"))),
        }
    }

    pub fn is_differenced(&self) -> bool {
        matches!(self, Transform::Diff | Transform::LogDiff)
    }

    /// Transform raw values; missing entries are NaN and stay NaN.
    pub fn apply(&self, name: &str, raw: &[f64]) -> Result<Vec<f64>> {
        let log = |x: f64| -> Result<f64> {
            if x.is_nan() {
                Ok(f64::NAN)
            } else if x <= 0.0 {
                Err(Error::Data(format!("non-positive value under log in series {name}")))
            } else {
                Ok(x.ln())
            }
        };
        match self {
            Transform::Level => Ok(raw.to_vec()),
            Transform::Log => raw.iter().map(|&x| log(x)).collect(),
            Transform::Diff => Ok(diff(raw)),
            Transform::LogDiff => Ok(diff(&raw.iter().map(|&x| log(x)).collect::<Result<Vec<_>>>()?)),
        }
    }

    /// Invert [`Transform::apply`] given the raw value preceding the first
    /// transformed observation (ignored for undifferenced transforms).
    pub fn invert(&self, transformed: &[f64], prev_raw: f64) -> Vec<f64> {
        match self {
            Transform::Level => transformed.to_vec(),
            Transform::Log => transformed.iter().map(|x| x.exp()).collect(),
            Transform::Diff => cumulate(prev_raw, transformed),
            Transform::LogDiff => cumulate(prev_raw.ln(), transformed).into_iter().map(f64::exp).collect(),
        }
    }
}

fn diff(x: &[f64]) -> Vec<f64> {
    let mut out = vec![f64::NAN; x.len()];
    for t in 1..x.len() {
        out[t] = x[t] - x[t - 1];
    }
    out
}

fn cumulate(start: f64, d: &[f64]) -> Vec<f64> {
    let mut level = start;
    d.iter()
        .map(|x| {
            level += x;
            level
        })
        .collect()
}

/// Declared column of an input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSpec {
    pub name: String,
    #[serde(default = "default_transform")]
    pub transform: Transform,
}

fn default_transform() -> Transform {
    Transform::Level
}

/// Aligned, transformed series with regular, strictly increasing dates.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFrame {
    pub dates: Vec<Period>,
    pub names: Vec<String>,
    /// T × N.
    pub values: DMatrix<f64>,
    pub transforms: Vec<Transform>,
}

impl SeriesFrame {
    pub fn n_obs(&self) -> usize {
        self.dates.len()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Config(format!("series {name:?} not in the data")))
    }

    /// Columns in the given order, as a T × k matrix.
    pub fn select(&self, names: &[String]) -> Result<DMatrix<f64>> {
        let idx = names.iter().map(|n| self.column_index(n)).collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_fn(self.n_obs(), idx.len(), |r, c| self.values[(r, idx[c])]))
    }

    pub fn position(&self, p: Period) -> Option<usize> {
        let first = self.dates.first()?;
        if !first.same_frequency(&p) {
            return None;
        }
        let k = p.ordinal() - first.ordinal();
        (k >= 0 && (k as usize) < self.n_obs()).then_some(k as usize)
    }

    /// Rows `0..=last`.
    pub fn through(&self, last: usize) -> SeriesFrame {
        SeriesFrame {
            dates: self.dates[..=last].to_vec(),
            names: self.names.clone(),
            values: self.values.rows(0, last + 1).into_owned(),
            transforms: self.transforms.clone(),
        }
    }

    /// Build from raw columns (NaN = missing): transform, trim leading rows
    /// with any missing value, reject remaining gaps and irregular dates.
    pub fn from_raw(dates: Vec<Period>, specs: &[SeriesSpec], raw: Vec<Vec<f64>>) -> Result<Self> {
        if dates.is_empty() {
            return Err(Error::Data("no observations".into()));
        }
        for w in dates.windows(2) {
            if !w[0].same_frequency(&w[1]) || w[1].ordinal() != w[0].ordinal() + 1 {
                return Err(Error::Data(format!("dates not regular and increasing at {} -> {}", w[0], w[1])));
            }
        }
        let cols = specs
            .iter()
            .zip(&raw)
            .map(|(s, r)| s.transform.apply(&s.name, r))
            .collect::<Result<Vec<_>>>()?;
        let start = (0..dates.len()).find(|&t| cols.iter().all(|c| !c[t].is_nan())).ok_or_else(|| {
            Error::Data("no row without missing values".into())
        })?;
        for (s, c) in specs.iter().zip(&cols) {
            if let Some(t) = (start..dates.len()).find(|&t| c[t].is_nan()) {
                return Err(Error::Data(format!("missing value in series {} at {}", s.name, dates[t])));
            }
        }
        let t = dates.len() - start;
        Ok(SeriesFrame {
            dates: dates[start..].to_vec(),
            names: specs.iter().map(|s| s.name.clone()).collect(),
            values: DMatrix::from_fn(t, specs.len(), |r, c| cols[c][start + r]),
            transforms: specs.iter().map(|s| s.transform).collect(),
        })
    }
}

impl SeriesFrame {
    /// CSV with a leading `date` column; values in full precision.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["date".to_string()];
        header.extend(self.names.iter().cloned());
        out.write_record(&header)?;
        for (r, d) in self.dates.iter().enumerate() {
            let mut rec = vec![d.to_string()];
            rec.extend(self.values.row(r).iter().map(|v| format!("{v:?}")));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn is_missing(s: &str) -> bool {
    let s = s.trim();
    s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan") || s == "."
}

/// Load the declared columns of a CSV whose first column is `date`.
pub fn load_csv(path: impl AsRef<Path>, specs: &[SeriesSpec]) -> Result<SeriesFrame> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("date") {
        return Err(Error::Data("first column must be named date".into()));
    }
    let idx = specs
        .iter()
        .map(|s| {
            headers
                .iter()
                .position(|h| h == s.name)
                .ok_or_else(|| Error::Data(format!("column {:?} missing from {}", s.name, path.display())))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut dates = Vec::new();
    let mut raw = vec![Vec::new(); specs.len()];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        dates.push(rec.get(0).unwrap_or("").parse::<Period>()?);
        for (c, &j) in idx.iter().enumerate() {
            let cell = rec.get(j).unwrap_or("");
            let v = if is_missing(cell) {
                f64::NAN
            } else {
                cell.trim().parse::<f64>().map_err(|_| {
                    Error::Data(format!("row {}: cannot parse {cell:?} in column {}", line + 2, specs[c].name))
                })?
            };
            raw[c].push(v);
        }
    }
    SeriesFrame::from_raw(dates, specs, raw)
}
