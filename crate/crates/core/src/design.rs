//! Lagged regressor designs for the univariate model.
//!
//! Data are held as a T × (1 + n_exo) matrix whose first column is the
//! target. The row of regressors for period t reads only rows strictly before
//! t, so a design assembled at an origin never touches later observations.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniDesign {
    /// Lags of the target in the mean equation.
    pub y_lags: usize,
    /// Lags of every exogenous column in the mean equation (0 = excluded).
    pub exo_lags: usize,
    pub n_exo: usize,
    /// Exogenous columns (0-based among the exogenous block) entering the
    /// volatility state equation with one lag.
    #[serde(default)]
    pub vol_exo: Vec<usize>,
    /// Same for the shape state equation.
    #[serde(default)]
    pub shape_exo: Vec<usize>,
}

/// Design matrices over the effective sample.
#[derive(Debug, Clone)]
pub struct UniDesignData {
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    pub vol_exo: Option<DMatrix<f64>>,
    pub shape_exo: Option<DMatrix<f64>>,
    /// Index of the first effective period in the input rows.
    pub first_row: usize,
}

impl UniDesign {
    pub fn validate(&self) -> Result<()> {
        if let Some(&j) = self.vol_exo.iter().chain(&self.shape_exo).find(|&&j| j >= self.n_exo) {
            return Err(Error::Config(format!("state-equation driver {j} outside {} exogenous columns", self.n_exo)));
        }
        Ok(())
    }

    pub fn n_coef(&self) -> usize {
        1 + self.y_lags + self.n_exo * self.exo_lags
    }

    /// Rows consumed before the first effective period.
    pub fn max_lag(&self) -> usize {
        let state = usize::from(!self.vol_exo.is_empty() || !self.shape_exo.is_empty());
        self.y_lags.max(if self.n_exo > 0 { self.exo_lags } else { 0 }).max(state).max(1)
    }

    pub fn regressor_names(&self, names: &[String]) -> Vec<String> {
        let mut out = vec!["const".to_string()];
        out.extend((1..=self.y_lags).map(|l| format!("{}(-{l})", names[0])));
        for j in 0..self.n_exo {
            out.extend((1..=self.exo_lags).map(|l| format!("{}(-{l})", names[1 + j])));
        }
        out
    }

    /// Mean-equation regressors for period `t`; reads rows `< t` only.
    pub fn regressor_row(&self, data: &DMatrix<f64>, t: usize) -> Vec<f64> {
        let mut row = Vec::with_capacity(self.n_coef());
        row.push(1.0);
        row.extend((1..=self.y_lags).map(|l| data[(t - l, 0)]));
        for j in 0..self.n_exo {
            row.extend((1..=self.exo_lags).map(|l| data[(t - l, 1 + j)]));
        }
        row
    }

    /// Drivers of the volatility and shape transitions into period `t`.
    pub fn state_exo_row(&self, data: &DMatrix<f64>, t: usize) -> (Vec<f64>, Vec<f64>) {
        let pick = |cols: &[usize]| cols.iter().map(|&j| data[(t - 1, 1 + j)]).collect();
        (pick(&self.vol_exo), pick(&self.shape_exo))
    }

    pub fn build(&self, data: &DMatrix<f64>) -> Result<UniDesignData> {
        self.validate()?;
        if data.ncols() != 1 + self.n_exo {
            return Err(Error::Dimension(format!("data has {} columns, design expects {}", data.ncols(), 1 + self.n_exo)));
        }
        let m = self.max_lag();
        if data.nrows() <= m {
            return Err(Error::InsufficientData(format!("{} rows for {m} lags", data.nrows())));
        }
        let t_eff = data.nrows() - m;
        let mut x = DMatrix::zeros(t_eff, self.n_coef());
        let mut vol = DMatrix::zeros(t_eff, self.vol_exo.len());
        let mut shape = DMatrix::zeros(t_eff, self.shape_exo.len());
        for r in 0..t_eff {
            let t = m + r;
            for (c, v) in self.regressor_row(data, t).into_iter().enumerate() {
                x[(r, c)] = v;
            }
            let (dv, ds) = self.state_exo_row(data, t);
            for (c, v) in dv.into_iter().enumerate() {
                vol[(r, c)] = v;
            }
            for (c, v) in ds.into_iter().enumerate() {
                shape[(r, c)] = v;
            }
        }
        Ok(UniDesignData {
            x,
            y: data.rows(m, t_eff).column(0).iter().copied().collect(),
            vol_exo: (!self.vol_exo.is_empty()).then_some(vol),
            shape_exo: (!self.shape_exo.is_empty()).then_some(shape),
            first_row: m,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gar() -> UniDesign {
        UniDesign { y_lags: 2, exo_lags: 1, n_exo: 1, vol_exo: vec![], shape_exo: vec![0] }
    }

    #[test]
    fn layout_and_lags() {
        let data = DMatrix::from_fn(6, 2, |r, c| (10 * c + r) as f64);
        let d = gar().build(&data).unwrap();
        assert_eq!(d.first_row, 2);
        assert_eq!(d.y, vec![2.0, 3.0, 4.0, 5.0]);
        // [1, y(-1), y(-2), x(-1)] at t = 2
        assert_eq!(d.x.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 1.0, 0.0, 11.0]);
        assert_eq!(d.shape_exo.unwrap()[(0, 0)], 11.0);
        assert!(d.vol_exo.is_none());
    }

    #[test]
    fn prefix_designs_agree_with_full_sample() {
        let full = DMatrix::from_fn(30, 2, |r, c| ((r * 7 + c * 3) % 11) as f64);
        let design = gar();
        let all = design.build(&full).unwrap();
        for origin in 10..30 {
            let part = design.build(&full.rows(0, origin).into_owned()).unwrap();
            let n = part.y.len();
            assert_eq!(part.x, all.x.rows(0, n).into_owned());
        }
    }

    #[test]
    fn rejects_bad_driver_index() {
        let d = UniDesign { shape_exo: vec![3], ..gar() };
        assert!(d.validate().is_err());
    }
}
