//! Small dense linear-algebra helpers on top of `nalgebra`.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Ordinary least squares via Householder QR. Returns (β, SSR).
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::Dimension(format!("design has {n} rows, response has {}", y.len())));
    }
    if n < p {
        return Err(Error::RankDeficient);
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if p == 0 || (0..p).any(|i| r[(i, i)].abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::RankDeficient);
    }
    let qty = qr.q().transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty.rows(0, p).into_owned())
        .ok_or(Error::RankDeficient)?;
    let resid = y - x * &beta;
    Ok((beta, resid.norm_squared()))
}

/// Lagged design `[1, s_{t-1}, …, s_{t-p}]` for t = p..n and the matching target.
pub fn ar_design(series: &[f64], lags: usize) -> (DMatrix<f64>, DVector<f64>) {
    let n = series.len().saturating_sub(lags);
    let x = DMatrix::from_fn(n, lags + 1, |r, c| if c == 0 { 1.0 } else { series[lags + r - c] });
    let y = DVector::from_fn(n, |r, _| series[lags + r]);
    (x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_exact_fit() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let y = DVector::from_vec(vec![1.0, 3.0, 5.0, 7.0]);
        let (b, ssr) = ols(&x, &y).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-12 && (b[1] - 2.0).abs() < 1e-12);
        assert!(ssr < 1e-20);
    }

    #[test]
    fn ols_rank_deficient() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(matches!(ols(&x, &y), Err(Error::RankDeficient)));
    }

    #[test]
    fn ar_design_layout() {
        let (x, y) = ar_design(&[1.0, 2.0, 3.0, 4.0], 2);
        assert_eq!(y.as_slice(), &[3.0, 4.0]);
        assert_eq!(x.row(0).iter().cloned().collect::<Vec<_>>(), vec![1.0, 2.0, 1.0]);
        assert_eq!(x.row(1).iter().cloned().collect::<Vec<_>>(), vec![1.0, 3.0, 2.0]);
    }
}
