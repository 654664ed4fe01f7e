//! Descriptive statistics and goodness-of-fit helpers used by evaluation
//! and by the validation suites.

use crate::special::norm_cdf;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Sample skewness (moment estimator).
pub fn skewness(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

/// Sample kurtosis (not excess).
pub fn kurtosis(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    m4 / (m2 * m2)
}

/// Standard error of the mean of an autocorrelated series by non-overlapping
/// batch means with min(50, ⌊√n⌋) batches.
pub fn batch_means_se(xs: &[f64]) -> f64 {
    let n = xs.len();
    let batches = ((n as f64).sqrt().floor() as usize).clamp(2, 50);
    let size = n / batches;
    let means: Vec<f64> = (0..batches).map(|b| mean(&xs[b * size..(b + 1) * size])).collect();
    (variance(&means) / batches as f64).sqrt()
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic p-value of the Kolmogorov distribution, P(K > √n_eff · d).
pub fn ks_pvalue(d: f64, n_eff: f64) -> f64 {
    let lam = (n_eff.sqrt() + 0.12 + 0.11 / n_eff.sqrt()) * d;
    if lam < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lam * lam).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// Two-sided p-value of a standard-normal z statistic.
pub fn z_pvalue(z: f64) -> f64 {
    2.0 * norm_cdf(-z.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_pvalue_reference_points() {
        // Kolmogorov distribution: P(K > 1.6276) = 0.01, P(K > 1.3581) = 0.05
        assert!((ks_pvalue(1.627_62 / 1e6f64.sqrt(), 1e6) - 0.01).abs() < 2e-4);
        assert!((ks_pvalue(1.358_1 / 1e6f64.sqrt(), 1e6) - 0.05).abs() < 5e-4);
    }

    #[test]
    fn ks_of_uniform_grid_is_small() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!((ks_statistic(&xs, |x| x) - 0.0005).abs() < 1e-12);
        assert_eq!(ks_two_sample(&xs, &xs), 0.0);
    }

    #[test]
    fn moments() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
        assert!(skewness(&xs).abs() < 1e-15);
    }
}
