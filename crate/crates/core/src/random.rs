//! Random variate generators shared by the samplers.

use crate::error::{Error, Result};
use crate::special::{norm_cdf, norm_quantile};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Seeded generator used throughout; ChaCha keeps streams identical across platforms.
pub type ChainRng = rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> ChainRng {
    use rand::SeedableRng;
    ChainRng::seed_from_u64(seed)
}

/// Derive an independent seed from a master seed and a stream label (splitmix64).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Open-interval uniform on (0, 1).
fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Draw from N(mean, var) truncated to [0, ∞).
///
/// Inverse-CDF on whichever side of the truncation point keeps the tail
/// probability well conditioned; Robert's exponential rejection sampler
/// once the bound sits more than 8 sd above the mean.
pub fn truncated_normal_positive<R: Rng + ?Sized>(rng: &mut R, mean: f64, var: f64) -> f64 {
    let sd = var.sqrt();
    let a = -mean / sd; // standardized lower bound
    let z = if a <= 0.0 {
        let pa = norm_cdf(a);
        let u = open_uniform(rng);
        norm_quantile(pa + u * (1.0 - pa))
    } else if a < 8.0 {
        // z = -Φ⁻¹(U Φ(-a)) keeps precision in the upper tail
        let u = open_uniform(rng);
        -norm_quantile(u * norm_cdf(-a))
    } else {
        let alpha = 0.5 * (a + (a * a + 4.0).sqrt());
        loop {
            let e = -open_uniform(rng).ln() / alpha;
            let z = a + e;
            let rho = (-0.5 * (z - alpha) * (z - alpha)).exp();
            if open_uniform(rng) <= rho {
                break z;
            }
        }
    };
    (mean + sd * z).max(0.0)
}

/// Gamma(shape, rate).
pub fn gamma_rate<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    Gamma::new(shape, 1.0 / rate).expect("gamma parameters must be positive").sample(rng)
}

/// Inverse-Gamma with density ∝ x^{-(shape+1)} exp(-scale / x).
pub fn inverse_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> f64 {
    let g = Gamma::new(shape, 1.0).expect("inverse-gamma shape must be positive").sample(rng);
    scale / g
}

/// Index drawn with probability proportional to exp(log_w[k] - max).
pub fn categorical_log<R: Rng + ?Sized>(rng: &mut R, log_w: &[f64]) -> Option<usize> {
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let total: f64 = log_w.iter().map(|w| (w - max).exp()).sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (k, w) in log_w.iter().enumerate() {
        let p = (w - max).exp();
        if p > 0.0 {
            last = k;
        }
        if u < p {
            return Some(k);
        }
        u -= p;
    }
    Some(last)
}

/// Draw from N(P⁻¹ b, P⁻¹) given the precision matrix P and the
/// precision-weighted mean b. Returns (draw, mean).
pub fn mvn_from_precision<R: Rng + ?Sized>(
    rng: &mut R,
    precision: DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = b.len();
    let chol = precision
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite(format!("{n}x{n} posterior precision")))?;
    let mean = chol.solve(b);
    let z = DVector::from_fn(n, |_, _| std_normal(rng));
    // L Lᵀ = P, so x = mean + L⁻ᵀ z has covariance P⁻¹
    let lt = chol.l().transpose();
    let shift = lt
        .solve_upper_triangular(&z)
        .ok_or_else(|| Error::NotPositiveDefinite("singular Cholesky factor".into()))?;
    Ok((&mean + shift, mean))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    /// Moments of N(mu, s²) truncated to [0, ∞) from the closed form.
    fn tn_moments(mu: f64, s: f64) -> (f64, f64) {
        let a = -mu / s;
        let lam = crate::special::norm_pdf(a) / norm_cdf(-a);
        let mean = mu + s * lam;
        let var = s * s * (1.0 + a * lam - lam * lam);
        (mean, var)
    }

    #[test]
    fn truncated_normal_moments_match_closed_form() {
        let mut rng = seeded(7);
        for &(mu, var) in &[(0.0, 1.0), (1.5, 0.36), (-2.0, 0.36), (-6.0, 0.25)] {
            let xs: Vec<f64> =
                (0..200_000).map(|_| truncated_normal_positive(&mut rng, mu, var)).collect();
            let (m, v) = mean_var(&xs);
            let (em, ev) = tn_moments(mu, var.sqrt());
            let se = (ev / xs.len() as f64).sqrt();
            assert!((m - em).abs() < 4.0 * se, "mu={mu}: {m} vs {em}");
            assert!((v / ev - 1.0).abs() < 0.02, "mu={mu}: {v} vs {ev}");
            assert!(xs.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn far_tail_uses_rejection_and_stays_above_bound() {
        let mut rng = seeded(3);
        for _ in 0..1000 {
            let x = truncated_normal_positive(&mut rng, -20.0, 1.0);
            assert!(x >= 0.0 && x < 1.0);
        }
    }

    #[test]
    fn inverse_gamma_mean() {
        let mut rng = seeded(11);
        let xs: Vec<f64> = (0..200_000).map(|_| inverse_gamma(&mut rng, 5.0, 0.16)).collect();
        let (m, _) = mean_var(&xs);
        assert!((m - 0.04).abs() < 5e-4);
    }

    #[test]
    fn categorical_rejects_all_zero_weights() {
        let mut rng = seeded(1);
        assert!(categorical_log(&mut rng, &[f64::NEG_INFINITY; 3]).is_none());
        assert_eq!(categorical_log(&mut rng, &[f64::NEG_INFINITY, 0.0]), Some(1));
    }

    #[test]
    fn mvn_draw_has_requested_covariance() {
        let mut rng = seeded(5);
        let p = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let cov = p.clone().try_inverse().unwrap();
        let b = DVector::from_vec(vec![1.0, -1.0]);
        let n = 100_000;
        let mut s = DMatrix::zeros(2, 2);
        let mut m = DVector::zeros(2);
        for _ in 0..n {
            let (x, _) = mvn_from_precision(&mut rng, p.clone(), &b).unwrap();
            m += &x;
            s += &x * x.transpose();
        }
        m /= n as f64;
        let emp = s / n as f64 - &m * m.transpose();
        let mean = &cov * &b;
        assert!((m - mean).amax() < 0.01);
        assert!((emp - cov).amax() < 0.01);
    }
}
