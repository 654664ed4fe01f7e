use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use tvssv::abg_qr::{check_loss, fit_quantile_regression, interpolate_skew_t, quantile_regression, INTERPOLATION_TAUS};
use rand::Rng;
use tvssv::random::{seeded, std_normal};
use tvssv::skewdist::{ShockFamily, ShapeValue, SkewLocScale};
use tvssv::special::norm_quantile;

fn loss(x: &DMatrix<f64>, y: &DVector<f64>, b: &DVector<f64>, tau: f64) -> f64 {
    (y - x * b).iter().map(|&r| check_loss(r, tau)).sum()
}

/// Exact LP optimum by enumerating basic solutions through every p-subset.
fn brute_force(x: &DMatrix<f64>, y: &DVector<f64>, tau: f64) -> (DVector<f64>, f64) {
    let n = x.nrows();
    let mut best = (DVector::zeros(2), f64::INFINITY);
    for i in 0..n {
        for j in i + 1..n {
            let xb = DMatrix::from_row_slice(2, 2, &[x[(i, 0)], x[(i, 1)], x[(j, 0)], x[(j, 1)]]);
            let yb = DVector::from_vec(vec![y[i], y[j]]);
            if let Some(b) = xb.lu().solve(&yb) {
                let l = loss(x, y, &b, tau);
                if l < best.1 {
                    best = (b, l);
                }
            }
        }
    }
    best
}

#[test]
fn matches_vertex_enumeration_on_small_problems() {
    let mut rng = seeded(3);
    for rep in 0..20 {
        let n = 15 + rep;
        let x = DMatrix::from_fn(n, 2, |_, c| if c == 0 { 1.0 } else { std_normal(&mut rng) });
        let y = DVector::from_fn(n, |i, _| 0.5 + x[(i, 1)] + std_normal(&mut rng));
        for tau in [0.1, 0.5, 0.83] {
            let b = quantile_regression(&x, &y, tau).unwrap();
            let (bb, lb) = brute_force(&x, &y, tau);
            let l = loss(&x, &y, &b, tau);
            assert!(l <= lb + 1e-10, "rep {rep} tau {tau}: {l} vs {lb}");
            assert!((&b - &bb).amax() < 1e-8, "rep {rep} tau {tau}: {b} vs {bb}");
        }
    }
}

#[test]
fn location_scale_slopes() {
    let mut rng = seeded(17);
    let n = 100_000;
    let xs: Vec<f64> = (0..n).map(|_| 2.0 * rng.random::<f64>()).collect();
    let x = DMatrix::from_fn(n, 2, |i, c| if c == 0 { 1.0 } else { xs[i] });
    let y = DVector::from_fn(n, |i, _| 1.0 + 0.5 * xs[i] + (1.0 + 0.3 * xs[i]) * std_normal(&mut rng));
    let taus = [0.05, 0.5, 0.95];
    let fit = fit_quantile_regression(&x, &y, &taus).unwrap();
    for (k, &t) in taus.iter().enumerate() {
        let want = 0.5 + 0.3 * norm_quantile(t);
        assert!((fit.betas[(k, 1)] - want).abs() < 0.02, "tau {t}: {} vs {want}", fit.betas[(k, 1)]);
    }
    let at_mean = fit.predict(&[1.0, 1.0]);
    assert!(at_mean[0] <= at_mean[2]);
}

#[test]
fn rank_deficient_design_is_an_error() {
    let x = DMatrix::from_fn(20, 2, |_, _| 1.0);
    let y = DVector::from_fn(20, |i, _| i as f64);
    assert!(quantile_regression(&x, &y, 0.5).is_err());
}

fn targets(d: &SkewLocScale) -> Vec<f64> {
    d.quantiles(&INTERPOLATION_TAUS)
}

#[test]
fn recovers_symmetric_student_t() {
    let d = SkewLocScale { location: 0.0, scale: 0.6f64.sqrt(), lambda: 0.0, nu: Some(5.0) };
    let fit = interpolate_skew_t(&INTERPOLATION_TAUS, &targets(&d)).unwrap();
    assert!(fit.dist.lambda.abs() < 0.1, "{fit:?}");
    assert!((3.5..=8.0).contains(&fit.nu()), "{fit:?}");
}

#[test]
fn gaussian_targets_reproduce_tails() {
    let t: Vec<f64> = INTERPOLATION_TAUS.iter().map(|&p| norm_quantile(p)).collect();
    let fit = interpolate_skew_t(&INTERPOLATION_TAUS, &t).unwrap();
    assert!((fit.dist.quantile(0.05) - norm_quantile(0.05)).abs() < 0.02);
    assert!((fit.dist.quantile(0.95) - norm_quantile(0.95)).abs() < 0.02);
}

#[test]
fn recovers_skewed_shapes() {
    for lambda in [-2.0, -0.7, 1.0, 3.0] {
        let c = ShockFamily::SkewT { nu: 5.0 }.constrain(ShapeValue::new(lambda).unwrap()).unwrap();
        let d = SkewLocScale { location: 1.0 + c.zeta(), scale: 2.0 * c.omega2().sqrt(), lambda, nu: Some(5.0) };
        let fit = interpolate_skew_t(&INTERPOLATION_TAUS, &targets(&d)).unwrap();
        assert!((fit.dist.lambda - lambda).abs() < 0.1, "lambda {lambda}: {fit:?}");
    }
}

#[test]
fn left_shifted_tail_gives_negative_shape() {
    let mut t: Vec<f64> = INTERPOLATION_TAUS.iter().map(|&p| norm_quantile(p)).collect();
    t[0] -= 0.5;
    let fit = interpolate_skew_t(&INTERPOLATION_TAUS, &t).unwrap();
    assert!(fit.dist.lambda < 0.0, "{fit:?}");
}

#[test]
fn interpolation_is_deterministic() {
    let t = [-2.0, -0.5, 0.6, 1.4];
    assert_eq!(interpolate_skew_t(&INTERPOLATION_TAUS, &t).unwrap(), interpolate_skew_t(&INTERPOLATION_TAUS, &t).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn qr_is_equivariant_to_location_shift(shift in -5.0f64..5.0, tau in 0.05f64..0.95) {
        let mut rng = seeded(5);
        let n = 40;
        let x = DMatrix::from_fn(n, 2, |_, c| if c == 0 { 1.0 } else { std_normal(&mut rng) });
        let y = DVector::from_fn(n, |i, _| x[(i, 1)] + std_normal(&mut rng));
        let b = quantile_regression(&x, &y, tau).unwrap();
        let ys = y.map(|v| v + shift);
        let bs = quantile_regression(&x, &ys, tau).unwrap();
        prop_assert!((loss(&x, &ys, &bs, tau) - loss(&x, &y, &b, tau)).abs() < 1e-8 * (1.0 + loss(&x, &y, &b, tau)));
    }
}
