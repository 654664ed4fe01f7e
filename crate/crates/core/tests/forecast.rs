use nalgebra::DMatrix;
use tvssv::design::UniDesign;
use tvssv::draws::{ChainMeta, Draw, EquationDraw, ModelKind, PathMethod, PosteriorDraws};
use tvssv::forecast::{forecast_uni, forecast_var, write_draws_csv, ForecastConfig};
use tvssv::skewdist::ShockFamily;
use tvssv::special::{norm_cdf, norm_pdf};
use tvssv::states::LatentPaths;
use tvssv::stats::{kurtosis, ks_pvalue, ks_statistic, mean, skewness, variance};

fn meta(kind: ModelKind, family: ShockFamily, variables: &[&str], lags: usize) -> ChainMeta {
    ChainMeta {
        kind,
        family,
        seed: 0,
        iters: 1,
        burn_in: 0,
        thin: 1,
        particles: 10,
        path_method: PathMethod::Pgas,
        variables: variables.iter().map(|s| s.to_string()).collect(),
        regressors: vec![],
        lags,
        full_paths: false,
    }
}

/// Equation whose states stay put: φ = 1, negligible innovations.
fn frozen_eq(h: f64, lambda: f64, beta_lambda: Vec<f64>) -> EquationDraw {
    EquationDraw {
        phi_h: 1.0,
        phi_lambda: 1.0,
        beta_h: vec![],
        beta_lambda,
        sigma2_eta: 1e-14,
        sigma2_xi: 1e-14,
        paths: LatentPaths::constant(1, h.ln(), lambda),
    }
}

fn uni_draws(family: ShockFamily, coef: Vec<f64>, eq: EquationDraw, n: usize) -> PosteriorDraws {
    let d = Draw { coef, a_free: vec![], equations: vec![eq] };
    PosteriorDraws { meta: meta(ModelKind::Univariate, family, &["y"], 0), draws: vec![d; n] }
}

fn const_only() -> UniDesign {
    UniDesign { y_lags: 0, exo_lags: 0, n_exo: 0, vol_exo: vec![], shape_exo: vec![] }
}

fn cfg(seed: u64, sims: usize, horizon: usize) -> ForecastConfig {
    ForecastConfig { horizon, sims_per_draw: sims, seed }
}

#[test]
fn symmetric_skew_normal_collapses_to_gaussian() {
    let draws = uni_draws(ShockFamily::SkewNormal, vec![0.0], frozen_eq(1.0, 0.0, vec![]), 200);
    let data = DMatrix::from_element(3, 1, 0.0);
    let pd = &forecast_uni(&draws, &const_only(), &data, &cfg(1, 100, 1), "o").unwrap()[0];
    assert_eq!(pd.len(), 20_000);
    let d = ks_statistic(&pd.draws, norm_cdf);
    assert!(ks_pvalue(d, pd.len() as f64) > 0.001, "D = {d}");
    for y in [-2.0, 0.0, 1.3] {
        assert!((pd.log_density(y).exp() - norm_pdf(y)).abs() < 1e-9);
    }
}

#[test]
fn predictive_mean_is_the_regression_mean() {
    // AR(1) mean 1 + 0.5·y_{t-1} with y_T = 2: one step ahead is 2.
    let design = UniDesign { y_lags: 1, ..const_only() };
    let draws = uni_draws(ShockFamily::SkewT { nu: 5.0 }, vec![1.0, 0.5], frozen_eq(0.25, 1.5, vec![]), 400);
    let data = DMatrix::from_row_slice(3, 1, &[0.0, 0.0, 2.0]);
    let pds = forecast_uni(&draws, &design, &data, &cfg(2, 100, 2), "o").unwrap();
    let m1 = mean(&pds[0].draws);
    let se = (variance(&pds[0].draws) / pds[0].len() as f64).sqrt();
    assert!((m1 - 2.0).abs() < 4.0 * se, "mean {m1}, se {se}");
    // Shocks are mean zero with variance h, so the two-step mean is also 2.
    assert!((variance(&pds[0].draws) - 0.25).abs() < 0.03);
    assert!((mean(&pds[1].draws) - 2.0).abs() < 0.03);
}

#[test]
fn tighter_conditions_lower_skewness_and_quantile() {
    // λ_T+1 = λ_T - 1·x_T: a high driver pushes mass to the left.
    let design = UniDesign { y_lags: 0, exo_lags: 1, n_exo: 1, vol_exo: vec![], shape_exo: vec![0] };
    let draws = uni_draws(ShockFamily::SkewT { nu: 8.0 }, vec![0.0, 0.0], frozen_eq(1.0, 0.0, vec![-1.0]), 500);
    let run = |x: f64| {
        let data = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, x]);
        forecast_uni(&draws, &design, &data, &cfg(3, 100, 1), "o").unwrap().remove(0)
    };
    let (calm, stress) = (run(0.0), run(2.0));
    assert!(skewness(&stress.draws) < skewness(&calm.draws) - 0.3);
    assert!(stress.gar_quantile(0.05) < calm.gar_quantile(0.05));
    assert!(stress.components.iter().all(|c| (c.lambda + 2.0).abs() < 1e-3));
}

#[test]
fn gaussian_quantile_and_shortfall() {
    let draws = uni_draws(ShockFamily::SkewNormal, vec![0.0], frozen_eq(1.0, 0.0, vec![]), 1000);
    let data = DMatrix::from_element(2, 1, 0.0);
    let pd = &forecast_uni(&draws, &const_only(), &data, &cfg(4, 200, 1), "o").unwrap()[0];
    let z = -1.6448536269514722;
    assert!((pd.gar_quantile(0.05) - z).abs() < 0.02);
    let es = -norm_pdf(z) / 0.05;
    assert!((pd.expected_shortfall(0.05) - es).abs() < 0.03, "{}", pd.expected_shortfall(0.05));
    assert!((pd.recession_prob() - 0.5).abs() < 0.005);
}

#[test]
fn skew_t_tails_are_heavier() {
    let data = DMatrix::from_element(2, 1, 0.0);
    let run = |family| {
        let draws = uni_draws(family, vec![0.0], frozen_eq(1.0, 0.5, vec![]), 1000);
        forecast_uni(&draws, &const_only(), &data, &cfg(5, 200, 1), "o").unwrap().remove(0)
    };
    let sn = run(ShockFamily::SkewNormal);
    let st = run(ShockFamily::SkewT { nu: 6.0 });
    assert!(kurtosis(&st.draws) > kurtosis(&sn.draws) + 1.0);
    assert!((variance(&st.draws) - 1.0).abs() < 0.05);
}

#[test]
fn same_seed_same_draws() {
    let draws = uni_draws(ShockFamily::SkewT { nu: 5.0 }, vec![0.3], frozen_eq(1.0, -1.0, vec![]), 50);
    let data = DMatrix::from_element(2, 1, 0.0);
    let a = forecast_uni(&draws, &const_only(), &data, &cfg(6, 3, 2), "o").unwrap();
    let b = forecast_uni(&draws, &const_only(), &data, &cfg(6, 3, 2), "o").unwrap();
    assert_eq!(a, b);
    let mut buf = Vec::new();
    write_draws_csv(&mut buf, &a).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("origin,horizon,variable,draw_index,value\n"));
    assert_eq!(text.lines().count(), 1 + 2 * 150);
}

#[test]
fn var_components_condition_on_earlier_shocks() {
    // y1 = 1 + e1, y2 = -1 + 0.5·e1 + e2 with A⁻¹ = [[1,0],[0.5,1]].
    let eqs = vec![frozen_eq(1.0, 0.0, vec![]), frozen_eq(0.5, 0.0, vec![])];
    let coef = vec![1.0, 0.0, 0.0, -1.0, 0.0, 0.0];
    let d = Draw { coef, a_free: vec![-0.5], equations: eqs };
    let draws =
        PosteriorDraws { meta: meta(ModelKind::Var, ShockFamily::SkewNormal, &["a", "b"], 1), draws: vec![d; 500] };
    let levels = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 0.0]);
    let pds = forecast_var(&draws, &levels, &cfg(7, 100, 1), "o").unwrap();
    assert_eq!(pds.len(), 2);
    let (a, b) = (&pds[0].draws, &pds[1].draws);
    assert!((mean(a) - 1.0).abs() < 0.03 && (mean(b) + 1.0).abs() < 0.03);
    let cov = a.iter().zip(b).map(|(x, y)| (x - mean(a)) * (y - mean(b))).sum::<f64>() / a.len() as f64;
    assert!((cov - 0.5).abs() < 0.03, "cov {cov}");
    assert!((variance(b) - 0.75).abs() < 0.03);
    // The component of b is conditional: its variance is h alone.
    let c = pds[1].components[0];
    assert!((c.scale * c.scale - 0.5).abs() < 1e-6);
}

#[test]
fn wrong_kind_is_rejected() {
    let draws = uni_draws(ShockFamily::SkewNormal, vec![0.0], frozen_eq(1.0, 0.0, vec![]), 2);
    let levels = DMatrix::from_element(2, 1, 0.0);
    assert!(forecast_var(&draws, &levels, &cfg(0, 1, 1), "o").is_err());
}
