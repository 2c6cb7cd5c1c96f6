use std::f64::consts::FRAC_1_SQRT_2;

use proptest::prelude::*;
use qwpersist::{
    compare_report, eigenbasis, fit_combined, fit_exponential, fit_power, make_coin, persistence_density_approx,
    persistence_exact, probability_series, ComparisonReport, CoinVector, Family, FitWindow, InitialCondition,
    Method, PersistenceSeries, Regime, ReportWindows, TheoryParams,
};

fn synthetic(m: i64, t_max: usize, f: impl Fn(f64) -> f64) -> PersistenceSeries {
    PersistenceSeries::new(m, Method::Exact, (1..=t_max).map(|t| f(t as f64).min(1.0)).collect()).unwrap()
}

fn asym(coin: &qwpersist::CoinMatrix) -> InitialCondition {
    let b = eigenbasis(coin);
    CoinVector::normalized((0..3).map(|k| (b[0].components()[k] + b[2].components()[k]) * FRAC_1_SQRT_2).collect())
        .unwrap()
        .into()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn combined_fit_recovers_exact_model(lambda in 0.05..1.5f64, gamma in 1e-4..2e-2f64, m in 1i64..5) {
        let s = synthetic(m, 3000, |t| (t / m as f64).powf(-lambda) * (-gamma * t).exp());
        let f = fit_combined(&s, FitWindow::new(m, 30, 3000).unwrap()).unwrap();
        prop_assert!((f.lambda_hat - lambda).abs() < 1e-8);
        prop_assert!((f.gamma_hat - gamma).abs() < 1e-8);
    }

    #[test]
    fn single_fits_recover_exact_models(lambda in 0.05..1.5f64, gamma in 1e-3..0.2f64) {
        let p = synthetic(1, 2000, |t| t.powf(-lambda));
        prop_assert!((fit_power(&p, FitWindow::new(1, 20, 2000).unwrap()).unwrap().lambda_hat - lambda).abs() < 1e-10);
        let e = synthetic(1, 2000, |t| (-gamma * t).exp());
        prop_assert!((fit_exponential(&e, FitWindow::new(1, 20, 2000).unwrap()).unwrap().gamma_hat - gamma).abs() < 1e-10);
    }

    #[test]
    fn power_slope_ignores_rescaling(lambda in 0.05..1.0f64, scale in 1e-6..1.0f64) {
        let base = synthetic(2, 1000, |t| (t / 2.0).powf(-lambda) * (1.0 + 0.3 / t));
        let scaled = synthetic(2, 1000, |t| scale * (t / 2.0).powf(-lambda) * (1.0 + 0.3 / t));
        let w = FitWindow::new(2, 10, 1000).unwrap();
        let (a, b) = (fit_power(&base, w).unwrap(), fit_power(&scaled, w).unwrap());
        prop_assert!((a.lambda_hat - b.lambda_hat).abs() < 1e-12);
        prop_assert!((b.intercept - a.intercept - scale.ln()).abs() < 1e-9);
    }
}

#[test]
fn combined_fit_on_power_law_reports_no_decay() {
    // On exact data both gamma_hat and its standard error are roundoff, so
    // only the size of gamma_hat is meaningful.
    for lambda in [0.1, 0.3183, 0.55, 1.2] {
        let s = synthetic(2, 10_000, |t| (t / 2.0).powf(-lambda));
        let f = fit_combined(&s, FitWindow::default_power(2, 10_000).unwrap()).unwrap();
        assert!(f.gamma_hat.abs() < 1e-12, "gamma_hat {}", f.gamma_hat);
        assert!((f.lambda_hat - lambda).abs() < 1e-10);
    }
}

#[test]
fn hadamard_power_fit() {
    let coin = make_coin(Family::TwoState, FRAC_1_SQRT_2).unwrap();
    let init: InitialCondition = eigenbasis(&coin)[0].clone().into();
    let s = probability_series(&init, &coin, &[2], 10_000).unwrap();
    let f = fit_power(&persistence_exact(&s[0]).unwrap(), FitWindow::new(2, 100, 10_000).unwrap()).unwrap();
    assert!((f.lambda_hat - 0.318).abs() < 0.01);
}

#[test]
fn two_state_exact_and_density_approx_share_slope() {
    let coin = make_coin(Family::TwoState, 0.5).unwrap();
    let init: InitialCondition = eigenbasis(&coin)[0].clone().into();
    let params = TheoryParams::from_initial(&init, &coin).unwrap();
    let w = FitWindow::default_power(3, 5000).unwrap();
    let exact = persistence_exact(&probability_series(&init, &coin, &[3], 5000).unwrap()[0]).unwrap();
    let approx = persistence_density_approx(&params, 3, 5000).unwrap();
    let (a, b) = (fit_power(&exact, w).unwrap(), fit_power(&approx, w).unwrap());
    assert!((a.lambda_hat - b.lambda_hat).abs() < 0.01, "{} vs {}", a.lambda_hat, b.lambda_hat);
}

#[test]
fn grover_sigma2_exponential_fit() {
    let coin = make_coin(Family::ThreeState, 1.0 / 3f64.sqrt()).unwrap();
    let init: InitialCondition = eigenbasis(&coin)[2].clone().into();
    let s = probability_series(&init, &coin, &[1], 2000).unwrap();
    let f = fit_exponential(&persistence_exact(&s[0]).unwrap(), FitWindow::default_exponential(1, 2000).unwrap()).unwrap();
    assert!((f.gamma_hat - 0.1225).abs() / 0.1225 < 0.1);
}

#[test]
fn sigma1_combined_fit_has_negligible_decay() {
    let coin = make_coin(Family::ThreeState, 0.6).unwrap();
    let init: InitialCondition = eigenbasis(&coin)[1].clone().into();
    let s = probability_series(&init, &coin, &[2], 4000).unwrap();
    let f = fit_combined(&persistence_exact(&s[0]).unwrap(), FitWindow::default_power(2, 4000).unwrap()).unwrap();
    assert!(f.gamma_hat.abs() * 4000.0 < 1e-3);
    assert!(f.residual_rms < 1e-3);
}

#[test]
fn two_state_report_slopes_agree_across_sides() {
    let coin = make_coin(Family::TwoState, 0.5).unwrap();
    let init: InitialCondition = eigenbasis(&coin)[0].clone().into();
    let r = compare_report(&init, &coin, "chi+", &[2, -2], 6000, ReportWindows::default()).unwrap();
    let (a, b) = (&r.sites[0], &r.sites[1]);
    assert_eq!((a.regime, b.regime), (Regime::PowerLaw, Regime::PowerLaw));
    // Same slope up to the finite-T drift of the odd density term.
    assert!((a.power.lambda_hat - b.power.lambda_hat).abs() < 0.01);
    assert!(a.lambda_rel_error.unwrap().abs() < 0.02 && b.lambda_rel_error.unwrap().abs() < 0.02);
    assert!(a.log_approx_bound_holds && b.log_approx_bound_holds);
}

#[test]
fn half_line_report() {
    let coin = make_coin(Family::ThreeState, 0.5).unwrap();
    let r = compare_report(&asym(&coin), &coin, "asym", &[-2, 2], 4000, ReportWindows::default()).unwrap();
    let (neg, pos) = (&r.sites[0], &r.sites[1]);
    assert_eq!(neg.regime, Regime::PowerLaw);
    assert_eq!(pos.regime, Regime::Combined);
    assert!(neg.combined.unwrap().gamma_hat.abs() < 1e-6);
    assert!(pos.combined.unwrap().gamma_hat > 1e-3);
    assert!(pos.gamma_rel_error.unwrap().abs() < 0.1);
}

#[test]
fn report_json_round_trip() {
    let coin = make_coin(Family::ThreeState, 0.8).unwrap();
    let init: InitialCondition = eigenbasis(&coin)[0].clone().into();
    let windows = ReportWindows { power: Some((50, 800)), exponential: None };
    let r = compare_report(&init, &coin, "sigma+", &[1, -3], 800, windows).unwrap();
    let text = r.to_json().unwrap();
    let back = ComparisonReport::from_json(&text).unwrap();
    assert_eq!(back, r);
    assert_eq!(back.to_json().unwrap(), text);
}

#[test]
fn report_rejects_site_zero_and_bad_windows() {
    let coin = make_coin(Family::TwoState, 0.5).unwrap();
    let init: InitialCondition = eigenbasis(&coin)[0].clone().into();
    assert!(compare_report(&init, &coin, "chi+", &[0], 200, ReportWindows::default()).is_err());
    let narrow = ReportWindows { power: Some((100, 110)), exponential: None };
    assert!(compare_report(&init, &coin, "chi+", &[2], 200, narrow).is_err());
}
