//! Least-squares extraction of power-law exponents and decay rates from
//! persistence series, and per-site comparison against the closed forms.
//!
//! All fits are ordinary least squares on `ln P`. Points with
//! `P < 1e-300` are dropped before fitting.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::coin::{CoinMatrix, Family, InitialCondition};
use crate::error::{Error, Result};
use crate::persistence::{persistence_exact, persistence_log_approx, PersistenceSeries};
use crate::simulator::probability_series;
use crate::theory::{asymptotic_law, asymptotic_persistence, AsymptoticLaw, TheoryParams};

/// Smallest number of samples a window may hold.
pub const MIN_WINDOW_POINTS: usize = 20;
/// Values below this are excluded from fits.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;
/// Fits with `1 - r^2 < COLLINEARITY_TOL` between `ln T` and `T` are rejected.
pub const COLLINEARITY_TOL: f64 = 1e-3;

/// Inclusive range of step counts `[t_lo, t_hi]` used by a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitWindow {
    pub t_lo: usize,
    pub t_hi: usize,
}

impl FitWindow {
    /// Checks `|m| < t_lo < t_hi` and the minimum sample count.
    pub fn new(m: i64, t_lo: usize, t_hi: usize) -> Result<Self> {
        if (t_lo as u64) <= m.unsigned_abs() {
            return Err(Error::domain(format!("window start {t_lo} must exceed |m| = {}", m.unsigned_abs())));
        }
        if t_hi <= t_lo {
            return Err(Error::domain(format!("empty window [{t_lo}, {t_hi}]")));
        }
        if t_hi - t_lo + 1 < MIN_WINDOW_POINTS {
            return Err(Error::domain(format!(
                "window [{t_lo}, {t_hi}] holds fewer than {MIN_WINDOW_POINTS} points"
            )));
        }
        Ok(FitWindow { t_lo, t_hi })
    }

    /// `[T_max/100, T_max]`, moved past the light cone if necessary.
    pub fn default_power(m: i64, t_max: usize) -> Result<Self> {
        Self::new(m, (t_max / 100).max(m.unsigned_abs() as usize + 1), t_max)
    }

    /// `[T_max/2, T_max]`, moved past the light cone if necessary.
    pub fn default_exponential(m: i64, t_max: usize) -> Result<Self> {
        Self::new(m, (t_max / 2).max(m.unsigned_abs() as usize + 1), t_max)
    }

    pub fn len(&self) -> usize {
        self.t_hi - self.t_lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for FitWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.t_lo, self.t_hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `ln P = c - lambda ln T`
    Power,
    /// `ln P = c - gamma T`
    Exponential,
    /// `ln P = c - lambda ln T - gamma T`
    Combined,
}

impl fmt::Display for FitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitModel::Power => "power",
            FitModel::Exponential => "exponential",
            FitModel::Combined => "combined",
        })
    }
}

/// Estimates with their OLS standard errors. Parameters absent from the
/// model are reported as exactly zero with zero error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub lambda_hat: f64,
    pub gamma_hat: f64,
    pub intercept: f64,
    pub lambda_se: f64,
    pub gamma_se: f64,
    /// Correlation of the two slope estimates (combined model only).
    pub correlation: f64,
    pub residual_rms: f64,
    pub n_points: usize,
    pub window: FitWindow,
}

fn window_points(series: &PersistenceSeries, window: FitWindow) -> Result<(Vec<f64>, Vec<f64>)> {
    FitWindow::new(series.m(), window.t_lo, window.t_hi)?;
    if window.t_hi > series.t_max() {
        return Err(Error::domain(format!(
            "window {window} extends past the series end T = {}",
            series.t_max()
        )));
    }
    let (ts, ys): (Vec<f64>, Vec<f64>) = (window.t_lo..=window.t_hi)
        .map(|t| (t as f64, series.at(t)))
        .filter(|&(_, p)| p >= UNDERFLOW_FLOOR)
        .map(|(t, p)| (t, p.ln()))
        .unzip();
    if ts.len() < MIN_WINDOW_POINTS {
        return Err(Error::Fit(format!(
            "only {} points in {window} are above {UNDERFLOW_FLOOR:e}; need {MIN_WINDOW_POINTS}",
            ts.len()
        )));
    }
    Ok((ts, ys))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn centered(v: &[f64]) -> (f64, Vec<f64>) {
    let mu = mean(v);
    (mu, v.iter().map(|x| x - mu).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Slope, intercept, slope SE and residual rms of `y ~ a + b x`.
fn ols1(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64, f64)> {
    let (mx, xc) = centered(x);
    let (my, yc) = centered(y);
    let sxx = dot(&xc, &xc);
    if !(sxx > 0.0) {
        return Err(Error::Fit("regressor is constant over the window".into()));
    }
    let slope = dot(&xc, &yc) / sxx;
    let rss: f64 = xc.iter().zip(&yc).map(|(x, y)| (y - slope * x).powi(2)).sum();
    let n = x.len() as f64;
    let se = (rss / (n - 2.0) / sxx).sqrt();
    Ok((slope, my - slope * mx, se, (rss / n).sqrt()))
}

fn fit_single(series: &PersistenceSeries, window: FitWindow, model: FitModel) -> Result<FitResult> {
    let (ts, ys) = window_points(series, window)?;
    let xs: Vec<f64> = match model {
        FitModel::Power => ts.iter().map(|t| t.ln()).collect(),
        _ => ts,
    };
    let (slope, intercept, se, rms) = ols1(&xs, &ys)?;
    let (lambda_hat, lambda_se, gamma_hat, gamma_se) = match model {
        FitModel::Power => (-slope, se, 0.0, 0.0),
        _ => (0.0, 0.0, -slope, se),
    };
    Ok(FitResult {
        model,
        lambda_hat,
        gamma_hat,
        intercept,
        lambda_se,
        gamma_se,
        correlation: 0.0,
        residual_rms: rms,
        n_points: ys.len(),
        window,
    })
}

/// Least-squares line through `(ln T, ln P)`; `lambda_hat = -slope`.
pub fn fit_power(series: &PersistenceSeries, window: FitWindow) -> Result<FitResult> {
    fit_single(series, window, FitModel::Power)
}

/// Least-squares line through `(T, ln P)`; `gamma_hat = -slope`.
pub fn fit_exponential(series: &PersistenceSeries, window: FitWindow) -> Result<FitResult> {
    fit_single(series, window, FitModel::Exponential)
}

/// Two-regressor fit `ln P = c - lambda ln T - gamma T`.
pub fn fit_combined(series: &PersistenceSeries, window: FitWindow) -> Result<FitResult> {
    let (ts, ys) = window_points(series, window)?;
    let logs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let (m1, x1) = centered(&logs);
    let (m2, x2) = centered(&ts);
    let (my, yc) = centered(&ys);
    let (s11, s12, s22) = (dot(&x1, &x1), dot(&x1, &x2), dot(&x2, &x2));
    let det = s11 * s22 - s12 * s12;
    let separation = det / (s11 * s22);
    if !(separation >= COLLINEARITY_TOL) {
        return Err(Error::Fit(format!(
            "ln T and T are collinear over {window} (1 - r^2 = {separation:.3e}); use a wider window"
        )));
    }
    let (s1y, s2y) = (dot(&x1, &yc), dot(&x2, &yc));
    let b1 = (s22 * s1y - s12 * s2y) / det;
    let b2 = (s11 * s2y - s12 * s1y) / det;
    let rss: f64 = (0..ys.len()).map(|i| (yc[i] - b1 * x1[i] - b2 * x2[i]).powi(2)).sum();
    let n = ys.len() as f64;
    let sigma2 = rss / (n - 3.0);
    Ok(FitResult {
        model: FitModel::Combined,
        lambda_hat: -b1,
        gamma_hat: -b2,
        intercept: my - b1 * m1 - b2 * m2,
        lambda_se: (sigma2 * s22 / det).sqrt(),
        gamma_se: (sigma2 * s11 / det).sqrt(),
        correlation: -s12 / (s11 * s22).sqrt(),
        residual_rms: (rss / n).sqrt(),
        n_points: ys.len(),
        window,
    })
}

pub fn fit(series: &PersistenceSeries, model: FitModel, window: FitWindow) -> Result<FitResult> {
    match model {
        FitModel::Power => fit_power(series, window),
        FitModel::Exponential => fit_exponential(series, window),
        FitModel::Combined => fit_combined(series, window),
    }
}

/// Which term dominates persistence at a site over the simulated horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Decay rate too small to act within `T_max` (`gamma T_max < 0.01`).
    PowerLaw,
    /// No power-law part (`lambda = 0`).
    Exponential,
    Combined,
}

impl Regime {
    pub fn classify(law: &AsymptoticLaw, t_max: usize) -> Regime {
        if law.gamma * (t_max as f64) < 0.01 {
            Regime::PowerLaw
        } else if law.lambda.abs() < 1e-12 {
            Regime::Exponential
        } else {
            Regime::Combined
        }
    }

    /// Model whose estimates are compared against theory.
    pub fn model(self) -> FitModel {
        match self {
            Regime::PowerLaw => FitModel::Power,
            Regime::Exponential => FitModel::Exponential,
            Regime::Combined => FitModel::Combined,
        }
    }
}

/// Windows for a report; `None` selects the per-site default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportWindows {
    /// Used by power and combined fits.
    pub power: Option<(usize, usize)>,
    pub exponential: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteReport {
    pub m: i64,
    pub theory: AsymptoticLaw,
    pub regime: Regime,
    pub power: FitResult,
    pub exponential: FitResult,
    /// Absent when the window cannot separate the two regressors.
    pub combined: Option<FitResult>,
    /// Relative errors of the estimates of the regime's model; `None` when
    /// the theoretical value is zero or the model does not estimate it.
    pub lambda_rel_error: Option<f64>,
    pub gamma_rel_error: Option<f64>,
    /// `max |P_exact / P_asymptotic - 1|` over the power window.
    pub max_rel_deviation: f64,
    /// Whether `persistence_exact <= persistence_log_approx` at every `T`.
    pub log_approx_bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub family: Family,
    pub rho: f64,
    /// Free-form description of the initial state, e.g. the CLI spec string.
    pub initial: String,
    pub t_max: usize,
    pub sites: Vec<SiteReport>,
}

impl ComparisonReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Data(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Data(e.to_string()))
    }
}

fn rel_error(estimate: f64, truth: f64) -> Option<f64> {
    (truth != 0.0).then(|| (estimate - truth) / truth)
}

fn window_or(m: i64, given: Option<(usize, usize)>, default: Result<FitWindow>) -> Result<FitWindow> {
    match given {
        Some((lo, hi)) => FitWindow::new(m, lo, hi),
        None => default,
    }
}

/// Builds the report for one site from its exact and log-approximate series.
pub fn site_report(
    params: &TheoryParams,
    exact: &PersistenceSeries,
    log_approx: &PersistenceSeries,
    windows: ReportWindows,
) -> Result<SiteReport> {
    let m = exact.m();
    let t_max = exact.t_max();
    let theory = asymptotic_law(params, m)?;
    let regime = Regime::classify(&theory, t_max);
    let pw = window_or(m, windows.power, FitWindow::default_power(m, t_max))?;
    let ew = window_or(m, windows.exponential, FitWindow::default_exponential(m, t_max))?;
    let power = fit_power(exact, pw)?;
    let exponential = fit_exponential(exact, ew)?;
    let combined = match fit_combined(exact, pw) {
        Ok(f) => Some(f),
        Err(Error::Fit(_)) => None,
        Err(e) => return Err(e),
    };
    let primary = match regime {
        Regime::PowerLaw => Some(power),
        Regime::Exponential => Some(exponential),
        Regime::Combined => combined,
    };
    let (lambda_rel_error, gamma_rel_error) = match primary {
        Some(f) => (
            (f.model != FitModel::Exponential).then(|| rel_error(f.lambda_hat, theory.lambda)).flatten(),
            (f.model != FitModel::Power).then(|| rel_error(f.gamma_hat, theory.gamma)).flatten(),
        ),
        None => (None, None),
    };
    let mut max_rel_deviation = 0.0f64;
    for t in pw.t_lo..=pw.t_hi {
        let asym = asymptotic_persistence(params, m, t as f64)?;
        if asym > 0.0 {
            max_rel_deviation = max_rel_deviation.max((exact.at(t) / asym - 1.0).abs());
        }
    }
    let log_approx_bound_holds = exact.values().iter().zip(log_approx.values()).all(|(e, l)| e <= l);
    Ok(SiteReport {
        m,
        theory,
        regime,
        power,
        exponential,
        combined,
        lambda_rel_error,
        gamma_rel_error,
        max_rel_deviation,
        log_approx_bound_holds,
    })
}

/// Simulates, computes persistence and fits every site, and compares with
/// theory. Mixed initial states are re-prepared before every run.
pub fn compare_report(
    init: &InitialCondition,
    coin: &CoinMatrix,
    label: &str,
    sites: &[i64],
    t_max: usize,
    windows: ReportWindows,
) -> Result<ComparisonReport> {
    let params = TheoryParams::from_initial(init, coin)?;
    let series = probability_series(init, coin, sites, t_max)?;
    let sites = series
        .iter()
        .map(|s| site_report(&params, &persistence_exact(s)?, &persistence_log_approx(s)?, windows))
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonReport { family: coin.family(), rho: coin.rho(), initial: label.to_string(), t_max, sites })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persistence::Method;

    fn synthetic(m: i64, t_max: usize, f: impl Fn(f64) -> f64) -> PersistenceSeries {
        PersistenceSeries::new(m, Method::Exact, (1..=t_max).map(|t| f(t as f64)).collect()).unwrap()
    }

    #[test]
    fn window_invariants() {
        assert!(FitWindow::new(2, 2, 100).is_err());
        assert!(FitWindow::new(2, 3, 21).is_err());
        assert!(FitWindow::new(-2, 3, 22).is_ok());
        assert_eq!(FitWindow::default_power(2, 10_000).unwrap(), FitWindow { t_lo: 100, t_hi: 10_000 });
        assert_eq!(FitWindow::default_exponential(1, 2000).unwrap(), FitWindow { t_lo: 1000, t_hi: 2000 });
        assert_eq!(FitWindow::default_power(5, 100).unwrap().t_lo, 6);
    }

    #[test]
    fn power_recovery() {
        let s = synthetic(1, 2000, |t| t.powf(-0.5));
        let f = fit_power(&s, FitWindow::new(1, 20, 2000).unwrap()).unwrap();
        assert!((f.lambda_hat - 0.5).abs() < 1e-10);
        assert_eq!(f.gamma_hat, 0.0);
        assert!(f.residual_rms < 1e-12);
    }

    #[test]
    fn power_fit_flags_exponential_data() {
        let s = synthetic(1, 2000, |t| (-0.01 * t).exp());
        let f = fit_power(&s, FitWindow::new(1, 20, 2000).unwrap()).unwrap();
        assert!(f.residual_rms > 0.5);
    }

    #[test]
    fn exponential_recovery() {
        let s = synthetic(1, 2000, |t| (-0.1224 * t).exp());
        let f = fit_exponential(&s, FitWindow::new(1, 100, 2000).unwrap()).unwrap();
        assert!((f.gamma_hat - 0.1224).abs() < 1e-10);
        assert_eq!(f.lambda_hat, 0.0);
    }

    #[test]
    fn combined_recovery() {
        let s = synthetic(2, 5000, |t| ((t / 2.0).powf(-0.24) * (-0.0069 * t).exp()).min(1.0));
        let f = fit_combined(&s, FitWindow::new(2, 50, 5000).unwrap()).unwrap();
        assert!((f.lambda_hat - 0.24).abs() < 1e-8);
        assert!((f.gamma_hat - 0.0069).abs() < 1e-8);
        assert!((f.intercept - 0.24 * 2f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn underflow_points_are_dropped() {
        // Decays below 1e-300 after T ~ 690.
        let s = synthetic(1, 1000, |t| (-t).exp());
        let f = fit_exponential(&s, FitWindow::new(1, 600, 1000).unwrap()).unwrap();
        assert!(f.n_points < 401);
        assert!((f.gamma_hat - 1.0).abs() < 1e-9);
        let dead = synthetic(1, 1000, |_| 0.0);
        assert!(matches!(fit_power(&dead, FitWindow::new(1, 10, 1000).unwrap()), Err(Error::Fit(_))));
    }

    #[test]
    fn narrow_window_is_collinear() {
        let s = synthetic(2, 2000, |t| t.powf(-0.3) * (-0.001 * t).exp());
        let err = fit_combined(&s, FitWindow::new(2, 1000, 1025).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Fit(msg) if msg.contains("wider window")));
    }

    #[test]
    fn window_past_end() {
        let s = synthetic(1, 100, |t| 1.0 / t);
        assert!(matches!(fit_power(&s, FitWindow::new(1, 10, 200).unwrap()), Err(Error::Domain(_))));
    }

    #[test]
    fn regime_classification() {
        let law = |lambda, gamma| AsymptoticLaw { m: 1, lambda, gamma };
        assert_eq!(Regime::classify(&law(0.3, 0.0), 1000), Regime::PowerLaw);
        assert_eq!(Regime::classify(&law(0.3, 1e-12), 10_000), Regime::PowerLaw);
        assert_eq!(Regime::classify(&law(0.0, 0.12), 2000), Regime::Exponential);
        assert_eq!(Regime::classify(&law(0.24, 0.0069), 5000), Regime::Combined);
    }
}
