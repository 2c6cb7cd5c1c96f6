//! Persistence of an unvisited site under the restart-after-measurement
//! scheme: `P_m(T) = prod_{t=1}^{T} (1 - p(m, t))`, together with the two
//! successive approximations `exp(-sum p)` and `exp(-I_m(T))`.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::coin::{CoinMatrix, Family, InitialCondition};
use crate::error::{Error, Result};
use crate::simulator::{component_series, probability_series, ProbabilitySeries};
use crate::theory::{integral_closed, trapping_probability, TheoryParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    LogApprox,
    DensityApprox,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::LogApprox => "log_approx",
            Method::DensityApprox => "density_approx",
        })
    }
}

/// How a mixed initial coin state enters the restart scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixtureMode {
    /// The mixture is re-prepared before every run: one product over the
    /// averaged probabilities.
    #[default]
    PerRun,
    /// One pure component is drawn for the whole experiment: persistence is
    /// the weighted average of the pure-state persistences.
    Ensemble,
}

/// `P_m(T)` for `T = 1..=T_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceSeries {
    m: i64,
    method: Method,
    values: Vec<f64>,
}

impl PersistenceSeries {
    /// Wraps precomputed values (`values[T - 1] = P_m(T)`).
    pub fn new(m: i64, method: Method, values: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::domain("persistence is defined for sites m != 0"));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Data(format!("persistence of site {m} leaves [0, 1]")));
        }
        Ok(PersistenceSeries { m, method, values })
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `P_m(T)` for `1 <= T <= T_max`.
    pub fn at(&self, t: usize) -> f64 {
        self.values[t - 1]
    }

    pub fn t_max(&self) -> usize {
        self.values.len()
    }
}

/// Exact product, accumulated as `sum ln(1 - p)` so it does not underflow
/// before the logarithm does. Once some `p(m, t) = 1` every later value is 0.
pub fn persistence_exact(series: &ProbabilitySeries) -> Result<PersistenceSeries> {
    let mut log = 0.0f64;
    let mut dead = false;
    let mut values = Vec::with_capacity(series.len());
    for (i, &p) in series.values().iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Data(format!("p({}, {}) = {p} is not a probability", series.m(), i + 1)));
        }
        if p == 1.0 {
            dead = true;
        }
        log += (-p).ln_1p();
        values.push(if dead { 0.0 } else { log.exp() });
    }
    PersistenceSeries::new(series.m(), Method::Exact, values)
}

/// First-order approximation `exp(-sum_{t <= T} p(m, t))`.
pub fn persistence_log_approx(series: &ProbabilitySeries) -> Result<PersistenceSeries> {
    let mut sum = 0.0;
    let values = series
        .values()
        .iter()
        .map(|p| {
            sum += p;
            (-sum).exp()
        })
        .collect();
    PersistenceSeries::new(series.m(), Method::LogApprox, values)
}

/// `exp(-I_m(T))`, plus `(T - ceil(|m|/rho)) p_inf(m)` in the exponent for
/// three-state walks.
pub fn persistence_density_approx(params: &TheoryParams, m: i64, t_max: usize) -> Result<PersistenceSeries> {
    if m == 0 {
        return Err(Error::domain("persistence is defined for sites m != 0"));
    }
    if t_max < 1 {
        return Err(Error::domain("need at least one step"));
    }
    let p_inf = match params.family() {
        Family::TwoState => 0.0,
        Family::ThreeState => trapping_probability(params, m),
    };
    let onset = trapping_onset(m, params.rho());
    let values = (1..=t_max)
        .map(|t| {
            let trapped = t.saturating_sub(onset) as f64 * p_inf;
            (-integral_closed(params, m, t as f64) - trapped).exp()
        })
        .collect();
    PersistenceSeries::new(m, Method::DensityApprox, values)
}

/// `ceil(|m| / rho)`, the first step at which the trapped term is counted.
pub fn trapping_onset(m: i64, rho: f64) -> usize {
    (m.unsigned_abs() as f64 / rho).ceil() as usize
}

/// Exact persistence for every site, honoring the mixture interpretation.
pub fn persistence_for(
    init: &InitialCondition,
    coin: &CoinMatrix,
    sites: &[i64],
    t_max: usize,
    mode: MixtureMode,
) -> Result<Vec<PersistenceSeries>> {
    match (mode, init) {
        (MixtureMode::PerRun, _) | (_, InitialCondition::Pure(_)) => probability_series(init, coin, sites, t_max)?
            .iter()
            .map(persistence_exact)
            .collect(),
        (MixtureMode::Ensemble, InitialCondition::Mixture(_)) => {
            let parts = component_series(init, coin, sites, t_max)?;
            let mut acc = vec![vec![0.0; t_max]; sites.len()];
            for (w, series) in &parts {
                for (a, s) in acc.iter_mut().zip(series) {
                    for (x, p) in a.iter_mut().zip(persistence_exact(s)?.values()) {
                        *x += w * p;
                    }
                }
            }
            sites
                .iter()
                .zip(acc)
                .map(|(&m, v)| PersistenceSeries::new(m, Method::Exact, v.into_iter().map(|x| x.min(1.0)).collect()))
                .collect()
        }
    }
}
