//! Closed-form asymptotics: weak-limit densities, trapping probabilities,
//! power-law exponents, decay rates and the integral
//!
//! ```text
//! I_m(T) = int_{|m|/rho}^{T} (1/t) w(m/t) dt
//! ```
//!
//! in exact, large-`T` and quadrature form.
//!
//! Everything is linear in the initial density matrix, so mixtures are
//! handled by averaging the per-component expressions with their weights.
//!
//! Two details differ from a literal transcription of the textbook forms:
//! the three-state cross term `g1 conj(g2) + conj(g1) g2` enters `I_m` with
//! the sign of `m` (the density is odd in it), and the arctangent whose
//! denominator `(2 - s^2) rho^2 - 1` changes sign for `rho > 1/sqrt(2)` is
//! evaluated on the branch that keeps `I_m(T)` continuous and zero at
//! `T = |m|/rho`. The quadrature oracle pins both down.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::coin::{check_rho, decompose, CoinMatrix, Decomposition, Family, InitialCondition, NORM_TOL};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};

/// Coin parameter plus the eigenbasis coefficients of the initial state
/// (one entry per mixture component).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    family: Family,
    rho: f64,
    components: Vec<(f64, Decomposition)>,
}

impl TheoryParams {
    pub fn new(rho: f64, components: Vec<(f64, Decomposition)>) -> Result<Self> {
        check_rho(rho)?;
        let family = components
            .first()
            .ok_or_else(|| Error::domain("theory parameters need at least one component"))?
            .1
            .family();
        if components.iter().any(|(_, d)| d.family() != family) {
            return Err(Error::domain("mixture components belong to different coin families"));
        }
        if components.iter().any(|(w, _)| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::domain("mixture weights must be non-negative"));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::domain(format!("mixture weights sum to {total} (expected 1)")));
        }
        Ok(TheoryParams { family, rho, components })
    }

    pub fn pure(rho: f64, decomposition: Decomposition) -> Result<Self> {
        TheoryParams::new(rho, vec![(1.0, decomposition)])
    }

    pub fn from_initial(init: &InitialCondition, coin: &CoinMatrix) -> Result<Self> {
        let components = init
            .components()
            .into_iter()
            .map(|(w, v)| Ok((w, decompose(v, coin)?)))
            .collect::<Result<Vec<_>>>()?;
        TheoryParams::new(coin.rho(), components)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn components(&self) -> &[(f64, Decomposition)] {
        &self.components
    }

    fn weighted<F: Fn(&Decomposition) -> f64>(&self, f: F) -> f64 {
        self.components.iter().map(|(w, d)| w * f(d)).sum()
    }
}

/// Power-law exponent and decay rate of persistence at site `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticLaw {
    pub m: i64,
    pub lambda: f64,
    pub gamma: f64,
}

fn sgn(m: i64) -> f64 {
    if m < 0 {
        -1.0
    } else {
        1.0
    }
}

/// `sqrt(1 - rho^2) / (pi rho)`: the exponent of every two-state walk and the
/// scale of all three-state exponents.
pub fn base_exponent(rho: f64) -> f64 {
    (1.0 - rho * rho).sqrt() / (PI * rho)
}

/// Smooth factor of the density: `w(v) = envelope(v) / sqrt(1 - v^2/rho^2)`.
fn envelope(rho: f64, d: &Decomposition, v: f64) -> f64 {
    let x = v / rho;
    let shape = match d {
        Decomposition::Two(h) => 1.0 - x * h.bias(),
        Decomposition::Three(g) => {
            let g2 = g.g_2().norm_sqr();
            1.0 - g2 - g.cross() * x + (g2 - g.g_plus().norm_sqr()) * x * x
        }
    };
    base_exponent(rho) * shape / (1.0 - v * v)
}

fn params_envelope(params: &TheoryParams, v: f64) -> f64 {
    params.weighted(|d| envelope(params.rho, d, v))
}

/// Weak-limit density `w(v)` of the rescaled position `v = m/t`; zero
/// outside the open support `|v| < rho`.
pub fn limit_density(params: &TheoryParams, v: f64) -> f64 {
    let rho = params.rho;
    if !(v.abs() < rho) {
        return 0.0;
    }
    let x = v / rho;
    params_envelope(params, v) / (1.0 - x * x).sqrt()
}

/// Geometric ratio of the trapped profile,
/// `Q = (2 - rho^2 - 2 sqrt(1 - rho^2)) / rho^2`, evaluated as
/// `rho^2 / (1 + sqrt(1 - rho^2))^2` to avoid cancellation at small `rho`.
pub fn trapping_q(rho: f64) -> f64 {
    let s = 1.0 + (1.0 - rho * rho).sqrt();
    rho * rho / (s * s)
}

fn trapping_component(rho: f64, d: &Decomposition, m: i64) -> f64 {
    let Decomposition::Three(g) = d else { return 0.0 };
    let q = trapping_q(rho);
    let (gp, g2) = (g.g_plus(), g.g_2());
    if m == 0 {
        return q / (rho * rho) * (gp.norm_sqr() + (1.0 - rho * rho) * g2.norm_sqr());
    }
    let amp = if m > 0 { (gp + g2).norm_sqr() } else { (gp - g2).norm_sqr() };
    let exponent = 2.0 * m.unsigned_abs() as f64;
    (2.0 - 2.0 * rho * rho) / rho.powi(4) * q.powf(exponent) * amp
}

/// Long-time limit `p_inf(m)` of `p(m, t)`; identically zero for two-state
/// walks.
pub fn trapping_probability(params: &TheoryParams, m: i64) -> f64 {
    params.weighted(|d| trapping_component(params.rho, d, m))
}

/// `sum_m p_inf(m)` over the whole line, using the geometric series in `Q^2`.
pub fn total_trapping(params: &TheoryParams) -> f64 {
    let rho = params.rho;
    let q2 = trapping_q(rho).powi(2);
    let tail = (2.0 - 2.0 * rho * rho) / rho.powi(4) * q2 / (1.0 - q2);
    params.weighted(|d| match d {
        Decomposition::Two(_) => 0.0,
        Decomposition::Three(g) => {
            let (gp, g2) = (g.g_plus(), g.g_2());
            trapping_component(rho, d, 0) + tail * ((gp + g2).norm_sqr() + (gp - g2).norm_sqr())
        }
    })
}

/// Exponent `lambda` of the inverse power law in persistence.
pub fn power_exponent(params: &TheoryParams) -> f64 {
    let base = base_exponent(params.rho);
    base * params.weighted(|d| match d {
        Decomposition::Two(_) => 1.0,
        Decomposition::Three(g) => 1.0 - g.g_2().norm_sqr(),
    })
}

/// Per-step exponential decay rate of persistence at `m != 0`; equals the
/// trapping probability at that site.
pub fn decay_rate(params: &TheoryParams, m: i64) -> Result<f64> {
    if m == 0 {
        return Err(Error::domain("decay rate is defined for sites m != 0"));
    }
    Ok(trapping_probability(params, m))
}

pub fn asymptotic_law(params: &TheoryParams, m: i64) -> Result<AsymptoticLaw> {
    Ok(AsymptoticLaw { m, lambda: power_exponent(params), gamma: decay_rate(params, m)? })
}

/// `s = |m| / (rho T)` and `sqrt(1 - s^2)`, or `None` when the integration
/// range `[|m|/rho, T]` is empty.
fn boundary(rho: f64, m: i64, t: f64) -> Option<(f64, f64)> {
    let s = m.unsigned_abs() as f64 / (rho * t);
    if !(s < 1.0) {
        return None;
    }
    let r2 = 1.0 - s * s;
    // Absorb roundoff just below zero.
    let r2 = if r2 < 0.0 && r2 > -1e-14 { 0.0 } else { r2 };
    Some((s, r2.sqrt()))
}

fn closed_component(rho: f64, d: &Decomposition, m: i64, s: f64, r: f64) -> f64 {
    let c = (1.0 - rho * rho).sqrt();
    let log_term = base_exponent(rho) * (r.ln_1p() - s.ln());
    // arctan(s c / r), finite at r = 0
    let inner = (s * c).atan2(r);
    match d {
        Decomposition::Two(h) => {
            log_term + (rho * r / c).atan() / PI + sgn(m) * h.bias() / rho * (inner / PI - 0.5)
        }
        Decomposition::Three(g) => {
            let g2 = g.g_2().norm_sqr();
            let a = 1.0 - g2;
            let diff = g2 - g.g_plus().norm_sqr();
            let cross = sgn(m) * g.cross();
            let num = 2.0 * rho * r * c;
            let den = (2.0 - s * s) * rho * rho - 1.0;
            a * log_term - a / (2.0 * PI) * (num.atan2(den) - PI)
                + diff / (PI * rho * rho) * (rho * r / c).atan()
                - cross / (2.0 * PI * rho) * (PI - 2.0 * inner)
        }
    }
}

/// Exact `I_m(T)`; zero for `T <= |m|/rho`.
pub fn integral_closed(params: &TheoryParams, m: i64, t: f64) -> f64 {
    let rho = params.rho;
    match boundary(rho, m, t) {
        None => 0.0,
        Some((s, r)) => params.weighted(|d| closed_component(rho, d, m, s, r)),
    }
}

/// Large-`T` form of `I_m(T)`: `lambda ln(2 rho T/|m|)` plus constants.
pub fn integral_asymptotic(params: &TheoryParams, m: i64, t: f64) -> f64 {
    let rho = params.rho;
    let c = (1.0 - rho * rho).sqrt();
    let log = (2.0 * rho * t / m.unsigned_abs() as f64).ln();
    params.weighted(|d| match d {
        Decomposition::Two(h) => {
            base_exponent(rho) * log + rho.asin() / PI - sgn(m) * h.bias() / (2.0 * rho)
        }
        Decomposition::Three(g) => {
            let g2 = g.g_2().norm_sqr();
            let a = 1.0 - g2;
            let diff = g2 - g.g_plus().norm_sqr();
            a * base_exponent(rho) * log
                + a / (2.0 * PI) * (2.0 * rho * c).atan2(1.0 - 2.0 * rho * rho)
                + diff / (PI * rho * rho) * rho.asin()
                - sgn(m) * g.cross() / (2.0 * rho)
        }
    })
}

/// Quadrature of `int (1/t) w(m/t) dt` over `[|m|/rho, T]` for a density
/// given through its smooth factor `envelope(v) = w(v) sqrt(1 - v^2/rho^2)`.
///
/// With `u = |m|/(rho t) = sin(theta)` the integrand becomes
/// `envelope(sgn(m) rho sin(theta)) / sin(theta)`, which is regular at the
/// square-root endpoint `u = 1`.
pub fn weak_limit_integral<F>(envelope: F, rho: f64, m: i64, t: f64, opts: QuadOptions) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if m == 0 {
        return Err(Error::domain("integral is defined for sites m != 0"));
    }
    let Some((s, _)) = boundary(rho, m, t) else { return Ok(0.0) };
    let sign = sgn(m);
    let f = |theta: f64| {
        let u = theta.sin();
        envelope(sign * rho * u) / u
    };
    integrate(f, s.asin(), FRAC_PI_2, opts).map(|r| r.value)
}

/// `I_m(T)` by adaptive quadrature of the density (independent of the
/// closed forms).
pub fn integral_numeric(params: &TheoryParams, m: i64, t: f64) -> Result<f64> {
    let opts = QuadOptions { abs_tol: 1e-12, rel_tol: 1e-13, max_intervals: 4000 };
    weak_limit_integral(|v| params_envelope(params, v), params.rho, m, t, opts)
}

/// `int w(v) dv` over the support, by quadrature with `v = rho sin(theta)`.
pub fn limit_density_mass(params: &TheoryParams) -> Result<f64> {
    let rho = params.rho;
    let opts = QuadOptions { abs_tol: 1e-13, rel_tol: 1e-13, max_intervals: 2000 };
    integrate(|th: f64| rho * params_envelope(params, rho * th.sin()), -FRAC_PI_2, FRAC_PI_2, opts)
        .map(|r| r.value)
}

/// `(T/|m|)^(-lambda) exp(-gamma(m) T)`.
pub fn asymptotic_persistence(params: &TheoryParams, m: i64, t: f64) -> Result<f64> {
    let law = asymptotic_law(params, m)?;
    Ok((t / m.unsigned_abs() as f64).powf(-law.lambda) * (-law.gamma * t).exp())
}
