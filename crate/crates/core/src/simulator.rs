//! Exact evolution of the coined walk on the integer line.
//!
//! One step applies the coin at every site and then the conditional shift:
//! the `|L>` component moves `m -> m - 1`, `|R>` moves `m -> m + 1` and, for
//! three-state walks, `|S>` stays put. The walk starts at the origin, so after
//! `t` steps the amplitudes are supported on `[-t, t]`.
//!
//! Amplitudes live in one contiguous buffer indexed by position. The buffer is
//! grown geometrically as the light cone widens; evolution never renormalizes,
//! so any loss of unitarity shows up in [`WalkState::norm_sqr`].

use num_complex::Complex64;

use crate::coin::{CoinMatrix, CoinVector, Family, InitialCondition};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Full walk state after `t` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    t: usize,
    dim: usize,
    /// Position `m` lives at cell `m + half`; always `half >= t`.
    half: usize,
    amps: Vec<Complex64>,
}

impl WalkState {
    /// `delta_{m,0}` tensored with `coin_state`.
    pub fn at_origin(coin_state: &CoinVector) -> Self {
        let dim = coin_state.dim();
        let half = 16;
        let mut amps = vec![ZERO; (2 * half + 1) * dim];
        amps[half * dim..(half + 1) * dim].copy_from_slice(coin_state.components());
        WalkState { t: 0, dim, half, amps }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coin amplitudes at position `m` (all zero outside `[-t, t]`).
    pub fn amplitudes(&self, m: i64) -> Vec<Complex64> {
        match self.cell(m) {
            Some(i) => self.amps[i * self.dim..(i + 1) * self.dim].to_vec(),
            None => vec![ZERO; self.dim],
        }
    }

    fn cell(&self, m: i64) -> Option<usize> {
        if m.unsigned_abs() as usize > self.t {
            None
        } else {
            Some((m + self.half as i64) as usize)
        }
    }

    /// `p(m, t)`, the probability of finding the walker at `m`.
    pub fn probability(&self, m: i64) -> f64 {
        match self.cell(m) {
            Some(i) => self.amps[i * self.dim..(i + 1) * self.dim]
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .min(1.0),
            None => 0.0,
        }
    }

    /// Total norm `sum_m sum_c |psi_c(m)|^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn distribution(&self) -> Distribution {
        let t = self.t as i64;
        Distribution { t: self.t, probs: (-t..=t).map(|m| self.probability(m)).collect() }
    }

    /// One coin-then-shift step, returning the new state.
    pub fn step(&self, coin: &CoinMatrix) -> Result<WalkState> {
        let mut next = self.clone();
        let mut scratch = Vec::new();
        next.advance(coin, &mut scratch)?;
        Ok(next)
    }

    /// In-place step; `scratch` is reused between calls to avoid allocation.
    pub fn advance(&mut self, coin: &CoinMatrix, scratch: &mut Vec<Complex64>) -> Result<()> {
        if coin.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: coin.dim(), found: self.dim });
        }
        if self.t + 1 > self.half {
            self.grow();
            // Old scratch contents use the previous layout.
            scratch.clear();
        }
        scratch.resize(self.amps.len(), ZERO);
        let d = self.dim;
        let lo = self.half - self.t;
        let hi = self.half + self.t;
        scratch[(lo - 1) * d..(hi + 2) * d].fill(ZERO);
        match coin.family() {
            Family::TwoState => stencil::<2>(&coin.real_block(), &self.amps, scratch, lo, hi),
            Family::ThreeState => stencil::<3>(&coin.real_block(), &self.amps, scratch, lo, hi),
        }
        std::mem::swap(&mut self.amps, scratch);
        self.t += 1;
        Ok(())
    }

    fn grow(&mut self) {
        let new_half = (2 * self.half).max(self.t + 1);
        let d = self.dim;
        let mut amps = vec![ZERO; (2 * new_half + 1) * d];
        let shift = (new_half - self.half) * d;
        amps[shift..shift + self.amps.len()].copy_from_slice(&self.amps);
        self.amps = amps;
        self.half = new_half;
    }

    /// Advances `steps` times, calling `observe` after every step.
    pub fn run<F>(&mut self, coin: &CoinMatrix, steps: usize, mut observe: F) -> Result<()>
    where
        F: FnMut(&WalkState),
    {
        let mut scratch = Vec::with_capacity(self.amps.len());
        for _ in 0..steps {
            self.advance(coin, &mut scratch)?;
            observe(self);
        }
        Ok(())
    }
}

/// Coin at every occupied site `lo..=hi`, then the conditional shift into `dst`.
fn stencil<const D: usize>(
    coin: &[[f64; D]; D],
    src: &[Complex64],
    dst: &mut [Complex64],
    lo: usize,
    hi: usize,
) {
    for site in lo..=hi {
        let cell = &src[site * D..(site + 1) * D];
        let mut out = [ZERO; D];
        for (o, row) in out.iter_mut().zip(coin) {
            for (a, &c) in cell.iter().zip(row) {
                *o += a * c;
            }
        }
        dst[(site - 1) * D] += out[0];
        dst[(site + 1) * D + D - 1] += out[D - 1];
        if D == 3 {
            dst[site * D + 1] += out[1];
        }
    }
}

/// Position distribution `p(m, t)` over `[-t, t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    t: usize,
    probs: Vec<f64>,
}

impl Distribution {
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn get(&self, m: i64) -> f64 {
        let t = self.t as i64;
        if m.abs() > t {
            0.0
        } else {
            self.probs[(m + t) as usize]
        }
    }

    /// `(m, p)` pairs from `-t` to `t`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let t = self.t as i64;
        self.probs.iter().enumerate().map(move |(i, &p)| (i as i64 - t, p))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Weighted sum of distributions at the same time step.
    pub fn mix(parts: &[(f64, Distribution)]) -> Result<Distribution> {
        let t = parts.first().ok_or_else(|| Error::domain("empty mixture"))?.1.t;
        if parts.iter().any(|(_, d)| d.t != t) {
            return Err(Error::domain("mixed distributions must share the time step"));
        }
        let mut probs = vec![0.0; 2 * t + 1];
        for (w, d) in parts {
            for (p, q) in probs.iter_mut().zip(&d.probs) {
                *p += w * q;
            }
        }
        Ok(Distribution { t, probs })
    }
}

/// `p(m, t)` for a single site `m != 0` and `t = 1..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilitySeries {
    m: i64,
    values: Vec<f64>,
}

impl ProbabilitySeries {
    /// `values[t - 1] = p(m, t)`. Rejects `m = 0`, probabilities outside
    /// `[0, 1]` and mass inside the light cone exclusion `t < |m|`.
    pub fn new(m: i64, values: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::domain("the walk starts at the origin; site 0 has no persistence"));
        }
        if let Some((i, p)) = values.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Data(format!("p({m}, {}) = {p} is not a probability", i + 1)));
        }
        let cone = (m.unsigned_abs() as usize).saturating_sub(1).min(values.len());
        if values[..cone].iter().any(|&p| p != 0.0) {
            return Err(Error::Data(format!("p({m}, t) must vanish for t < {}", m.abs())));
        }
        Ok(ProbabilitySeries { m, values })
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `p(m, t)` for `1 <= t <= T`.
    pub fn at(&self, t: usize) -> f64 {
        self.values[t - 1]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Result of [`evolve`]: one state per pure component.
#[derive(Debug, Clone, PartialEq)]
pub enum Evolution {
    Pure(WalkState),
    Mixture(Vec<(f64, WalkState)>),
}

impl Evolution {
    /// Probability distribution; mixtures average component distributions.
    pub fn distribution(&self) -> Distribution {
        match self {
            Evolution::Pure(s) => s.distribution(),
            Evolution::Mixture(parts) => {
                let d: Vec<_> = parts.iter().map(|(w, s)| (*w, s.distribution())).collect();
                Distribution::mix(&d).expect("components share t")
            }
        }
    }
}

fn check_dims(init: &InitialCondition, coin: &CoinMatrix) -> Result<()> {
    if init.dim() != coin.dim() {
        return Err(Error::DimensionMismatch { expected: coin.dim(), found: init.dim() });
    }
    Ok(())
}

/// Runs `steps` steps from the origin.
pub fn evolve(init: &InitialCondition, coin: &CoinMatrix, steps: usize) -> Result<Evolution> {
    check_dims(init, coin)?;
    let run = |v: &CoinVector| -> Result<WalkState> {
        let mut s = WalkState::at_origin(v);
        s.run(coin, steps, |_| {})?;
        Ok(s)
    };
    Ok(match init {
        InitialCondition::Pure(v) => Evolution::Pure(run(v)?),
        InitialCondition::Mixture(parts) => Evolution::Mixture(
            parts.iter().map(|(w, v)| Ok((*w, run(v)?))).collect::<Result<_>>()?,
        ),
    })
}

fn check_sites(sites: &[i64], t_max: usize) -> Result<()> {
    if sites.contains(&0) {
        return Err(Error::domain("the walk starts at the origin; site 0 has no persistence"));
    }
    if t_max < 1 {
        return Err(Error::domain("need at least one step"));
    }
    Ok(())
}

fn record_pure(v: &CoinVector, coin: &CoinMatrix, sites: &[i64], t_max: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![Vec::with_capacity(t_max); sites.len()];
    let mut state = WalkState::at_origin(v);
    state.run(coin, t_max, |s| {
        for (col, &m) in out.iter_mut().zip(sites) {
            col.push(s.probability(m));
        }
    })?;
    Ok(out)
}

/// `p(m, t)` for every requested site and `t = 1..=t_max`, from a single
/// evolution pass per pure component. Mixtures return the weight-averaged
/// probabilities.
pub fn probability_series(
    init: &InitialCondition,
    coin: &CoinMatrix,
    sites: &[i64],
    t_max: usize,
) -> Result<Vec<ProbabilitySeries>> {
    let parts = component_series(init, coin, sites, t_max)?;
    let mut acc = vec![vec![0.0; t_max]; sites.len()];
    for (w, series) in &parts {
        for (a, s) in acc.iter_mut().zip(series) {
            for (x, p) in a.iter_mut().zip(s.values()) {
                *x += w * p;
            }
        }
    }
    sites
        .iter()
        .zip(acc)
        .map(|(&m, v)| ProbabilitySeries::new(m, v.into_iter().map(|p| p.min(1.0)).collect()))
        .collect()
}

/// Per-component probability series, with the component weights.
pub fn component_series(
    init: &InitialCondition,
    coin: &CoinMatrix,
    sites: &[i64],
    t_max: usize,
) -> Result<Vec<(f64, Vec<ProbabilitySeries>)>> {
    check_dims(init, coin)?;
    check_sites(sites, t_max)?;
    init.components()
        .into_iter()
        .map(|(w, v)| {
            let cols = record_pure(v, coin, sites, t_max)?;
            let series = sites
                .iter()
                .zip(cols)
                .map(|(&m, vals)| ProbabilitySeries::new(m, vals))
                .collect::<Result<Vec<_>>>()?;
            Ok((w, series))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coin::{eigenbasis, make_coin};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn left2() -> CoinVector {
        CoinVector::standard(Family::TwoState, 0).unwrap()
    }

    #[test]
    fn single_hadamard_step() {
        let coin = make_coin(Family::TwoState, FRAC_1_SQRT_2).unwrap();
        let s = WalkState::at_origin(&left2()).step(&coin).unwrap();
        assert_eq!(s.t(), 1);
        let a = s.amplitudes(-1);
        assert!((a[0].re - FRAC_1_SQRT_2).abs() < 1e-15 && a[1].norm() == 0.0);
        let b = s.amplitudes(1);
        assert!((b[1].re - FRAC_1_SQRT_2).abs() < 1e-15 && b[0].norm() == 0.0);
        assert_eq!(s.probability(0), 0.0);
    }

    #[test]
    fn chi_plus_first_step() {
        for rho in [0.2, 0.5, 0.9] {
            let coin = make_coin(Family::TwoState, rho).unwrap();
            let chi = eigenbasis(&coin)[0].clone();
            let s = WalkState::at_origin(&chi).step(&coin).unwrap();
            assert!((s.probability(-1) - (1.0 + rho) / 2.0).abs() < 1e-15);
            assert!((s.probability(1) - (1.0 - rho) / 2.0).abs() < 1e-15);
            assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn three_state_stay_component() {
        let coin = make_coin(Family::ThreeState, 0.6).unwrap();
        let s = CoinVector::standard(Family::ThreeState, 1).unwrap();
        let next = WalkState::at_origin(&s).step(&coin).unwrap();
        let a = coin.entry(1, 1).re;
        assert!((next.probability(0) - a * a).abs() < 1e-15);
    }

    #[test]
    fn zero_steps_is_origin() {
        let coin = make_coin(Family::TwoState, 0.5).unwrap();
        let init = InitialCondition::Pure(left2());
        let Evolution::Pure(s) = evolve(&init, &coin, 0).unwrap() else { unreachable!() };
        assert_eq!(s.t(), 0);
        assert_eq!(s.probability(0), 1.0);
        assert_eq!(s.amplitudes(0), left2().components());
        assert_eq!(s.distribution().iter().collect::<Vec<_>>(), vec![(0, 1.0)]);
    }

    #[test]
    fn growth_preserves_amplitudes() {
        // Exercise several buffer reallocations against a fresh reference walk.
        let coin = make_coin(Family::ThreeState, 0.7).unwrap();
        let v = eigenbasis(&coin)[0].clone();
        let mut a = WalkState::at_origin(&v);
        a.run(&coin, 100, |s| assert!(s.half >= s.t)).unwrap();
        let mut b = WalkState::at_origin(&v);
        for _ in 0..100 {
            b = b.step(&coin).unwrap();
        }
        for m in -100..=100 {
            assert_eq!(a.amplitudes(m), b.amplitudes(m));
        }
        assert!((a.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let coin = make_coin(Family::ThreeState, 0.5).unwrap();
        let init = InitialCondition::Pure(left2());
        assert!(matches!(evolve(&init, &coin, 3), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn site_zero_rejected() {
        let coin = make_coin(Family::TwoState, 0.5).unwrap();
        let init = InitialCondition::Pure(left2());
        assert!(matches!(probability_series(&init, &coin, &[1, 0], 10), Err(Error::Domain(_))));
        assert!(matches!(probability_series(&init, &coin, &[1], 0), Err(Error::Domain(_))));
    }

    #[test]
    fn light_cone_start() {
        let coin = make_coin(Family::TwoState, 0.3).unwrap();
        let init = InitialCondition::Pure(left2());
        let s = &probability_series(&init, &coin, &[3], 10).unwrap()[0];
        assert_eq!(s.at(1), 0.0);
        assert_eq!(s.at(2), 0.0);
        assert!(s.at(3) > 0.0);
    }

    #[test]
    fn series_validation() {
        assert!(ProbabilitySeries::new(0, vec![0.1]).is_err());
        assert!(matches!(ProbabilitySeries::new(1, vec![1.2]), Err(Error::Data(_))));
        assert!(matches!(ProbabilitySeries::new(3, vec![0.0, 0.1, 0.2]), Err(Error::Data(_))));
        assert!(ProbabilitySeries::new(-3, vec![0.0, 0.0, 0.2]).is_ok());
    }

    #[test]
    fn mixture_is_weighted_sum() {
        let coin = make_coin(Family::ThreeState, 0.5).unwrap();
        let b = eigenbasis(&coin);
        let init = InitialCondition::mixture(vec![(0.25, b[0].clone()), (0.75, b[2].clone())]).unwrap();
        let mixed = evolve(&init, &coin, 40).unwrap().distribution();
        let d0 = evolve(&b[0].clone().into(), &coin, 40).unwrap().distribution();
        let d2 = evolve(&b[2].clone().into(), &coin, 40).unwrap().distribution();
        for m in -40..=40 {
            assert_eq!(mixed.get(m), 0.25 * d0.get(m) + 0.75 * d2.get(m));
        }
        let series = probability_series(&init, &coin, &[2], 40).unwrap();
        assert_eq!(series[0].at(40), 0.25 * d0.get(2) + 0.75 * d2.get(2));
    }
}
