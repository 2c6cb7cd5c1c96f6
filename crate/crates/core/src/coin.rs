//! Coin operators, coin states and the coin eigenbases.
//!
//! Two families are supported, both parameterized by `rho` in (0, 1):
//!
//! * the two-state coin `[[rho, s], [s, -rho]]` with `s = sqrt(1 - rho^2)`
//!   acting on the standard basis `{|L>, |R>}`; `rho = 1/sqrt(2)` is the
//!   Hadamard coin;
//! * the three-state coin acting on `{|L>, |S>, |R>}` which reduces to the
//!   Grover coin at `rho = 1/sqrt(3)`.
//!
//! Both matrices are real symmetric and unitary, so their eigenvalues are
//! `+1` and `-1`. All closed-form expressions elsewhere in the crate are
//! written in terms of the coefficients of the initial coin state in the
//! eigenbasis returned by [`eigenbasis`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Tolerance for normalization and unitarity checks.
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    TwoState,
    ThreeState,
}

impl Family {
    pub fn dim(self) -> usize {
        match self {
            Family::TwoState => 2,
            Family::ThreeState => 3,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::TwoState => f.write_str("two"),
            Family::ThreeState => f.write_str("three"),
        }
    }
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("coin parameter rho must lie in (0, 1), got {rho}")))
    }
}

/// A coin operator of one of the two families.
///
/// Entries are real; [`CoinMatrix::entry`] exposes them as complex numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct CoinMatrix {
    family: Family,
    rho: f64,
    entries: [[f64; 3]; 3],
}

/// Builds the coin of `family` with parameter `rho`.
pub fn make_coin(family: Family, rho: f64) -> Result<CoinMatrix> {
    check_rho(rho)?;
    let mut entries = [[0.0; 3]; 3];
    match family {
        Family::TwoState => {
            let s = (1.0 - rho * rho).sqrt();
            entries[0][0] = rho;
            entries[0][1] = s;
            entries[1][0] = s;
            entries[1][1] = -rho;
        }
        Family::ThreeState => {
            let r2 = rho * rho;
            let off = rho * (2.0 - 2.0 * r2).sqrt();
            entries = [
                [-r2, off, 1.0 - r2],
                [off, 2.0 * r2 - 1.0, off],
                [1.0 - r2, off, -r2],
            ];
        }
    }
    Ok(CoinMatrix { family, rho, entries })
}

impl CoinMatrix {
    pub fn family(&self) -> Family {
        self.family
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        assert!(row < self.dim() && col < self.dim(), "coin index out of range");
        Complex64::new(self.entries[row][col], 0.0)
    }

    /// The real `D x D` block used by the evolution kernel.
    pub(crate) fn real_block<const D: usize>(&self) -> [[f64; D]; D] {
        assert_eq!(D, self.dim());
        let mut out = [[0.0; D]; D];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, x) in row.iter_mut().enumerate() {
                *x = self.entries[r][c];
            }
        }
        out
    }

    /// `C v` for a coin vector of matching dimension.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let d = self.dim();
        if v.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: v.len() });
        }
        Ok((0..d)
            .map(|r| (0..d).map(|c| v[c] * self.entries[r][c]).sum())
            .collect())
    }

    /// Largest entrywise deviation of `C C^dagger` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let prod: f64 = (0..d).map(|k| self.entries[i][k] * self.entries[j][k]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod - target).abs());
            }
        }
        worst
    }
}

/// A normalized coin state, stored in the standard basis
/// (`{|L>, |R>}` or `{|L>, |S>, |R>}`).
#[derive(Debug, Clone, PartialEq)]
pub struct CoinVector {
    components: Vec<Complex64>,
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

impl CoinVector {
    /// Wraps `components`, which must already be normalized to within
    /// [`NORM_TOL`].
    pub fn new(components: Vec<Complex64>) -> Result<Self> {
        if !(2..=3).contains(&components.len()) {
            return Err(Error::domain(format!(
                "coin vectors have 2 or 3 components, got {}",
                components.len()
            )));
        }
        let n = norm_sqr(&components);
        if !n.is_finite() || (n.sqrt() - 1.0).abs() > NORM_TOL {
            return Err(Error::domain(format!("coin vector has norm {} (expected 1)", n.sqrt())));
        }
        Ok(CoinVector { components })
    }

    /// Rescales `components` to unit norm.
    pub fn normalized(components: Vec<Complex64>) -> Result<Self> {
        let n = norm_sqr(&components).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::domain("cannot normalize a zero coin vector"));
        }
        CoinVector::new(components.into_iter().map(|z| z / n).collect())
    }

    fn from_real(components: &[f64]) -> Self {
        CoinVector { components: components.iter().map(|&x| Complex64::new(x, 0.0)).collect() }
    }

    /// Standard basis vector `index` of `family` (`0 = |L>`, last = `|R>`).
    pub fn standard(family: Family, index: usize) -> Result<Self> {
        let d = family.dim();
        if index >= d {
            return Err(Error::DimensionMismatch { expected: d, found: index + 1 });
        }
        let mut c = vec![0.0; d];
        c[index] = 1.0;
        Ok(CoinVector::from_real(&c))
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Complex64] {
        &self.components
    }

    pub fn inner(&self, other: &CoinVector) -> Complex64 {
        self.components.iter().zip(&other.components).map(|(a, b)| a.conj() * b).sum()
    }
}

/// The coin eigenbasis, with the sign conventions used throughout:
///
/// * two-state: `[chi+, chi-]`, eigenvalues `+1, -1`;
/// * three-state: `[sigma+, sigma1-, sigma2-]`, eigenvalues `+1, -1, -1`.
pub fn eigenbasis(coin: &CoinMatrix) -> Vec<CoinVector> {
    let rho = coin.rho;
    match coin.family {
        Family::TwoState => {
            let p = ((1.0 + rho) / 2.0).sqrt();
            let q = ((1.0 - rho) / 2.0).sqrt();
            vec![CoinVector::from_real(&[p, q]), CoinVector::from_real(&[-q, p])]
        }
        Family::ThreeState => {
            let s = (1.0 - rho * rho).sqrt();
            let h = std::f64::consts::FRAC_1_SQRT_2;
            vec![
                CoinVector::from_real(&[s * h, rho, s * h]),
                CoinVector::from_real(&[rho * h, -s, rho * h]),
                CoinVector::from_real(&[h, 0.0, -h]),
            ]
        }
    }
}

/// Eigenvalue of each vector returned by [`eigenbasis`].
pub fn eigenvalues(family: Family) -> &'static [f64] {
    match family {
        Family::TwoState => &[1.0, -1.0],
        Family::ThreeState => &[1.0, -1.0, -1.0],
    }
}

/// Coefficients `(h+, h-)` of a two-state coin vector in `{chi+, chi-}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenDecomp2 {
    h_plus: Complex64,
    h_minus: Complex64,
}

impl EigenDecomp2 {
    pub fn new(h_plus: Complex64, h_minus: Complex64) -> Result<Self> {
        check_unit(&[h_plus, h_minus])?;
        Ok(EigenDecomp2 { h_plus, h_minus })
    }

    pub fn h_plus(&self) -> Complex64 {
        self.h_plus
    }

    pub fn h_minus(&self) -> Complex64 {
        self.h_minus
    }

    /// `2|h+|^2 - 1`, the only combination the two-state closed forms use.
    pub fn bias(&self) -> f64 {
        2.0 * self.h_plus.norm_sqr() - 1.0
    }
}

/// Coefficients `(g+, g1, g2)` of a three-state coin vector in
/// `{sigma+, sigma1-, sigma2-}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenDecomp3 {
    g_plus: Complex64,
    g_1: Complex64,
    g_2: Complex64,
}

impl EigenDecomp3 {
    pub fn new(g_plus: Complex64, g_1: Complex64, g_2: Complex64) -> Result<Self> {
        check_unit(&[g_plus, g_1, g_2])?;
        Ok(EigenDecomp3 { g_plus, g_1, g_2 })
    }

    pub fn g_plus(&self) -> Complex64 {
        self.g_plus
    }

    pub fn g_1(&self) -> Complex64 {
        self.g_1
    }

    pub fn g_2(&self) -> Complex64 {
        self.g_2
    }

    /// `g1 conj(g2) + conj(g1) g2`, real by construction.
    pub fn cross(&self) -> f64 {
        2.0 * (self.g_1 * self.g_2.conj()).re
    }
}

fn check_unit(coeffs: &[Complex64]) -> Result<()> {
    let n = norm_sqr(coeffs);
    if n.is_finite() && (n - 1.0).abs() <= NORM_TOL {
        Ok(())
    } else {
        Err(Error::domain(format!("eigenbasis coefficients have squared norm {n} (expected 1)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decomposition {
    Two(EigenDecomp2),
    Three(EigenDecomp3),
}

impl Decomposition {
    pub fn family(&self) -> Family {
        match self {
            Decomposition::Two(_) => Family::TwoState,
            Decomposition::Three(_) => Family::ThreeState,
        }
    }

    pub fn coefficients(&self) -> Vec<Complex64> {
        match self {
            Decomposition::Two(d) => vec![d.h_plus, d.h_minus],
            Decomposition::Three(d) => vec![d.g_plus, d.g_1, d.g_2],
        }
    }
}

/// Coefficients of `state` in the eigenbasis of `coin`.
pub fn decompose(state: &CoinVector, coin: &CoinMatrix) -> Result<Decomposition> {
    if state.dim() != coin.dim() {
        return Err(Error::DimensionMismatch { expected: coin.dim(), found: state.dim() });
    }
    let c: Vec<Complex64> = eigenbasis(coin).iter().map(|e| e.inner(state)).collect();
    // Projections of a unit vector onto an orthonormal basis: renormalize
    // away the last-ulp drift so the invariant holds exactly.
    let n = norm_sqr(&c).sqrt();
    let c: Vec<Complex64> = c.into_iter().map(|z| z / n).collect();
    Ok(match coin.family {
        Family::TwoState => Decomposition::Two(EigenDecomp2::new(c[0], c[1])?),
        Family::ThreeState => Decomposition::Three(EigenDecomp3::new(c[0], c[1], c[2])?),
    })
}

/// Inverse of [`decompose`]: the standard-basis vector with the given
/// eigenbasis coefficients.
pub fn compose(coeffs: &Decomposition, coin: &CoinMatrix) -> Result<CoinVector> {
    if coeffs.family() != coin.family {
        return Err(Error::DimensionMismatch {
            expected: coin.dim(),
            found: coeffs.family().dim(),
        });
    }
    let c = coeffs.coefficients();
    check_unit(&c)?;
    let basis = eigenbasis(coin);
    let mut out = vec![Complex64::new(0.0, 0.0); coin.dim()];
    for (k, e) in c.iter().zip(&basis) {
        for (o, x) in out.iter_mut().zip(e.components()) {
            *o += k * x;
        }
    }
    CoinVector::normalized(out)
}

/// Asymmetry factor of the two-state limit density, eigenbasis form
/// `(2|h+|^2 - 1) / rho`.
pub fn lambda_factor(decomp: &EigenDecomp2, rho: f64) -> f64 {
    decomp.bias() / rho
}

/// The same factor in the standard basis, for the state `a|L> + b|R>`:
/// `|a|^2 - |b|^2 + sqrt(1 - rho^2)/rho * (a conj(b) + b conj(a))`.
pub fn lambda_factor_standard(a: Complex64, b: Complex64, rho: f64) -> f64 {
    let s = (1.0 - rho * rho).sqrt();
    a.norm_sqr() - b.norm_sqr() + s / rho * 2.0 * (a * b.conj()).re
}

/// Initial coin state: a pure state or an incoherent mixture of pure states.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Pure(CoinVector),
    Mixture(Vec<(f64, CoinVector)>),
}

impl InitialCondition {
    pub fn mixture(components: Vec<(f64, CoinVector)>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::domain("mixture needs at least one component"))?;
        let d = first.1.dim();
        for (w, v) in &components {
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::domain(format!("mixture weight {w} is negative")));
            }
            if v.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: v.dim() });
            }
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::domain(format!("mixture weights sum to {total} (expected 1)")));
        }
        Ok(InitialCondition::Mixture(components))
    }

    pub fn dim(&self) -> usize {
        match self {
            InitialCondition::Pure(v) => v.dim(),
            InitialCondition::Mixture(c) => c[0].1.dim(),
        }
    }

    /// `(weight, state)` pairs; a pure state is a single component of weight 1.
    pub fn components(&self) -> Vec<(f64, &CoinVector)> {
        match self {
            InitialCondition::Pure(v) => vec![(1.0, v)],
            InitialCondition::Mixture(c) => c.iter().map(|(w, v)| (*w, v)).collect(),
        }
    }
}

impl From<CoinVector> for InitialCondition {
    fn from(v: CoinVector) -> Self {
        InitialCondition::Pure(v)
    }
}
