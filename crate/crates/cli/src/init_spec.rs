//! Textual initial coin states.
//!
//! ```text
//! chi+ | chi- | sym2 | L | R | S | sigma+ | sigma1- | sigma2- | asym
//! eig:re,im;re,im[;re,im]      coefficients in the coin eigenbasis
//! std:re,im;re,im[;re,im]      components in the {L, R} or {L, S, R} basis
//! mix:w*SPEC|w*SPEC[|...]      incoherent mixture, weights summing to 1
//! ```
//!
//! Real numbers may also be written `1/sqrt2`, `1/sqrt3` (optionally negated).

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use qwpersist::{compose, CoinMatrix, CoinVector, Decomposition, EigenDecomp2, EigenDecomp3, Family, InitialCondition};

/// Tolerance on the norm of explicit states and on mixture weight sums.
pub const SPEC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Named {
    ChiPlus,
    ChiMinus,
    Sym2,
    Left,
    Right,
    Stay,
    SigmaPlus,
    Sigma1Minus,
    Sigma2Minus,
    Asym,
}

const NAMES: [(&str, Named); 10] = [
    ("chi+", Named::ChiPlus),
    ("chi-", Named::ChiMinus),
    ("sym2", Named::Sym2),
    ("L", Named::Left),
    ("R", Named::Right),
    ("S", Named::Stay),
    ("sigma+", Named::SigmaPlus),
    ("sigma1-", Named::Sigma1Minus),
    ("sigma2-", Named::Sigma2Minus),
    ("asym", Named::Asym),
];

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Named(Named),
    Eigen(Vec<Complex64>),
    Standard(Vec<Complex64>),
    Mixture(Vec<(f64, InitSpec)>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid initial state `{input}`: {reason}")]
pub struct SpecError {
    input: String,
    reason: String,
}

fn fail<T>(input: &str, reason: impl Into<String>) -> Result<T, SpecError> {
    Err(SpecError { input: input.to_string(), reason: reason.into() })
}

/// Decimal number or one of the literals `1/sqrt2`, `1/sqrt3`.
pub fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let value = match body {
        "1/sqrt2" => FRAC_1_SQRT_2,
        "1/sqrt3" => 1.0 / 3f64.sqrt(),
        _ => return s.parse::<f64>().ok().filter(|x| x.is_finite()),
    };
    Some(if neg { -value } else { value })
}

fn parse_components(input: &str, body: &str) -> Result<Vec<Complex64>, SpecError> {
    let comps = body
        .split(';')
        .map(|pair| match pair.split(',').collect::<Vec<_>>()[..] {
            [re, im] => match (parse_real(re), parse_real(im)) {
                (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
                _ => fail(input, format!("`{pair}` is not a pair of real numbers")),
            },
            _ => fail(input, format!("`{pair}` must be written `re,im`")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if !(2..=3).contains(&comps.len()) {
        return fail(input, format!("expected 2 or 3 components, found {}", comps.len()));
    }
    let norm: f64 = comps.iter().map(|c| c.norm_sqr()).sum();
    if (norm.sqrt() - 1.0).abs() > SPEC_TOL {
        return fail(input, format!("state has norm {} (must be 1 within {SPEC_TOL:e})", norm.sqrt()));
    }
    Ok(comps)
}

impl FromStr for InitSpec {
    type Err = SpecError;

    fn from_str(input: &str) -> Result<Self, SpecError> {
        let s = input.trim();
        if let Some((_, named)) = NAMES.iter().find(|(n, _)| *n == s) {
            return Ok(InitSpec::Named(*named));
        }
        if let Some(body) = s.strip_prefix("eig:") {
            return parse_components(input, body).map(InitSpec::Eigen);
        }
        if let Some(body) = s.strip_prefix("std:") {
            return parse_components(input, body).map(InitSpec::Standard);
        }
        if let Some(body) = s.strip_prefix("mix:") {
            let parts = body
                .split('|')
                .map(|term| {
                    let Some((w, spec)) = term.split_once('*') else {
                        return fail(input, format!("mixture term `{term}` must be written `w*SPEC`"));
                    };
                    let Some(w) = parse_real(w).filter(|w| *w >= 0.0) else {
                        return fail(input, format!("`{w}` is not a non-negative weight"));
                    };
                    let spec: InitSpec = spec.parse()?;
                    if matches!(spec, InitSpec::Mixture(_)) {
                        return fail(input, "mixtures cannot be nested");
                    }
                    Ok((w, spec))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let total: f64 = parts.iter().map(|(w, _)| w).sum();
            if (total - 1.0).abs() > SPEC_TOL {
                return fail(input, format!("mixture weights sum to {total}"));
            }
            return Ok(InitSpec::Mixture(parts));
        }
        let known: Vec<&str> = NAMES.iter().map(|(n, _)| *n).collect();
        fail(input, format!("expected one of {}, eig:..., std:... or mix:...", known.join(", ")))
    }
}

fn write_components(f: &mut fmt::Formatter<'_>, comps: &[Complex64]) -> fmt::Result {
    for (i, c) in comps.iter().enumerate() {
        if i > 0 {
            f.write_str(";")?;
        }
        write!(f, "{:?},{:?}", c.re, c.im)?;
    }
    Ok(())
}

impl fmt::Display for InitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitSpec::Named(n) => {
                let name = NAMES.iter().find(|(_, m)| m == n).map(|(s, _)| *s).expect("every name listed");
                f.write_str(name)
            }
            InitSpec::Eigen(c) => {
                f.write_str("eig:")?;
                write_components(f, c)
            }
            InitSpec::Standard(c) => {
                f.write_str("std:")?;
                write_components(f, c)
            }
            InitSpec::Mixture(parts) => {
                f.write_str("mix:")?;
                for (i, (w, spec)) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str("|")?;
                    }
                    write!(f, "{w:?}*{spec}")?;
                }
                Ok(())
            }
        }
    }
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn family_name(family: Family) -> &'static str {
    match family {
        Family::TwoState => "two-state",
        Family::ThreeState => "three-state",
    }
}

impl InitSpec {
    /// Coin family implied by this state, if any (`L`, `R` fit both).
    pub fn family(&self) -> Option<Family> {
        match self {
            InitSpec::Named(Named::ChiPlus | Named::ChiMinus | Named::Sym2) => Some(Family::TwoState),
            InitSpec::Named(Named::Left | Named::Right) => None,
            InitSpec::Named(_) => Some(Family::ThreeState),
            InitSpec::Eigen(c) | InitSpec::Standard(c) => match c.len() {
                2 => Some(Family::TwoState),
                3 => Some(Family::ThreeState),
                _ => None,
            },
            InitSpec::Mixture(parts) => parts.iter().find_map(|(_, s)| s.family()),
        }
    }

    /// The pure coin state this spec denotes for `coin`.
    fn vector(&self, coin: &CoinMatrix) -> Result<CoinVector, String> {
        let family = coin.family();
        let need = |want: Family| {
            if family == want {
                Ok(())
            } else {
                Err(format!("`{self}` is a {} state but the walk is {}", family_name(want), family_name(family)))
            }
        };
        let eig = |d: Decomposition| compose(&d, coin).map_err(|e| e.to_string());
        let h = FRAC_1_SQRT_2;
        let (one, zero) = (real(1.0), real(0.0));
        match self {
            InitSpec::Named(n) => match n {
                Named::ChiPlus | Named::ChiMinus | Named::Sym2 => {
                    need(Family::TwoState)?;
                    let (a, b) = match n {
                        Named::ChiPlus => (one, zero),
                        Named::ChiMinus => (zero, one),
                        _ => (real(h), real(h)),
                    };
                    eig(Decomposition::Two(EigenDecomp2::new(a, b).map_err(|e| e.to_string())?))
                }
                Named::SigmaPlus | Named::Sigma1Minus | Named::Sigma2Minus | Named::Asym => {
                    need(Family::ThreeState)?;
                    let (a, b, c) = match n {
                        Named::SigmaPlus => (one, zero, zero),
                        Named::Sigma1Minus => (zero, one, zero),
                        Named::Sigma2Minus => (zero, zero, one),
                        _ => (real(h), zero, real(h)),
                    };
                    eig(Decomposition::Three(EigenDecomp3::new(a, b, c).map_err(|e| e.to_string())?))
                }
                Named::Stay => {
                    need(Family::ThreeState)?;
                    CoinVector::standard(family, 1).map_err(|e| e.to_string())
                }
                Named::Left | Named::Right => {
                    let index = if *n == Named::Left { 0 } else { family.dim() - 1 };
                    CoinVector::standard(family, index).map_err(|e| e.to_string())
                }
            },
            InitSpec::Eigen(c) | InitSpec::Standard(c) => {
                if c.len() != family.dim() {
                    return Err(format!("`{self}` has {} components; the walk needs {}", c.len(), family.dim()));
                }
                // Remove the (at most 1e-9) normalization slack.
                let exact = CoinVector::normalized(c.clone()).map_err(|e| e.to_string())?;
                if let InitSpec::Standard(_) = self {
                    return Ok(exact);
                }
                let comps = exact.components();
                let d = match family {
                    Family::TwoState => Decomposition::Two(EigenDecomp2::new(comps[0], comps[1]).map_err(|e| e.to_string())?),
                    Family::ThreeState => Decomposition::Three(
                        EigenDecomp3::new(comps[0], comps[1], comps[2]).map_err(|e| e.to_string())?,
                    ),
                };
                eig(d)
            }
            InitSpec::Mixture(_) => Err("mixtures have no single coin vector".into()),
        }
    }

    /// Initial condition for a walk with the given coin.
    pub fn resolve(&self, coin: &CoinMatrix) -> Result<InitialCondition, String> {
        match self {
            InitSpec::Mixture(parts) => {
                // Absorb the (at most 1e-9) slack in the weight sum.
                let total: f64 = parts.iter().map(|(w, _)| w).sum();
                let comps = parts
                    .iter()
                    .map(|(w, s)| Ok((w / total, s.vector(coin)?)))
                    .collect::<Result<Vec<_>, String>>()?;
                InitialCondition::mixture(comps).map_err(|e| e.to_string())
            }
            pure => Ok(pure.vector(coin)?.into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use qwpersist::{eigenbasis, make_coin};

    fn close(a: &CoinVector, b: &CoinVector, tol: f64) -> bool {
        a.components().iter().zip(b.components()).all(|(x, y)| (x - y).norm() <= tol)
    }

    fn pure(spec: &str, coin: &CoinMatrix) -> CoinVector {
        match spec.parse::<InitSpec>().unwrap().resolve(coin).unwrap() {
            InitialCondition::Pure(v) => v,
            InitialCondition::Mixture(_) => panic!("expected a pure state"),
        }
    }

    #[test]
    fn named_states_match_eigenbasis() {
        let two = make_coin(Family::TwoState, 0.4).unwrap();
        let b = eigenbasis(&two);
        assert!(close(&pure("chi+", &two), &b[0], 1e-15));
        assert!(close(&pure("chi-", &two), &b[1], 1e-15));
        let three = make_coin(Family::ThreeState, 0.7).unwrap();
        let b = eigenbasis(&three);
        assert!(close(&pure("sigma+", &three), &b[0], 1e-15));
        assert!(close(&pure("sigma1-", &three), &b[1], 1e-15));
        assert!(close(&pure("sigma2-", &three), &b[2], 1e-15));
        assert!(close(&pure("S", &three), &CoinVector::standard(Family::ThreeState, 1).unwrap(), 0.0));
        assert!(close(&pure("R", &three), &CoinVector::standard(Family::ThreeState, 2).unwrap(), 0.0));
        assert!(close(&pure("R", &two), &CoinVector::standard(Family::TwoState, 1).unwrap(), 0.0));
    }

    #[test]
    fn combinations() {
        let three = make_coin(Family::ThreeState, 0.5).unwrap();
        let b = eigenbasis(&three);
        let asym = pure("asym", &three);
        for k in 0..3 {
            let expect = (b[0].components()[k] + b[2].components()[k]) * FRAC_1_SQRT_2;
            assert!((asym.components()[k] - expect).norm() < 1e-15);
        }
        assert!(close(&asym, &pure("eig:1/sqrt2,0;0,0;1/sqrt2,0", &three), 1e-15));
        let two = make_coin(Family::TwoState, 0.5).unwrap();
        assert!(close(&pure("sym2", &two), &pure("eig:1/sqrt2,0;1/sqrt2,0", &two), 1e-15));
    }

    #[test]
    fn rejects_bad_specs() {
        for bad in [
            "chi", "eig:1,0", "eig:0.7,0;0.7,0", "std:1,0;0,0;0,0;0,0", "std:a,0;1,0", "mix:0.5*chi+|0.4*chi-",
            "mix:0.5*chi+", "mix:1*mix:1*chi+", "mix:chi+", "mix:-0.5*chi+|1.5*chi-", "std:1,0,0",
        ] {
            assert!(bad.parse::<InitSpec>().is_err(), "{bad} accepted");
        }
    }

    #[test]
    fn family_mismatch() {
        let two = make_coin(Family::TwoState, 0.5).unwrap();
        let three = make_coin(Family::ThreeState, 0.5).unwrap();
        assert!("sigma+".parse::<InitSpec>().unwrap().resolve(&two).is_err());
        assert!("S".parse::<InitSpec>().unwrap().resolve(&two).is_err());
        assert!("chi-".parse::<InitSpec>().unwrap().resolve(&three).is_err());
        assert!("std:1,0;0,0".parse::<InitSpec>().unwrap().resolve(&three).is_err());
    }

    #[test]
    fn norm_tolerance() {
        // 1e-10 off is accepted and renormalized; 1e-8 off is rejected.
        assert!("std:1.0000000001,0;0,0".parse::<InitSpec>().is_ok());
        assert!("std:1.00000001,0;0,0".parse::<InitSpec>().is_err());
    }

    #[test]
    fn mixture_resolution() {
        let two = make_coin(Family::TwoState, 0.5).unwrap();
        let init = "mix:0.25*chi+|0.75*L".parse::<InitSpec>().unwrap().resolve(&two).unwrap();
        let comps = init.components();
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[1].0, 0.75);
    }

    #[test]
    fn display_of_named_and_mixture() {
        let s: InitSpec = "mix:0.5*sigma+|0.5*sigma2-".parse().unwrap();
        assert_eq!(s.to_string(), "mix:0.5*sigma+|0.5*sigma2-");
        assert_eq!("sigma1-".parse::<InitSpec>().unwrap().to_string(), "sigma1-");
    }

    fn spec_strategy() -> impl Strategy<Value = String> {
        let named = prop::sample::select(vec!["chi+", "chi-", "sym2", "L", "R"]).prop_map(String::from);
        let explicit = (prop::bool::ANY, prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2)).prop_filter_map(
            "zero vector",
            |(eig, parts)| {
                let n: f64 = parts.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
                (n > 1e-3).then(|| {
                    let body: Vec<String> = parts.iter().map(|(a, b)| format!("{:?},{:?}", a / n, b / n)).collect();
                    format!("{}:{}", if eig { "eig" } else { "std" }, body.join(";"))
                })
            },
        );
        let single = prop_oneof![named, explicit];
        prop_oneof![
            single.clone(),
            (0.0..1.0f64, single.clone(), single).prop_map(|(w, a, b)| format!("mix:{w:?}*{a}|{:?}*{b}", 1.0 - w)),
        ]
    }

    proptest! {
        #[test]
        fn display_round_trips(text in spec_strategy()) {
            let coin = make_coin(Family::TwoState, 0.35).unwrap();
            let Ok(spec) = text.parse::<InitSpec>() else { return Ok(()) };
            let again: InitSpec = spec.to_string().parse().unwrap();
            prop_assert_eq!(&again, &spec);
            let (a, b) = (spec.resolve(&coin).unwrap(), again.resolve(&coin).unwrap());
            for ((wa, va), (wb, vb)) in a.components().into_iter().zip(b.components()) {
                prop_assert!((wa - wb).abs() < 1e-12);
                prop_assert!(close(va, vb, 1e-12));
            }
        }
    }
}
