//! Globally adaptive 7/15-point Gauss-Kronrod quadrature.
//!
//! Intervals are bisected in order of decreasing error estimate until the
//! summed estimate drops below `max(abs_tol, rel_tol * |I|)`.

use crate::error::{Error, Result};

// Kronrod abscissae on [0, 1] (positive half, center last) and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-10, rel_tol: 1e-12, max_intervals: 2000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment { a, b, value: kronrod * half, error: ((kronrod - gauss) * half).abs() }
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, abs_error: 0.0, intervals: 0 });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite bounds [{a}, {b}]")));
    }
    let mut segments = vec![gk15(&f, a, b)];
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if !value.is_finite() {
            return Err(Error::Quadrature(format!(
                "integrand is not finite on [{a}, {b}] ({} intervals)",
                segments.len()
            )));
        }
        if error <= opts.abs_tol.max(opts.rel_tol * value.abs()) {
            return Ok(QuadResult { value, abs_error: error, intervals: segments.len() });
        }
        if segments.len() >= opts.max_intervals {
            return Err(Error::Quadrature(format!(
                "no convergence on [{a}, {b}]: estimate {value:e}, error {error:e} after {} intervals",
                segments.len()
            )));
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            return Err(Error::Quadrature(format!(
                "interval [{}, {}] cannot be bisected further (error {error:e})",
                s.a, s.b
            )));
        }
        segments.push(gk15(&f, s.a, mid));
        segments.push(gk15(&f, mid, s.b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let r = integrate(|x| 3.0 * x * x - x + 2.0, -1.0, 2.0, QuadOptions::default()).unwrap();
        assert!((r.value - 13.5).abs() < 1e-13);
        assert_eq!(r.intervals, 1);
    }

    #[test]
    fn smooth_transcendental() {
        let r = integrate(f64::exp, 0.0, 1.0, QuadOptions::default()).unwrap();
        assert!((r.value - (std::f64::consts::E - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn logarithmic_endpoint() {
        // int_eps^1 dx/x = -ln eps
        let eps = 1e-6;
        let r = integrate(|x| 1.0 / x, eps, 1.0, QuadOptions::default()).unwrap();
        assert!((r.value + eps.ln()).abs() < 1e-10);
    }

    #[test]
    fn empty_interval() {
        let r = integrate(|x| x, 0.3, 0.3, QuadOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn non_convergence_is_reported() {
        let opts = QuadOptions { max_intervals: 5, ..Default::default() };
        let err = integrate(|x: f64| (1.0 / x).sin(), 1e-8, 1.0, opts).unwrap_err();
        assert!(matches!(err, Error::Quadrature(_)));
    }
}
