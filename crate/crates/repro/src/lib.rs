//! Scaffolding for the acceptance suite: criterion reporting and the named
//! initial states used by the reproduction runs.

use std::f64::consts::FRAC_1_SQRT_2;

use qwpersist::{
    eigenbasis, persistence_exact, persistence_log_approx, probability_series, CoinMatrix, CoinVector,
    InitialCondition, PersistenceSeries,
};

/// Result of a criterion run; errors are reported as failures.
pub type Res<T> = Result<T, Box<dyn std::error::Error>>;

#[derive(Default)]
pub struct Suite {
    pub failed: Vec<&'static str>,
    /// (run label, exact <= log approximation everywhere)
    pub hierarchy: Vec<(String, bool)>,
}

impl Suite {
    pub fn report(&mut self, id: &'static str, title: &str, outcome: Res<(bool, String)>) {
        let (ok, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        println!("[{}] {id} {title}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(id);
        }
    }

    /// Exact persistence for every site; records the exact <= log-approx check.
    pub fn persistence(
        &mut self,
        label: &str,
        init: &InitialCondition,
        coin: &CoinMatrix,
        sites: &[i64],
        t_max: usize,
    ) -> Res<Vec<PersistenceSeries>> {
        let mut out = Vec::new();
        for s in probability_series(init, coin, sites, t_max)? {
            let exact = persistence_exact(&s)?;
            let log = persistence_log_approx(&s)?;
            let holds = exact.values().iter().zip(log.values()).all(|(e, l)| e <= l);
            self.hierarchy.push((format!("{label} m={}", s.m()), holds));
            out.push(exact);
        }
        Ok(out)
    }
}

pub fn check(ok: bool, parts: &mut Vec<String>, text: String) -> bool {
    parts.push(format!("{text} {}", if ok { "ok" } else { "FAILED" }));
    ok
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn combo(basis: &[CoinVector], coeffs: &[f64]) -> CoinVector {
    let comps = (0..basis[0].dim())
        .map(|k| basis.iter().zip(coeffs).map(|(v, c)| v.components()[k] * c).sum())
        .collect();
    CoinVector::normalized(comps).expect("non-zero combination")
}

/// Named initial states built from the coin eigenbasis.
pub fn state(coin: &CoinMatrix, name: &str) -> InitialCondition {
    let b = eigenbasis(coin);
    let v = match name {
        "chi+" | "sigma+" => b[0].clone(),
        "chi-" | "sigma1-" => b[1].clone(),
        "sigma2-" => b[2].clone(),
        "sym2" => combo(&b, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]),
        "asym" => combo(&b, &[FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2]),
        other => panic!("unknown state {other}"),
    };
    v.into()
}
