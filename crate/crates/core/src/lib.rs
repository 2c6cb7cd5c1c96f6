//! Simulation and asymptotic theory of persistence in one-dimensional coined
//! quantum walks with two- and three-state coins.
//!
//! The walk starts at the origin and is measured at step `t`; under the
//! restart scheme the probability that site `m` is never seen occupied in
//! the measurements at `t = 1..T` is `P_m(T) = prod (1 - p(m, t))`. The
//! crate computes `p(m, t)` exactly ([`simulator`]), accumulates persistence
//! ([`persistence`]), evaluates the weak-limit closed forms ([`theory`]) and
//! fits exponents ([`analysis`]).

pub mod analysis;
pub mod coin;
pub mod error;
pub mod persistence;
pub mod quadrature;
pub mod simulator;
pub mod theory;

pub use analysis::{
    compare_report, fit, fit_combined, fit_exponential, fit_power, ComparisonReport, FitModel, FitResult, FitWindow,
    Regime, ReportWindows, SiteReport,
};
pub use coin::{
    compose, decompose, eigenbasis, eigenvalues, lambda_factor, lambda_factor_standard, make_coin, CoinMatrix,
    CoinVector, Decomposition, EigenDecomp2, EigenDecomp3, Family, InitialCondition,
};
pub use error::{Error, Result};
pub use persistence::{
    persistence_density_approx, persistence_exact, persistence_for, persistence_log_approx, Method, MixtureMode,
    PersistenceSeries,
};
pub use simulator::{evolve, probability_series, Distribution, Evolution, ProbabilitySeries, WalkState};
pub use theory::{
    asymptotic_law, asymptotic_persistence, decay_rate, integral_asymptotic, integral_closed, integral_numeric,
    limit_density, power_exponent, total_trapping, trapping_probability, trapping_q, AsymptoticLaw, TheoryParams,
};
