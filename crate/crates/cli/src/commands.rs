//! Subcommand implementations.

use std::path::Path;

use qwpersist::simulator::component_series;
use qwpersist::theory::base_exponent;
use qwpersist::{
    asymptotic_persistence, compare_report, decay_rate, evolve, fit, integral_asymptotic, integral_closed,
    integral_numeric, limit_density, make_coin, persistence_density_approx, persistence_for, persistence_log_approx,
    probability_series, trapping_probability, CoinMatrix, Family, FitModel, FitWindow, InitialCondition, Method,
    MixtureMode, PersistenceSeries, ReportWindows, TheoryParams,
};

use crate::init_spec::{InitSpec, Named};
use crate::output::{num, write_csv, write_json, Table};
use crate::{
    CliError, CompareArgs, FitArgs, Mixing, Model, PersistArgs, PersistMethod, SimulateArgs, TheoryCommand, Walk,
    WalkArgs,
};

fn family_of(walk: &WalkArgs, init: Option<&InitSpec>) -> Result<Family, CliError> {
    match (walk.walk, init.and_then(InitSpec::family)) {
        (Some(Walk::Two), _) => Ok(Family::TwoState),
        (Some(Walk::Three), _) => Ok(Family::ThreeState),
        (None, Some(f)) => Ok(f),
        (None, None) => Err(CliError::Usage("--walk is required: the initial state does not fix the coin".into())),
    }
}

fn resolve(init: &InitSpec, coin: &CoinMatrix) -> Result<InitialCondition, CliError> {
    init.resolve(coin).map_err(CliError::Usage)
}

fn check_sites(sites: &[i64]) -> Result<(), CliError> {
    if sites.contains(&0) {
        return Err(CliError::Usage("site 0 is the starting point and has no persistence".into()));
    }
    Ok(())
}

fn check_steps(steps: usize) -> Result<(), CliError> {
    if steps == 0 {
        return Err(CliError::Usage("--steps must be at least 1".into()));
    }
    Ok(())
}

pub fn simulate(args: &SimulateArgs, invocation: &[String]) -> Result<(), CliError> {
    let coin = make_coin(family_of(&args.walk, Some(&args.init))?, args.walk.rho)?;
    let init = resolve(&args.init, &coin)?;
    let params = TheoryParams::from_initial(&init, &coin)?;
    let dist = evolve(&init, &coin, args.steps)?.distribution();
    let three = coin.family() == Family::ThreeState;
    let mut header = vec!["m", "p_exact", "w_scaled"];
    if three {
        header.push("p_trap");
    }
    let mut table = Table::new(header);
    let t = args.steps as i64;
    for m in -t..=t {
        let w_scaled = if t == 0 {
            0.0
        } else {
            let w = limit_density(&params, m as f64 / t as f64) / t as f64;
            match (three, (m + t) % 2 == 0) {
                (true, _) => w,
                // Two-state walks only occupy sites of the parity of t.
                (false, true) => 2.0 * w,
                (false, false) => 0.0,
            }
        };
        let mut row = vec![m.to_string(), num(dist.get(m)), num(w_scaled)];
        if three {
            row.push(num(trapping_probability(&params, m)));
        }
        table.push(row);
    }
    write_csv(&args.out, "simulate.csv", invocation, &table)
}

fn method_name(m: PersistMethod) -> &'static str {
    match m {
        PersistMethod::Exact => "exact",
        PersistMethod::LogApprox => "log_approx",
        PersistMethod::DensityApprox => "density_approx",
        PersistMethod::TheoryAsymptote => "theory_asymptote",
    }
}

/// Theory-side persistence, averaged over pure components for ensemble mixing.
fn theory_columns(
    params: &TheoryParams,
    mixing: Mixing,
    eval: impl Fn(&TheoryParams) -> Result<Vec<Vec<f64>>, CliError>,
) -> Result<Vec<Vec<f64>>, CliError> {
    if mixing == Mixing::PerRun || params.components().len() == 1 {
        return eval(params);
    }
    let mut acc: Option<Vec<Vec<f64>>> = None;
    for (w, d) in params.components() {
        let part = eval(&TheoryParams::pure(params.rho(), d.clone())?)?;
        let acc = acc.get_or_insert_with(|| part.iter().map(|c| vec![0.0; c.len()]).collect());
        for (a, c) in acc.iter_mut().zip(&part) {
            for (x, y) in a.iter_mut().zip(c) {
                *x += w * y;
            }
        }
    }
    Ok(acc.unwrap_or_default())
}

fn log_approx_columns(
    init: &InitialCondition,
    coin: &CoinMatrix,
    sites: &[i64],
    steps: usize,
    mixing: Mixing,
) -> Result<Vec<Vec<f64>>, CliError> {
    let cols = |series: &[qwpersist::ProbabilitySeries]| -> Result<Vec<Vec<f64>>, CliError> {
        series.iter().map(|s| Ok(persistence_log_approx(s)?.values().to_vec())).collect()
    };
    if mixing == Mixing::PerRun {
        return cols(&probability_series(init, coin, sites, steps)?);
    }
    let mut acc = vec![vec![0.0; steps]; sites.len()];
    for (w, series) in component_series(init, coin, sites, steps)? {
        for (a, c) in acc.iter_mut().zip(cols(&series)?) {
            for (x, y) in a.iter_mut().zip(c) {
                *x += w * y;
            }
        }
    }
    Ok(acc)
}

pub fn persist(args: &PersistArgs, invocation: &[String]) -> Result<(), CliError> {
    check_sites(&args.sites)?;
    check_steps(args.steps)?;
    let coin = make_coin(family_of(&args.walk, Some(&args.init))?, args.walk.rho)?;
    let init = resolve(&args.init, &coin)?;
    let params = TheoryParams::from_initial(&init, &coin)?;
    let (sites, steps) = (&args.sites[..], args.steps);

    // columns[method][site][t - 1]
    let mut columns = Vec::new();
    for &method in &args.method {
        let cols = match method {
            PersistMethod::Exact => {
                let mode = match args.mixing {
                    Mixing::PerRun => MixtureMode::PerRun,
                    Mixing::Ensemble => MixtureMode::Ensemble,
                };
                persistence_for(&init, &coin, sites, steps, mode)?.iter().map(|s| s.values().to_vec()).collect()
            }
            PersistMethod::LogApprox => log_approx_columns(&init, &coin, sites, steps, args.mixing)?,
            PersistMethod::DensityApprox => theory_columns(&params, args.mixing, |p| {
                sites.iter().map(|&m| Ok(persistence_density_approx(p, m, steps)?.values().to_vec())).collect()
            })?,
            PersistMethod::TheoryAsymptote => theory_columns(&params, args.mixing, |p| {
                sites
                    .iter()
                    .map(|&m| {
                        // Inside the light cone the site is certainly unvisited.
                        (1..=steps).map(|t| Ok(asymptotic_persistence(p, m, t as f64)?.min(1.0))).collect()
                    })
                    .collect()
            })?,
        };
        columns.push((method, cols));
    }

    let mut header = vec!["T".to_string()];
    for (method, _) in &columns {
        for m in sites {
            header.push(format!("{}_m{m}", method_name(*method)));
        }
    }
    let mut table = Table::new(header);
    for t in 0..steps {
        let mut row = vec![(t + 1).to_string()];
        for (_, cols) in &columns {
            row.extend(cols.iter().map(|c| num(c[t])));
        }
        table.push(row);
    }
    write_csv(&args.out, "persist.csv", invocation, &table)
}

fn theory_params(walk: &WalkArgs, init: &InitSpec, family: Family) -> Result<TheoryParams, CliError> {
    let coin = make_coin(family, walk.rho)?;
    Ok(TheoryParams::from_initial(&resolve(init, &coin)?, &coin)?)
}

pub fn theory(cmd: &TheoryCommand, invocation: &[String]) -> Result<(), CliError> {
    match cmd {
        TheoryCommand::Density { walk, init, points, out } => {
            if *points == 0 {
                return Err(CliError::Usage("--points must be at least 1".into()));
            }
            let params = theory_params(walk, init, family_of(walk, Some(init))?)?;
            let mut table = Table::new(["v", "w"]);
            // Cell midpoints: the density diverges at the edges of the support.
            for k in 0..*points {
                let v = walk.rho * (-1.0 + (2 * k + 1) as f64 / *points as f64);
                table.push(vec![num(v), num(limit_density(&params, v))]);
            }
            write_csv(out, "density.csv", invocation, &table)
        }
        TheoryCommand::Trap { walk, init, sites, out } => {
            let family = family_of(walk, Some(init)).unwrap_or(Family::ThreeState);
            let params = theory_params(walk, init, family)?;
            let sites: Vec<i64> = if sites.is_empty() { (-5..=5).collect() } else { sites.clone() };
            let mut table = Table::new(["m", "p_inf"]);
            for m in sites {
                table.push(vec![m.to_string(), num(trapping_probability(&params, m))]);
            }
            write_csv(out, "trap.csv", invocation, &table)
        }
        TheoryCommand::Lambda { walk, init, out } => {
            let family = family_of(walk, init.as_ref())?;
            let lambda = match (family, init) {
                (_, Some(init)) => qwpersist::power_exponent(&theory_params(walk, init, family)?),
                (Family::TwoState, None) => base_exponent(walk.rho),
                (Family::ThreeState, None) => {
                    return Err(CliError::Usage("three-state exponents depend on the state: pass --init".into()))
                }
            };
            let mut table = Table::new(["rho", "lambda"]);
            table.push(vec![num(walk.rho), num(lambda)]);
            write_csv(out, "lambda.csv", invocation, &table)
        }
        TheoryCommand::Gamma { walk, init, sites, out } => {
            check_sites(sites)?;
            let params = theory_params(walk, init, family_of(walk, Some(init))?)?;
            let mut table = Table::new(["m", "gamma"]);
            for &m in sites {
                table.push(vec![m.to_string(), num(decay_rate(&params, m)?)]);
            }
            write_csv(out, "gamma.csv", invocation, &table)
        }
        TheoryCommand::Integral { walk, init, sites, steps, out } => {
            let family = family_of(walk, init.as_ref())?;
            let balanced = InitSpec::Named(match family {
                Family::TwoState => Named::Sym2,
                Family::ThreeState => Named::Asym,
            });
            let params = theory_params(walk, init.as_ref().unwrap_or(&balanced), family)?;
            check_sites(sites)?;
            if let Some(t) = steps.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
                return Err(CliError::Usage(format!("--T {t} must be positive")));
            }
            let mut table = Table::new(["m", "T", "closed", "asymptotic", "numeric"]);
            for &m in sites {
                for &t in steps {
                    table.push(vec![
                        m.to_string(),
                        num(t),
                        num(integral_closed(&params, m, t)),
                        num(integral_asymptotic(&params, m, t)),
                        num(integral_numeric(&params, m, t)?),
                    ]);
                }
            }
            write_csv(out, "integral.csv", invocation, &table)
        }
    }
}

/// Site encoded in a `persist` column name such as `exact_m-2`.
fn site_from_column(name: &str) -> Option<i64> {
    name.rsplit_once("_m").and_then(|(_, m)| m.parse().ok())
}

fn method_from_column(name: &str) -> Method {
    match name.rsplit_once("_m").map(|(prefix, _)| prefix) {
        Some("log_approx") => Method::LogApprox,
        Some("density_approx") => Method::DensityApprox,
        _ => Method::Exact,
    }
}

fn read_column(path: &Path, column: Option<&str>) -> Result<(String, Vec<f64>), CliError> {
    let bad = |msg: String| CliError::Usage(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.get(0) != Some("T") {
        return Err(bad("first column must be T".into()));
    }
    let (index, name) = match column {
        Some(c) => (header.iter().position(|h| h == c).ok_or_else(|| bad(format!("no column `{c}`")))?, c),
        None => (1, header.get(1).ok_or_else(|| bad("no data column".into()))?),
    };
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let field = |k: usize| record.get(k).ok_or_else(|| bad(format!("row {} is short", i + 1)));
        let t: usize = field(0)?.trim().parse().map_err(|_| bad(format!("row {}: T is not a step count", i + 1)))?;
        if t != i + 1 {
            return Err(bad(format!("row {}: expected T = {}, found {t}", i + 1, i + 1)));
        }
        let p: f64 = field(index)?.trim().parse().map_err(|_| bad(format!("row {}: `{name}` is not a number", i + 1)))?;
        values.push(p);
    }
    Ok((name.to_string(), values))
}

pub fn fit_command(args: &FitArgs, invocation: &[String]) -> Result<(), CliError> {
    let (column, values) = read_column(&args.input, args.column.as_deref())?;
    let m = args
        .site
        .or_else(|| site_from_column(&column))
        .ok_or_else(|| CliError::Usage(format!("cannot infer the site from column `{column}`: pass --m")))?;
    check_sites(&[m])?;
    let series = PersistenceSeries::new(m, method_from_column(&column), values)?;
    let model = match args.model {
        Model::Power => FitModel::Power,
        Model::Exponential => FitModel::Exponential,
        Model::Combined => FitModel::Combined,
    };
    let t_max = series.t_max();
    let window = match (args.window, model) {
        (Some((lo, hi)), _) => FitWindow::new(m, lo, hi)?,
        (None, FitModel::Exponential) => FitWindow::default_exponential(m, t_max)?,
        (None, _) => FitWindow::default_power(m, t_max)?,
    };
    let result = fit(&series, model, window)?;
    let body = serde_json::json!({ "column": column, "m": m, "result": result });
    write_json(&args.out, "fit.json", invocation, "fit", body)
}

pub fn compare(args: &CompareArgs, invocation: &[String]) -> Result<(), CliError> {
    check_sites(&args.sites)?;
    check_steps(args.steps)?;
    let coin = make_coin(family_of(&args.walk, Some(&args.init))?, args.walk.rho)?;
    let init = resolve(&args.init, &coin)?;
    let windows = ReportWindows { power: args.power_window, exponential: args.exp_window };
    let report = compare_report(&init, &coin, &args.init.to_string(), &args.sites, args.steps, windows)?;
    let body = serde_json::to_value(&report).map_err(|e| CliError::Numeric(e.to_string()))?;
    write_json(&args.out, "compare.json", invocation, "report", body)
}
