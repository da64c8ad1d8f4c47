//! Dispatch from a validated config to the experiment suites.

use serde_json::{json, Value};

use super::config::*;
use super::report::{cell, check_table, CheckRecord, Report, Table};
use crate::dynkin::{
    dynkin_residuals, generator_apply, martingale_check, order_fit, small_delta_probabilities,
    TestFunction, Verdict, PASS_STDERRS,
};
use crate::ergodicity::{
    check_conditions, check_lower_bound, convergence_curve, fit_rate, is_decreasing_within,
    lyapunov_drift, max_k, moment_bound_checks, ErgodicityParams,
};
use crate::error::{Error, Result};
use crate::model::{Direction, IntensityKind, ModelSpec, State};
use crate::sampler::{simulate_path, Path, ReplicaSeed};

/// Runs the experiment named in `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let model = &cfg.model;
    let seed = cfg.master_seed;
    match &cfg.params {
        ExperimentParams::Simulate(p) => simulate(model, seed, p),
        ExperimentParams::Dynkin(p) => {
            let est = dynkin_residuals(
                &p.functions,
                model,
                p.initial,
                p.t,
                p.replicas,
                seed,
                p.sampler,
            )?;
            let names = p.functions.iter().map(|f| f.to_string());
            Ok(records_report("dynkin", &cfg.scenario, p.t, names, &est))
        }
        ExperimentParams::DynkinTime(p) => {
            let est = dynkin_residuals(
                &p.functions,
                model,
                p.initial,
                p.t,
                p.replicas,
                seed,
                p.sampler,
            )?;
            let names = p.functions.iter().map(|f| f.to_string());
            Ok(records_report(
                "dynkin_time",
                &cfg.scenario,
                p.t,
                names,
                &est,
            ))
        }
        ExperimentParams::Lemma1(p) => lemma1(model, seed, p),
        ExperimentParams::Martingale(p) => {
            let est = martingale_check(
                &p.function,
                model,
                p.initial,
                p.s,
                p.t,
                &p.probes,
                p.replicas,
                seed,
            )?;
            let names = p
                .probes
                .iter()
                .map(|g| format!("{};probe={}", p.function, g));
            let mut report = records_report("martingale", &cfg.scenario, p.t, names, &est);
            report.results["s"] = json!(p.s);
            Ok(report)
        }
        ExperimentParams::Conditions(p) => conditions(model, p),
        ExperimentParams::Drift(p) => drift(model, p),
        ExperimentParams::Converge(p) => converge(model, seed, p),
        ExperimentParams::Moments(p) => moments(model, seed, p),
    }
}

/// Header of the path CSV.
pub const PATH_HEADER: [&str; 6] = ["time", "kind", "n_before", "x_before", "n_after", "x_after"];

/// Path events with reals at 17 significant digits.
pub fn path_table(path: &Path) -> Table {
    let mut table = Table::new(&PATH_HEADER);
    for e in path.events() {
        table.push(vec![
            format!("{:.16e}", e.time),
            e.kind.to_string(),
            cell(e.state_before.n()),
            format!("{:.16e}", e.state_before.x()),
            cell(e.state_after.n()),
            format!("{:.16e}", e.state_after.x()),
        ]);
    }
    table
}

fn simulate(model: &ModelSpec, seed: u64, p: &SimulateParams) -> Result<Report> {
    let replica = ReplicaSeed {
        master_seed: seed,
        replica: p.replica,
    };
    let path = simulate_path(model, p.initial, p.horizon, p.sampler, replica)?;
    let ups = path
        .events()
        .iter()
        .filter(|e| e.kind == Direction::Up)
        .count();
    Ok(Report {
        tables: vec![("path.csv".into(), path_table(&path))],
        results: json!({
            "events": path.events().len(),
            "up_events": ups,
            "down_events": path.events().len() - ups,
            "final_state": path.final_state(),
            "time_average_n": path.occupation_average(|n| n as f64),
        }),
        verdict: Verdict::Pass,
        warnings: Vec::new(),
    })
}

fn records_report(
    check: &str,
    scenario: &str,
    t: f64,
    names: impl Iterator<Item = String>,
    estimates: &[crate::MCEstimate],
) -> Report {
    let records: Vec<CheckRecord> = names
        .zip(estimates)
        .map(|(f, e)| CheckRecord {
            check: check.to_owned(),
            scenario: scenario.to_owned(),
            f,
            t,
            mean: e.mean,
            stderr: e.stderr,
            replicas: e.replicas,
            verdict: Verdict::mean_zero(e),
        })
        .collect();
    let verdict = Verdict::from_bool(records.iter().all(|r| r.verdict.is_pass()));
    Report {
        tables: vec![(format!("{check}.csv"), check_table(&records))],
        results: json!({ "records": records }),
        verdict,
        warnings: Vec::new(),
    }
}

pub const LEMMA1_HEADER: [&str; 14] = [
    "delta",
    "replicas",
    "p_none",
    "p_none_stderr",
    "p_none_exact",
    "p_one_up",
    "p_one_up_stderr",
    "int_lambda",
    "p_one_down",
    "p_one_down_stderr",
    "int_h",
    "p_multi",
    "p_multi_stderr",
    "no_jump_verdict",
];

fn lemma1(model: &ModelSpec, seed: u64, p: &Lemma1Params) -> Result<Report> {
    let mut table = Table::new(&LEMMA1_HEADER);
    let mut multi = (Vec::new(), Vec::new());
    let mut up_resid = (Vec::new(), Vec::new());
    let mut no_jump_ok = true;
    for &delta in &p.deltas {
        let est = small_delta_probabilities(model, p.initial, delta, p.replicas, seed, p.sampler)?;
        let int_up = model.cumulative_hazard(Direction::Up, p.initial, delta)?;
        let int_down = model.cumulative_hazard(Direction::Down, p.initial, delta)?;
        let exact = (-(int_up + int_down)).exp();
        let se_none = (exact * (1.0 - exact) / p.replicas as f64).sqrt();
        let ok = (est.p_none.p - exact).abs() <= PASS_STDERRS * se_none;
        no_jump_ok &= ok;
        multi.0.push(est.p_multi.p);
        multi.1.push(est.p_multi.stderr);
        up_resid.0.push((est.p_one_up.p - int_up).abs());
        up_resid.1.push(est.p_one_up.stderr);
        table.push(vec![
            cell(delta),
            cell(p.replicas),
            cell(est.p_none.p),
            cell(se_none),
            cell(exact),
            cell(est.p_one_up.p),
            cell(est.p_one_up.stderr),
            cell(int_up),
            cell(est.p_one_down.p),
            cell(est.p_one_down.stderr),
            cell(int_down),
            cell(est.p_multi.p),
            cell(est.p_multi.stderr),
            Verdict::from_bool(ok).as_str().to_owned(),
        ]);
    }
    let mut warnings = Vec::new();
    let mut fit = |name: &str, (r, se): &(Vec<f64>, Vec<f64>)| -> Value {
        match order_fit(&p.deltas, r, Some(se)) {
            Ok(f) => {
                warnings.extend(f.warnings.iter().map(|w| format!("{name}: {w}")));
                json!({ "slope": f.slope, "ci_low": f.ci_low, "ci_high": f.ci_high,
                        "points_used": f.points_used, "pass": f.slope >= p.min_order })
            }
            Err(e) => json!({ "error": e.to_string(), "pass": false }),
        }
    };
    let multi_fit = fit("p_multi", &multi);
    let up_fit = fit("p_one_up", &up_resid);
    let verdict =
        Verdict::from_bool(no_jump_ok && multi_fit["pass"] == true && up_fit["pass"] == true);
    Ok(Report {
        tables: vec![("lemma1.csv".into(), table)],
        results: json!({
            "no_jump_within_3_stderr": no_jump_ok,
            "order_p_multi": multi_fit,
            "order_p_one_up_residual": up_fit,
            "min_order": p.min_order,
        }),
        verdict,
        warnings,
    })
}

pub const CONDITIONS_HEADER: [&str; 7] = [
    "c0",
    "lambda_sup",
    "condi",
    "k",
    "condi2",
    "k_max",
    "lower_bound",
];

fn conditions(model: &ModelSpec, p: &ConditionsParams) -> Result<Report> {
    let c0 = match (p.c0, model.h_field().kind()) {
        (Some(c0), _) => c0,
        (None, IntensityKind::PkHazard { c0 }) => *c0,
        (None, _) => {
            return Err(Error::InvalidArgument(
                "conditions: c0 not given and the service field is not pk_hazard".into(),
            ))
        }
    };
    let big_lambda = p.big_lambda.unwrap_or_else(|| model.big_lambda());
    let params = ErgodicityParams {
        c0,
        big_lambda,
        k: p.k,
        m: ErgodicityParams::default_m(p.k),
    };
    let cond = check_conditions(&params);
    let k_max = max_k(c0, big_lambda).ok();
    let steps = (p.probe_x_max / p.probe_x_step).floor() as u64;
    let probes: Vec<State> = (1..=p.probe_n_max)
        .flat_map(|n| (0..=steps).map(move |i| State::new(n, i as f64 * p.probe_x_step)))
        .collect::<Result<_>>()?;
    let lower = check_lower_bound(model, c0, &probes)?;
    let mut table = Table::new(&CONDITIONS_HEADER);
    table.push(vec![
        cell(c0),
        cell(big_lambda),
        cell(cond.condi),
        cell(p.k),
        cell(cond.condi2),
        k_max.map(cell).unwrap_or_default(),
        cell(lower),
    ]);
    Ok(Report {
        tables: vec![("conditions.csv".into(), table)],
        results: json!({
            "c0": c0,
            "lambda_sup": big_lambda,
            "condi": cond.condi,
            "k": p.k,
            "m": params.m,
            "condi2": cond.condi2,
            "k_max": k_max,
            "lower_bound": lower,
        }),
        verdict: Verdict::from_bool(cond.condi && cond.condi2 && lower),
        warnings: Vec::new(),
    })
}

pub const DRIFT_HEADER: [&str; 5] = ["n", "x", "drift", "generator", "abs_diff"];

fn drift(model: &ModelSpec, p: &DriftParams) -> Result<Report> {
    let f = TestFunction::Lyapunov { m: p.m };
    let steps = (p.x_max / p.x_step).floor() as u64;
    let mut table = Table::new(&DRIFT_HEADER);
    let mut worst: f64 = 0.0;
    let mut all_ok = true;
    for n in 0..=p.n_max {
        let xs: Vec<f64> = if n == 0 {
            vec![0.0]
        } else {
            (0..=steps).map(|i| i as f64 * p.x_step).collect()
        };
        for x in xs {
            let s = State::new(n, x)?;
            let d = lyapunov_drift(p.m, model, s)?;
            let g = generator_apply(&f, model, s)?;
            let diff = (d - g).abs();
            all_ok &= diff <= 1e-12 * g.abs().max(1.0);
            worst = worst.max(diff);
            table.push(vec![cell(n), cell(x), cell(d), cell(g), cell(diff)]);
        }
    }
    Ok(Report {
        tables: vec![("drift.csv".into(), table)],
        results: json!({ "m": p.m, "max_abs_diff": worst }),
        verdict: Verdict::from_bool(all_ok),
        warnings: Vec::new(),
    })
}

pub const CURVE_HEADER: [&str; 4] = ["t", "tv", "stderr", "replicas"];

fn converge(model: &ModelSpec, seed: u64, p: &ConvergeParams) -> Result<Report> {
    let curve = convergence_curve(
        model,
        p.initial_a,
        p.initial_b,
        &p.t_grid,
        p.replicas,
        p.binning,
        seed,
        p.resamples,
    )?;
    let mut table = Table::new(&CURVE_HEADER);
    for c in &curve {
        table.push(vec![
            cell(c.t),
            cell(c.tv),
            cell(c.stderr),
            cell(c.replicas),
        ]);
    }
    let decreasing = is_decreasing_within(&curve, 2.0);
    let (fit, slope_ok) = match fit_rate(&curve) {
        Ok(f) => {
            let ok = f.slope <= p.max_slope;
            (serde_json::to_value(&f).expect("fit serializes"), ok)
        }
        Err(e) => (json!({ "error": e.to_string() }), false),
    };
    Ok(Report {
        tables: vec![("curve.csv".into(), table)],
        results: json!({
            "points": curve,
            "decreasing_within_2_stderr": decreasing,
            "rate_fit": fit,
            "max_slope": p.max_slope,
            "slope_ok": slope_ok,
            "note": "binned TV is a lower bound on the true total variation",
        }),
        verdict: Verdict::from_bool(decreasing && slope_ok),
        warnings: Vec::new(),
    })
}

pub const MOMENTS_HEADER: [&str; 8] = [
    "n0",
    "x0",
    "m",
    "lhs",
    "lhs_stderr",
    "lhs_time",
    "rhs",
    "verdict",
];

fn moments(model: &ModelSpec, seed: u64, p: &MomentsParams) -> Result<Report> {
    let mut table = Table::new(&MOMENTS_HEADER);
    let mut all = Vec::new();
    for &initial in &p.initials {
        for b in moment_bound_checks(model, initial, p.horizon, &p.orders, p.replicas, seed)? {
            table.push(vec![
                cell(initial.n()),
                cell(initial.x()),
                cell(b.m),
                cell(b.lhs),
                cell(b.lhs_stderr),
                cell(b.lhs_time),
                cell(b.rhs),
                Verdict::from_bool(b.pass).as_str().to_owned(),
            ]);
            all.push(json!({ "initial": initial, "bound": b }));
        }
    }
    let verdict = Verdict::from_bool(all.iter().all(|v| v["bound"]["pass"] == true));
    Ok(Report {
        tables: vec![("moments.csv".into(), table)],
        results: json!({ "cells": all }),
        verdict,
        warnings: Vec::new(),
    })
}
