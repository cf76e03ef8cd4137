//! Subcommand pipelines. Data files depend only on the config and seed;
//! timings go to the manifest alone.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use super::config::{ConfigError, CorrMethod, ExperimentConfig, FitKind, IssueKind};
use super::output::{read_csv_file, CellRow, CurveRow, LagRow, LevelRow, OrbitRow, OutputFile, Outputs, PointRow};
use crate::diagnostics::{
    expansion_factor, expansion_sweep, h6_exponent_check, h6_input_from_cells, lambda_hat, rank_correlation,
    sample_points, unstable_radius_proxy, unstable_slope_sign, z_function_proxy, z_sequence,
};
use crate::dynamics::{step, PhasePoint};
use crate::geometry::{build_table, CurvatureClass, TableGeometry};
use crate::induced::ReducedSpaceRule;
use crate::par::{map_collect, sample_rng, with_workers};
use crate::stats::fit::{fit_exponential_rate, fit_power_law};
use crate::stats::sampling::{sample_full_phase, DiscardCounters};
use crate::stats::{
    dominant_diameters, estimate_cell_diameters, estimate_cell_measures, estimate_correlation,
    estimate_correlation_orbit, CloudOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    TableValidate,
    Orbit,
    Cells,
    Corr,
    Diag,
    Fit,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::TableValidate => "table",
            Command::Orbit => "orbit",
            Command::Cells => "cells",
            Command::Corr => "corr",
            Command::Diag => "diag",
            Command::Fit => "fit",
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

fn numerical(e: impl std::fmt::Display) -> RunError {
    RunError::Numerical(e.to_string())
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: Command,
    pub version: String,
    pub seed: u64,
    pub workers: usize,
    pub started: f64,
    pub finished: f64,
    pub config: ExperimentConfig,
    pub counters: Option<DiscardCounters>,
    pub files: Vec<OutputFile>,
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    table: TableGeometry,
    rule: ReducedSpaceRule,
    out: Outputs,
    counters: Option<DiscardCounters>,
}

/// Run one subcommand and write `manifest.json` next to its outputs.
/// `workers = 0` uses the global thread pool.
pub fn run(command: Command, config: &ExperimentConfig, workers: usize) -> Result<RunManifest, RunError> {
    let started = now();
    let table = build_table(config.table.clone())
        .map_err(|e| ConfigError::single(IssueKind::Validation, "table", e.to_string()))?;
    let rule = config.reduced.resolve(&table);
    let mut cx = Context {
        config,
        table,
        rule,
        out: Outputs::new(&config.output.dir, config.output.format)?,
        counters: None,
    };
    with_workers(workers, || match command {
        Command::TableValidate => table_validate(&mut cx),
        Command::Orbit => orbit(&mut cx),
        Command::Cells => cells(&mut cx),
        Command::Corr => corr(&mut cx),
        Command::Diag => diag(&mut cx),
        Command::Fit => fit(&mut cx),
    })?;
    let manifest = RunManifest {
        command,
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.sampling.seed,
        workers,
        started,
        finished: now(),
        config: config.clone(),
        counters: cx.counters,
        files: cx.out.files.clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(std::io::Error::other)?;
    bytes.push(b'\n');
    std::fs::write(config.output.dir.join("manifest.json"), bytes)?;
    Ok(manifest)
}

/// Component table, lengths and junctions of the configured table.
pub fn table_report(table: &TableGeometry, rule: &ReducedSpaceRule) -> Value {
    let components: Vec<Value> = table
        .components()
        .iter()
        .enumerate()
        .map(|(id, c)| {
            json!({
                "id": id,
                "label": c.label,
                "kind": c.kind(),
                "class": c.class,
                "length": c.length,
                "closed": c.closed,
                "loop": c.boundary_loop,
                "offset": table.offset(id),
            })
        })
        .collect();
    let junctions: Vec<Value> = table
        .junctions()
        .iter()
        .map(|j| json!({ "from": j.from, "to": j.to, "kind": j.kind, "turn": j.turn, "point": [j.point.x, j.point.y] }))
        .collect();
    json!({
        "family": table.spec.family_name(),
        "spec": table.spec,
        "total_length": table.total_length(),
        "reduced_space_rule": rule.name(),
        "dispersing_components": table.components().iter().filter(|c| c.class == CurvatureClass::Dispersing).count(),
        "components": components,
        "junctions": junctions,
    })
}

fn table_validate(cx: &mut Context) -> Result<(), RunError> {
    let report = table_report(&cx.table, &cx.rule);
    cx.out.json("table", &report)?;
    let text = serde_json::to_string_pretty(&report).map_err(std::io::Error::other)?;
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    Ok(())
}

fn orbit(cx: &mut Context) -> Result<(), RunError> {
    let c = &cx.config.orbit;
    let start = match c.start {
        Some((component, r, phi)) => PhasePoint::new(component, r, phi),
        None => sample_full_phase(&cx.table, &mut sample_rng(cx.config.sampling.seed, 0)),
    };
    let mut x = start;
    if x.component >= cx.table.len() {
        return Err(ConfigError::single(IssueKind::Validation, "orbit.start", "no such component").into());
    }
    let mut rows = Vec::with_capacity(c.steps);
    let mut failure = None;
    for k in 1..=c.steps {
        match step(&cx.table, x) {
            Ok(rec) => {
                rows.push(OrbitRow {
                    step: k as u64,
                    component: rec.next.component,
                    r: rec.next.r,
                    phi: rec.next.phi,
                    tau: rec.tau,
                    singularity_distance: rec.singularity_distance,
                });
                x = rec.next;
            }
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        }
    }
    cx.out.rows("orbit", &rows)?;
    cx.out.json(
        "orbit_summary",
        &json!({ "start": start, "steps": rows.len(), "requested": c.steps, "stopped": failure }),
    )?;
    match failure {
        Some(e) => Err(RunError::Numerical(format!("orbit stopped after {} steps: {e}", rows.len()))),
        None => Ok(()),
    }
}

fn power_fit_value(points: &[(f64, f64, f64)], window: Option<(f64, f64)>) -> Value {
    match fit_power_law(points, window) {
        Ok(f) => json!(f),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn cells(cx: &mut Context) -> Result<(), RunError> {
    let cfg = cx.config;
    let s = &cfg.sampling;
    let c = &cfg.cells;
    let clouds = c.clouds.then_some(CloudOptions {
        per_cell: c.per_cell,
        max_n: c.max_n,
    });
    let stats = estimate_cell_measures(&cx.table, &cx.rule, s.k, s.cap, s.seed, clouds).map_err(numerical)?;
    let diameters = estimate_cell_diameters(&cx.table, &stats);
    let by_index: BTreeMap<_, _> = diameters.iter().map(|d| (d.index, d)).collect();
    let rows: Vec<CellRow> = stats
        .cells
        .iter()
        .map(|r| {
            let d = by_index.get(&r.index);
            CellRow {
                m: r.m,
                n: r.index.n,
                j: r.index.j,
                count: r.count,
                measure: r.measure,
                stderr: r.stderr,
                u_diam: d.map(|d| d.image.major),
                s_diam: d.map(|d| d.image.minor),
            }
        })
        .collect();
    let tails: BTreeMap<u64, _> = stats.tails.iter().map(|t| (t.n, t)).collect();
    let levels: Vec<LevelRow> = stats
        .levels
        .iter()
        .map(|l| {
            let t = tails.get(&l.n);
            LevelRow {
                n: l.n,
                level_count: l.count,
                level: l.value,
                level_stderr: l.stderr,
                tail_count: t.map_or(0, |t| t.count),
                tail: t.map_or(0.0, |t| t.value),
                tail_stderr: t.map_or(0.0, |t| t.stderr),
            }
        })
        .collect();
    cx.out.rows("cells", &rows)?;
    cx.out.rows("levels", &levels)?;

    let window = c.window.or_else(|| stats.deep_decade(c.min_tail));
    let dominant: Vec<_> = dominant_diameters(&diameters)
        .into_iter()
        .filter(|d| d.index.n >= c.diameter_n_min)
        .collect();
    let major: Vec<(f64, f64, f64)> = dominant.iter().map(|d| (d.m as f64, d.image.major, 0.0)).collect();
    let minor: Vec<(f64, f64, f64)> = dominant.iter().map(|d| (d.m as f64, d.image.minor, 0.0)).collect();
    let (acc, acc_se) = stats.counters.acceptance();
    let kac = if acc > 0.0 { 1.0 / acc } else { f64::NAN };
    let summary = json!({
        "table": cfg.table,
        "reduced_space_rule": cx.rule.name(),
        "seed": s.seed,
        "k": s.k,
        "cap": s.cap,
        "valid": stats.valid,
        "counters": stats.counters,
        "n0": stats.n0,
        "cells": stats.cells.len(),
        "mean_return": stats.mean_return,
        "kac_inverse_measure": { "value": kac, "stderr": kac * kac * acc_se },
        "fit_window": window,
        "tail_fit": power_fit_value(&stats.tail_series(), window),
        "level_fit": power_fit_value(&stats.level_series(), window),
        "image_unstable_diameter_fit": power_fit_value(&major, None),
        "image_stable_diameter_fit": power_fit_value(&minor, None),
        "split_candidates": dominant.iter().filter(|d| d.split_candidate()).map(|d| d.m).collect::<Vec<_>>(),
    });
    cx.out.json("cells_summary", &summary)?;
    cx.counters = Some(stats.counters);
    Ok(())
}

fn corr(cx: &mut Context) -> Result<(), RunError> {
    let cfg = cx.config;
    let s = &cfg.sampling;
    let (f, g) = (&cfg.observables.f, &cfg.observables.g);
    let est = match s.method {
        CorrMethod::Ensemble => estimate_correlation(&cx.table, &cx.rule, f, g, s.n_max, s.k, s.cap, s.seed),
        CorrMethod::Orbit => {
            estimate_correlation_orbit(&cx.table, &cx.rule, f, g, s.n_max, s.orbit_length, s.burn_in, s.cap, s.seed)
        }
    }
    .map_err(numerical)?;
    let rows: Vec<LagRow> = est
        .lags
        .iter()
        .map(|l| LagRow {
            lag: l.lag,
            cov: l.cov,
            stderr: l.stderr,
            eff_k: l.effective_k,
            max_term: l.max_term,
        })
        .collect();
    cx.out.rows("corr", &rows)?;
    let summary = json!({
        "table": cfg.table,
        "reduced_space_rule": cx.rule.name(),
        "method": est.method,
        "f": est.f,
        "g": est.g,
        "seed": s.seed,
        "k": s.k,
        "n_max": s.n_max,
        "cap": s.cap,
        "counters": est.counters,
        "noise_floor": est.noise_floor,
        "first_sub_noise_lag": est.first_sub_noise_lag(),
        "fit": est.fit,
        "fit_error": est.fit_error,
    });
    cx.out.json("corr_summary", &summary)?;
    cx.counters = Some(est.counters);
    Ok(())
}

fn diag(cx: &mut Context) -> Result<(), RunError> {
    let cfg = cx.config;
    let d = &cfg.diagnostics;
    let s = &cfg.sampling;
    let (table, rule) = (&cx.table, &cx.rule);
    let points = sample_points(table, rule, d.lambda_samples, s.seed).map_err(numerical)?;
    let factors: Vec<Option<f64>> = map_collect(points.len() as u64, |i| {
        expansion_factor(table, rule, points[i as usize], s.cap)
    });
    let valid: Vec<f64> = factors.iter().flatten().copied().collect();
    let lam = lambda_hat(&valid).ok_or_else(|| RunError::Numerical("no expansion factor could be computed".into()))?;
    let radius_count = d.z_samples.min(points.len());
    let radii: Vec<Option<f64>> = map_collect(radius_count as u64, |i| {
        unstable_radius_proxy(table, rule, points[i as usize], d.n_back, lam, s.cap).ok()
    });
    let point_rows: Vec<PointRow> = points
        .iter()
        .enumerate()
        .map(|(i, x)| PointRow {
            index: i,
            component: x.component,
            r: x.r,
            phi: x.phi,
            expansion: factors[i],
            radius: radii.get(i).copied().flatten(),
        })
        .collect();

    let mut curve_rows = Vec::new();
    let mut sweeps = Vec::new();
    let mut rank = None;
    let largest = d.deltas.iter().copied().fold(0.0, f64::max);
    for &delta in &d.deltas {
        let (sweep, curves) = expansion_sweep(table, rule, delta, d.curves, s.seed, s.cap).map_err(numerical)?;
        for (i, (c, sum)) in curves.iter().zip(&sweep.sums).enumerate() {
            curve_rows.push(CurveRow {
                delta,
                curve: i,
                sum: *sum,
                length: c.length,
                pieces: c.pieces.len(),
                center_length: c.center_length(),
            });
        }
        if delta == largest {
            let r: Vec<(f64, f64)> = map_collect(curves.len() as u64, |i| {
                let c = &curves[i as usize];
                unstable_radius_proxy(table, rule, c.center, d.n_back, lam, s.cap)
                    .ok()
                    .map(|r| (r, c.center_length()))
            })
            .into_iter()
            .flatten()
            .collect();
            let (a, b): (Vec<f64>, Vec<f64>) = r.into_iter().unzip();
            rank = Some(json!({ "delta": delta, "samples": a.len(), "value": rank_correlation(&a, &b) }));
        }
        sweeps.push(json!({
            "delta": sweep.delta,
            "curves": sweep.sums.len(),
            "cut_curves": sweep.cut_curves,
            "skipped": sweep.skipped,
            "sup_proxy": sweep.sup,
            "median_proxy": sweep.median,
            "bookkeeping_error": sweep.bookkeeping_error,
        }));
    }

    let radius_samples: Vec<(f64, f64)> = radii.iter().map(|r| (r.unwrap_or(0.0), 1.0)).collect();
    let mut z = Vec::new();
    for &r in &d.r {
        let now = z_function_proxy(&radius_samples, r).map_err(numerical)?;
        let seq = z_sequence(table, rule, &points[..radius_count], d.z_iterates, d.n_back, lam, r, s.cap)
            .map_err(numerical)?;
        z.push(json!({ "r": r, "value_proxy": now, "iterates_proxy": seq }));
    }

    let h6 = if d.h6 {
        let stats = estimate_cell_measures(
            table,
            rule,
            s.k,
            s.cap,
            s.seed,
            Some(CloudOptions {
                per_cell: cfg.cells.per_cell,
                max_n: cfg.cells.max_n,
            }),
        )
        .map_err(numerical)?;
        let diameters = estimate_cell_diameters(table, &stats);
        let sign = unstable_slope_sign(table, rule, &points[..points.len().min(500)], s.cap);
        let input = h6_input_from_cells(&stats, &diameters, sign, cfg.cells.min_tail, 2).map_err(numerical)?;
        Some(json!({ "unstable_slope_sign": sign, "input": input, "report_proxy": h6_exponent_check(&input) }))
    } else {
        None
    };

    cx.out.rows("diag_points", &point_rows)?;
    cx.out.rows("diag_curves", &curve_rows)?;
    let report = json!({
        "label": "numerical proxies of the hyperbolicity hypotheses; no bound is verified",
        "table": cfg.table,
        "reduced_space_rule": rule.name(),
        "seed": s.seed,
        "lambda_hat_proxy": lam,
        "expansion_factors": { "computed": valid.len(), "above_one": valid.iter().filter(|&&x| x > 1.0).count() },
        "one_step_sweep": sweeps,
        "radius_rank_correlation_proxy": rank,
        "z_proxy": z,
        "h6": h6,
    });
    cx.out.json("diag_report", &report)?;
    Ok(())
}

fn fit(cx: &mut Context) -> Result<(), RunError> {
    let f = &cx.config.fit;
    let Some(input) = &f.input else {
        return Err(ConfigError::single(IssueKind::Validation, "fit.input", "the fit subcommand needs an input CSV").into());
    };
    let bad_input = |e: csv::Error| {
        RunError::Config(ConfigError::single(IssueKind::Validation, "fit.input", format!("{}: {e}", input.display())))
    };
    let result = match f.kind {
        FitKind::Exponential => {
            let rows: Vec<LagRow> = read_csv_file(input).map_err(bad_input)?;
            let mut values = vec![0.0; rows.iter().map(|r| r.lag + 1).max().unwrap_or(0)];
            let mut stderr = values.clone();
            for r in &rows {
                values[r.lag] = r.cov;
                stderr[r.lag] = r.stderr;
            }
            let window = f.window.map(|(lo, hi)| (lo.max(0.0) as usize, hi.max(0.0) as usize));
            json!(fit_exponential_rate(&values, &stderr, window).map_err(numerical)?)
        }
        FitKind::PowerTail | FitKind::PowerLevel => {
            let rows: Vec<LevelRow> = read_csv_file(input).map_err(bad_input)?;
            let points: Vec<(f64, f64, f64)> = rows
                .iter()
                .map(|r| match f.kind {
                    FitKind::PowerTail => (r.n as f64, r.tail, r.tail_stderr),
                    _ => (r.n as f64, r.level, r.level_stderr),
                })
                .collect();
            json!(fit_power_law(&points, f.window).map_err(numerical)?)
        }
    };
    cx.out.json(
        "fit",
        &json!({ "input": input, "kind": f.kind, "window": f.window, "fit": result }),
    )?;
    Ok(())
}
