//! Experiment and study drivers writing reports and manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::json;

use super::config::ScenarioConfig;
use super::experiment::{evaluate_level, reference_run, Contract, LevelOutcome};
use super::output::{energy_csv, gronwall_csv, header, relative_csv, study_csv, write_atomic};
use crate::diagnostics::constant_variation;
use crate::solver::write_snapshot_csv;
use crate::{Error, Result};

/// Command-line overrides.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Recorded in the manifest; the scheme itself is deterministic.
    pub seed: Option<u64>,
    pub emit_every: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub manifest: PathBuf,
    pub outcome: LevelOutcome,
}

impl RunSummary {
    pub fn pass(&self) -> bool {
        self.outcome.pass()
    }
}

/// Per-level tables, fitted orders and contract verdicts of a study.
#[derive(Debug, Clone)]
pub struct StudyResult {
    pub name: String,
    pub levels: Vec<usize>,
    pub h: Vec<f64>,
    /// Metric values per level, `None` where a level did not produce the metric.
    pub table: BTreeMap<String, Vec<Option<f64>>>,
    pub orders: BTreeMap<String, f64>,
    pub contracts: Vec<Contract>,
    /// Declared metrics whose values do not decrease under refinement.
    pub failures: Vec<String>,
    pub outcomes: Vec<LevelOutcome>,
}

impl StudyResult {
    pub fn pass(&self) -> bool {
        self.failures.is_empty() && self.contracts.iter().all(|c| c.pass)
    }
}

fn with_context<T>(c: &ScenarioConfig, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Scenario { name: c.name.clone(), source: Box::new(e) })
}

fn apply(config: &ScenarioConfig, opts: &RunOptions) -> ScenarioConfig {
    let mut c = config.clone();
    if let Some(e) = opts.emit_every {
        c.run.emit_every = Some(e);
    }
    c
}

fn scheme(c: &ScenarioConfig) -> String {
    format!("ale-rusanov-ssprk2/{}", c.scenario().map(|s| s.reconstruction.name()).unwrap_or("unknown"))
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Writes snapshots and reports of one level under `dir`; returns the relative paths.
fn write_level(c: &ScenarioConfig, hash: &str, level: &LevelOutcome, dir: &Path) -> Result<Vec<String>> {
    let scheme = scheme(c);
    let head = header(hash, &c.name, level.cells, &scheme);
    let mut files = Vec::new();
    let mut put = |name: String, text: String| -> Result<()> {
        write_atomic(&dir.join(&name), text.as_bytes())?;
        files.push(name);
        Ok(())
    };
    if let (true, Some(traj)) = (c.run.snapshots, &level.trajectory) {
        for (k, snap) in traj.snapshots.iter().enumerate() {
            let mut buf = Vec::new();
            write_snapshot_csv(&mut buf, snap, hash, &scheme)?;
            put(format!("snapshots/snapshot_{k:05}.csv"), String::from_utf8(buf).expect("utf8"))?;
        }
    }
    if let Some(r) = &level.energy {
        let tol = level.contracts.iter().find(|c| c.name == "energy_inequality").map_or(f64::NAN, |c| c.limit);
        put("energy.csv".into(), energy_csv(&head, r, tol))?;
    }
    if let Some(r) = &level.relative {
        put("relative_energy.csv".into(), relative_csv(&head, r))?;
    }
    if let Some(r) = &level.twin {
        put("twin_relative_energy.csv".into(), relative_csv(&head, r))?;
    }
    if let Some(g) = &level.gronwall {
        put("gronwall.csv".into(), gronwall_csv(&head, g))?;
    }
    Ok(files)
}

fn level_json(level: &LevelOutcome, files: &[String]) -> serde_json::Value {
    json!({
        "cells": level.cells,
        "h": level.h,
        "metrics": level.metrics,
        "contracts": level.contracts,
        "files": files,
        "pass": level.pass(),
    })
}

/// Runs the configured resolution, writes reports under `out/<name>` and a
/// manifest; the summary reports whether every contract holds.
pub fn run_experiment(config: &ScenarioConfig, out: &Path, opts: &RunOptions) -> Result<RunSummary> {
    let c = apply(config, opts);
    let hash = c.hash();
    let reference = with_context(&c, reference_run(&c))?;
    let level = with_context(&c, evaluate_level(&c, c.base_cells(), reference.as_ref()))?;
    let dir = out.join(&c.name);
    let files = write_level(&c, &hash, &level, &dir)?;
    let manifest = json!({
        "scenario": c.name,
        "config": c.resolved(),
        "config_hash": hash,
        "created_unix": now(),
        "seed": opts.seed,
        "scheme": scheme(&c),
        "run": level_json(&level, &files),
        "gronwall_constant": level.metrics.get("gronwall_constant"),
        "pass": level.pass(),
    });
    let path = dir.join("manifest.json");
    write_atomic(&path, serde_json::to_string_pretty(&manifest).expect("json").as_bytes())?;
    Ok(RunSummary { manifest: path, outcome: level })
}

/// Least-squares slope of `ln v` against `ln h`; `NaN` unless every value is positive.
pub fn fit_order(h: &[f64], values: &[f64]) -> f64 {
    if h.len() < 2 || h.len() != values.len() || values.iter().any(|v| !(*v > 0.0)) {
        return f64::NAN;
    }
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Runs every study level, fits orders of the declared metrics and checks
/// their contracts. Files go under `out/<name>` when `out` is given.
pub fn convergence_study(config: &ScenarioConfig, out: Option<&Path>, opts: &RunOptions) -> Result<StudyResult> {
    let c = apply(config, opts);
    let study = c.study.clone().ok_or_else(|| Error::Study(format!("scenario {} has no study section", c.name)))?;
    if study.levels.len() < 3 || !study.levels.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Study(format!("levels {:?} must be at least 3 and strictly refining", study.levels)));
    }
    let hash = c.hash();
    let reference = with_context(&c, reference_run(&c))?;
    let mut outcomes = Vec::new();
    let mut level_entries = Vec::new();
    for &n in &study.levels {
        let level = with_context(&c, evaluate_level(&c, n, reference.as_ref()))?;
        let files = match out {
            Some(o) => write_level(&c, &hash, &level, &o.join(&c.name).join(format!("level_{n}")))?,
            None => Vec::new(),
        };
        level_entries.push(level_json(&level, &files));
        outcomes.push(level);
    }

    let h: Vec<f64> = outcomes.iter().map(|o| o.h).collect();
    let mut names: Vec<String> = outcomes.iter().flat_map(|o| o.metrics.keys().cloned()).collect();
    names.sort();
    names.dedup();
    let table: BTreeMap<String, Vec<Option<f64>>> =
        names.iter().map(|m| (m.clone(), outcomes.iter().map(|o| o.metrics.get(m).copied()).collect())).collect();

    let mut contracts = Vec::new();
    for o in &outcomes {
        for k in &o.contracts {
            contracts.push(Contract { name: format!("level {}: {}", o.cells, k.name), ..k.clone() });
        }
    }
    let mut orders = BTreeMap::new();
    let mut failures = Vec::new();
    for (m, contract) in &study.metrics {
        let Some(vals) = table.get(m) else {
            failures.push(format!("metric {m} was not produced"));
            continue;
        };
        if let Some(min) = contract.min_order {
            let v: Vec<f64> = vals.iter().map(|v| v.unwrap_or(f64::NAN)).collect();
            let order = fit_order(&h, &v);
            orders.insert(m.clone(), order);
            if !v.windows(2).all(|w| w[1] < w[0]) {
                failures.push(format!("metric {m} does not decrease under refinement: {v:?}"));
            }
            contracts.push(Contract::at_least(format!("{m}_order"), order, min));
        }
        if let Some(max) = contract.max_variation {
            let variation = constant_variation(&vals[vals.len() - 2..]).unwrap_or(f64::NAN);
            contracts.push(Contract::at_most(format!("{m}_variation"), variation, max));
        }
        if let Some(max) = contract.max_relative {
            let last = outcomes.last().expect("levels");
            let value = vals.last().copied().flatten().unwrap_or(f64::NAN);
            let scale = last.metrics.get("energy_scale").copied().unwrap_or(f64::NAN);
            contracts.push(Contract::at_most(format!("{m}_relative"), value / scale, max));
        }
    }
    let result = StudyResult { name: c.name.clone(), levels: study.levels.clone(), h, table, orders, contracts, failures, outcomes };

    if let Some(o) = out {
        let dir = o.join(&c.name);
        let head = header(&hash, &c.name, *study.levels.last().expect("levels"), &scheme(&c));
        let rows: Vec<(usize, f64, Vec<Option<f64>>)> = (0..result.levels.len())
            .map(|k| (result.levels[k], result.h[k], names.iter().map(|m| result.table[m][k]).collect()))
            .collect();
        write_atomic(&dir.join("study.csv"), study_csv(&head, &names, &rows).as_bytes())?;
        let manifest = json!({
            "scenario": c.name,
            "config": c.resolved(),
            "config_hash": hash,
            "created_unix": now(),
            "seed": opts.seed,
            "scheme": scheme(&c),
            "levels": level_entries,
            "orders": result.orders,
            "contracts": result.contracts,
            "failures": result.failures,
            "files": ["study.csv"],
            "pass": result.pass(),
        });
        write_atomic(&dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).expect("json").as_bytes())?;
    }
    Ok(result)
}
