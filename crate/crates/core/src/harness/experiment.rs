//! Single-resolution runs: solver, requested diagnostics and contracts.

use std::collections::BTreeMap;

use serde::Serialize;

use super::config::ScenarioConfig;
use crate::diagnostics::{
    energy_report, energy_scale, gronwall_report, rei_defect, renormalized_residual, weak_continuity_residual,
    weak_momentum_residual, DiscretePair, EnergyReport, GronwallReport, PairField, RelativeEnergyReport,
};
use crate::expr::{Expr, ScalarField};
use crate::motion::transport_theorem_defect;
use crate::solver::{run, Trajectory};
use crate::Result;

/// A checked inequality `value <= limit`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contract {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Contract {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, pass: value <= limit }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, pass: value >= limit }
    }
}

/// Everything computed at one resolution.
#[derive(Debug, Clone)]
pub struct LevelOutcome {
    pub cells: usize,
    /// Logical spacing `1/n`.
    pub h: f64,
    pub metrics: BTreeMap<String, f64>,
    pub contracts: Vec<Contract>,
    pub trajectory: Option<Trajectory>,
    pub energy: Option<EnergyReport>,
    pub relative: Option<RelativeEnergyReport>,
    pub twin: Option<RelativeEnergyReport>,
    pub gronwall: Option<GronwallReport>,
}

impl LevelOutcome {
    pub fn pass(&self) -> bool {
        self.contracts.iter().all(|c| c.pass)
    }
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn needs_solution(c: &ScenarioConfig) -> bool {
    let d = &c.diagnostics;
    c.mms.is_some()
        || d.energy
        || d.relative_energy.is_some()
        || d.weak_forms.is_some()
        || d.twin.is_some()
        || d.conservation.is_some()
        || c.run.snapshots
}

/// Runs the reference trajectory of a twin experiment.
pub fn reference_run(c: &ScenarioConfig) -> Result<Option<DiscretePair>> {
    Ok(match c.twin_scenario()? {
        Some(sc) => Some(DiscretePair::new(run(&sc)?)),
        None => None,
    })
}

/// Runs the scenario with `n` cells along the first axis and evaluates every
/// requested diagnostic. Energy tolerances are `h` times the energy scale.
pub fn evaluate_level(c: &ScenarioConfig, n: usize, reference: Option<&DiscretePair>) -> Result<LevelOutcome> {
    let h = 1.0 / n as f64;
    let mut out = LevelOutcome {
        cells: n,
        h,
        metrics: BTreeMap::new(),
        contracts: Vec::new(),
        trajectory: None,
        energy: None,
        relative: None,
        twin: None,
        gronwall: None,
    };
    let d = &c.diagnostics;

    if let Some(t) = &d.transport {
        let sc = c.scenario_at(n)?;
        let f = ScalarField::new(Expr::parse(&t.f.source())?, sc.dim());
        let defect = transport_theorem_defect(&sc.flow, &sc.reference, &f, t.t, t.dt_factor * h)?;
        out.metrics.insert("transport_defect".into(), defect.abs());
    }
    if !needs_solution(c) {
        return Ok(out);
    }

    let sc = c.scenario_at(n)?;
    let traj = run(&sc)?;
    let scale = energy_scale(&traj);

    if let Some(mms) = &sc.mms {
        let snap = traj.last();
        let u = snap.state.velocities();
        let (mut er, mut eu) = (0.0, 0.0);
        for (k, x) in snap.mesh.cell_centroids.iter().enumerate() {
            let (r, v) = mms.exact(snap.time(), x);
            er += snap.mesh.cell_volumes[k] * (snap.state.rho[k] - r).abs();
            eu += snap.mesh.cell_volumes[k] * (u[k] - v).norm();
        }
        out.metrics.insert("rho_l1".into(), er);
        out.metrics.insert("u_l1".into(), eu);
    }

    if let Some(cons) = &d.conservation {
        let m0 = traj.snapshots[0].state.mass(&traj.snapshots[0].mesh);
        let drift = traj.snapshots.iter().map(|s| (s.state.mass(&s.mesh) - m0).abs()).fold(0.0, f64::max) / m0.abs();
        out.metrics.insert("mass_drift".into(), drift);
        out.contracts.push(Contract::at_most("mass_drift", drift, cons.max_mass_drift));
    }

    if d.energy {
        let rep = energy_report(&traj);
        let worst = max_of(&rep.defect);
        out.metrics.insert("energy_defect".into(), worst);
        out.contracts.push(Contract::at_most("energy_inequality", worst, h * scale));
        out.energy = Some(rep);
    }

    if let Some(r) = &d.relative_energy {
        let pair: Box<dyn PairField> = match &r.pair {
            super::config::PairConfig::Fields(f) => Box::new(f.pair()?),
            super::config::PairConfig::Keyword(_) => Box::new(DiscretePair::new(traj.clone())),
        };
        let rep = rei_defect(&traj, pair.as_ref())?;
        let worst = max_of(&rep.defect);
        let e0 = rep.relative_energy[0];
        let tol = if e0 > 0.0 { h * e0 } else { 1e-10 * scale };
        out.metrics.insert("rei_defect".into(), worst);
        out.contracts.push(Contract::at_most("relative_energy_inequality", worst, tol));
        out.relative = Some(rep);
    }

    if let Some(w) = &d.weak_forms {
        let tau = w.tau.unwrap_or(traj.last().time());
        let (scalar, vector, renorm) = c.test_functions()?;
        if let Some(phi) = &scalar {
            out.metrics.insert("weak_continuity".into(), weak_continuity_residual(&traj, phi, tau)?.abs());
            if let Some(b) = renorm {
                out.metrics.insert("renormalized".into(), renormalized_residual(&traj, phi, b, tau)?.abs());
            }
        }
        if let Some(phi) = &vector {
            out.metrics.insert("weak_momentum".into(), weak_momentum_residual(&traj, phi, tau)?.abs());
        }
    }

    if let (Some(tw), Some(pair)) = (&d.twin, reference) {
        let rep = rei_defect(&traj, pair)?;
        out.metrics.insert("twin_energy".into(), max_of(&rep.relative_energy));
        out.metrics.insert("twin_final_energy".into(), *rep.relative_energy.last().expect("initial snapshot"));
        out.metrics.insert("energy_scale".into(), scale);
        out.twin = Some(rep);
        if tw.gronwall {
            let g = gronwall_report(&traj, pair)?;
            if let Some(cst) = g.constant {
                out.metrics.insert("gronwall_constant".into(), cst);
                let excess = g.relative_energy.iter().zip(&g.bound).map(|(e, b)| e - b).fold(f64::NEG_INFINITY, f64::max);
                out.contracts.push(Contract::at_most("gronwall_bound", excess, 1e-12 * g.relative_energy[0]));
            }
            out.gronwall = Some(g);
        }
    }
    out.trajectory = Some(traj);
    Ok(out)
}
