//! Acceptance criteria 1-10. Prints one verdict line per criterion with its
//! runtime and exits nonzero if any criterion fails.

use std::sync::OnceLock;
use std::time::Instant;

use ale_ns::diagnostics::{energy_scale, rei_defect, DiscretePair};
use ale_ns::expr::Expr;
use ale_ns::harness::{self, convergence_study, RunOptions, StudyResult};
use ale_ns::mechanics::{dissipation_density, impermeability_residual, slip_traction_residual, ViscosityParams};
use ale_ns::motion::{FlowMap, Jiggle, MeshReference, MotionField, MotionKind};
use ale_ns::solver::{run, stable_dt, step, InitialData, Scenario};
use ale_ns::thermo::{coercivity_constant, PressureLaw};
use ale_ns::{Mat3, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

struct Criterion {
    id: usize,
    name: &'static str,
    limit_s: f64,
    check: fn() -> Outcome,
}

fn study(name: &str) -> Result<StudyResult, String> {
    let c = harness::builtin(name).map_err(|e| e.to_string())?;
    convergence_study(&c, None, &RunOptions::default()).map_err(|e| e.to_string())
}

fn study_verdict(r: &StudyResult) -> (bool, String) {
    let orders: Vec<String> = r.orders.iter().map(|(m, o)| format!("{m} order {o:.3}")).collect();
    let failed: Vec<String> = r.contracts.iter().filter(|c| !c.pass).map(|c| format!("{} = {:e} vs {:e}", c.name, c.value, c.limit)).collect();
    let mut detail = format!("{}: {}", r.name, orders.join(", "));
    if !failed.is_empty() || !r.failures.is_empty() {
        detail += &format!(" [failed: {}]", failed.into_iter().chain(r.failures.iter().cloned()).collect::<Vec<_>>().join("; "));
    }
    (r.pass(), detail)
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "thermodynamic identity", limit_s: 1.0, check: thermo_identity },
        Criterion { id: 2, name: "transport theorem", limit_s: 10.0, check: transport_theorem },
        Criterion { id: 3, name: "conservation and GCL", limit_s: 30.0, check: conservation },
        Criterion { id: 4, name: "MMS convergence", limit_s: 120.0, check: mms_convergence },
        Criterion { id: 5, name: "energy inequality", limit_s: 300.0, check: energy_inequality },
        Criterion { id: 6, name: "relative energy inequality", limit_s: 300.0, check: relative_energy },
        Criterion { id: 7, name: "weak-strong uniqueness twin runs", limit_s: 600.0, check: twin_runs },
        Criterion { id: 8, name: "coercivity", limit_s: 5.0, check: coercivity },
        Criterion { id: 9, name: "weak-form residuals", limit_s: 120.0, check: weak_forms },
        Criterion { id: 10, name: "mechanics property suite", limit_s: 5.0, check: mechanics },
    ];
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut all = true;
    for c in criteria.iter().filter(|c| filter.is_empty() || filter.contains(&c.id)) {
        let start = Instant::now();
        let outcome = (c.check)();
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match outcome {
            Ok((p, d)) => (p && secs < c.limit_s, d),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= pass;
        println!(
            "criterion {:2} {}: {} ({secs:.2} s, limit {} s) {detail}",
            c.id,
            c.name,
            if pass { "PASS" } else { "FAIL" },
            c.limit_s
        );
    }
    if !all {
        std::process::exit(1);
    }
}

fn thermo_identity() -> Outcome {
    let mut worst = 0.0f64;
    for gamma in [1.1, 1.4, 5.0 / 3.0, 2.0, 2.5, 3.0] {
        for a in [0.25, 1.0, 7.5] {
            let law = PressureLaw::power(gamma, a).map_err(|e| e.to_string())?;
            for k in 0..=60 {
                let r = 10f64.powf(-3.0 + 0.1 * k as f64);
                let d = law.potential_identity_defect(r).map_err(|e| e.to_string())?;
                worst = worst.max(d.abs() / law.pressure(r).map_err(|e| e.to_string())?);
            }
        }
    }
    Ok((worst <= 1e-12, format!("max |rH' - H - p| / p = {worst:e}")))
}

fn coercivity() -> Outcome {
    let mut min_c = f64::INFINITY;
    let mut near_two = Vec::new();
    for gamma in [1.4, 5.0 / 3.0, 2.0, 3.0] {
        let law = PressureLaw::power(gamma, 1.0).map_err(|e| e.to_string())?;
        for r in [0.5, 1.0, 2.0] {
            let c = coercivity_constant(&law, r, 50.0).map_err(|e| e.to_string())?;
            min_c = min_c.min(c.value());
            if gamma == 2.0 {
                near_two.push(c.near);
            }
        }
    }
    let exact = near_two.iter().all(|&v| v == 1.0);
    Ok((min_c > 0.0 && exact, format!("min c = {min_c:e}, gamma = 2 near branch {near_two:?}")))
}

fn mechanics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20261015);
    let (mut negative, mut nonconvex) = (0usize, 0usize);
    let samples = 10_000;
    for k in 0..samples {
        let dim = 1 + k % 3;
        let p = ViscosityParams::new(rng.gen_range(1e-3..10.0), rng.gen_range(0.0..10.0), 0.0).map_err(|e| e.to_string())?;
        let mut draw = || Mat3::from_fn(|i, j| if i < dim && j < dim { rng.gen_range(-10.0..10.0) } else { 0.0 });
        let (a, b) = (draw(), draw());
        let (da, db) = (dissipation_density(&a, &p, dim), dissipation_density(&b, &p, dim));
        if da < -1e-12 * (1.0 + a.norm_squared()) {
            negative += 1;
        }
        let mid = dissipation_density(&(0.5 * (a + b)), &p, dim);
        if mid > 0.5 * (da + db) + 1e-9 * (1.0 + da + db) {
            nonconvex += 1;
        }
    }
    let n = Vec3::new(0.0, 1.0, 0.0);
    let s = Mat3::new(1.0, 0.5, 0.0, 0.5, 2.0, 0.0, 0.0, 0.0, 0.0);
    let v = Vec3::new(0.3, 0.7, 0.0);
    let slip = |u: Vec3, kappa: f64| slip_traction_residual(&s, &n, &u, &Vec3::zeros(), kappa).map_err(|e| e.to_string());
    let examples = [
        slip(Vec3::zeros(), 0.0)? == Vec3::new(0.5, 0.0, 0.0),
        slip(Vec3::new(1.0, 3.0, 0.0), 2.0)? == Vec3::new(2.5, 0.0, 0.0),
        impermeability_residual(&Vec3::new(5.0, 0.7, 0.0), &v, &n).map_err(|e| e.to_string())? == 0.0,
        (impermeability_residual(&Vec3::new(0.3, 1.2, 0.0), &v, &n).map_err(|e| e.to_string())? - 0.5).abs() <= 1e-15,
        impermeability_residual(&v, &v, &Vec3::new(0.0, 2.0, 0.0)).is_err(),
    ];
    let ok = negative == 0 && nonconvex == 0 && examples.iter().all(|&e| e);
    Ok((ok, format!("{samples} gradient pairs: {negative} negative, {nonconvex} nonconvex; worked examples {examples:?}")))
}

fn transport_theorem() -> Outcome {
    let r = study("dilation-transport")?;
    let ok = r.levels == [50, 100, 200] && r.orders.get("transport_defect").is_some_and(|&o| o >= 1.9);
    let (pass, detail) = study_verdict(&r);
    Ok((ok && pass, detail))
}

fn law(gamma: f64) -> Result<PressureLaw, String> {
    PressureLaw::power(gamma, 1.0).map_err(|e| e.to_string())
}

fn constant(rho: f64, u: &[f64]) -> InitialData {
    InitialData::Analytic { rho: Expr::constant(rho), velocity: u.iter().map(|&v| Expr::constant(v)).collect() }
}

/// Largest relative mass drift over 1000 steps on the piston `L = 1 + beta t`.
fn piston_drift(beta: f64) -> Result<f64, String> {
    let e = |x: ale_ns::Error| x.to_string();
    let length = Expr::parse(&format!("1 + {beta} * t")).map_err(e)?;
    let initial = InitialData::Analytic {
        rho: Expr::parse("1 + 0.2 * cos(pi * x)").map_err(e)?,
        velocity: vec![Expr::parse("0.1 * x + 0.1 * sin(pi * x)").map_err(e)?],
    };
    let s = Scenario::new(
        "piston",
        MeshReference::interval(0.0, 1.0, 50, false).map_err(e)?,
        FlowMap::closed(MotionField::new(MotionKind::Piston1d { length })),
        law(2.0)?,
        ViscosityParams::new(0.01, 0.0, 0.0).map_err(e)?,
        initial,
        1.0,
    );
    let mut mesh = s.mesh_at(0.0).map_err(e)?;
    let mut state = s.initial_state(&mesh).map_err(e)?;
    let m0 = state.mass(&mesh);
    let mut drift = 0.0f64;
    let mut t = 0.0;
    for _ in 0..1000 {
        let dt = stable_dt(&state, &mesh, &s).map_err(e)?;
        let next = s.mesh_at(t + dt).map_err(e)?;
        state = step(&state, &mesh, &next, dt, &s).map_err(e)?.state;
        mesh = next;
        t += dt;
        drift = drift.max((state.mass(&mesh) - m0).abs() / m0);
    }
    Ok(drift)
}

/// Largest deviation from a uniform state on jiggled static meshes.
fn jiggle_deviation() -> Result<f64, String> {
    let e = |x: ale_ns::Error| x.to_string();
    let jiggle = Jiggle { amplitude: 0.05, frequency: 2.0 };
    let cases = [
        (MeshReference::interval(0.0, 1.0, 32, true).map_err(e)?.with_jiggle(jiggle), 0.4),
        (MeshReference::rectangle(0.0, 1.0, 0.0, 1.0, 12, 12).map_err(e)?.with_jiggle(jiggle), 0.0),
    ];
    let mut worst = 0.0f64;
    for (reference, u0) in cases {
        let init = if reference.dim() == 1 { constant(1.1, &[u0]) } else { constant(1.1, &[u0, 0.0]) };
        let visc = ViscosityParams::new(0.02, 0.0, 0.0).map_err(e)?;
        let s = Scenario::new("jiggle", reference, FlowMap::closed(MotionField::fixed()), law(1.4)?, visc, init, 0.5);
        for snap in &run(&s).map_err(e)?.snapshots {
            for (r, m) in snap.state.rho.iter().zip(&snap.state.momentum) {
                worst = worst.max((r - 1.1).abs()).max((m - Vec3::new(1.1 * u0, 0.0, 0.0)).amax());
            }
        }
    }
    Ok(worst)
}

fn conservation() -> Outcome {
    let expanding = piston_drift(0.1)?;
    let compressing = piston_drift(-0.1)?;
    let free = jiggle_deviation()?;
    let ok = expanding <= 1e-12 && compressing <= 1e-12 && free <= 1e-13;
    Ok((ok, format!("mass drift {expanding:e} (expanding), {compressing:e} (compressing); free-stream deviation {free:e}")))
}

/// The manufactured-solution study feeds criteria 4 and 9; it runs once.
fn mms_study() -> Result<&'static (StudyResult, f64), String> {
    static CELL: OnceLock<Result<(StudyResult, f64), String>> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        study("piston-mms").map(|r| (r, start.elapsed().as_secs_f64()))
    })
    .as_ref()
    .map_err(Clone::clone)
}

fn orders_at_least(r: &StudyResult, metrics: &[&str], min: f64) -> (bool, String) {
    let mut ok = r.levels.len() >= 4;
    let mut parts = Vec::new();
    for m in metrics {
        let o = r.orders.get(*m).copied().unwrap_or(f64::NAN);
        ok &= o >= min;
        parts.push(format!("{m} order {o:.3}"));
    }
    (ok, format!("levels {:?}: {}", r.levels, parts.join(", ")))
}

fn mms_convergence() -> Outcome {
    let (r, secs) = mms_study()?;
    let (ok, detail) = orders_at_least(r, &["rho_l1", "u_l1"], 1.0);
    Ok((ok && *secs < 120.0, detail))
}

fn weak_forms() -> Outcome {
    let (r, secs) = mms_study()?;
    let (ok, detail) = orders_at_least(r, &["weak_continuity", "weak_momentum", "renormalized"], 1.0);
    Ok((ok && *secs < 120.0, format!("{detail} (trajectories shared with criterion 4, {secs:.2} s)")))
}

fn limits(r: &StudyResult, contract: &str) -> Vec<f64> {
    r.outcomes.iter().filter_map(|o| o.contracts.iter().find(|c| c.name == contract).map(|c| c.limit)).collect()
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.len() >= 3 && v.windows(2).all(|w| w[1] < w[0])
}

fn energy_inequality() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["static-closed", "piston-expansion", "piston-compression", "dilation-square"] {
        let r = study(name)?;
        let tol = limits(&r, "energy_inequality");
        let held = r.outcomes.iter().all(|o| o.contracts.iter().filter(|c| c.name == "energy_inequality").all(|c| c.pass));
        let worst = r.table.get("energy_defect").map(|v| v.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max));
        ok &= held && strictly_decreasing(&tol) && r.pass();
        parts.push(format!("{name} max defect {:e} tol {tol:?}", worst.unwrap_or(f64::NAN)));
        if name == "static-closed" {
            let last = r.outcomes.last().ok_or("no levels")?;
            let traj = last.trajectory.as_ref().ok_or("no trajectory")?;
            let defect = last.metrics.get("energy_defect").copied().unwrap_or(f64::NAN);
            let limit = 1e-8 * energy_scale(traj);
            ok &= defect <= limit;
            parts.push(format!("static finest defect {defect:e} <= {limit:e}"));
        }
    }
    Ok((ok, parts.join("; ")))
}

fn relative_energy() -> Outcome {
    let r = study("static-closed")?;
    let tol = limits(&r, "relative_energy_inequality");
    let held = r.outcomes.iter().all(|o| o.contracts.iter().filter(|c| c.name == "relative_energy_inequality").all(|c| c.pass));
    let mut ok = held && strictly_decreasing(&tol);
    let mut self_worst = 0.0f64;
    let mut cases: Vec<(String, ale_ns::solver::Trajectory)> =
        r.outcomes.into_iter().filter_map(|o| o.trajectory.map(|t| (format!("static-closed/{}", o.cells), t))).collect();
    let piston = harness::builtin("piston-compression").and_then(|c| c.scenario_at(50)).and_then(|s| run(&s)).map_err(|e| e.to_string())?;
    cases.push(("piston-compression/50".into(), piston));
    for (_, traj) in &cases {
        let rep = rei_defect(traj, &DiscretePair::new(traj.clone())).map_err(|e| e.to_string())?;
        let worst = rep.defect.iter().map(|d| d.abs()).fold(0.0, f64::max) / energy_scale(traj);
        self_worst = self_worst.max(worst);
    }
    ok &= self_worst <= 1e-10;
    let defects = r.table.get("rei_defect").cloned().unwrap_or_default();
    Ok((ok, format!("steady pair defects {defects:?} tol {tol:?}; self pair max |defect| / E-scale {self_worst:e}")))
}

fn twin_runs() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["twin-static", "twin-piston", "twin-dilation"] {
        let r = study(name)?;
        let order = r.orders.get("twin_energy").copied().unwrap_or(f64::NAN);
        let (pass, detail) = study_verdict(&r);
        ok &= pass && order >= 0.5 && r.contracts.iter().any(|c| c.name == "twin_final_energy_relative");
        parts.push(detail);
    }
    let r = study("twin-piston-perturbed")?;
    let constants = r.table.get("gronwall_constant").cloned().unwrap_or_default();
    let variation = ale_ns::diagnostics::constant_variation(&constants[constants.len().saturating_sub(2)..]).unwrap_or(f64::NAN);
    ok &= r.pass() && variation <= 0.25;
    parts.push(format!("twin-piston-perturbed C {constants:?}, top-two variation {variation:.3}"));
    Ok((ok, parts.join("; ")))
}
