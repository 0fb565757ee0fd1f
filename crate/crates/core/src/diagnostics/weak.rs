use super::fields::{eval_vector, Renormalization, TestFunction};
use super::{cumulative_trapezoid, integrate, velocity_and_gradient};
use crate::mechanics::stress;
use crate::solver::Trajectory;
use crate::{Error, Result};

/// Snapshots up to the one emitted at `tau`.
fn upto(traj: &Trajectory, tau: f64) -> Result<usize> {
    traj.index_of(tau)
}

fn scalar_test(phi: &TestFunction) -> Result<()> {
    if phi.components.len() != 1 {
        return Err(Error::Precondition(format!("expected a scalar test function, got {} components", phi.components.len())));
    }
    Ok(())
}

/// Defect of the renormalized continuity equation
/// `[int b(rho) phi]_0^tau - int int (b phi_t + b u . grad phi + (b - b' rho) div u phi + b' s phi)`,
/// where `s` is the manufactured mass source (zero without forcing).
pub fn renormalized_residual(traj: &Trajectory, phi: &TestFunction, b: Renormalization, tau: f64) -> Result<f64> {
    scalar_test(phi)?;
    let last = upto(traj, tau)?;
    let dim = traj.scenario.dim();
    let phi = &phi.fields(dim)[0];
    let mms = traj.scenario.mms.as_ref();
    let mut times = Vec::with_capacity(last + 1);
    let mut rates = Vec::with_capacity(last + 1);
    for snap in &traj.snapshots[..=last] {
        let t = snap.time();
        let (u, g) = velocity_and_gradient(snap);
        let rate = integrate(snap, |c| {
            let x = &snap.mesh.cell_centroids[c];
            let (bv, db) = b.eval(snap.state.rho[c]);
            let f = phi.eval(t, x);
            let mut val = bv * phi.eval_dt(t, x) + bv * u[c].dot(&phi.eval_grad(t, x)) + (bv - db * snap.state.rho[c]) * g[c].trace() * f;
            if let Some(m) = mms {
                val += db * m.sources(t, x).0 * f;
            }
            val
        });
        times.push(t);
        rates.push(rate);
    }
    let amount = |k: usize| {
        let snap = &traj.snapshots[k];
        integrate(snap, |c| b.eval(snap.state.rho[c]).0 * phi.eval(snap.time(), &snap.mesh.cell_centroids[c]))
    };
    Ok(amount(last) - amount(0) - cumulative_trapezoid(&times, &rates)[last])
}

/// Defect of the weak continuity equation
/// `[int rho phi]_0^tau - int int (rho phi_t + rho u . grad phi + s phi)`.
pub fn weak_continuity_residual(traj: &Trajectory, phi: &TestFunction, tau: f64) -> Result<f64> {
    renormalized_residual(traj, phi, Renormalization::Linear { cutoff: f64::INFINITY }, tau)
}

/// Defect of the weak momentum equation
/// `[int rho u . phi]_0^tau - int int (rho u . phi_t + rho u (x) u : grad phi + p div phi - S : grad phi + s . phi)`
/// `+ kappa int int_Gamma (u - V) . phi`, for test functions tangent to the boundary.
pub fn weak_momentum_residual(traj: &Trajectory, phi: &TestFunction, tau: f64) -> Result<f64> {
    let dim = traj.scenario.dim();
    if phi.components.len() != dim {
        return Err(Error::Precondition(format!("test function has {} components in dimension {dim}", phi.components.len())));
    }
    let last = upto(traj, tau)?;
    let fields = phi.fields(dim);
    if phi.tangency {
        for snap in &traj.snapshots[..=last] {
            let m = &snap.mesh;
            for f in m.boundary_faces() {
                let (v, _, _) = eval_vector(&fields, snap.time(), &m.face_midpoints[f]);
                let normal = v.dot(&m.face_normals[f]).abs();
                if normal > 1e-8 {
                    return Err(Error::Precondition(format!("test function has phi . n = {normal:e} on the boundary at t = {}", snap.time())));
                }
            }
        }
    }
    let sc = &traj.scenario;
    let mut times = Vec::with_capacity(last + 1);
    let mut rates = Vec::with_capacity(last + 1);
    for snap in &traj.snapshots[..=last] {
        let t = snap.time();
        let (u, g) = velocity_and_gradient(snap);
        let mut rate = integrate(snap, |c| {
            let x = &snap.mesh.cell_centroids[c];
            let (p, dp, gp) = eval_vector(&fields, t, x);
            let rho = snap.state.rho[c];
            let m = snap.state.momentum[c];
            let mut val = m.dot(&dp) + (m * u[c].transpose()).dot(&gp) + sc.law.pressure_unchecked(rho) * gp.trace()
                - stress(&g[c], &sc.viscosity, dim).dot(&gp);
            if let Some(mms) = &sc.mms {
                val += mms.sources(t, x).1.dot(&p);
            }
            val
        });
        if sc.viscosity.kappa > 0.0 {
            let m = &snap.mesh;
            rate -= sc.viscosity.kappa
                * m.boundary_faces()
                    .map(|f| {
                        let (p, _, _) = eval_vector(&fields, t, &m.face_midpoints[f]);
                        (u[m.topology.faces[f].left] - m.face_velocities[f]).dot(&p) * m.face_areas[f]
                    })
                    .sum::<f64>();
        }
        times.push(t);
        rates.push(rate);
    }
    let amount = |k: usize| {
        let snap = &traj.snapshots[k];
        integrate(snap, |c| snap.state.momentum[c].dot(&eval_vector(&fields, snap.time(), &snap.mesh.cell_centroids[c]).0))
    };
    Ok(amount(last) - amount(0) - cumulative_trapezoid(&times, &rates)[last])
}
