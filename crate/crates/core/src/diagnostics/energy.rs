use super::{cumulative_trapezoid, integrate, velocity_and_gradient};
use crate::mechanics::{deviatoric_gradient, dissipation_bound};
use crate::solver::{Snapshot, Trajectory};

/// Terms of the energy inequality at every emitted time; the time integrals
/// run from `0` to the emission time.
#[derive(Debug, Clone, Default)]
pub struct EnergyReport {
    pub times: Vec<f64>,
    /// `int (1/2 rho |u|^2 + H(rho))`.
    pub kinetic_potential: Vec<f64>,
    /// `int int (mu/2 |D|^2 + eta (div u)^2) + kappa int int_Gamma |(u - V)_tan|^2`.
    pub dissipation: Vec<f64>,
    /// `int rho u . V (tau) - int m_0 . V(0)`.
    pub v_coupling_1: Vec<f64>,
    /// `int int (mu D : grad V + eta div u div V)`.
    pub v_coupling_2: Vec<f64>,
    /// `int int (-rho u . V_t - rho u (x) u : grad V - p div V)`.
    pub v_coupling_3: Vec<f64>,
    /// Work of the manufactured sources, zero without forcing.
    pub forcing: Vec<f64>,
    /// Left side minus right side.
    pub defect: Vec<f64>,
}

/// `int (1/2 rho |u|^2 + H(rho))` on a snapshot.
pub fn total_energy(snap: &Snapshot, law: &crate::thermo::PressureLaw) -> f64 {
    let u = snap.state.velocities();
    integrate(snap, |c| {
        let rho = snap.state.rho[c];
        0.5 * rho * u[c].norm_squared() + law.potential_unchecked(rho)
    })
}

/// `|E(0)|` with `E = int (1/2 rho |u|^2 + H(rho))`, the scale of energy tolerances.
pub fn energy_scale(traj: &Trajectory) -> f64 {
    total_energy(&traj.snapshots[0], &traj.scenario.law).abs()
}

pub fn energy_report(traj: &Trajectory) -> EnergyReport {
    let sc = &traj.scenario;
    let (law, params, motion) = (&sc.law, &sc.viscosity, &sc.flow.motion);
    let dim = sc.dim();
    let times = traj.times();
    let mut r = EnergyReport { times: times.clone(), ..Default::default() };
    let (mut diss_rate, mut v2_rate, mut v3_rate, mut forcing_rate) = (vec![], vec![], vec![], vec![]);
    let mut v1 = vec![];
    let m0_v0 = {
        let s = &traj.snapshots[0];
        integrate(s, |c| s.state.momentum[c].dot(&motion.velocity(0.0, &s.mesh.cell_centroids[c])))
    };
    for snap in &traj.snapshots {
        let t = snap.time();
        let (u, g) = velocity_and_gradient(snap);
        let mesh = &snap.mesh;
        r.kinetic_potential.push(total_energy(snap, law));
        let mut diss = integrate(snap, |c| dissipation_bound(&g[c], params, dim));
        if params.kappa > 0.0 {
            diss += params.kappa
                * mesh
                    .boundary_faces()
                    .map(|f| {
                        let n = mesh.face_normals[f];
                        let slip = u[mesh.topology.faces[f].left] - mesh.face_velocities[f];
                        (slip - slip.dot(&n) * n).norm_squared() * mesh.face_areas[f]
                    })
                    .sum::<f64>();
        }
        diss_rate.push(diss);
        v1.push(integrate(snap, |c| snap.state.momentum[c].dot(&motion.velocity(t, &mesh.cell_centroids[c]))) - m0_v0);
        v2_rate.push(integrate(snap, |c| {
            let x = &mesh.cell_centroids[c];
            let gv = motion.gradient(t, x, dim);
            params.mu * deviatoric_gradient(&g[c], dim).dot(&gv) + params.eta * g[c].trace() * gv.trace()
        }));
        v3_rate.push(integrate(snap, |c| {
            let x = &mesh.cell_centroids[c];
            let gv = motion.gradient(t, x, dim);
            let m = snap.state.momentum[c];
            -m.dot(&motion.time_derivative(t, x)) - (m * u[c].transpose()).dot(&gv)
                - law.pressure_unchecked(snap.state.rho[c]) * gv.trace()
        }));
        forcing_rate.push(match &sc.mms {
            None => 0.0,
            Some(mms) => integrate(snap, |c| {
                let x = &mesh.cell_centroids[c];
                let (sr, sm) = mms.sources(t, x);
                let rho = snap.state.rho[c];
                sm.dot(&(u[c] - motion.velocity(t, x))) + sr * (law.dpotential_unchecked(rho) - 0.5 * u[c].norm_squared())
            }),
        });
    }
    r.dissipation = cumulative_trapezoid(&times, &diss_rate);
    r.v_coupling_1 = v1;
    r.v_coupling_2 = cumulative_trapezoid(&times, &v2_rate);
    r.v_coupling_3 = cumulative_trapezoid(&times, &v3_rate);
    r.forcing = cumulative_trapezoid(&times, &forcing_rate);
    let e0 = r.kinetic_potential[0];
    r.defect = (0..times.len())
        .map(|k| {
            r.kinetic_potential[k] + r.dissipation[k]
                - (e0 + r.v_coupling_1[k] + r.v_coupling_2[k] + r.v_coupling_3[k] + r.forcing[k])
        })
        .collect();
    r
}
