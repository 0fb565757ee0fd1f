use std::sync::Arc;

use super::flux::{face_gradient, flux_ale, viscous_flux, wall_ghost};
use super::{FluidState, Reconstruction, Scenario, Snapshot, Trajectory};
use crate::mechanics::{dissipation_density, stress};
use crate::motion::{swept_volumes, MovingMesh, Neighbor};
use crate::reconstruct::GradientOperator;
use crate::{Error, Mat3, Result, Vec3};

/// Geometry shared by both Runge-Kutta stages of one step: the mesh at the
/// average node positions, the swept volumes and the resulting face speeds.
#[derive(Debug, Clone)]
pub struct StepGeometry {
    pub mid: MovingMesh,
    pub volumes_before: Vec<f64>,
    /// `volumes_before` plus the swept volumes of the cell faces.
    pub volumes_after: Vec<f64>,
    /// Normal face speed `swept / (dt A)` on the mid mesh.
    pub face_speeds: Vec<f64>,
    gradients: GradientOperator,
    /// Unit centroid-to-centroid direction and distance per interior face.
    links: Vec<(Vec3, f64)>,
}

impl StepGeometry {
    pub fn new(before: &MovingMesh, after: &MovingMesh, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Precondition(format!("time step must be positive, got {dt}")));
        }
        let nodes = before.nodes.iter().zip(&after.nodes).map(|(a, b)| 0.5 * (a + b)).collect();
        let vels = before.node_velocities.iter().zip(&after.node_velocities).map(|(a, b)| 0.5 * (a + b)).collect();
        let mid = MovingMesh::from_nodes(before.topology.clone(), nodes, vels, 0.5 * (before.time + after.time))?;
        let swept = swept_volumes(before, after);
        let face_speeds: Vec<f64> = swept.iter().zip(&mid.face_areas).map(|(s, a)| s / (dt * a)).collect();
        let volumes_after = before
            .topology
            .cell_faces
            .iter()
            .enumerate()
            .map(|(c, faces)| before.cell_volumes[c] + faces.iter().map(|&(f, s)| s * swept[f]).sum::<f64>())
            .collect();
        let links = mid
            .topology
            .faces
            .iter()
            .map(|face| match face.right {
                Neighbor::Boundary => (Vec3::zeros(), 0.0),
                Neighbor::Cell(r) | Neighbor::Periodic(r) => {
                    let shift = if matches!(face.right, Neighbor::Periodic(_)) {
                        mid.periodic_shift(face.left, r)
                    } else {
                        Vec3::zeros()
                    };
                    let d = mid.cell_centroids[r] + shift - mid.cell_centroids[face.left];
                    let len = d.norm();
                    (d / len, len)
                }
            })
            .collect();
        Ok(Self {
            gradients: GradientOperator::new(&mid),
            mid,
            volumes_before: before.cell_volumes.clone(),
            volumes_after,
            face_speeds,
            links,
        })
    }
}

/// Linear reconstruction of density and velocity with the Venkatakrishnan
/// limiter, which relaxes towards the neighbour range only where face
/// increments exceed `(K dx)^(3/2)`; density face values stay nonnegative.
const VENKATAKRISHNAN_K: f64 = 1.0;

struct Limited {
    rho: Vec<(f64, Vec3)>,
    u: Vec<(Vec3, Mat3)>,
}

impl Limited {
    fn new(rho: &[f64], u: &[Vec3], grads: &[Mat3], geo: &StepGeometry) -> Self {
        let mesh = &geo.mid;
        let rho_grad = geo.gradients.scalar(rho);
        let dim = mesh.dim();
        let mut out_rho = Vec::with_capacity(rho.len());
        let mut out_u = Vec::with_capacity(rho.len());
        for (c, faces) in mesh.topology.cell_faces.iter().enumerate() {
            let neighbours: Vec<usize> = faces.iter().filter_map(|&(f, _)| {
                let face = &mesh.topology.faces[f];
                face.right_cell().map(|r| if r == c { face.left } else { r })
            }).collect();
            let offsets: Vec<Vec3> = faces
                .iter()
                .map(|&(f, sign)| {
                    let face = &mesh.topology.faces[f];
                    let shift = match face.right {
                        Neighbor::Periodic(r) if sign < 0.0 => mesh.periodic_shift(face.left, r),
                        _ => Vec3::zeros(),
                    };
                    mesh.face_midpoints[f] - shift - mesh.cell_centroids[c]
                })
                .collect();
            let eps2 = (VENKATAKRISHNAN_K * mesh.cell_volumes[c].powf(1.0 / dim as f64)).powi(3);
            let limiter = |q: f64, g: &Vec3, values: &mut dyn Iterator<Item = f64>| -> f64 {
                let (mut lo, mut hi) = (q, q);
                for v in values {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                offsets.iter().fold(1.0f64, |phi, d| {
                    let dm = g.dot(d);
                    let dp = if dm > 0.0 {
                        hi - q
                    } else if dm < 0.0 {
                        lo - q
                    } else {
                        return phi;
                    };
                    let bound = (dp * dp + eps2 + 2.0 * dm * dp) / (dp * dp + 2.0 * dm * dm + dm * dp + eps2);
                    phi.min(bound.min(1.0))
                })
            };
            let drop = offsets.iter().map(|d| -rho_grad[c].dot(d)).fold(0.0, f64::max);
            let positive = if drop > rho[c] { rho[c].max(0.0) / drop } else { 1.0 };
            let phi = limiter(rho[c], &rho_grad[c], &mut neighbours.iter().map(|&k| rho[k])).min(positive);
            out_rho.push((rho[c], phi * rho_grad[c]));
            let mut g = Mat3::zeros();
            for k in 0..dim {
                let row = grads[c].row(k).transpose();
                let phi = limiter(u[c][k], &row, &mut neighbours.iter().map(|&j| u[j][k]));
                g.set_row(k, &(phi * row).transpose());
            }
            out_u.push((u[c], g));
        }
        Self { rho: out_rho, u: out_u }
    }

    fn at(&self, c: usize, offset: &Vec3) -> (f64, Vec3) {
        let (r, gr) = &self.rho[c];
        let (u, gu) = &self.u[c];
        ((r + gr.dot(offset)).max(0.0), u + gu * offset)
    }
}

struct Rates {
    mass: Vec<f64>,
    momentum: Vec<Vec3>,
    dissipation: f64,
}

/// `d/dt` of the cell integrals of `(rho, rho u)` at fixed geometry.
/// Cell gradient at a wall face with the normal derivative of the normal
/// velocity replaced by a quadratic fit through the wall value, the cell and
/// its inward lattice neighbour.
fn wall_gradient(mesh: &MovingMesh, f: usize, g: &Mat3, u: &[Vec3], w_n: f64, wet: impl Fn(usize) -> bool) -> Mat3 {
    let face = &mesh.topology.faces[f];
    let (l, nrm) = (face.left, mesh.face_normals[f]);
    let inward = [1isize, -1].into_iter().find_map(|d| {
        let out = mesh.topology.lattice_neighbor(l, face.axis, -d);
        match (out, mesh.topology.lattice_neighbor(l, face.axis, d)) {
            (None, Some((c, false))) => Some(c),
            _ => None,
        }
    });
    let Some(k) = inward else { return *g };
    let xf = mesh.face_midpoints[f];
    let s0 = (xf - mesh.cell_centroids[l]).dot(&nrm);
    let s1 = (xf - mesh.cell_centroids[k]).dot(&nrm);
    if !(s0 > 0.0 && s1 > s0 && wet(l) && wet(k)) {
        return *g;
    }
    let a0 = u[l].dot(&nrm) - w_n;
    let a1 = u[k].dot(&nrm) - w_n;
    let dn = -(a0 * s1 * s1 - a1 * s0 * s0) / (s0 * s1 * (s1 - s0));
    g + (dn - nrm.dot(&(g * nrm))) * nrm * nrm.transpose()
}

fn rates(rho: &[f64], momentum: &[Vec3], t: f64, geo: &StepGeometry, scenario: &Scenario) -> Result<Rates> {
    let mesh = &geo.mid;
    let dim = mesh.dim();
    let params = &scenario.viscosity;
    let law = &scenario.law;
    let state = FluidState { rho: rho.to_vec(), momentum: momentum.to_vec(), time: t };
    let u = state.velocities();
    let floor = state.vacuum_threshold();
    let grads: Vec<Mat3> = geo.gradients.vector(&u);
    let n = mesh.n_cells();
    let recon = match scenario.reconstruction {
        Reconstruction::FirstOrder => None,
        Reconstruction::Limited => Some(Limited::new(rho, &u, &grads, geo)),
    };
    let face_state = |c: usize, f: usize, side_shift: Vec3| -> (f64, Vec3) {
        match &recon {
            None => (rho[c], u[c]),
            Some(r) => r.at(c, &(mesh.face_midpoints[f] - side_shift - mesh.cell_centroids[c])),
        }
    };
    let mut mass = vec![0.0; n];
    let mut mom = vec![Vec3::zeros(); n];
    let mut dissipation = 0.0;

    for (f, face) in mesh.topology.faces.iter().enumerate() {
        let (nrm, area, w_n) = (mesh.face_normals[f], mesh.face_areas[f], geo.face_speeds[f]);
        let l = face.left;
        match face.right_cell() {
            Some(r) => {
                let shift = if matches!(face.right, Neighbor::Periodic(_)) { mesh.periodic_shift(l, r) } else { Vec3::zeros() };
                let flux = flux_ale(face_state(l, f, Vec3::zeros()), face_state(r, f, shift), &nrm, w_n, law)?;
                let (e, d) = geo.links[f];
                let g = face_gradient(&grads[l], &grads[r], &u[l], &u[r], &e, d);
                let visc = viscous_flux(&g, &nrm, params, dim);
                let m = area * (flux.momentum - visc);
                mass[l] -= area * flux.mass;
                mass[r] += area * flux.mass;
                mom[l] -= m;
                mom[r] += m;
            }
            None => {
                let (rf, uf) = face_state(l, f, Vec3::zeros());
                let ghost = wall_ghost(&uf, &nrm, w_n);
                let mut flux = flux_ale((rf, uf), (rf, ghost), &nrm, w_n, law)?;
                flux.mass = 0.0;
                let g = wall_gradient(mesh, f, &grads[l], &u, w_n, |c| rho[c] > floor);
                let s = stress(&g, params, dim);
                let slip = u[l] - mesh.face_velocities[f];
                let slip_tan = slip - slip.dot(&nrm) * nrm;
                let traction = nrm.dot(&(s * nrm)) * nrm - params.kappa * slip_tan;
                mom[l] -= area * (flux.momentum - traction);
                dissipation += params.kappa * area * slip_tan.norm_squared();
            }
        }
    }
    for c in 0..n {
        dissipation += mesh.cell_volumes[c] * dissipation_density(&grads[c], params, dim);
    }
    if let Some(mms) = &scenario.mms {
        for c in 0..n {
            let (sr, sm) = mms.sources(t, &mesh.cell_centroids[c]);
            mass[c] += mesh.cell_volumes[c] * sr;
            mom[c] += mesh.cell_volumes[c] * sm;
        }
    }
    Ok(Rates { mass, momentum: mom, dissipation })
}

fn check_positive(rho: &[f64], t: f64) -> Result<()> {
    match rho.iter().position(|r| !(*r >= 0.0)) {
        Some(cell) => Err(Error::Positivity { cell, time: t, rho: rho[cell] }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: FluidState,
    /// Dissipation accumulated over the step.
    pub dissipation: f64,
}

/// One SSP-RK2 step from `before` (at `state.time`) to `after`.
pub fn step(state: &FluidState, before: &MovingMesh, after: &MovingMesh, dt: f64, scenario: &Scenario) -> Result<StepOutcome> {
    let geo = StepGeometry::new(before, after, dt)?;
    let (t0, t1) = (state.time, state.time + dt);
    let n = state.n_cells();
    let v0 = &geo.volumes_before;
    let v1 = &geo.volumes_after;

    let k1 = rates(&state.rho, &state.momentum, t0, &geo, scenario)?;
    let mut rho1 = vec![0.0; n];
    let mut mom1 = vec![Vec3::zeros(); n];
    for c in 0..n {
        rho1[c] = (v0[c] * state.rho[c] + dt * k1.mass[c]) / v1[c];
        mom1[c] = (v0[c] * state.momentum[c] + dt * k1.momentum[c]) / v1[c];
    }
    check_positive(&rho1, t1)?;

    let k2 = rates(&rho1, &mom1, t1, &geo, scenario)?;
    let mut rho = vec![0.0; n];
    let mut momentum = vec![Vec3::zeros(); n];
    for c in 0..n {
        rho[c] = 0.5 * (v0[c] * state.rho[c] + v1[c] * rho1[c] + dt * k2.mass[c]) / v1[c];
        momentum[c] = 0.5 * (v0[c] * state.momentum[c] + v1[c] * mom1[c] + dt * k2.momentum[c]) / v1[c];
    }
    check_positive(&rho, t1)?;
    let mut next = FluidState { rho, momentum, time: t1 };
    next.clear_vacuum();
    Ok(StepOutcome { state: next, dissipation: 0.5 * dt * (k1.dissipation + k2.dissipation) })
}

/// Largest stable step on `mesh`:
/// `cfl * min_i min(2 |K_i| / sum_f lambda_f A_f, rho_i |K_i|^2 / (2 nu (sum_f A_f / 2)^2))`
/// with `lambda_f = |u . n - w . n| + sqrt(p'(rho))` and `nu = 4/3 mu + eta`.
pub fn stable_dt(state: &FluidState, mesh: &MovingMesh, scenario: &Scenario) -> Result<f64> {
    if mesh.n_cells() == 0 {
        return Err(Error::Precondition("stable_dt on an empty mesh".into()));
    }
    let law = &scenario.law;
    let u = state.velocities();
    let speed = |c: usize, nrm: &Vec3, w_n: f64| (u[c].dot(nrm) - w_n).abs() + law.dpressure_unchecked(state.rho[c]).sqrt();
    let n = mesh.n_cells();
    let mut wave = vec![0.0; n];
    let mut area = vec![0.0; n];
    for (f, face) in mesh.topology.faces.iter().enumerate() {
        let (nrm, a) = (mesh.face_normals[f], mesh.face_areas[f]);
        let w_n = mesh.face_velocities[f].dot(&nrm);
        let l = face.left;
        let lambda = match face.right_cell() {
            Some(r) => speed(l, &nrm, w_n).max(speed(r, &nrm, w_n)),
            None => speed(l, &nrm, w_n),
        };
        wave[l] += lambda * a;
        area[l] += a;
        if let Some(r) = face.right_cell() {
            wave[r] += lambda * a;
            area[r] += a;
        }
    }
    let nu = scenario.viscosity.longitudinal();
    let floor = state.vacuum_threshold();
    let mut dt = f64::INFINITY;
    for c in 0..n {
        let vol = mesh.cell_volumes[c];
        if wave[c] > 0.0 {
            dt = dt.min(2.0 * vol / wave[c]);
        }
        if state.rho[c] > floor {
            let half = 0.5 * area[c];
            dt = dt.min(state.rho[c] * vol * vol / (2.0 * nu * half * half));
        }
    }
    let dt = scenario.cfl * dt;
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::Solver(format!("no admissible time step (dt = {dt})")));
    }
    Ok(dt)
}

fn dump(state: &FluidState, dt: f64) -> String {
    let (imin, rmin) = state
        .rho
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &r)| if r < acc.1 { (i, r) } else { acc });
    let rmax = state.rho.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let umax = state.velocities().iter().map(|v| v.norm()).fold(0.0, f64::max);
    format!(
        "state at t = {}: {} cells, dt = {dt:e}, min rho = {rmin:e} (cell {imin}), max rho = {rmax:e}, max |u| = {umax:e}",
        state.time,
        state.n_cells()
    )
}

/// Advances the scenario from `t = 0` to `t_end`. Snapshots are emitted at
/// `t = 0`, at every multiple of `emit_every` and at `t_end` (every step when
/// `emit_every` is unset); steps are shortened to land on emission times.
pub fn run(scenario: &Scenario) -> Result<Trajectory> {
    if !(scenario.t_end >= 0.0) || !(scenario.cfl > 0.0) {
        return Err(Error::Precondition(format!("need t_end >= 0 and cfl > 0, got {} and {}", scenario.t_end, scenario.cfl)));
    }
    if let Some(e) = scenario.emit_every {
        if !(e > 0.0) {
            return Err(Error::Precondition(format!("emit_every must be positive, got {e}")));
        }
    }
    let mut mesh = Arc::new(scenario.mesh_at(0.0)?);
    let mut state = scenario.initial_state(&mesh)?;
    let mut dissipation = 0.0;
    let mut snapshots = vec![Snapshot { state: state.clone(), mesh: mesh.clone(), dissipation, step: 0 }];
    let mut k_emit = 1usize;
    let mut steps = 0usize;
    let t_end = scenario.t_end;
    while state.time < t_end {
        let target = match scenario.emit_every {
            Some(e) => (k_emit as f64 * e).min(t_end),
            None => t_end,
        };
        let wrap = |source: Error, dt: f64, state: &FluidState| Error::Step {
            step: steps + 1,
            time: state.time,
            dump: dump(state, dt),
            source: Box::new(source),
        };
        let dt_stable = stable_dt(&state, &mesh, scenario).map_err(|e| wrap(e, f64::NAN, &state))?;
        let (t_new, lands) = if state.time + dt_stable >= target * (1.0 - 1e-14) {
            (target, true)
        } else {
            (state.time + dt_stable, false)
        };
        let dt = t_new - state.time;
        let next_mesh = Arc::new(scenario.mesh_at(t_new).map_err(|e| wrap(e, dt, &state))?);
        let outcome = step(&state, &mesh, &next_mesh, dt, scenario).map_err(|e| wrap(e, dt, &state))?;
        state = outcome.state;
        state.time = t_new;
        dissipation += outcome.dissipation;
        mesh = next_mesh;
        steps += 1;
        if steps > scenario.max_steps {
            return Err(Error::Solver(format!("exceeded {} steps before t_end = {t_end}", scenario.max_steps)));
        }
        if lands && scenario.emit_every.is_some() {
            k_emit += 1;
        }
        if scenario.emit_every.is_none() || lands {
            snapshots.push(Snapshot { state: state.clone(), mesh: mesh.clone(), dissipation, step: steps });
        }
    }
    Ok(Trajectory { scenario: scenario.clone(), snapshots })
}
