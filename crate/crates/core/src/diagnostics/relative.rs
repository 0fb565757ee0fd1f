use super::fields::{PairField, PairSample, TestPair};
use super::{cumulative_trapezoid, integrate, velocity_and_gradient};
use crate::mechanics::stress;
use crate::motion::{MotionField, MovingMesh};
use crate::solver::{Snapshot, Trajectory};
use crate::thermo::PressureLaw;
use crate::{Error, Result};

fn check_pair_density(snap: &Snapshot, sample: &PairSample) -> Result<()> {
    match sample.r.iter().position(|r| !(*r > 0.0)) {
        Some(c) => Err(Error::Precondition(format!(
            "comparison density r = {} is not positive in cell {c} at t = {}",
            sample.r[c],
            snap.time()
        ))),
        None => Ok(()),
    }
}

/// `int (1/2 rho |u - U|^2 + H(rho) - H'(r)(rho - r) - H(r))`.
pub fn relative_energy(snap: &Snapshot, sample: &PairSample, law: &PressureLaw) -> Result<f64> {
    check_pair_density(snap, sample)?;
    let u = snap.state.velocities();
    let mut total = 0.0;
    for (c, v) in snap.mesh.cell_volumes.iter().enumerate() {
        let rho = snap.state.rho[c];
        let d = rho - sample.r[c];
        let bregman = d * d * law.bregman_ratio(rho, sample.r[c]);
        total += v * (0.5 * rho * (u[c] - sample.u[c]).norm_squared() + bregman);
    }
    Ok(total)
}

/// The five integrals `int (1/2 rho |u|^2 + H(rho))`, `int rho u . U`,
/// `int 1/2 rho |U|^2`, `int rho H'(r)`, `int (r H'(r) - H(r))`, whose
/// alternating sum is the relative energy.
pub fn relative_energy_expansion(snap: &Snapshot, sample: &PairSample, law: &PressureLaw) -> Result<[f64; 5]> {
    check_pair_density(snap, sample)?;
    let u = snap.state.velocities();
    let rho = &snap.state.rho;
    let (r, uu) = (&sample.r, &sample.u);
    Ok([
        integrate(snap, |c| 0.5 * rho[c] * u[c].norm_squared() + law.potential_unchecked(rho[c])),
        integrate(snap, |c| rho[c] * u[c].dot(&uu[c])),
        integrate(snap, |c| 0.5 * rho[c] * uu[c].norm_squared()),
        integrate(snap, |c| rho[c] * law.dpotential_unchecked(r[c])),
        integrate(snap, |c| r[c] * law.dpotential_unchecked(r[c]) - law.potential_unchecked(r[c])),
    ])
}

/// Integrands of the remainder at one time.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RemainderTerms {
    /// `int rho (U_t + u . grad U) . (U - u)`.
    pub convective: f64,
    /// `int S(grad U) : (grad U - grad u)`.
    pub stress: f64,
    /// `int div U (p(r) - p(rho))`.
    pub pressure: f64,
    /// `int (r - rho) H''(r) r_t`.
    pub density_time: f64,
    /// `int (r U - rho u) . H''(r) grad r`.
    pub density_flux: f64,
    /// `-kappa int_Gamma (U - V)_tan . (u - U)_tan`.
    pub friction: f64,
    /// `int s_m . (u - U) + s_rho (H'(rho) - H'(r) - 1/2 |u|^2 + 1/2 |U|^2)`, zero without forcing.
    pub forcing: f64,
}

impl RemainderTerms {
    pub fn total(&self) -> f64 {
        self.convective + self.stress + self.pressure + self.density_time + self.density_flux + self.friction
            + self.forcing
    }
}

/// Relative energy inequality along a trajectory.
#[derive(Debug, Clone, Default)]
pub struct RelativeEnergyReport {
    pub label: &'static str,
    pub times: Vec<f64>,
    pub relative_energy: Vec<f64>,
    /// `int int (S(grad u) - S(grad U)) : (grad u - grad U) + kappa int int_Gamma |(u - U)_tan|^2`.
    pub relative_dissipation: Vec<f64>,
    pub remainder: Vec<RemainderTerms>,
    /// `int_0^t R`.
    pub remainder_integral: Vec<f64>,
    /// `E(t) + relative dissipation - E(0) - int_0^t R`.
    pub defect: Vec<f64>,
}

struct Instant {
    energy: f64,
    dissipation: f64,
    terms: RemainderTerms,
}

fn tangential(v: crate::Vec3, n: &crate::Vec3) -> crate::Vec3 {
    v - v.dot(n) * n
}

fn evaluate(snap: &Snapshot, pair: &dyn PairField, traj: &Trajectory) -> Result<Instant> {
    let sc = &traj.scenario;
    let (law, params, dim) = (&sc.law, &sc.viscosity, sc.dim());
    pair.check_compatibility(&snap.mesh)?;
    let s = pair.sample(snap, params)?;
    let energy = relative_energy(snap, &s, law)?;
    let (u, g) = velocity_and_gradient(snap);
    let rho = &snap.state.rho;
    let t = snap.time();
    let mesh = &snap.mesh;
    let su: Vec<_> = s.grad_u.iter().map(|gu| stress(gu, params, dim)).collect();
    let mut dissipation = integrate(snap, |c| (stress(&g[c], params, dim) - su[c]).dot(&(g[c] - s.grad_u[c])));
    let mut terms = RemainderTerms {
        convective: integrate(snap, |c| rho[c] * (s.dt_u[c] + s.grad_u[c] * u[c]).dot(&(s.u[c] - u[c]))),
        stress: integrate(snap, |c| su[c].dot(&(s.grad_u[c] - g[c]))),
        pressure: integrate(snap, |c| {
            s.grad_u[c].trace() * (law.pressure_unchecked(s.r[c]) - law.pressure_unchecked(rho[c]))
        }),
        density_time: integrate(snap, |c| (s.r[c] - rho[c]) * law.d2potential_unchecked(s.r[c]) * s.dt_r[c]),
        density_flux: integrate(snap, |c| {
            (s.r[c] * s.u[c] - rho[c] * u[c]).dot(&s.grad_r[c]) * law.d2potential_unchecked(s.r[c])
        }),
        ..Default::default()
    };
    if params.kappa > 0.0 {
        let (mut slip, mut fric) = (0.0, 0.0);
        for (k, f) in mesh.boundary_faces().enumerate() {
            let n = &mesh.face_normals[f];
            let a = mesh.face_areas[f];
            let ub = s.boundary_u[k];
            let du = tangential(u[mesh.topology.faces[f].left] - ub, n);
            slip += a * du.norm_squared();
            fric -= a * tangential(ub - mesh.face_velocities[f], n).dot(&du);
        }
        dissipation += params.kappa * slip;
        terms.friction = params.kappa * fric;
    }
    if let Some(mms) = &sc.mms {
        terms.forcing = integrate(snap, |c| {
            let (sr, sm) = mms.sources(t, &mesh.cell_centroids[c]);
            sm.dot(&(u[c] - s.u[c]))
                + sr * (law.dpotential_unchecked(rho[c]) - law.dpotential_unchecked(s.r[c]) - 0.5 * u[c].norm_squared()
                    + 0.5 * s.u[c].norm_squared())
        });
    }
    Ok(Instant { energy, dissipation, terms })
}

/// Remainder terms at every emitted time and the cumulative integral of their sum.
pub fn remainder(traj: &Trajectory, pair: &dyn PairField) -> Result<(Vec<RemainderTerms>, Vec<f64>)> {
    let terms = traj
        .snapshots
        .iter()
        .map(|s| evaluate(s, pair, traj).map(|i| i.terms))
        .collect::<Result<Vec<_>>>()?;
    let totals: Vec<f64> = terms.iter().map(RemainderTerms::total).collect();
    let integral = cumulative_trapezoid(&traj.times(), &totals);
    Ok((terms, integral))
}

pub fn rei_defect(traj: &Trajectory, pair: &dyn PairField) -> Result<RelativeEnergyReport> {
    let times = traj.times();
    let inst = traj.snapshots.iter().map(|s| evaluate(s, pair, traj)).collect::<Result<Vec<_>>>()?;
    let diss: Vec<f64> = inst.iter().map(|i| i.dissipation).collect();
    let totals: Vec<f64> = inst.iter().map(|i| i.terms.total()).collect();
    let relative_dissipation = cumulative_trapezoid(&times, &diss);
    let remainder_integral = cumulative_trapezoid(&times, &totals);
    let relative_energy: Vec<f64> = inst.iter().map(|i| i.energy).collect();
    let e0 = relative_energy[0];
    let defect = (0..times.len())
        .map(|k| relative_energy[k] + relative_dissipation[k] - e0 - remainder_integral[k])
        .collect();
    Ok(RelativeEnergyReport {
        label: pair.label(),
        times,
        relative_energy,
        relative_dissipation,
        remainder: inst.iter().map(|i| i.terms).collect(),
        remainder_integral,
        defect,
    })
}

/// Midpoint-rule value of
/// `int (p(r) div U + r U . grad H'(r)) - int div(V p(r))`,
/// which vanishes for `U . n = V . n` on the boundary.
pub fn ibp_identity_defect(pair: &TestPair, motion: &MotionField, mesh: &MovingMesh, law: &PressureLaw) -> Result<f64> {
    let dim = mesh.dim();
    if pair.dim() != dim {
        return Err(Error::Precondition(format!("pair of dimension {} on a mesh of dimension {dim}", pair.dim())));
    }
    let t = mesh.time;
    let mut total = 0.0;
    for (x, v) in mesh.cell_centroids.iter().zip(&mesh.cell_volumes) {
        let r = pair.r.eval(t, x);
        if !(r > 0.0) {
            return Err(Error::Precondition(format!("comparison density r = {r} is not positive at x = {x:?}")));
        }
        let gr = pair.r.eval_grad(t, x);
        let (uu, _, gu) = pair.velocity(t, x);
        let (p, dp) = (law.pressure_unchecked(r), law.dpressure_unchecked(r));
        let lhs = p * gu.trace() + dp * uu.dot(&gr);
        let rhs = p * motion.divergence(t, x, dim) + dp * motion.velocity(t, x).dot(&gr);
        total += v * (lhs - rhs);
    }
    Ok(total)
}
