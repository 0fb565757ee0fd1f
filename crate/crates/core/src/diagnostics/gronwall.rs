use super::fields::PairField;
use super::relative::relative_energy;
use super::cumulative_trapezoid;
use crate::mechanics::{stress, ViscosityParams};
use crate::motion::MovingMesh;
use crate::reconstruct::GradientOperator;
use crate::solver::Trajectory;
use crate::{Error, Result, Vec3};

/// Integrability exponent `q = 6 gamma / (5 gamma - 6)` of the forcing term.
pub fn gronwall_exponent(gamma: f64) -> Result<f64> {
    if !(gamma > 6.0 / 5.0) {
        return Err(Error::Domain(format!("gamma = {gamma} must exceed 6/5")));
    }
    Ok(6.0 * gamma / (5.0 * gamma - 6.0))
}

/// Relative energy of a weak run against a strong pair and the fitted
/// Gronwall constant `C` with `E(t) <= E(0) exp(C int_0^t h)`.
#[derive(Debug, Clone, Default)]
pub struct GronwallReport {
    pub label: &'static str,
    pub times: Vec<f64>,
    pub relative_energy: Vec<f64>,
    /// `|grad U|_inf + |div S / r|_3^2 + |div S|_3^2 + |div S / r|_q^2`.
    pub h: Vec<f64>,
    pub h_integral: Vec<f64>,
    /// Smallest nonnegative `C` consistent with every emitted time, `None` when `E(0)` vanishes.
    pub constant: Option<f64>,
    /// `E(0) exp(C int_0^t h)`.
    pub bound: Vec<f64>,
}

fn lp_norm(values: &[f64], vols: &[f64], p: f64) -> f64 {
    values.iter().zip(vols).map(|(v, w)| w * v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

pub fn gronwall_report(traj: &Trajectory, strong: &dyn PairField) -> Result<GronwallReport> {
    let sc = &traj.scenario;
    let q = gronwall_exponent(sc.law.gamma())?;
    let mut rep = GronwallReport { label: strong.label(), times: traj.times(), ..Default::default() };
    for snap in &traj.snapshots {
        let s = strong.sample(snap, &sc.viscosity)?;
        rep.relative_energy.push(relative_energy(snap, &s, &sc.law)?);
        let vols = &snap.mesh.cell_volumes;
        let grad_inf = s.grad_u.iter().map(|g| g.norm()).fold(0.0, f64::max);
        let ds: Vec<f64> = s.div_stress.iter().map(Vec3::norm).collect();
        let ds_r: Vec<f64> = ds.iter().zip(&s.r).map(|(d, r)| d / r).collect();
        rep.h.push(
            grad_inf + lp_norm(&ds_r, vols, 3.0).powi(2) + lp_norm(&ds, vols, 3.0).powi(2) + lp_norm(&ds_r, vols, q).powi(2),
        );
    }
    rep.h_integral = cumulative_trapezoid(&rep.times, &rep.h);
    let e0 = rep.relative_energy[0];
    if e0 > 1e-300 {
        let c = rep
            .relative_energy
            .iter()
            .zip(&rep.h_integral)
            .filter(|(e, ih)| **ih > 0.0 && **e > 0.0)
            .map(|(e, ih)| (e / e0).ln() / ih)
            .fold(0.0, f64::max);
        rep.constant = Some(c);
        rep.bound = rep.h_integral.iter().map(|ih| e0 * (c * ih).exp()).collect();
    }
    Ok(rep)
}

/// `|max - min| / max` over fitted constants, `None` if any is missing or all vanish.
pub fn constant_variation(constants: &[Option<f64>]) -> Option<f64> {
    let cs: Vec<f64> = constants.iter().copied().collect::<Option<_>>()?;
    let max = cs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = cs.iter().copied().fold(f64::INFINITY, f64::min);
    (max > 0.0).then(|| (max - min) / max)
}

/// Ratio `|z|_{W^{1,2}} / |S(grad z)|_{L^2}` on a mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KornProbe {
    pub ratio: f64,
    /// Set when `S(grad z)` vanishes to rounding, as for rigid motions.
    pub flagged: bool,
}

pub fn korn_probe(mesh: &MovingMesh, z: &[Vec3], params: &ViscosityParams) -> Result<KornProbe> {
    if z.len() != mesh.n_cells() {
        return Err(Error::Precondition(format!("field has {} values for {} cells", z.len(), mesh.n_cells())));
    }
    let dim = mesh.dim();
    let g = GradientOperator::new(mesh).vector(z);
    let (mut w12, mut s2) = (0.0, 0.0);
    for c in 0..z.len() {
        let v = mesh.cell_volumes[c];
        w12 += v * (z[c].norm_squared() + g[c].norm_squared());
        s2 += v * stress(&g[c], params, dim).norm_squared();
    }
    let (w12, s) = (w12.sqrt(), s2.sqrt());
    if w12 == 0.0 {
        return Ok(KornProbe { ratio: 0.0, flagged: false });
    }
    if s <= 1e-12 * w12 {
        return Ok(KornProbe { ratio: f64::INFINITY, flagged: true });
    }
    Ok(KornProbe { ratio: w12 / s, flagged: false })
}
