use crate::mechanics::{stress, ViscosityParams};
use crate::thermo::PressureLaw;
use crate::{Error, Mat3, Result, Vec3};

/// Numerical flux through a face per unit area, oriented along the face normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceFlux {
    pub mass: f64,
    pub momentum: Vec3,
    /// Wave-speed bound used for the dissipation.
    pub lambda: f64,
}

/// Rusanov flux of `F(q) . n - w_n q` for `q = (rho, rho u)`, with `w_n` the
/// normal speed of the face.
pub fn flux_ale(left: (f64, Vec3), right: (f64, Vec3), n: &Vec3, w_n: f64, law: &PressureLaw) -> Result<FaceFlux> {
    let (rl, ul) = left;
    let (rr, ur) = right;
    if rl < 0.0 || rr < 0.0 || rl.is_nan() || rr.is_nan() {
        return Err(Error::Solver(format!("negative density in flux: {rl}, {rr}")));
    }
    let (vl, vr) = (ul.dot(n) - w_n, ur.dot(n) - w_n);
    let (pl, pr) = (law.pressure_unchecked(rl), law.pressure_unchecked(rr));
    let lambda = (vl.abs() + law.dpressure_unchecked(rl).sqrt()).max(vr.abs() + law.dpressure_unchecked(rr).sqrt());
    let (ml, mr) = (rl * ul, rr * ur);
    let mass = 0.5 * (rl * vl + rr * vr) - 0.5 * lambda * (rr - rl);
    let momentum = 0.5 * (ml * vl + mr * vr + (pl + pr) * n) - 0.5 * lambda * (mr - ml);
    Ok(FaceFlux { mass, momentum, lambda })
}

/// Ghost velocity behind a slip wall moving with normal speed `w_n`: the
/// face-relative normal component is reflected, the tangential one kept.
pub fn wall_ghost(u: &Vec3, n: &Vec3, w_n: f64) -> Vec3 {
    u - 2.0 * (u.dot(n) - w_n) * n
}

/// Face gradient from the two cell gradients, corrected along the
/// centroid-to-centroid direction `e` (unit) with distance `d`.
pub fn face_gradient(gl: &Mat3, gr: &Mat3, ul: &Vec3, ur: &Vec3, e: &Vec3, d: f64) -> Mat3 {
    let avg = 0.5 * (gl + gr);
    let jump = (ur - ul) / d - avg * e;
    avg + jump * e.transpose()
}

/// Viscous momentum flux `S(G) n` per unit area.
pub fn viscous_flux(grad: &Mat3, n: &Vec3, params: &ViscosityParams, dim: usize) -> Vec3 {
    stress(grad, params, dim) * n
}

/// Classical Rusanov flux for the one-dimensional Euler system on a fixed
/// face, `(rho u, rho u^2 + p)`, used as an independent reference.
pub fn rusanov_reference(left: (f64, f64), right: (f64, f64), law: &PressureLaw) -> (f64, f64) {
    let phys = |r: f64, u: f64| (r * u, r * u * u + law.pressure_unchecked(r));
    let (fl, fr) = (phys(left.0, left.1), phys(right.0, right.1));
    let speed = |r: f64, u: f64| u.abs() + law.dpressure_unchecked(r).sqrt();
    let s = speed(left.0, left.1).max(speed(right.0, right.1));
    (
        0.5 * (fl.0 + fr.0) - 0.5 * s * (right.0 - left.0),
        0.5 * (fl.1 + fr.1) - 0.5 * s * (right.0 * right.1 - left.0 * left.1),
    )
}
