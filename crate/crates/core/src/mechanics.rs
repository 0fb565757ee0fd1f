//! Newtonian viscous stress, dissipation and the slip boundary residuals.

use crate::{identity, Error, Mat3, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscosityParams {
    /// Shear viscosity `mu > 0`.
    pub mu: f64,
    /// Bulk viscosity `eta >= 0`.
    pub eta: f64,
    /// Navier friction `kappa >= 0`; zero gives perfect slip.
    pub kappa: f64,
}

impl ViscosityParams {
    pub fn new(mu: f64, eta: f64, kappa: f64) -> Result<Self> {
        if !(mu > 0.0) || !(eta >= 0.0) || !(kappa >= 0.0) || !mu.is_finite() || !eta.is_finite() || !kappa.is_finite() {
            return Err(Error::Precondition(format!(
                "viscosity needs mu > 0, eta >= 0, kappa >= 0; got mu = {mu}, eta = {eta}, kappa = {kappa}"
            )));
        }
        Ok(Self { mu, eta, kappa })
    }

    /// Coefficient of the normal stress response to a one-dimensional strain.
    pub fn longitudinal(&self) -> f64 {
        4.0 / 3.0 * self.mu + self.eta
    }
}

pub type StressTensor = Mat3;

/// `D = grad u + grad u^T - 2/3 div u I`, restricted to `dim`.
pub fn deviatoric_gradient(grad: &Mat3, dim: usize) -> Mat3 {
    grad + grad.transpose() - 2.0 / 3.0 * grad.trace() * identity(dim)
}

/// `S = mu D + eta div u I`.
pub fn stress(grad: &Mat3, params: &ViscosityParams, dim: usize) -> StressTensor {
    params.mu * deviatoric_gradient(grad, dim) + params.eta * grad.trace() * identity(dim)
}

/// Pointwise dissipation `S(grad u) : grad u`, nonnegative.
pub fn dissipation_density(grad: &Mat3, params: &ViscosityParams, dim: usize) -> f64 {
    stress(grad, params, dim).dot(grad)
}

/// Lower bound `mu/2 |D|^2 + eta (div u)^2` of the dissipation in the
/// energy inequality; equal to [`dissipation_density`] when `dim = 3`.
pub fn dissipation_bound(grad: &Mat3, params: &ViscosityParams, dim: usize) -> f64 {
    let d = deviatoric_gradient(grad, dim);
    let div = grad.trace();
    0.5 * params.mu * d.norm_squared() + params.eta * div * div
}

fn check_unit(n: &Vec3) -> Result<()> {
    if (n.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("normal must be a unit vector, |n| = {}", n.norm())));
    }
    Ok(())
}

fn tangential(v: &Vec3, n: &Vec3) -> Vec3 {
    v - v.dot(n) * n
}

/// Tangential residual of the Navier slip condition
/// `[S n]_tan + kappa (u - V)_tan`; zero for perfect slip with `kappa = 0`.
pub fn slip_traction_residual(s: &StressTensor, n: &Vec3, u: &Vec3, v: &Vec3, kappa: f64) -> Result<Vec3> {
    check_unit(n)?;
    Ok(tangential(&(s * n), n) + kappa * tangential(&(u - v), n))
}

/// `(u - V) . n` on the boundary.
pub fn impermeability_residual(u: &Vec3, v: &Vec3, n: &Vec3) -> Result<f64> {
    check_unit(n)?;
    Ok((u - v).dot(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn mat(rows: [[f64; 3]; 3]) -> Mat3 {
        Mat3::from_fn(|i, j| rows[i][j])
    }

    #[test]
    fn zero_and_rigid_gradients_are_stress_free() {
        let p = ViscosityParams::new(1.3, 0.4, 0.0).unwrap();
        assert_eq!(stress(&Mat3::zeros(), &p, 3), Mat3::zeros());
        let rot = mat([[0.0, -2.0, 0.5], [2.0, 0.0, 1.0], [-0.5, -1.0, 0.0]]);
        assert!(stress(&rot, &p, 3).norm() < 1e-15);
        assert_eq!(dissipation_density(&rot, &p, 3), 0.0);
    }

    #[test]
    fn stress_of_pure_expansion() {
        // grad u = I in 3D: S = mu (2 I - 2 I) + 3 eta I
        let p = ViscosityParams::new(1.0, 0.5, 0.0).unwrap();
        let s = stress(&identity(3), &p, 3);
        assert_relative_eq!(s, 1.5 * identity(3), epsilon = 1e-15);
    }

    #[test]
    fn simple_shear() {
        let p = ViscosityParams::new(2.0, 0.0, 0.0).unwrap();
        let g = mat([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        let s = stress(&g, &p, 2);
        assert_eq!(s[(0, 1)], 2.0);
        assert_eq!(s[(1, 0)], 2.0);
        assert_relative_eq!(dissipation_density(&g, &p, 2), 2.0);
    }

    #[test]
    fn one_dimensional_strain_uses_longitudinal_coefficient() {
        let p = ViscosityParams::new(0.3, 0.1, 0.0).unwrap();
        let g = mat([[2.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        assert_relative_eq!(stress(&g, &p, 1)[(0, 0)], 2.0 * p.longitudinal(), max_relative = 1e-15);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(ViscosityParams::new(0.0, 0.0, 0.0).is_err());
        assert!(ViscosityParams::new(1.0, -0.1, 0.0).is_err());
        assert!(ViscosityParams::new(1.0, 0.0, -1.0).is_err());
        assert!(ViscosityParams::new(f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn boundary_residuals() {
        let n = Vec3::new(0.0, 1.0, 0.0);
        let s = mat([[1.0, 0.5, 0.0], [0.5, 2.0, 0.0], [0.0, 0.0, 0.0]]);
        let r = slip_traction_residual(&s, &n, &Vec3::zeros(), &Vec3::zeros(), 0.0).unwrap();
        assert_relative_eq!(r, Vec3::new(0.5, 0.0, 0.0));
        let r = slip_traction_residual(&s, &n, &Vec3::new(1.0, 3.0, 0.0), &Vec3::zeros(), 2.0).unwrap();
        assert_relative_eq!(r, Vec3::new(2.5, 0.0, 0.0));
        let v = Vec3::new(0.3, 0.7, 0.0);
        assert_eq!(impermeability_residual(&Vec3::new(5.0, 0.7, 0.0), &v, &n).unwrap(), 0.0);
        assert!(matches!(
            impermeability_residual(&v, &v, &Vec3::new(0.0, 2.0, 0.0)),
            Err(Error::Domain(_))
        ));
        assert!(slip_traction_residual(&s, &Vec3::zeros(), &v, &v, 0.0).is_err());
    }

    fn grad_strategy(dim: usize) -> impl Strategy<Value = Mat3> {
        prop::collection::vec(-10.0..10.0f64, 9).prop_map(move |v| Mat3::from_fn(|i, j| if i < dim && j < dim { v[3 * i + j] } else { 0.0 }))
    }

    proptest! {
        #[test]
        fn dissipation_is_nonnegative(dim in 1usize..=3, seed in grad_strategy(3), mu in 1e-3..10.0f64, eta in 0.0..10.0f64) {
            let g = Mat3::from_fn(|i, j| if i < dim && j < dim { seed[(i, j)] } else { 0.0 });
            let p = ViscosityParams::new(mu, eta, 0.0).unwrap();
            let d = dissipation_density(&g, &p, dim);
            prop_assert!(d >= -1e-12 * (1.0 + g.norm_squared()));
        }

        #[test]
        fn dissipation_is_midpoint_convex(dim in 1usize..=3, a in grad_strategy(3), b in grad_strategy(3), mu in 1e-3..10.0f64, eta in 0.0..10.0f64) {
            let p = ViscosityParams::new(mu, eta, 0.0).unwrap();
            let cut = |m: Mat3| Mat3::from_fn(|i, j| if i < dim && j < dim { m[(i, j)] } else { 0.0 });
            let (a, b) = (cut(a), cut(b));
            let mid = dissipation_density(&(0.5 * (a + b)), &p, dim);
            let avg = 0.5 * (dissipation_density(&a, &p, dim) + dissipation_density(&b, &p, dim));
            prop_assert!(mid <= avg + 1e-9 * (1.0 + avg));
        }

        #[test]
        fn stress_is_symmetric(g in grad_strategy(3), mu in 1e-3..10.0f64, eta in 0.0..10.0f64) {
            let s = stress(&g, &ViscosityParams::new(mu, eta, 0.0).unwrap(), 3);
            prop_assert!((s - s.transpose()).norm() <= 1e-12 * (1.0 + s.norm()));
        }

        #[test]
        fn three_dimensional_dissipation_matches_bound(g in grad_strategy(3), mu in 1e-3..10.0f64, eta in 0.0..10.0f64) {
            let p = ViscosityParams::new(mu, eta, 0.0).unwrap();
            let (a, b) = (dissipation_density(&g, &p, 3), dissipation_bound(&g, &p, 3));
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }

        #[test]
        fn dissipation_dominates_bound_in_low_dimensions(dim in 1usize..=2, g in grad_strategy(2), mu in 1e-3..10.0f64, eta in 0.0..10.0f64) {
            let g = Mat3::from_fn(|i, j| if i < dim && j < dim { g[(i, j)] } else { 0.0 });
            let p = ViscosityParams::new(mu, eta, 0.0).unwrap();
            let (a, b) = (dissipation_density(&g, &p, dim), dissipation_bound(&g, &p, dim));
            prop_assert!(a >= b - 1e-9 * (1.0 + b.abs()));
        }
    }
}
