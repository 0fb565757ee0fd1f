//! Prescribed domain motion.
//!
//! The domain at time `t` is the image of the reference domain under the flow
//! map of a velocity field `V`, `dX/dt = V(t, X)`, `X(0, x) = x`. Meshes are
//! images of a fixed reference lattice under that map (see [`mesh`]).

pub mod mesh;

pub use mesh::{
    integrate_over_domain, mesh_at, swept_volumes, transport_theorem_defect, Face, Jiggle, MeshReference, MovingMesh, Neighbor,
    ReferenceShape, Topology,
};

use crate::expr::{Expr, Var};
use crate::{Error, Mat3, Result, Vec3};

#[derive(Debug, Clone)]
pub enum MotionKind {
    Static,
    /// Uniform translation with constant velocity.
    Translation { velocity: Vec3 },
    /// `V = alpha(t) x` about the origin.
    Dilation { alpha: Expr },
    /// Rigid rotation about the origin in the `x-y` plane, `V = omega (-y, x)`.
    Rotation { omega: f64 },
    /// One-dimensional piston: the interval `(0, L(t))` stretched uniformly,
    /// `V = L'(t) x / L(t)`.
    Piston1d { length: Expr },
}

/// Velocity field `V(t, x)` moving the domain.
#[derive(Debug, Clone)]
pub struct MotionField {
    pub kind: MotionKind,
    /// Half-width of the box that must contain every `Omega_t`; `V` is taken
    /// to be cut off outside it, but the cutoff is never evaluated.
    pub support_radius: f64,
    d_alpha: Option<Expr>,
    d_length: Option<(Expr, Expr)>,
}

impl MotionField {
    pub fn new(kind: MotionKind) -> Self {
        let d_alpha = match &kind {
            MotionKind::Dilation { alpha } => Some(alpha.diff(Var::T)),
            _ => None,
        };
        let d_length = match &kind {
            MotionKind::Piston1d { length } => {
                let l1 = length.diff(Var::T);
                let l2 = l1.diff(Var::T);
                Some((l1, l2))
            }
            _ => None,
        };
        Self { kind, support_radius: 1e3, d_alpha, d_length }
    }

    pub fn with_support_radius(mut self, radius: f64) -> Self {
        self.support_radius = radius;
        self
    }

    pub fn fixed() -> Self {
        Self::new(MotionKind::Static)
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            MotionKind::Static => "static",
            MotionKind::Translation { .. } => "translation",
            MotionKind::Dilation { .. } => "dilation",
            MotionKind::Rotation { .. } => "rotation",
            MotionKind::Piston1d { .. } => "piston1d",
        }
    }

    pub fn velocity(&self, t: f64, x: &Vec3) -> Vec3 {
        match &self.kind {
            MotionKind::Static => Vec3::zeros(),
            MotionKind::Translation { velocity } => *velocity,
            MotionKind::Dilation { alpha } => alpha.eval_t(t) * x,
            MotionKind::Rotation { omega } => Vec3::new(-omega * x[1], omega * x[0], 0.0),
            MotionKind::Piston1d { length } => {
                let (dl, _) = self.d_length.as_ref().expect("piston derivatives");
                Vec3::new(dl.eval_t(t) / length.eval_t(t) * x[0], 0.0, 0.0)
            }
        }
    }

    /// `grad V` with `g[(i, j)] = dV_i/dx_j`.
    pub fn gradient(&self, t: f64, _x: &Vec3, dim: usize) -> Mat3 {
        match &self.kind {
            MotionKind::Static | MotionKind::Translation { .. } => Mat3::zeros(),
            MotionKind::Dilation { alpha } => crate::identity(dim) * alpha.eval_t(t),
            MotionKind::Rotation { omega } => {
                let mut g = Mat3::zeros();
                g[(0, 1)] = -omega;
                g[(1, 0)] = *omega;
                g
            }
            MotionKind::Piston1d { length } => {
                let (dl, _) = self.d_length.as_ref().expect("piston derivatives");
                let mut g = Mat3::zeros();
                g[(0, 0)] = dl.eval_t(t) / length.eval_t(t);
                g
            }
        }
    }

    pub fn divergence(&self, t: f64, x: &Vec3, dim: usize) -> f64 {
        self.gradient(t, x, dim).trace()
    }

    /// `dV/dt` at fixed `x`.
    pub fn time_derivative(&self, t: f64, x: &Vec3) -> Vec3 {
        match &self.kind {
            MotionKind::Static | MotionKind::Translation { .. } | MotionKind::Rotation { .. } => Vec3::zeros(),
            MotionKind::Dilation { .. } => self.d_alpha.as_ref().expect("alpha derivative").eval_t(t) * x,
            MotionKind::Piston1d { length } => {
                let (dl, ddl) = self.d_length.as_ref().expect("piston derivatives");
                let l = length.eval_t(t);
                let l1 = dl.eval_t(t);
                Vec3::new((ddl.eval_t(t) * l - l1 * l1) / (l * l) * x[0], 0.0, 0.0)
            }
        }
    }

    /// Exact flow from `t0` to `t1`, when the kind admits one.
    pub fn closed_form(&self, t0: f64, t1: f64, x: &Vec3) -> Option<Result<Vec3>> {
        Some(match &self.kind {
            MotionKind::Static => Ok(*x),
            MotionKind::Translation { velocity } => Ok(x + velocity * (t1 - t0)),
            MotionKind::Dilation { alpha } => {
                if alpha.depends_on(Var::T) {
                    return None;
                }
                Ok(x * (alpha.eval_t(0.0) * (t1 - t0)).exp())
            }
            MotionKind::Rotation { omega } => {
                let (s, c) = (omega * (t1 - t0)).sin_cos();
                Ok(Vec3::new(c * x[0] - s * x[1], s * x[0] + c * x[1], x[2]))
            }
            MotionKind::Piston1d { length } => {
                let (l0, l1) = (length.eval_t(t0), length.eval_t(t1));
                if !(l0 > 0.0 && l1 > 0.0) {
                    return Some(Err(Error::Integration(format!("piston length nonpositive on [{t0}, {t1}]"))));
                }
                Ok(Vec3::new(x[0] * l1 / l0, x[1], x[2]))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// Exact map when available, otherwise RK4 with [`DEFAULT_RK4_SUBSTEPS`].
    ClosedForm,
    /// Classical RK4 with a fixed number of substeps per call.
    Rk4 { substeps: usize },
}

pub const DEFAULT_RK4_SUBSTEPS: usize = 200;

#[derive(Debug, Clone)]
pub struct FlowMap {
    pub motion: MotionField,
    pub integrator: Integrator,
}

impl FlowMap {
    pub fn new(motion: MotionField, integrator: Integrator) -> Self {
        Self { motion, integrator }
    }

    pub fn closed(motion: MotionField) -> Self {
        Self::new(motion, Integrator::ClosedForm)
    }

    /// Position at `t1` of the trajectory through `x` at `t0`.
    pub fn evolve_point(&self, t0: f64, t1: f64, x: &Vec3) -> Result<Vec3> {
        if t1 < t0 {
            return Err(Error::Precondition(format!("evolve_point needs t0 <= t1, got {t0} > {t1}")));
        }
        let out = match self.integrator {
            Integrator::ClosedForm => match self.motion.closed_form(t0, t1, x) {
                Some(r) => r?,
                None => self.rk4(t0, t1, x, DEFAULT_RK4_SUBSTEPS)?,
            },
            Integrator::Rk4 { substeps } => self.rk4(t0, t1, x, substeps.max(1))?,
        };
        self.check_region(&out, t1)?;
        Ok(out)
    }

    fn rk4(&self, t0: f64, t1: f64, x: &Vec3, substeps: usize) -> Result<Vec3> {
        let h = (t1 - t0) / substeps as f64;
        let v = |t: f64, p: &Vec3| self.motion.velocity(t, p);
        let mut p = *x;
        for k in 0..substeps {
            let t = t0 + k as f64 * h;
            let k1 = v(t, &p);
            let k2 = v(t + 0.5 * h, &(p + 0.5 * h * k1));
            let k3 = v(t + 0.5 * h, &(p + 0.5 * h * k2));
            let k4 = v(t + h, &(p + h * k3));
            p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            self.check_region(&p, t + h)?;
        }
        Ok(p)
    }

    fn check_region(&self, p: &Vec3, t: f64) -> Result<()> {
        if !p.iter().all(|c| c.is_finite()) || p.amax() > self.motion.support_radius {
            return Err(Error::Integration(format!(
                "point {:?} left the region |x| <= {} at t = {t}",
                p.as_slice(),
                self.motion.support_radius
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dilation(alpha: &str) -> MotionField {
        MotionField::new(MotionKind::Dilation { alpha: Expr::parse(alpha).unwrap() })
    }

    fn all_kinds() -> Vec<MotionField> {
        vec![
            MotionField::fixed(),
            MotionField::new(MotionKind::Translation { velocity: Vec3::new(1.0, -0.5, 0.0) }),
            dilation("0.5"),
            dilation("0.3*cos(t)"),
            MotionField::new(MotionKind::Rotation { omega: 1.3 }),
            MotionField::new(MotionKind::Piston1d { length: Expr::parse("1 + 0.1*t").unwrap() }),
        ]
    }

    #[test]
    fn translation_example() {
        let m = FlowMap::closed(MotionField::new(MotionKind::Translation { velocity: Vec3::new(1.0, 0.0, 0.0) }));
        let p = m.evolve_point(0.0, 2.0, &Vec3::zeros()).unwrap();
        assert_eq!(p, Vec3::new(2.0, 0.0, 0.0));
    }

    #[test]
    fn dilation_rk4_matches_exponential() {
        let m = FlowMap::new(dilation("0.5"), Integrator::Rk4 { substeps: 100 });
        let p = m.evolve_point(0.0, 1.0, &Vec3::new(1.0, 0.0, 0.0)).unwrap();
        // e^0.5 to 30 digits
        assert!((p[0] - 1.648_721_270_700_128_1).abs() < 1e-8);
        let exact = FlowMap::closed(dilation("0.5")).evolve_point(0.0, 1.0, &Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert_relative_eq!(exact[0], 1.648_721_270_700_128_1, max_relative = 1e-15);
    }

    #[test]
    fn rotation_preserves_radius() {
        let m = FlowMap::closed(MotionField::new(MotionKind::Rotation { omega: 2.0 }));
        let x = Vec3::new(0.3, -0.8, 0.0);
        for t in [0.1, 1.0, 7.3] {
            let p = m.evolve_point(0.0, t, &x).unwrap();
            assert!((p.norm() - x.norm()).abs() < 1e-10);
        }
        let rk = FlowMap::new(m.motion.clone(), Integrator::Rk4 { substeps: 400 });
        let p = rk.evolve_point(0.0, 3.0, &x).unwrap();
        assert!((p.norm() - x.norm()).abs() < 1e-10);
    }

    #[test]
    fn identity_and_semigroup() {
        let x = Vec3::new(0.4, 0.7, 0.0);
        for motion in all_kinds() {
            for integrator in [Integrator::ClosedForm, Integrator::Rk4 { substeps: 100 }] {
                let m = FlowMap::new(motion.clone(), integrator);
                assert!((m.evolve_point(0.0, 0.0, &x).unwrap() - x).norm() < 1e-15);
                let (t, s) = (0.6, 0.5);
                let direct = m.evolve_point(0.0, t + s, &x).unwrap();
                let composed = m.evolve_point(t, t + s, &m.evolve_point(0.0, t, &x).unwrap()).unwrap();
                assert!((direct - composed).norm() < 1e-8, "{}: {direct:?} vs {composed:?}", motion.name());
            }
        }
    }

    #[test]
    fn closed_form_solves_the_ode() {
        // d/dt X(t, x) = V(t, X) by centered differences of the closed form
        let x = Vec3::new(0.4, 0.7, 0.0);
        for motion in all_kinds() {
            let m = FlowMap::closed(motion.clone());
            let (t, h) = (0.8, 1e-5);
            let xp = m.evolve_point(0.0, t + h, &x).unwrap();
            let xm = m.evolve_point(0.0, t - h, &x).unwrap();
            let v = motion.velocity(t, &m.evolve_point(0.0, t, &x).unwrap());
            assert!(((xp - xm) / (2.0 * h) - v).norm() < 1e-8, "{}", motion.name());
        }
    }

    #[test]
    fn velocity_derivatives_match_finite_differences() {
        let x = Vec3::new(0.4, 0.7, 0.0);
        for motion in all_kinds() {
            let (t, h) = (0.8, 1e-5);
            let dt = (motion.velocity(t + h, &x) - motion.velocity(t - h, &x)) / (2.0 * h);
            assert!((dt - motion.time_derivative(t, &x)).norm() < 1e-8);
            let g = motion.gradient(t, &x, 2);
            for j in 0..2 {
                let mut e = Vec3::zeros();
                e[j] = h;
                let col = (motion.velocity(t, &(x + e)) - motion.velocity(t, &(x - e))) / (2.0 * h);
                for i in 0..2 {
                    // piston velocity is 1D; its y-derivative is irrelevant
                    assert!((col[i] - g[(i, j)]).abs() < 1e-8, "{} {i}{j}", motion.name());
                }
            }
        }
    }

    #[test]
    fn integration_errors() {
        let m = FlowMap::closed(MotionField::new(MotionKind::Piston1d { length: Expr::parse("1 - t").unwrap() }));
        assert!(matches!(m.evolve_point(0.0, 2.0, &Vec3::new(0.5, 0.0, 0.0)), Err(Error::Integration(_))));
        let m = FlowMap::new(dilation("5").with_support_radius(10.0), Integrator::Rk4 { substeps: 10 });
        assert!(matches!(m.evolve_point(0.0, 2.0, &Vec3::new(1.0, 0.0, 0.0)), Err(Error::Integration(_))));
        assert!(m.evolve_point(1.0, 0.0, &Vec3::zeros()).is_err());
    }
}
