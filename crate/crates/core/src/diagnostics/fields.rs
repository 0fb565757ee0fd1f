use crate::expr::{Expr, ScalarField, Var};
use crate::mechanics::{stress, ViscosityParams};
use crate::motion::MovingMesh;
use crate::reconstruct::GradientOperator;
use crate::solver::{Snapshot, Trajectory};
use crate::{Error, Mat3, Result, Vec3};

/// Smooth test function, scalar (one component) or vector.
#[derive(Debug, Clone)]
pub struct TestFunction {
    pub components: Vec<Expr>,
    /// Whether `phi . n = 0` on the moving boundary is asserted.
    pub tangency: bool,
}

impl TestFunction {
    pub fn scalar(e: Expr) -> Self {
        Self { components: vec![e], tangency: false }
    }

    pub fn vector(components: Vec<Expr>, tangency: bool) -> Self {
        Self { components, tangency }
    }

    pub fn parse_scalar(src: &str) -> Result<Self> {
        Ok(Self::scalar(Expr::parse(src)?))
    }

    pub(crate) fn fields(&self, dim: usize) -> Vec<ScalarField> {
        self.components.iter().map(|e| ScalarField::new(e.clone(), dim)).collect()
    }
}

/// Evaluates a vector of scalar fields as a vector, its time derivative and its gradient.
pub(crate) fn eval_vector(fields: &[ScalarField], t: f64, x: &Vec3) -> (Vec3, Vec3, Mat3) {
    let mut v = Vec3::zeros();
    let mut dt = Vec3::zeros();
    let mut g = Mat3::zeros();
    for (i, f) in fields.iter().enumerate() {
        v[i] = f.eval(t, x);
        dt[i] = f.eval_dt(t, x);
        g.set_row(i, &f.eval_grad(t, x).transpose());
    }
    (v, dt, g)
}

/// Renormalizing function `b` with `b(0) = 0` and `b'` vanishing beyond `2R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Renormalization {
    Zero,
    /// `b(rho) = rho` on `[0, R]`, `b'` decaying linearly to zero on `[R, 2R]`.
    Linear { cutoff: f64 },
    /// `b(rho) = rho^2` on `[0, R]`, `b'` decaying linearly to zero on `[R, 2R]`.
    Square { cutoff: f64 },
}

impl Renormalization {
    /// `(b(rho), b'(rho))`.
    pub fn eval(&self, rho: f64) -> (f64, f64) {
        match *self {
            Renormalization::Zero => (0.0, 0.0),
            Renormalization::Linear { cutoff: r } => {
                if rho <= r {
                    (rho, 1.0)
                } else if rho <= 2.0 * r {
                    let s = rho - r;
                    (r + s - 0.5 * s * s / r, 1.0 - s / r)
                } else {
                    (1.5 * r, 0.0)
                }
            }
            Renormalization::Square { cutoff: r } => {
                if rho <= r {
                    (rho * rho, 2.0 * rho)
                } else if rho <= 2.0 * r {
                    let s = rho - r;
                    (r * r + 2.0 * r * s - s * s, 2.0 * (r - s))
                } else {
                    (2.0 * r * r, 0.0)
                }
            }
        }
    }
}

/// Comparison fields sampled at the cell centroids of a snapshot.
#[derive(Debug, Clone, Default)]
pub struct PairSample {
    pub r: Vec<f64>,
    pub u: Vec<Vec3>,
    pub grad_r: Vec<Vec3>,
    pub grad_u: Vec<Mat3>,
    pub dt_r: Vec<f64>,
    pub dt_u: Vec<Vec3>,
    /// `div S(grad U)`.
    pub div_stress: Vec<Vec3>,
    /// `U` on boundary faces, in the order of `MovingMesh::boundary_faces`.
    pub boundary_u: Vec<Vec3>,
}

/// A comparison pair `(r, U)`, analytic or reconstructed from a reference run.
pub trait PairField {
    fn label(&self) -> &'static str;

    fn sample(&self, snap: &Snapshot, params: &ViscosityParams) -> Result<PairSample>;

    /// Checks `U . n = V . n` on the boundary of the snapshot.
    fn check_compatibility(&self, _mesh: &MovingMesh) -> Result<()> {
        Ok(())
    }
}

/// Analytic pair `(r, U)` with exact derivatives.
#[derive(Debug, Clone)]
pub struct TestPair {
    pub r: ScalarField,
    pub u: Vec<ScalarField>,
    /// `hessian[i][j][k] = d_j d_k U_i`.
    hessian: Vec<Vec<Vec<Expr>>>,
}

pub const COMPATIBILITY_TOL: f64 = 1e-8;

impl TestPair {
    pub fn new(r: Expr, u: Vec<Expr>) -> Self {
        let dim = u.len();
        let hessian = u
            .iter()
            .map(|ui| (0..dim).map(|j| (0..dim).map(|k| ui.diff(Var::space(j)).diff(Var::space(k))).collect()).collect())
            .collect();
        Self { r: ScalarField::new(r, dim), u: u.into_iter().map(|e| ScalarField::new(e, dim)).collect(), hessian }
    }

    pub fn parse(r: &str, u: &[&str]) -> Result<Self> {
        Ok(Self::new(Expr::parse(r)?, u.iter().map(|s| Expr::parse(s)).collect::<Result<_>>()?))
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn velocity(&self, t: f64, x: &Vec3) -> (Vec3, Vec3, Mat3) {
        eval_vector(&self.u, t, x)
    }

    pub fn div_stress(&self, t: f64, x: &Vec3, params: &ViscosityParams) -> Vec3 {
        let dim = self.dim();
        let h = |i: usize, j: usize, k: usize| self.hessian[i][j][k].eval(t, x);
        let mut out = Vec3::zeros();
        for i in 0..dim {
            let grad_div: f64 = (0..dim).map(|j| h(j, j, i)).sum();
            let lap: f64 = (0..dim).map(|j| h(i, j, j)).sum();
            out[i] = params.mu * (lap + grad_div) + (params.eta - 2.0 / 3.0 * params.mu) * grad_div;
        }
        out
    }

    /// Largest `|U . n - V . n|` over boundary face midpoints.
    pub fn compatibility_defect(&self, mesh: &MovingMesh) -> f64 {
        mesh.boundary_faces()
            .map(|f| {
                let (u, _, _) = self.velocity(mesh.time, &mesh.face_midpoints[f]);
                ((u - mesh.face_velocities[f]).dot(&mesh.face_normals[f])).abs()
            })
            .fold(0.0, f64::max)
    }
}

impl PairField for TestPair {
    fn label(&self) -> &'static str {
        "analytic"
    }

    fn sample(&self, snap: &Snapshot, params: &ViscosityParams) -> Result<PairSample> {
        let t = snap.time();
        let mesh = &snap.mesh;
        let mut s = PairSample::default();
        for x in &mesh.cell_centroids {
            let r = self.r.eval(t, x);
            if !(r > 0.0) {
                return Err(Error::Precondition(format!("comparison density r = {r} is not positive at t = {t}, x = {x:?}")));
            }
            let (u, dt_u, g) = self.velocity(t, x);
            s.r.push(r);
            s.grad_r.push(self.r.eval_grad(t, x));
            s.dt_r.push(self.r.eval_dt(t, x));
            s.u.push(u);
            s.dt_u.push(dt_u);
            s.grad_u.push(g);
            s.div_stress.push(self.div_stress(t, x, params));
        }
        s.boundary_u = mesh.boundary_faces().map(|f| self.velocity(t, &mesh.face_midpoints[f]).0).collect();
        Ok(s)
    }

    fn check_compatibility(&self, mesh: &MovingMesh) -> Result<()> {
        let d = self.compatibility_defect(mesh);
        if d > COMPATIBILITY_TOL {
            return Err(Error::Precondition(format!("U . n differs from V . n by {d:e} on the boundary at t = {}", mesh.time)));
        }
        Ok(())
    }
}

/// Comparison pair taken from a finer run on a nested lattice: densities are
/// volume averages, velocities mass averages, gradients and `div S` are
/// computed on the fine mesh and averaged, time derivatives are central
/// differences of restricted values corrected for the mesh motion.
#[derive(Debug, Clone)]
pub struct DiscretePair {
    pub fine: Trajectory,
}

struct Restricted {
    r: Vec<f64>,
    u: Vec<Vec3>,
    centroid: Vec<Vec3>,
}

impl DiscretePair {
    pub fn new(fine: Trajectory) -> Self {
        Self { fine }
    }

    fn parent_map(&self, coarse: &MovingMesh) -> Result<Vec<usize>> {
        let fine = &self.fine.snapshots[0].mesh.topology;
        let coarse = &coarse.topology;
        let k = fine.shape[0] / coarse.shape[0];
        let nested = fine.dim == coarse.dim
            && k >= 1
            && fine.shape[0] == k * coarse.shape[0]
            && (fine.dim == 1 || fine.shape[1] == k * coarse.shape[1]);
        if !nested {
            return Err(Error::Precondition(format!(
                "reference lattice {:?} is not a refinement of {:?}",
                fine.shape, coarse.shape
            )));
        }
        Ok((0..fine.n_cells())
            .map(|c| {
                let (i, j) = fine.cell_coords(c);
                coarse.cell_index(i / k, j / k)
            })
            .collect())
    }

    fn restrict(&self, snap: &Snapshot, parent: &[usize], n: usize) -> Restricted {
        let mut vol = vec![0.0; n];
        let mut mass = vec![0.0; n];
        let mut mom = vec![Vec3::zeros(); n];
        let mut centroid = vec![Vec3::zeros(); n];
        for (c, &p) in parent.iter().enumerate() {
            let v = snap.mesh.cell_volumes[c];
            vol[p] += v;
            mass[p] += v * snap.state.rho[c];
            mom[p] += v * snap.state.momentum[c];
            centroid[p] += v * snap.mesh.cell_centroids[c];
        }
        let floor = crate::solver::VACUUM_RATIO * mass.iter().zip(&vol).map(|(m, v)| m / v).fold(0.0, f64::max);
        Restricted {
            r: mass.iter().zip(&vol).map(|(m, v)| m / v).collect(),
            u: mom.iter().zip(&mass).zip(&vol).map(|((m, ms), v)| if ms / v > floor { m / *ms } else { Vec3::zeros() }).collect(),
            centroid: centroid.iter().zip(&vol).map(|(c, v)| c / *v).collect(),
        }
    }
}

fn average<T>(values: &[T], parent: &[usize], vols: &[f64], n: usize) -> Vec<T>
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + std::ops::Div<f64, Output = T> + num_zero::Zero,
{
    let mut acc = vec![T::zero(); n];
    let mut vol = vec![0.0; n];
    for (c, &p) in parent.iter().enumerate() {
        acc[p] = acc[p] + values[c] * vols[c];
        vol[p] += vols[c];
    }
    acc.into_iter().zip(vol).map(|(a, v)| a / v).collect()
}

mod num_zero {
    pub trait Zero {
        fn zero() -> Self;
    }
    impl Zero for crate::Vec3 {
        fn zero() -> Self {
            crate::Vec3::zeros()
        }
    }
    impl Zero for crate::Mat3 {
        fn zero() -> Self {
            crate::Mat3::zeros()
        }
    }
}

impl PairField for DiscretePair {
    fn label(&self) -> &'static str {
        "reference-run"
    }

    fn sample(&self, snap: &Snapshot, params: &ViscosityParams) -> Result<PairSample> {
        let k = self.fine.index_of(snap.time())?;
        let parent = self.parent_map(&snap.mesh)?;
        let n = snap.mesh.n_cells();
        let fs = &self.fine.snapshots[k];
        let here = self.restrict(fs, &parent, n);

        let fine_mesh = &fs.mesh;
        let dim = fine_mesh.dim();
        let op = GradientOperator::new(fine_mesh);
        let u_f = fs.state.velocities();
        let g_f = op.vector(&u_f);
        let grad_rho_f = op.scalar(&fs.state.rho);
        let s_f: Vec<Mat3> = g_f.iter().map(|g| stress(g, params, dim)).collect();
        let mut div_s_f = vec![Vec3::zeros(); s_f.len()];
        for i in 0..dim {
            for j in 0..dim {
                let comp: Vec<f64> = s_f.iter().map(|s| s[(i, j)]).collect();
                for (d, g) in div_s_f.iter_mut().zip(op.scalar(&comp)) {
                    d[i] += g[j];
                }
            }
        }
        let vols = &fine_mesh.cell_volumes;
        let grad_r = average(&grad_rho_f, &parent, vols, n);
        let grad_u = average(&g_f, &parent, vols, n);
        let div_stress = average(&div_s_f, &parent, vols, n);

        let (lo, hi) = (k.saturating_sub(1), (k + 1).min(self.fine.snapshots.len() - 1));
        let (mut dt_r, mut dt_u) = (vec![0.0; n], vec![Vec3::zeros(); n]);
        if hi > lo {
            let (a, b) = (self.restrict(&self.fine.snapshots[lo], &parent, n), self.restrict(&self.fine.snapshots[hi], &parent, n));
            let span = self.fine.snapshots[hi].time() - self.fine.snapshots[lo].time();
            for c in 0..n {
                let w = (b.centroid[c] - a.centroid[c]) / span;
                dt_r[c] = (b.r[c] - a.r[c]) / span - w.dot(&grad_r[c]);
                dt_u[c] = (b.u[c] - a.u[c]) / span - grad_u[c] * w;
            }
        }
        let boundary_u = snap.mesh.boundary_faces().map(|f| here.u[snap.mesh.topology.faces[f].left]).collect();
        Ok(PairSample { r: here.r, u: here.u, grad_r, grad_u, dt_r, dt_u, div_stress, boundary_u })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn renormalizations_are_c1_and_vanish_at_zero() {
        for b in [Renormalization::Linear { cutoff: 3.0 }, Renormalization::Square { cutoff: 3.0 }] {
            assert_eq!(b.eval(0.0).0, 0.0);
            for rho in [0.5, 2.9, 3.0, 3.1, 4.5, 5.99, 6.0, 7.0] {
                let h = 1e-6;
                let fd = (b.eval(rho + h).0 - b.eval(rho - h).0) / (2.0 * h);
                assert_relative_eq!(fd, b.eval(rho).1, epsilon = 1e-6);
            }
            assert_eq!(b.eval(10.0).1, 0.0);
        }
        assert_eq!(Renormalization::Zero.eval(2.0), (0.0, 0.0));
    }

    #[test]
    fn analytic_div_stress_matches_hand_computation() {
        // U = (x^2 y, 0): grad div = (2y, 2x), laplacian = (2y, 0)
        let pair = TestPair::parse("1", &["x^2*y", "0"]).unwrap();
        let p = ViscosityParams::new(1.0, 0.5, 0.0).unwrap();
        let x = Vec3::new(0.3, 0.7, 0.0);
        let d = pair.div_stress(0.0, &x, &p);
        let expect = Vec3::new(2.0 * 0.7 + 2.0 * 0.7 + (0.5 - 2.0 / 3.0) * 2.0 * 0.7, 2.0 * 0.3 + (0.5 - 2.0 / 3.0) * 2.0 * 0.3, 0.0);
        assert_relative_eq!(d, expect, epsilon = 1e-14);
    }
}
