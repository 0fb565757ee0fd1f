//! Cell-centred gradients on mapped structured meshes.
//!
//! Differences are taken along the lattice axes, central in the interior and
//! one-sided next to the boundary, then mapped to physical space with the
//! Jacobian built from the same centroid differences. Linear fields are
//! reproduced exactly on affine meshes.

use crate::motion::MovingMesh;
use crate::{Mat3, Vec3};

#[derive(Debug, Clone)]
pub struct GradientOperator {
    /// Per cell and axis, the cells whose difference approximates the axis derivative.
    stencils: Vec<[(usize, usize); 2]>,
    /// Per cell, the inverse transposed Jacobian padded to 3x3.
    inv_jt: Vec<Mat3>,
    dim: usize,
}

impl GradientOperator {
    pub fn new(mesh: &MovingMesh) -> Self {
        let topo = &mesh.topology;
        let dim = topo.dim;
        let mut stencils = Vec::with_capacity(mesh.n_cells());
        let mut inv_jt = Vec::with_capacity(mesh.n_cells());
        for c in 0..mesh.n_cells() {
            let mut st = [(c, c); 2];
            let mut jac = Mat3::identity();
            for (axis, slot) in st.iter_mut().enumerate().take(dim) {
                let side = |dir: isize| -> (usize, Vec3) {
                    match topo.lattice_neighbor(c, axis, dir) {
                        Some((n, wrapped)) => {
                            let shift = if wrapped { mesh.periodic_shift(c, n) } else { Vec3::zeros() };
                            (n, mesh.cell_centroids[n] + shift)
                        }
                        None => (c, mesh.cell_centroids[c]),
                    }
                };
                let ((p, xp), (m, xm)) = (side(1), side(-1));
                *slot = (p, m);
                jac.set_column(axis, &(xp - xm));
            }
            let inv = jac.try_inverse().unwrap_or_else(Mat3::zeros).transpose();
            stencils.push(st);
            inv_jt.push(restrict(inv, dim));
        }
        Self { stencils, inv_jt, dim }
    }

    fn differences<T: Copy + std::ops::Sub<Output = T>>(&self, c: usize, f: &[T]) -> [T; 2] {
        let st = &self.stencils[c];
        [f[st[0].0] - f[st[0].1], f[st[1].0] - f[st[1].1]]
    }

    pub fn scalar(&self, f: &[f64]) -> Vec<Vec3> {
        (0..self.stencils.len())
            .map(|c| {
                let d = self.differences(c, f);
                let df = Vec3::new(d[0], if self.dim > 1 { d[1] } else { 0.0 }, 0.0);
                self.inv_jt[c] * df
            })
            .collect()
    }

    /// `G[(i, j)] = d u_i / d x_j` per cell.
    pub fn vector(&self, u: &[Vec3]) -> Vec<Mat3> {
        (0..self.stencils.len())
            .map(|c| {
                let d = self.differences(c, u);
                let mut du = Mat3::zeros();
                du.set_column(0, &d[0]);
                if self.dim > 1 {
                    du.set_column(1, &d[1]);
                }
                restrict(du * self.inv_jt[c].transpose(), self.dim)
            })
            .collect()
    }
}

fn restrict(m: Mat3, dim: usize) -> Mat3 {
    Mat3::from_fn(|i, j| if i < dim && j < dim { m[(i, j)] } else { 0.0 })
}

pub fn scalar_gradients(mesh: &MovingMesh, f: &[f64]) -> Vec<Vec3> {
    GradientOperator::new(mesh).scalar(f)
}

pub fn vector_gradients(mesh: &MovingMesh, u: &[Vec3]) -> Vec<Mat3> {
    GradientOperator::new(mesh).vector(u)
}
