//! Arbitrary-Lagrangian-Eulerian finite-volume simulation of the barotropic
//! compressible Navier-Stokes system on domains moved by a prescribed velocity
//! field, with slip boundary conditions, together with executable diagnostics
//! for the energy inequality, the relative energy inequality and weak-strong
//! uniqueness experiments.
//!
//! Modules, bottom-up:
//! - [`thermo`]: power-law pressure, pressure potential, Bregman density.
//! - [`expr`]: analytic expressions with symbolic differentiation.
//! - [`motion`]: motion fields, flow maps and moving mapped meshes.
//! - [`mechanics`]: Newtonian stress, dissipation, boundary residuals.
//! - [`reconstruct`]: cell gradients on mapped structured grids.
//! - [`solver`]: the ALE finite-volume scheme.
//! - [`diagnostics`]: weak-form residuals, energy and relative energy reports.
//! - [`harness`]: configuration, scenario catalogue, studies and output.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod diagnostics;
pub mod error;
pub mod expr;
pub mod harness;
pub mod mechanics;

pub mod motion;
pub mod reconstruct;

pub mod solver;
pub mod thermo;

pub use error::{Error, Result};

/// Spatial vectors are stored with three components; entries beyond the
/// active dimension are kept at zero.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Dense 3x3 tensor; `m[(i, j)]` is the derivative of component `i` along `j`
/// when used as a velocity gradient.
pub type Mat3 = nalgebra::Matrix3<f64>;

/// Identity restricted to the first `dim` coordinates.
pub fn identity(dim: usize) -> Mat3 {
    let mut m = Mat3::zeros();
    for k in 0..dim.min(3) {
        m[(k, k)] = 1.0;
    }
    m
}
