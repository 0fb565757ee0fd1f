//! Executable forms of the weak formulation, the energy inequality, the
//! relative energy inequality and the weak-strong uniqueness argument,
//! evaluated on discrete trajectories.
//!
//! Space integrals use the midpoint rule on the snapshot mesh, time integrals
//! the trapezoid rule over emitted snapshots, so the emission cadence bounds
//! the accuracy of every time-integrated quantity.

mod energy;
mod fields;
mod gronwall;
mod relative;
mod weak;

pub use energy::{energy_report, energy_scale, EnergyReport};
pub use fields::{DiscretePair, PairField, PairSample, Renormalization, TestFunction, TestPair};
pub use gronwall::{constant_variation, gronwall_exponent, gronwall_report, korn_probe, GronwallReport, KornProbe};
pub use relative::{
    ibp_identity_defect, rei_defect, relative_energy, relative_energy_expansion, remainder, RelativeEnergyReport,
    RemainderTerms,
};
pub use weak::{renormalized_residual, weak_continuity_residual, weak_momentum_residual};

use crate::reconstruct::GradientOperator;
use crate::solver::Snapshot;
use crate::{Mat3, Vec3};

/// Cumulative trapezoid integrals `int_{t_0}^{t_k} f` for every `k`.
pub fn cumulative_trapezoid(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for k in 0..values.len() {
        if k > 0 {
            acc += 0.5 * (times[k] - times[k - 1]) * (values[k] + values[k - 1]);
        }
        out.push(acc);
    }
    out
}

/// Velocity and its reconstructed gradient on a snapshot.
pub(crate) fn velocity_and_gradient(snap: &Snapshot) -> (Vec<Vec3>, Vec<Mat3>) {
    let u = snap.state.velocities();
    let g = GradientOperator::new(&snap.mesh).vector(&u);
    (u, g)
}

/// Midpoint-rule integral of a per-cell closure.
pub(crate) fn integrate(snap: &Snapshot, mut f: impl FnMut(usize) -> f64) -> f64 {
    snap.mesh.cell_volumes.iter().enumerate().map(|(c, v)| f(c) * v).sum()
}
