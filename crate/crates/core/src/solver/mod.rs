//! ALE finite-volume scheme for the barotropic compressible Navier-Stokes
//! system on a moving mapped mesh.
//!
//! Cell averages of `(rho, rho u)` are advanced with a Rusanov flux written in
//! the frame of the moving faces, a compact central viscous flux and the
//! two-stage SSP Runge-Kutta method. Cell volumes follow the swept volumes of
//! the faces, so uniform states are preserved under any mesh motion. Slip
//! walls are imposed through reflected ghost states.

mod flux;
mod output;
mod step;

pub use flux::{face_gradient, flux_ale, rusanov_reference, viscous_flux, wall_ghost, FaceFlux};
pub use output::{snapshot_header, write_snapshot_csv};
pub use step::{run, stable_dt, step, StepGeometry, StepOutcome};

use std::sync::Arc;

use crate::expr::{Expr, Var};
use crate::mechanics::ViscosityParams;
use crate::motion::{mesh_at, FlowMap, MeshReference, MovingMesh};
use crate::thermo::PressureLaw;
use crate::{Error, Result, Vec3};

/// Densities below `VACUUM_RATIO * max rho` carry no velocity.
pub const VACUUM_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub rho: Vec<f64>,
    pub momentum: Vec<Vec3>,
    pub time: f64,
}

impl FluidState {
    pub fn uniform(n: usize, rho: f64, u: Vec3, time: f64) -> Self {
        Self { rho: vec![rho; n], momentum: vec![rho * u; n], time }
    }

    pub fn n_cells(&self) -> usize {
        self.rho.len()
    }

    pub fn vacuum_threshold(&self) -> f64 {
        VACUUM_RATIO * self.rho.iter().cloned().fold(0.0, f64::max)
    }

    /// Cell velocities, zero on vacuum cells.
    pub fn velocities(&self) -> Vec<Vec3> {
        let floor = self.vacuum_threshold();
        self.rho
            .iter()
            .zip(&self.momentum)
            .map(|(&r, m)| if r > floor { m / r } else { Vec3::zeros() })
            .collect()
    }

    pub fn clear_vacuum(&mut self) {
        let floor = self.vacuum_threshold();
        for (r, m) in self.rho.iter().zip(self.momentum.iter_mut()) {
            if *r <= floor {
                *m = Vec3::zeros();
            }
        }
    }

    pub fn mass(&self, mesh: &MovingMesh) -> f64 {
        crate::motion::integrate_over_domain(mesh, &self.rho)
    }
}

/// Initial density and velocity.
#[derive(Debug, Clone)]
pub enum InitialData {
    /// Point values at cell centroids of `rho_0` and `u_0`.
    Analytic { rho: Expr, velocity: Vec<Expr> },
    Cells { rho: Vec<f64>, momentum: Vec<Vec3> },
}

/// Manufactured density and velocity; the scheme is forced with the
/// residuals of these fields so that they solve the forced system exactly.
#[derive(Debug, Clone)]
pub struct MmsForcing {
    pub rho: Expr,
    pub velocity: Vec<Expr>,
    mass_source: Expr,
    momentum_source: Vec<Expr>,
}

impl MmsForcing {
    pub fn new(rho: Expr, velocity: Vec<Expr>, law: &PressureLaw, params: &ViscosityParams) -> Self {
        let dim = velocity.len();
        let x = |k: usize| Var::space(k);
        let c = Expr::constant;
        let mass_source = (0..dim).fold(rho.diff(Var::T), |acc, j| acc + (rho.clone() * velocity[j].clone()).diff(x(j)));
        let pressure = c(law.coeff_a()) * rho.clone().powc(law.gamma());
        let grad = |i: usize, j: usize| velocity[i].diff(x(j));
        let div = (0..dim).fold(c(0.0), |acc, j| acc + grad(j, j));
        let momentum_source = (0..dim)
            .map(|i| {
                let m_i = rho.clone() * velocity[i].clone();
                let mut s = m_i.diff(Var::T) + pressure.diff(x(i));
                for j in 0..dim {
                    s = s + (m_i.clone() * velocity[j].clone()).diff(x(j));
                    let mut stress = c(params.mu) * (grad(i, j) + grad(j, i));
                    if i == j {
                        stress = stress + c(params.eta - 2.0 / 3.0 * params.mu) * div.clone();
                    }
                    s = s - stress.diff(x(j));
                }
                s
            })
            .collect();
        Self { rho, velocity, mass_source, momentum_source }
    }

    pub fn sources(&self, t: f64, x: &Vec3) -> (f64, Vec3) {
        let mut m = Vec3::zeros();
        for (k, e) in self.momentum_source.iter().enumerate() {
            m[k] = e.eval(t, x);
        }
        (self.mass_source.eval(t, x), m)
    }

    pub fn exact(&self, t: f64, x: &Vec3) -> (f64, Vec3) {
        let mut u = Vec3::zeros();
        for (k, e) in self.velocity.iter().enumerate() {
            u[k] = e.eval(t, x);
        }
        (self.rho.eval(t, x), u)
    }
}

/// Face values fed to the convective flux.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reconstruction {
    /// Cell averages.
    FirstOrder,
    /// Limited linear reconstruction of density and velocity.
    #[default]
    Limited,
}

impl Reconstruction {
    pub fn name(self) -> &'static str {
        match self {
            Reconstruction::FirstOrder => "first-order",
            Reconstruction::Limited => "limited-linear",
        }
    }
}

/// Everything needed to run the scheme.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub reference: MeshReference,
    pub flow: FlowMap,
    pub law: PressureLaw,
    pub viscosity: ViscosityParams,
    pub initial: InitialData,
    pub cfl: f64,
    pub t_end: f64,
    /// Emission period; `None` emits every step.
    pub emit_every: Option<f64>,
    pub mms: Option<MmsForcing>,
    pub reconstruction: Reconstruction,
    pub max_steps: usize,
}

pub const DEFAULT_CFL: f64 = 0.4;
pub const DEFAULT_MAX_STEPS: usize = 2_000_000;

impl Scenario {
    pub fn new(
        name: impl Into<String>,
        reference: MeshReference,
        flow: FlowMap,
        law: PressureLaw,
        viscosity: ViscosityParams,
        initial: InitialData,
        t_end: f64,
    ) -> Self {
        Self {
            name: name.into(),
            reference,
            flow,
            law,
            viscosity,
            initial,
            cfl: DEFAULT_CFL,
            t_end,
            emit_every: None,
            mms: None,
            reconstruction: Reconstruction::default(),
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn dim(&self) -> usize {
        self.reference.dim()
    }

    pub fn mesh_at(&self, t: f64) -> Result<MovingMesh> {
        mesh_at(&self.flow, &self.reference, t)
    }

    /// Cell data at `t = 0`, checked for nonnegative density and finite
    /// kinetic energy.
    pub fn initial_state(&self, mesh: &MovingMesh) -> Result<FluidState> {
        let n = mesh.n_cells();
        let (rho, momentum) = match &self.initial {
            InitialData::Analytic { rho, velocity } => {
                let mut r = Vec::with_capacity(n);
                let mut m = Vec::with_capacity(n);
                for x in &mesh.cell_centroids {
                    let d = rho.eval(0.0, x);
                    let mut u = Vec3::zeros();
                    for (k, e) in velocity.iter().enumerate().take(self.dim()) {
                        u[k] = e.eval(0.0, x);
                    }
                    r.push(d);
                    m.push(d * u);
                }
                (r, m)
            }
            InitialData::Cells { rho, momentum } => {
                if rho.len() != n || momentum.len() != n {
                    return Err(Error::Precondition(format!(
                        "initial data has {} densities and {} momenta for {n} cells",
                        rho.len(),
                        momentum.len()
                    )));
                }
                (rho.clone(), momentum.clone())
            }
        };
        if let Some(c) = rho.iter().position(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(Error::Precondition(format!("initial density {} in cell {c} is not a nonnegative number", rho[c])));
        }
        let mut state = FluidState { rho, momentum, time: 0.0 };
        let floor = state.vacuum_threshold();
        let mut kinetic = 0.0;
        for ((r, m), v) in state.rho.iter().zip(&state.momentum).zip(&mesh.cell_volumes) {
            if *r > floor {
                kinetic += m.norm_squared() / r * v;
            } else if m.norm() > 0.0 {
                return Err(Error::Precondition("nonzero initial momentum on a vacuum cell".into()));
            }
        }
        if !kinetic.is_finite() {
            return Err(Error::Precondition("initial kinetic energy is not finite".into()));
        }
        state.clear_vacuum();
        Ok(state)
    }
}

/// One emitted time level.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub state: FluidState,
    pub mesh: Arc<MovingMesh>,
    /// `int_0^t int S(grad u) : grad u` plus the boundary friction, as
    /// accumulated by the scheme.
    pub dissipation: f64,
    pub step: usize,
}

impl Snapshot {
    pub fn time(&self) -> f64 {
        self.state.time
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub scenario: Scenario,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time()).collect()
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory has the initial snapshot")
    }

    /// Index of the snapshot emitted at `tau`.
    pub fn index_of(&self, tau: f64) -> Result<usize> {
        self.snapshots
            .iter()
            .position(|s| (s.time() - tau).abs() <= 1e-12 * (1.0 + tau.abs()))
            .ok_or_else(|| Error::Precondition(format!("no snapshot emitted at t = {tau}")))
    }
}
