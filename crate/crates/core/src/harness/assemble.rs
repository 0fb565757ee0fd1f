//! Construction of solver and diagnostic objects from a configuration.

use super::config::*;
use crate::diagnostics::{Renormalization, TestFunction, TestPair};
use crate::expr::Expr;
use crate::mechanics::ViscosityParams;
use crate::motion::{FlowMap, Jiggle, MeshReference, MotionField, MotionKind};
use crate::solver::{InitialData, MmsForcing, Reconstruction, Scenario};
use crate::thermo::PressureLaw;
use crate::{Result, Vec3};

fn parse(e: &ExprText) -> Result<Expr> {
    Expr::parse(&e.source())
}

fn parse_all(es: &[ExprText]) -> Result<Vec<Expr>> {
    es.iter().map(parse).collect()
}

impl FieldsConfig {
    pub fn initial_data(&self) -> Result<InitialData> {
        Ok(InitialData::Analytic { rho: parse(&self.rho)?, velocity: parse_all(&self.velocity)? })
    }

    pub fn pair(&self) -> Result<TestPair> {
        Ok(TestPair::new(parse(&self.rho)?, parse_all(&self.velocity)?))
    }
}

impl ScenarioConfig {
    pub fn law(&self) -> Result<PressureLaw> {
        PressureLaw::power(self.fluid.gamma, self.fluid.a)
    }

    pub fn viscosity(&self) -> Result<ViscosityParams> {
        ViscosityParams::new(self.fluid.mu, self.fluid.eta, self.fluid.kappa)
    }

    pub fn motion_field(&self) -> Result<MotionField> {
        let m = &self.motion;
        let kind = match m.kind {
            MotionName::Static => MotionKind::Static,
            MotionName::Translation => {
                let v = m.velocity.clone().unwrap_or_default();
                MotionKind::Translation { velocity: Vec3::new(v[0], v.get(1).copied().unwrap_or(0.0), 0.0) }
            }
            MotionName::Dilation => MotionKind::Dilation { alpha: parse(m.alpha.as_ref().expect("validated"))? },
            MotionName::Rotation => MotionKind::Rotation { omega: m.omega.expect("validated") },
            MotionName::Piston => MotionKind::Piston1d { length: parse(m.length.as_ref().expect("validated"))? },
        };
        Ok(MotionField::new(kind))
    }

    /// Mesh reference with `n` cells along the first axis.
    pub fn reference_at(&self, n: usize) -> Result<MeshReference> {
        let d = &self.domain;
        let r = match d.shape {
            Shape::Interval => {
                let (x0, x1) = match &d.bounds {
                    Some(b) => (b[0], b[1]),
                    None => (0.0, parse(self.motion.length.as_ref().expect("validated"))?.eval_t(0.0)),
                };
                MeshReference::interval(x0, x1, n, d.periodic)?
            }
            Shape::Rectangle => {
                let b = d.bounds.as_ref().expect("validated");
                let ny = match d.cells {
                    Cells::Two([nx, ny]) => n * ny / nx,
                    Cells::One(_) => n,
                };
                MeshReference::rectangle(b[0], b[1], b[2], b[3], n, ny)?
            }
            Shape::Disk => {
                let [cx, cy] = d.center.unwrap_or([0.0, 0.0]);
                MeshReference::disk(cx, cy, d.radius.expect("validated"), n)?
            }
        };
        Ok(match d.jiggle {
            Some(j) => r.with_jiggle(Jiggle { amplitude: j.amplitude, frequency: j.frequency }),
            None => r,
        })
    }

    /// Solver scenario with `n` cells along the first axis and the given data.
    pub fn scenario_with(&self, n: usize, data: &FieldsConfig) -> Result<Scenario> {
        let law = self.law()?;
        let params = self.viscosity()?;
        let flow = FlowMap::closed(self.motion_field()?);
        let mut sc = Scenario::new(
            self.name.clone(),
            self.reference_at(n)?,
            flow,
            law,
            params,
            data.initial_data()?,
            self.run.t_end,
        );
        sc.cfl = self.run.cfl;
        sc.emit_every = self.run.emit_every;
        sc.max_steps = self.run.max_steps;
        sc.reconstruction = match self.run.reconstruction {
            ReconstructionName::FirstOrder => Reconstruction::FirstOrder,
            ReconstructionName::Limited => Reconstruction::Limited,
        };
        if let Some(m) = &self.mms {
            sc.mms = Some(MmsForcing::new(parse(&m.rho)?, parse_all(&m.velocity)?, &law, &params));
        }
        Ok(sc)
    }

    /// Initial data of the run: `initial`, or the manufactured fields.
    pub fn data(&self) -> &FieldsConfig {
        self.initial.as_ref().or(self.mms.as_ref()).expect("validated")
    }

    pub fn scenario_at(&self, n: usize) -> Result<Scenario> {
        self.scenario_with(n, self.data())
    }

    pub fn scenario(&self) -> Result<Scenario> {
        self.scenario_at(self.base_cells())
    }

    /// The reference run of a twin experiment.
    pub fn twin_scenario(&self) -> Result<Option<Scenario>> {
        self.diagnostics
            .twin
            .as_ref()
            .map(|tw| self.scenario_with(tw.reference_cells, tw.reference_initial.as_ref().unwrap_or(self.data())))
            .transpose()
    }

    /// Scalar test function, tangential vector test function and renormalization.
    pub fn test_functions(&self) -> Result<(Option<TestFunction>, Option<TestFunction>, Option<Renormalization>)> {
        let Some(w) = &self.diagnostics.weak_forms else {
            return Ok((None, None, None));
        };
        let scalar = w.scalar.as_ref().map(|s| parse(s).map(TestFunction::scalar)).transpose()?;
        let vector = w.vector.as_ref().map(|v| parse_all(v).map(|c| TestFunction::vector(c, w.tangential))).transpose()?;
        let renorm = w.renormalization.map(|b| match b.kind {
            RenormalizationName::Zero => Renormalization::Zero,
            RenormalizationName::Linear => Renormalization::Linear { cutoff: b.cutoff },
            RenormalizationName::Square => Renormalization::Square { cutoff: b.cutoff },
        });
        Ok((scalar, vector, renorm))
    }
}
