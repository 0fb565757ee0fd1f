//! Semantic checks of a parsed configuration.

use super::config::*;
use crate::expr::Expr;

struct Check<'a> {
    errors: &'a mut Vec<String>,
}

impl Check<'_> {
    fn require(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.errors.push(msg());
        }
    }

    fn expr(&mut self, path: &str, e: &ExprText) -> Option<Expr> {
        match Expr::parse(&e.source()) {
            Ok(x) => Some(x),
            Err(err) => {
                self.errors.push(format!("{path}: {err}"));
                None
            }
        }
    }

    fn fields(&mut self, path: &str, f: &FieldsConfig, dim: usize) {
        self.expr(&format!("{path}.rho"), &f.rho);
        self.require(f.velocity.len() == dim, || {
            format!("{path}.velocity has {} components in dimension {dim}", f.velocity.len())
        });
        for (k, v) in f.velocity.iter().enumerate() {
            self.expr(&format!("{path}.velocity[{k}]"), v);
        }
    }
}

pub(crate) fn validate(c: &ScenarioConfig, errors: &mut Vec<String>) {
    let mut ck = Check { errors };
    let dim = c.dim();
    domain(&mut ck, c);
    motion(&mut ck, c);

    let f = &c.fluid;
    ck.require(f.gamma > 1.5, || {
        format!("fluid.gamma = {} violates the hypothesis gamma > 3/2 of the weak existence theory", f.gamma)
    });
    ck.require(f.a > 0.0, || format!("fluid.a = {} must be positive", f.a));
    ck.require(f.mu >= 0.0, || format!("fluid.mu = {} is negative", f.mu));
    ck.require(f.eta >= 0.0, || format!("fluid.eta = {} is negative", f.eta));
    ck.require(f.kappa >= 0.0, || format!("fluid.kappa = {} is negative", f.kappa));

    ck.require(c.initial.is_some() || c.mms.is_some(), || "either initial or mms data is required".into());
    if let Some(i) = &c.initial {
        ck.fields("initial", i, dim);
    }
    if let Some(m) = &c.mms {
        ck.fields("mms", m, dim);
    }

    let r = &c.run;
    ck.require(r.cfl > 0.0 && r.cfl <= 1.0, || format!("run.cfl = {} must lie in (0, 1]", r.cfl));
    ck.require(r.t_end > 0.0, || format!("run.t_end = {} must be positive", r.t_end));
    if let Some(e) = r.emit_every {
        ck.require(e > 0.0, || format!("run.emit_every = {e} must be positive"));
    }
    ck.require(r.max_steps > 0, || "run.max_steps must be positive".into());

    diagnostics(&mut ck, c);
    if let Some(s) = &c.study {
        study(&mut ck, c, s);
    }
}

fn domain(ck: &mut Check, c: &ScenarioConfig) {
    let d = &c.domain;
    match (d.shape, d.cells) {
        (Shape::Interval | Shape::Disk, Cells::One(n)) => ck.require(n >= 1, || "domain.cells must be positive".into()),
        (Shape::Rectangle, Cells::Two([nx, ny])) => {
            ck.require(nx >= 1 && ny >= 1, || "domain.cells must be positive".into());
        }
        (shape, _) => ck.errors.push(format!(
            "domain.cells for shape {shape:?} must be {}",
            if shape == Shape::Rectangle { "a pair [nx, ny]" } else { "a single count" }
        )),
    }
    match d.shape {
        Shape::Interval => {
            if let Some(b) = &d.bounds {
                ck.require(b.len() == 2 && b[0] < b[1], || "domain.bounds of an interval must be [x0, x1] with x0 < x1".into());
            } else {
                ck.require(c.motion.kind == MotionName::Piston, || "domain.bounds is required for an interval".into());
            }
        }
        Shape::Rectangle => {
            let ok = matches!(&d.bounds, Some(b) if b.len() == 4 && b[0] < b[1] && b[2] < b[3]);
            ck.require(ok, || "domain.bounds of a rectangle must be [x0, x1, y0, y1] with x0 < x1, y0 < y1".into());
        }
        Shape::Disk => {
            ck.require(d.radius.is_some_and(|r| r > 0.0), || "domain.radius of a disk must be positive".into());
        }
    }
    ck.require(!d.periodic || d.shape == Shape::Interval, || "domain.periodic applies to intervals only".into());
    if let Some(j) = &d.jiggle {
        ck.require(j.amplitude >= 0.0 && j.frequency.is_finite(), || "domain.jiggle needs amplitude >= 0".into());
    }
}

fn motion(ck: &mut Check, c: &ScenarioConfig) {
    let m = &c.motion;
    let dim = c.dim();
    match m.kind {
        MotionName::Static => {}
        MotionName::Translation => {
            ck.require(m.velocity.as_ref().is_some_and(|v| v.len() == dim), || {
                format!("motion.velocity must have {dim} components")
            });
        }
        MotionName::Dilation => match &m.alpha {
            Some(a) => {
                ck.expr("motion.alpha", a);
            }
            None => ck.errors.push("motion.alpha is required for a dilation".into()),
        },
        MotionName::Rotation => {
            ck.require(dim == 2, || "rotation needs a two-dimensional domain".into());
            ck.require(m.omega.is_some_and(f64::is_finite), || "motion.omega is required for a rotation".into());
        }
        MotionName::Piston => {
            ck.require(c.domain.shape == Shape::Interval, || "a piston moves an interval".into());
            ck.require(!c.domain.periodic, || "a piston domain cannot be periodic".into());
            let Some(len) = &m.length else {
                ck.errors.push("motion.length is required for a piston".into());
                return;
            };
            let Some(l) = ck.expr("motion.length", len) else { return };
            if l.depends_on(crate::expr::Var::X) || l.depends_on(crate::expr::Var::Y) {
                ck.errors.push("motion.length may depend on t only".into());
                return;
            }
            let t_end = c.run.t_end.max(0.0);
            let bad = (0..=1000).map(|k| t_end * k as f64 / 1000.0).find(|&t| !(l.eval_t(t) > 0.0));
            if let Some(t) = bad {
                ck.errors.push(format!("motion.length L(t) = {} is not positive at t = {t}", l.eval_t(t)));
            }
            if let Some(b) = &c.domain.bounds {
                let l0 = l.eval_t(0.0);
                ck.require(b.len() == 2 && b[0] == 0.0 && (b[1] - l0).abs() <= 1e-12 * l0.abs().max(1.0), || {
                    format!("domain.bounds of a piston must be [0, L(0)] = [0, {l0}]")
                });
            }
        }
    }
}

fn diagnostics(ck: &mut Check, c: &ScenarioConfig) {
    let dim = c.dim();
    let d = &c.diagnostics;
    if let Some(r) = &d.relative_energy {
        match &r.pair {
            PairConfig::Keyword(k) => ck.require(k == "self", || {
                format!("diagnostics.relative_energy.pair must be \"self\" or analytic fields, got \"{k}\"")
            }),
            PairConfig::Fields(f) => ck.fields("diagnostics.relative_energy.pair", f, dim),
        }
    }
    if let Some(w) = &d.weak_forms {
        if let Some(s) = &w.scalar {
            ck.expr("diagnostics.weak_forms.scalar", s);
        }
        if let Some(v) = &w.vector {
            ck.require(v.len() == dim, || format!("diagnostics.weak_forms.vector must have {dim} components"));
            for (k, e) in v.iter().enumerate() {
                ck.expr(&format!("diagnostics.weak_forms.vector[{k}]"), e);
            }
        }
        if let Some(b) = &w.renormalization {
            ck.require(b.cutoff > 0.0, || "diagnostics.weak_forms.renormalization.cutoff must be positive".into());
            ck.require(w.scalar.is_some(), || "a renormalization needs a scalar test function".into());
        }
        if let Some(t) = w.tau {
            ck.require(t > 0.0 && t <= c.run.t_end, || format!("diagnostics.weak_forms.tau = {t} must lie in (0, t_end]"));
        }
    }
    if let Some(t) = &d.transport {
        ck.expr("diagnostics.transport.f", &t.f);
        ck.require(t.dt_factor > 0.0, || "diagnostics.transport.dt_factor must be positive".into());
        ck.require(t.t > 0.0, || "diagnostics.transport.t must be positive".into());
    }
    if let Some(tw) = &d.twin {
        let n = c.base_cells();
        ck.require(tw.reference_cells >= n && tw.reference_cells % n.max(1) == 0, || {
            format!("diagnostics.twin.reference_cells = {} must be a multiple of {n}", tw.reference_cells)
        });
        if let Some(f) = &tw.reference_initial {
            ck.fields("diagnostics.twin.reference_initial", f, dim);
        }
    }
    if let Some(m) = &d.conservation {
        ck.require(m.max_mass_drift >= 0.0, || "diagnostics.conservation.max_mass_drift must be nonnegative".into());
        ck.require(c.mms.is_none(), || "diagnostics.conservation conflicts with mms: the mass source changes the total mass".into());
    }
}

fn study(ck: &mut Check, c: &ScenarioConfig, s: &StudyConfig) {
    ck.require(s.levels.len() >= 3, || format!("study.levels needs at least 3 refinement levels, got {}", s.levels.len()));
    ck.require(s.levels.windows(2).all(|w| w[0] < w[1]) && s.levels.first().is_some_and(|&n| n > 0), || {
        format!("study.levels {:?} must be positive and strictly increasing", s.levels)
    });
    if let Cells::Two([nx, ny]) = c.domain.cells {
        for &n in &s.levels {
            ck.require(n * ny % nx.max(1) == 0, || format!("study level {n} does not keep the aspect ratio {nx}:{ny}"));
        }
    }
    if let Some(tw) = &c.diagnostics.twin {
        for &n in &s.levels {
            ck.require(n > 0 && tw.reference_cells % n == 0, || {
                format!("diagnostics.twin.reference_cells = {} is not a multiple of study level {n}", tw.reference_cells)
            });
        }
    }
    let d = &c.diagnostics;
    for (name, contract) in &s.metrics {
        let available = match name.as_str() {
            "rho_l1" | "u_l1" => c.mms.is_some(),
            "transport_defect" => d.transport.is_some(),
            "energy_defect" => d.energy,
            "rei_defect" => d.relative_energy.is_some(),
            "twin_energy" | "twin_final_energy" => d.twin.is_some(),
            "gronwall_constant" => d.twin.as_ref().is_some_and(|t| t.gronwall),
            "weak_continuity" | "weak_momentum" | "renormalized" => d.weak_forms.is_some(),
            _ => {
                ck.errors.push(format!("study.metrics: unknown metric \"{name}\"; known metrics are {}", METRICS.join(", ")));
                continue;
            }
        };
        ck.require(available, || format!("study.metrics.{name} needs the matching diagnostic or mms section"));
        let test_fn_ok = match name.as_str() {
            "weak_continuity" | "renormalized" => d.weak_forms.as_ref().is_some_and(|w| w.scalar.is_some()),
            "weak_momentum" => d.weak_forms.as_ref().is_some_and(|w| w.vector.is_some()),
            _ => true,
        };
        ck.require(test_fn_ok, || format!("study.metrics.{name} needs the matching test function"));
        if let Some(o) = contract.min_order {
            ck.require(o.is_finite(), || format!("study.metrics.{name}.min_order must be finite"));
        }
    }
}
