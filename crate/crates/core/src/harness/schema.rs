//! Key whitelist of configuration documents.

use serde_json::Value;

const TOP: &[&str] = &["name", "description", "domain", "motion", "fluid", "initial", "mms", "run", "diagnostics", "study"];
const DOMAIN: &[&str] = &["shape", "bounds", "center", "radius", "cells", "periodic", "jiggle"];
const JIGGLE: &[&str] = &["amplitude", "frequency"];
const MOTION: &[&str] = &["kind", "velocity", "alpha", "omega", "length"];
const FLUID: &[&str] = &["gamma", "a", "mu", "eta", "kappa"];
const FIELDS: &[&str] = &["rho", "velocity"];
const RUN: &[&str] = &["cfl", "t_end", "emit_every", "reconstruction", "max_steps", "snapshots"];
const DIAGNOSTICS: &[&str] = &["energy", "relative_energy", "weak_forms", "transport", "twin", "conservation"];
const RELATIVE: &[&str] = &["pair"];
const WEAK: &[&str] = &["scalar", "vector", "tangential", "renormalization", "tau"];
const RENORMALIZATION: &[&str] = &["kind", "cutoff"];
const TRANSPORT: &[&str] = &["f", "t", "dt_factor"];
const TWIN: &[&str] = &["reference_cells", "reference_initial", "gronwall"];
const CONSERVATION: &[&str] = &["max_mass_drift"];
const STUDY: &[&str] = &["levels", "metrics"];
const CONTRACT: &[&str] = &["min_order", "max_variation", "max_relative"];

/// Common misspellings and synonyms mapped to accepted keys.
const ALIASES: &[(&str, &str)] = &[
    ("viscosity", "mu"),
    ("viscocity", "mu"),
    ("shear_viscosity", "mu"),
    ("bulk_viscosity", "eta"),
    ("friction", "kappa"),
    ("slip", "kappa"),
    ("adiabatic_exponent", "gamma"),
    ("density", "rho"),
    ("resolution", "cells"),
    ("final_time", "t_end"),
    ("tend", "t_end"),
];

fn suggestion(key: &str, allowed: &[&str]) -> Option<String> {
    let lower = key.to_lowercase();
    if let Some((_, to)) = ALIASES.iter().find(|(from, to)| *from == lower && allowed.contains(to)) {
        return Some((*to).to_string());
    }
    allowed
        .iter()
        .map(|a| (strsim::normalized_damerau_levenshtein(&lower, a), a))
        .filter(|(score, _)| *score >= 0.6)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, a)| (*a).to_string())
}

fn object<'a>(v: &'a Value, path: &str, allowed: &[&str], errors: &mut Vec<String>) -> Option<&'a serde_json::Map<String, Value>> {
    let map = v.as_object()?;
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) {
            let at = if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
            match suggestion(key, allowed) {
                Some(s) => errors.push(format!("unknown key \"{at}\"; did you mean \"{s}\"?")),
                None => errors.push(format!("unknown key \"{at}\"; expected one of {}", allowed.join(", "))),
            }
        }
    }
    Some(map)
}

fn fields(v: Option<&Value>, path: &str, errors: &mut Vec<String>) {
    if let Some(v) = v {
        object(v, path, FIELDS, errors);
    }
}

/// Reports every key that the schema does not know.
pub fn check_keys(doc: &Value, errors: &mut Vec<String>) {
    let Some(top) = object(doc, "", TOP, errors) else {
        errors.push("the document must be a JSON object".into());
        return;
    };
    if let Some(d) = top.get("domain").and_then(|v| object(v, "domain", DOMAIN, errors)) {
        if let Some(j) = d.get("jiggle") {
            object(j, "domain.jiggle", JIGGLE, errors);
        }
    }
    if let Some(m) = top.get("motion") {
        object(m, "motion", MOTION, errors);
    }
    if let Some(f) = top.get("fluid") {
        object(f, "fluid", FLUID, errors);
    }
    fields(top.get("initial"), "initial", errors);
    fields(top.get("mms"), "mms", errors);
    if let Some(r) = top.get("run") {
        object(r, "run", RUN, errors);
    }
    if let Some(d) = top.get("diagnostics").and_then(|v| object(v, "diagnostics", DIAGNOSTICS, errors)) {
        if let Some(r) = d.get("relative_energy").and_then(|v| object(v, "diagnostics.relative_energy", RELATIVE, errors)) {
            if let Some(p) = r.get("pair").filter(|p| p.is_object()) {
                fields(Some(p), "diagnostics.relative_energy.pair", errors);
            }
        }
        if let Some(w) = d.get("weak_forms").and_then(|v| object(v, "diagnostics.weak_forms", WEAK, errors)) {
            if let Some(b) = w.get("renormalization") {
                object(b, "diagnostics.weak_forms.renormalization", RENORMALIZATION, errors);
            }
        }
        if let Some(t) = d.get("transport") {
            object(t, "diagnostics.transport", TRANSPORT, errors);
        }
        if let Some(t) = d.get("twin").and_then(|v| object(v, "diagnostics.twin", TWIN, errors)) {
            fields(t.get("reference_initial"), "diagnostics.twin.reference_initial", errors);
        }
        if let Some(c) = d.get("conservation") {
            object(c, "diagnostics.conservation", CONSERVATION, errors);
        }
    }
    if let Some(s) = top.get("study").and_then(|v| object(v, "study", STUDY, errors)) {
        if let Some(m) = s.get("metrics").and_then(Value::as_object) {
            for (name, contract) in m {
                object(contract, &format!("study.metrics.{name}"), CONTRACT, errors);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn misspelled_viscosity_suggests_mu() {
        assert_eq!(suggestion("viscocity", FLUID).as_deref(), Some("mu"));
        assert_eq!(suggestion("gama", FLUID).as_deref(), Some("gamma"));
        assert_eq!(suggestion("t_ends", RUN).as_deref(), Some("t_end"));
        assert_eq!(suggestion("zzzz", FLUID), None);
    }
}
