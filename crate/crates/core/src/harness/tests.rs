use super::*;

const MINIMAL: &str = r#"{
  "name": "minimal",
  "domain": { "shape": "interval", "cells": 10 },
  "motion": { "kind": "piston", "length": "1 + 0.1 * t" },
  "fluid": { "gamma": 2, "mu": 0.1 },
  "initial": { "rho": "1", "velocity": ["0"] },
  "run": { "t_end": 0.1 }
}"#;

fn errors_of(doc: &str) -> Vec<String> {
    match parse_config(doc) {
        Err(Error::Config(e)) => e,
        other => panic!("expected a configuration error, got {other:?}"),
    }
}

#[test]
fn catalogue_parses() {
    for (name, _) in CATALOGUE {
        let c = builtin(name).unwrap();
        assert_eq!(c.name, *name);
        c.scenario().unwrap();
    }
}

#[test]
fn minimal_config_gets_defaults() {
    let c = parse_config(MINIMAL).unwrap();
    assert_eq!(c.run.cfl, 0.4);
    assert_eq!(c.fluid.kappa, 0.0);
    assert_eq!(c.fluid.eta, 0.0);
    assert_eq!(c.fluid.a, 1.0);
    let sc = c.scenario().unwrap();
    assert_eq!(sc.cfl, 0.4);
    assert_eq!(sc.viscosity.kappa, 0.0);
}

#[test]
fn small_gamma_is_rejected() {
    let e = errors_of(&MINIMAL.replace("\"gamma\": 2", "\"gamma\": 1.2"));
    assert!(e.iter().any(|m| m.contains("gamma > 3/2")), "{e:?}");
}

#[test]
fn misspelled_key_gets_suggestion() {
    let e = errors_of(&MINIMAL.replace("\"mu\": 0.1", "\"mu\": 0.1, \"viscocity\": 0.1"));
    assert!(e.iter().any(|m| m.contains("viscocity") && m.contains("\"mu\"")), "{e:?}");
}

#[test]
fn every_violation_is_reported() {
    let doc = MINIMAL.replace("\"gamma\": 2", "\"gamma\": 1.2").replace("\"mu\": 0.1", "\"mu\": -1").replace("1 + 0.1 * t", "1 - 20 * t");
    let e = errors_of(&doc);
    assert!(e.len() >= 3, "{e:?}");
    assert!(e.iter().any(|m| m.contains("mu")));
    assert!(e.iter().any(|m| m.contains("L(t)")));
}

#[test]
fn syntax_error_has_position() {
    match parse_config("{\n  \"name\": }") {
        Err(Error::ConfigSyntax { line, column, .. }) => assert_eq!((line, column), (2, 11)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn two_level_study_is_rejected() {
    let doc = MINIMAL.replace("\"run\": { \"t_end\": 0.1 }", "\"run\": { \"t_end\": 0.1 }, \"study\": { \"levels\": [10, 20] }");
    let e = errors_of(&doc);
    assert!(e.iter().any(|m| m.contains("at least 3")), "{e:?}");
}

#[test]
fn hash_ignores_formatting_but_not_values() {
    let a = parse_config(MINIMAL).unwrap();
    let b = parse_config(&MINIMAL.replace('\n', " ")).unwrap();
    let c = parse_config(&MINIMAL.replace("\"cells\": 10", "\"cells\": 11")).unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), c.hash());
}

#[test]
fn order_fit_recovers_power_law() {
    let h = [0.1, 0.05, 0.025];
    let v: Vec<f64> = h.iter().map(|x: &f64| 3.0 * x.powf(1.7)).collect();
    assert!((fit_order(&h, &v) - 1.7).abs() < 1e-12);
    assert!(fit_order(&h, &[1.0, 0.0, 0.5]).is_nan());
}

#[test]
fn smoke_run_passes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let c = builtin("static-steady").unwrap();
    let start = std::time::Instant::now();
    let a = run_experiment(&c, &dir.path().join("a"), &RunOptions::default()).unwrap();
    assert!(start.elapsed().as_secs_f64() < 5.0);
    assert!(a.pass(), "{:?}", a.outcome.contracts);
    run_experiment(&c, &dir.path().join("b"), &RunOptions::default()).unwrap();
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&a.manifest).unwrap()).unwrap();
    assert_eq!(manifest["pass"], true);
    assert_eq!(manifest["config_hash"], c.hash());
    for f in manifest["run"]["files"].as_array().unwrap() {
        let f = f.as_str().unwrap();
        let x = std::fs::read(dir.path().join("a/static-steady").join(f)).unwrap();
        let y = std::fs::read(dir.path().join("b/static-steady").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between identical runs");
        assert!(String::from_utf8(x).unwrap().contains(&c.hash()));
    }
    let energy = std::fs::read_to_string(dir.path().join("a/static-steady/energy.csv")).unwrap();
    let columns = energy.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(columns.starts_with("t,kinetic_potential,dissipation,v_coupling_1,v_coupling_2,v_coupling_3"));
}

#[test]
fn conservation_with_mms_is_rejected() {
    let doc = MINIMAL.replace(
        "\"run\": { \"t_end\": 0.1 }",
        "\"mms\": { \"rho\": \"1 + t\", \"velocity\": [\"0\"] }, \"run\": { \"t_end\": 0.1 }, \"diagnostics\": { \"conservation\": {} }",
    );
    let e = errors_of(&doc);
    assert!(e.iter().any(|m| m.contains("conflicts with mms")), "{e:?}");
}
