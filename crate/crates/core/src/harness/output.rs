//! Delimited-text reports and atomic file writes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diagnostics::{EnergyReport, GronwallReport, RelativeEnergyReport};
use crate::Result;

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// `#` header naming the configuration and resolution.
pub fn header(config_hash: &str, scenario: &str, cells: usize, scheme: &str) -> String {
    format!("# config_hash = {config_hash}\n# scenario = {scenario}\n# cells = {cells}\n# scheme = {scheme}\n")
}

fn table(head: &str, columns: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut s = head.to_string();
    s.push_str(&columns.join(","));
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn energy_csv(head: &str, r: &EnergyReport, tolerance: f64) -> String {
    let cols = [
        "t",
        "kinetic_potential",
        "dissipation",
        "v_coupling_1",
        "v_coupling_2",
        "v_coupling_3",
        "forcing",
        "defect",
        "tolerance",
    ];
    table(
        head,
        &cols,
        (0..r.times.len()).map(|k| {
            vec![
                r.times[k],
                r.kinetic_potential[k],
                r.dissipation[k],
                r.v_coupling_1[k],
                r.v_coupling_2[k],
                r.v_coupling_3[k],
                r.forcing[k],
                r.defect[k],
                tolerance,
            ]
        }),
    )
}

pub fn relative_csv(head: &str, r: &RelativeEnergyReport) -> String {
    let cols = [
        "t",
        "relative_energy",
        "relative_dissipation",
        "r_convective",
        "r_stress",
        "r_pressure",
        "r_density_time",
        "r_density_flux",
        "r_friction",
        "r_forcing",
        "remainder_integral",
        "defect",
    ];
    table(
        head,
        &cols,
        (0..r.times.len()).map(|k| {
            let t = &r.remainder[k];
            vec![
                r.times[k],
                r.relative_energy[k],
                r.relative_dissipation[k],
                t.convective,
                t.stress,
                t.pressure,
                t.density_time,
                t.density_flux,
                t.friction,
                t.forcing,
                r.remainder_integral[k],
                r.defect[k],
            ]
        }),
    )
}

pub fn gronwall_csv(head: &str, g: &GronwallReport) -> String {
    let mut head = head.to_string();
    match g.constant {
        Some(c) => writeln!(head, "# gronwall_constant = {c:e}").expect("string write"),
        None => head.push_str("# gronwall_constant = none\n"),
    }
    let bound = |k: usize| g.bound.get(k).copied().unwrap_or(f64::NAN);
    table(
        &head,
        &["t", "relative_energy", "h", "h_integral", "bound"],
        (0..g.times.len()).map(|k| vec![g.times[k], g.relative_energy[k], g.h[k], g.h_integral[k], bound(k)]),
    )
}

/// Per-level metric table of a study.
pub fn study_csv(head: &str, metrics: &[String], levels: &[(usize, f64, Vec<Option<f64>>)]) -> String {
    let mut s = head.to_string();
    s.push_str("cells,h");
    for m in metrics {
        s.push(',');
        s.push_str(m);
    }
    s.push('\n');
    for (n, h, vals) in levels {
        write!(s, "{n},{h:e}").expect("string write");
        for v in vals {
            match v {
                Some(v) => write!(s, ",{v:e}").expect("string write"),
                None => s.push_str(",nan"),
            }
        }
        s.push('\n');
    }
    s
}
