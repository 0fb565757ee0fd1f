use std::io::Write;

use super::Snapshot;
use crate::Result;

/// `#`-prefixed metadata lines of a snapshot file.
pub fn snapshot_header(snapshot: &Snapshot, config_hash: &str, scheme: &str) -> String {
    format!(
        "# time = {}\n# step = {}\n# config_hash = {config_hash}\n# scheme = {scheme}\n",
        snapshot.time(),
        snapshot.step
    )
}

/// Writes `cell_index, x[, y], volume, rho, u[, v]` per cell.
pub fn write_snapshot_csv(out: &mut impl Write, snapshot: &Snapshot, config_hash: &str, scheme: &str) -> Result<()> {
    let mesh = &snapshot.mesh;
    let dim = mesh.dim();
    out.write_all(snapshot_header(snapshot, config_hash, scheme).as_bytes())?;
    if dim == 1 {
        writeln!(out, "cell_index,x,volume,rho,u")?;
    } else {
        writeln!(out, "cell_index,x,y,volume,rho,u,v")?;
    }
    let u = snapshot.state.velocities();
    for c in 0..mesh.n_cells() {
        let x = mesh.cell_centroids[c];
        let (vol, rho) = (mesh.cell_volumes[c], snapshot.state.rho[c]);
        if dim == 1 {
            writeln!(out, "{c},{:e},{vol:e},{rho:e},{:e}", x[0], u[c][0])?;
        } else {
            writeln!(out, "{c},{:e},{:e},{vol:e},{rho:e},{:e},{:e}", x[0], x[1], u[c][0], u[c][1])?;
        }
    }
    Ok(())
}
