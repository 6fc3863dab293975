//! Trajectory CSV export.

use std::io::Write;
use std::path::Path;

use sgain_core::sim::TrajectoryRecord;

use crate::Failure;

/// Header `t,norm_p,V,u_norm` plus `x_1..x_d` when states were kept. `V`
/// is left empty when no Lyapunov function was attached.
pub fn write_trajectory_csv<W: Write>(out: W, traj: &TrajectoryRecord) -> csv::Result<usize> {
    let mut w = csv::Writer::from_writer(out);
    let d = traj.states.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string(), "norm_p".into(), "V".into(), "u_norm".into()];
    header.extend((1..=d).map(|k| format!("x_{k}")));
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for k in 0..traj.len() {
        row.clear();
        row.push(traj.t[k].to_string());
        row.push(traj.norm_p[k].to_string());
        row.push(traj.v.as_ref().map_or(String::new(), |v| v[k].to_string()));
        row.push(traj.u_norm[k].to_string());
        if let Some(x) = traj.states.get(k) {
            row.extend(x.iter().map(f64::to_string));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(traj.len())
}

pub fn save_trajectory_csv(path: &Path, traj: &TrajectoryRecord) -> Result<usize, Failure> {
    let file =
        std::fs::File::create(path).map_err(|e| Failure::input(format!("cannot create {}: {e}", path.display())))?;
    write_trajectory_csv(std::io::BufWriter::new(file), traj)
        .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}
