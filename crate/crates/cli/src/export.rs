//! Trajectory CSV: `t,z1,…,zr,u,I,V0,V1,W,reset`, 17 significant digits.

use std::path::Path;

use host_core::Trajectory;

use crate::error::{CliError, Result};

pub fn header(order: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=order).map(|i| format!("z{i}")));
    h.extend(["u", "I", "V0", "V1", "W", "reset"].map(String::from));
    h
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(ch: &Option<Vec<f64>>, k: usize) -> String {
    ch.as_ref().map_or_else(String::new, |v| fmt(v[k]))
}

pub fn export_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    let csv_err = |e: csv::Error| CliError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header(traj.order)).map_err(csv_err)?;
    for k in 0..traj.len() {
        let mut row = Vec::with_capacity(traj.order + 7);
        row.push(fmt(traj.times[k]));
        row.extend(traj.states[k].iter().map(|z| fmt(*z)));
        row.push(fmt(traj.controls[k]));
        row.push(fmt(traj.integrals[k]));
        row.push(opt(&traj.v0, k));
        row.push(opt(&traj.v1, k));
        row.push(opt(&traj.w, k));
        row.push(if traj.reset[k] { "1" } else { "0" }.into());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads a file written by [`export_csv`]. Channels not stored in the file
/// (`ξ`, reset records) are left empty.
pub fn read_csv(path: &Path) -> Result<Trajectory> {
    let err = |message: String| CliError::Csv {
        path: path.to_path_buf(),
        message,
    };
    let mut rd = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
    let head: Vec<String> = rd
        .headers()
        .map_err(|e| err(e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    if head.len() < 8 {
        return Err(err(format!("expected at least 8 columns, got {}", head.len())));
    }
    let order = head.len() - 7;
    if head != header(order) {
        return Err(err(format!("unexpected header {}", head.join(","))));
    }
    let mut traj = Trajectory::empty(order);
    let mut lyap: [Vec<Option<f64>>; 3] = Default::default();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| {
                err(format!(
                    "row {}: column {} is not a number: `{}`",
                    line + 2,
                    head[i],
                    &rec[i]
                ))
            })
        };
        traj.times.push(num(0)?);
        traj.states.push((1..=order).map(num).collect::<Result<_>>()?);
        traj.controls.push(num(order + 1)?);
        traj.integrals.push(num(order + 2)?);
        for (j, ch) in lyap.iter_mut().enumerate() {
            let i = order + 3 + j;
            ch.push(if rec[i].is_empty() { None } else { Some(num(i)?) });
        }
        traj.reset.push(match &rec[order + 6] {
            "0" => false,
            "1" => true,
            other => return Err(err(format!("row {}: reset flag `{other}`", line + 2))),
        });
    }
    let [v0, v1, w] = lyap.map(|ch| ch.into_iter().collect::<Option<Vec<f64>>>());
    (traj.v0, traj.v1, traj.w) = (v0, v1, w);
    Ok(traj)
}
