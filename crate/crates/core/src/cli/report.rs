use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::Value;

use crate::discrete::DiscreteFunction;
use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::solvers::TraceEntry;

/// Sorted keys (the `serde_json` map is ordered), shortest round-trip
/// floats, two-space indent, trailing newline.
pub fn canonical_json(report: &Value) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("a Value always serializes");
    s.push('\n');
    s
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

pub fn export_report_json(report: &Value, path: &Path) -> Result<()> {
    create_parent(path)?;
    fs::write(path, canonical_json(report))?;
    Ok(())
}

/// 17 significant digits.
fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn export_solution_csv(u: &DiscreteFunction, path: &Path) -> Result<()> {
    let mut s = String::from("x,y,u\n");
    for (p, v) in u.mesh().vertices.iter().zip(u.values()) {
        let _ = writeln!(s, "{},{},{}", real(p[0]), real(p[1]), real(*v));
    }
    create_parent(path)?;
    fs::write(path, s)?;
    Ok(())
}

/// Rows `[x, y, u]` of a file written by [`export_solution_csv`].
pub fn import_solution_csv(path: &Path) -> Result<Vec<[f64; 3]>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some("x,y,u") {
        return Err(Error::Config(format!("{}: expected header `x,y,u`", path.display())));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let cols: Vec<&str> = line.split(',').collect();
            let parse = |c: &str| {
                c.parse::<f64>().map_err(|e| Error::Config(format!("{} line {}: {e}", path.display(), i + 2)))
            };
            match cols.as_slice() {
                [x, y, u] => Ok([parse(x)?, parse(y)?, parse(u)?]),
                _ => Err(Error::Config(format!("{} line {}: expected 3 columns", path.display(), i + 2))),
            }
        })
        .collect()
}

/// `series,iteration,J,residual,beta_norm`.
pub fn export_trace_csv(series: &[(&str, &[TraceEntry])], path: &Path) -> Result<()> {
    let mut s = String::from("series,iteration,J,residual,beta_norm\n");
    for (name, trace) in series {
        for (i, t) in trace.iter().enumerate() {
            let _ = writeln!(s, "{name},{i},{},{},{}", real(t.j), real(t.residual), real(t.beta_norm));
        }
    }
    create_parent(path)?;
    fs::write(path, s)?;
    Ok(())
}

/// Triangles as vertex indices into the rows of `solution.csv`.
pub fn export_mesh_csv(mesh: &Mesh, path: &Path) -> Result<()> {
    let mut s = String::from("triangle,v0,v1,v2\n");
    for (k, t) in mesh.triangles.iter().enumerate() {
        let _ = writeln!(s, "{k},{},{},{}", t[0], t[1], t[2]);
    }
    create_parent(path)?;
    fs::write(path, s)?;
    Ok(())
}
