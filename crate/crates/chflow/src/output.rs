//! CSV and legacy-ASCII VTK writers.
//!
//! Numbers are printed with Rust's shortest round-trip formatting, so equal
//! inputs give byte-identical files.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use chflow_core::model::{EnergyReport, Potentials, State};

use crate::setup::Geometry;

pub const ENERGY_HEADER: &str = "t,e_dir,e_chem,e_therm,e_ext,e_total,entropy1,entropy2,mass1,mass2,mixed_measure";

/// One line of the energy series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRow {
    pub t: f64,
    pub report: EnergyReport,
    pub mixed_measure: f64,
}

pub fn energy_csv(rows: &[EnergyRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(ENERGY_HEADER);
    out.push('\n');
    for r in rows {
        let e = &r.report;
        let _ = writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.t,
            e.e_dir,
            e.e_chem,
            e.e_therm,
            e.e_ext,
            e.e_total,
            e.entropy[0],
            e.entropy[1],
            e.mass[0],
            e.mass[1],
            r.mixed_measure
        );
    }
    out
}

/// Generic CSV from a header and numeric rows.
pub fn table_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn scalars(out: &mut String, name: &str, values: &[f64]) {
    let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
    for v in values {
        let _ = writeln!(out, "{v:e}");
    }
}

/// Snapshot with cell data `c1` and `mu1`, `mu2` (non-local) or `mu` (local).
pub fn vtk_snapshot(geometry: &Geometry, state: &State) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 3.0\nsaturation at t = {:e}\nASCII", state.time);
    match geometry {
        Geometry::Cartesian { nx, ny, lx, ly } => {
            let ny_ = ny.unwrap_or(1);
            let hy = match (ny, ly) {
                (Some(n), Some(l)) => l / *n as f64,
                _ => 1.0,
            };
            let _ = writeln!(
                out,
                "DATASET STRUCTURED_POINTS\nDIMENSIONS {} {} 1\nORIGIN 0 0 0\nSPACING {:e} {:e} 1",
                nx + 1,
                ny_ + 1,
                lx / *nx as f64,
                hy
            );
        }
        Geometry::Triangles(tri) => {
            let _ = writeln!(out, "DATASET UNSTRUCTURED_GRID\nPOINTS {} double", tri.points.len());
            for p in &tri.points {
                let _ = writeln!(out, "{:e} {:e} 0", p[0], p[1]);
            }
            let nt = tri.triangles.len();
            let _ = writeln!(out, "CELLS {nt} {}", 4 * nt);
            for t in &tri.triangles {
                let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
            }
            let _ = writeln!(out, "CELL_TYPES {nt}");
            for _ in 0..nt {
                out.push_str("5\n");
            }
        }
    }
    let _ = writeln!(out, "CELL_DATA {}", state.c1.len());
    scalars(&mut out, "c1", &state.c1);
    match &state.potentials {
        Potentials::Phase { mu1, mu2 } => {
            scalars(&mut out, "mu1", mu1);
            scalars(&mut out, "mu2", mu2);
        }
        Potentials::Generalized { mu } => scalars(&mut out, "mu", mu),
    }
    out
}

pub fn write(path: &Path, contents: &str) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)
}
