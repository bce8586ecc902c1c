//! Triangle mesh text format.
//!
//! ```text
//! dim npoints ntriangles
//! x y            (npoints lines)
//! i j k          (ntriangles lines, 0-based point indices)
//! ```
//!
//! Blank lines and anything after `#` are ignored. `dim` must be 2.

use std::path::Path;

use chflow_core::mesh::{Mesh, MeshError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshFileError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("mesh file is empty")]
    Empty,
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Points and triangles as read from a file, kept for output.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    pub points: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
}

impl Triangulation {
    pub fn to_mesh(&self) -> Result<Mesh, MeshError> {
        Mesh::from_triangulation(&self.points, &self.triangles)
    }
}

pub fn parse_triangulation(text: &str) -> Result<Triangulation, MeshFileError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or(MeshFileError::Empty)?;
    let head: Vec<usize> = parse_fields(hline, header, 3)?;
    if head[0] != 2 {
        return Err(format_err(hline, format!("only dim 2 is supported, got {}", head[0])));
    }
    let (np, nt) = (head[1], head[2]);

    let mut points = Vec::with_capacity(np);
    for _ in 0..np {
        let (line, body) = lines.next().ok_or_else(|| format_err(hline, format!("expected {np} points")))?;
        let xy: Vec<f64> = parse_fields(line, body, 2)?;
        if !xy.iter().all(|v| v.is_finite()) {
            return Err(format_err(line, "non-finite coordinate".into()));
        }
        points.push([xy[0], xy[1]]);
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (line, body) = lines.next().ok_or_else(|| format_err(hline, format!("expected {nt} triangles")))?;
        let ijk: Vec<usize> = parse_fields(line, body, 3)?;
        if let Some(&bad) = ijk.iter().find(|&&v| v >= np) {
            return Err(format_err(line, format!("point index {bad} out of range ({np} points)")));
        }
        triangles.push([ijk[0], ijk[1], ijk[2]]);
    }
    if let Some((line, _)) = lines.next() {
        return Err(format_err(line, "unexpected trailing data".into()));
    }
    Ok(Triangulation { points, triangles })
}

pub fn read_triangulation(path: &Path) -> Result<Triangulation, MeshFileError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| MeshFileError::Io { path: path.display().to_string(), source })?;
    parse_triangulation(&text)
}

pub fn read_mesh(path: &Path) -> Result<(Mesh, Triangulation), MeshFileError> {
    let tri = read_triangulation(path)?;
    let mesh = tri.to_mesh()?;
    Ok((mesh, tri))
}

fn format_err(line: usize, reason: String) -> MeshFileError {
    MeshFileError::Format { line, reason }
}

fn parse_fields<T: std::str::FromStr>(line: usize, body: &str, count: usize) -> Result<Vec<T>, MeshFileError> {
    let fields: Vec<&str> = body.split_whitespace().collect();
    if fields.len() != count {
        return Err(format_err(line, format!("expected {count} fields, found {}", fields.len())));
    }
    fields
        .iter()
        .map(|f| f.parse::<T>().map_err(|_| format_err(line, format!("cannot parse `{f}`"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    // split along the diagonal both circumcenters coincide, so the square
    // is fanned around its center
    const SQUARE: &str = "2 5 4\n0 0\n1 0\n1 1\n0 1\n0.5 0.5\n0 1 4\n1 2 4\n2 3 4\n3 0 4\n";

    #[test]
    fn four_triangle_square() {
        let tri = parse_triangulation(SQUARE).unwrap();
        assert_eq!(tri.points.len(), 5);
        let mesh = tri.to_mesh().unwrap();
        assert_eq!(mesh.num_cells(), 4);
        assert_eq!(mesh.num_interior_faces(), 4);
        assert!((mesh.domain_measure() - 1.0).abs() < 1e-15);
        let diagonal = parse_triangulation("2 4 2\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n").unwrap();
        assert!(diagonal.to_mesh().is_err());
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# unit square\n2 5 4\n\n0 0\n1 0 # corner\n1 1\n0 1\n0.5 0.5\n0 1 4\n1 2 4\n2 3 4\n3 0 4\n";
        assert_eq!(parse_triangulation(text).unwrap(), parse_triangulation(SQUARE).unwrap());
    }

    #[test]
    fn malformed_files() {
        assert!(matches!(parse_triangulation(""), Err(MeshFileError::Empty)));
        assert!(matches!(parse_triangulation("3 4 2\n"), Err(MeshFileError::Format { line: 1, .. })));
        assert!(matches!(parse_triangulation("2 4 2\n0 0\n1 0\n"), Err(MeshFileError::Format { .. })));
        let bad_index = "2 3 1\n0 0\n1 0\n0 1\n0 1 3\n";
        assert!(matches!(parse_triangulation(bad_index), Err(MeshFileError::Format { line: 5, .. })));
        let trailing = format!("{SQUARE}0 1 3\n");
        assert!(matches!(parse_triangulation(&trailing), Err(MeshFileError::Format { line: 11, .. })));
        assert!(matches!(parse_triangulation("2 1 0\n0 x\n"), Err(MeshFileError::Format { line: 2, .. })));
    }
}
