//! Admissible finite-volume meshes and two-point transmissibilities.
//!
//! A mesh is a set of cells with a representative point ("center") each and
//! a set of faces. Interior faces join two cells and carry the
//! transmissibility `|sigma| / d_KL`, where `d_KL` is the distance between
//! the two centers measured along the face normal. The two-point flux is
//! consistent only when the segment between centers is orthogonal to the
//! face; for triangulations this holds with circumcenters on Delaunay meshes.
//!
//! Boundary faces are kept for bookkeeping (measures, orthogonality checks)
//! but carry no flux: every boundary condition in this crate is no-flux.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math::{atan2, hypot};

/// Largest admissible angle between center segment and face normal for
/// generated Cartesian meshes.
pub const CARTESIAN_ANGLE_TOL: f64 = 1e-8;
/// Same bound for triangulations read from files.
pub const IMPORT_ANGLE_TOL: f64 = 1e-6;

const MEASURE_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum MeshError {
    InvalidDimensions { reason: &'static str },
    VertexOutOfRange { triangle: usize, vertex: usize },
    DegenerateTriangle { triangle: usize },
    NonManifoldEdge { vertices: [usize; 2] },
    /// Adjacent circumcenters are not on opposite sides of the shared edge.
    NonDelaunay { face: usize, vertices: [usize; 2], distance: f64 },
    NotOrthogonal { face: usize, angle: f64 },
    NonPositive { what: &'static str, index: usize, value: f64 },
    MeasureMismatch { cells: f64, domain: f64 },
    BrokenAdjacency { face: usize },
    BoundaryFace { face: usize },
    FaceOutOfRange { face: usize, faces: usize },
}

impl fmt::Display for MeshError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshError::InvalidDimensions { reason } => write!(f, "invalid mesh dimensions: {reason}"),
            MeshError::VertexOutOfRange { triangle, vertex } => {
                write!(f, "triangle {triangle} references missing vertex {vertex}")
            }
            MeshError::DegenerateTriangle { triangle } => write!(f, "triangle {triangle} has zero area"),
            MeshError::NonManifoldEdge { vertices } => {
                write!(f, "edge ({}, {}) is shared by more than two triangles", vertices[0], vertices[1])
            }
            MeshError::NonDelaunay { face, vertices, distance } => write!(
                f,
                "face {face} (vertices {}, {}) violates the Delaunay condition: signed center distance {distance:e}",
                vertices[0], vertices[1]
            ),
            MeshError::NotOrthogonal { face, angle } => {
                write!(f, "face {face}: center segment deviates from the normal by {angle:e} rad")
            }
            MeshError::NonPositive { what, index, value } => write!(f, "{what} {index} is not positive ({value:e})"),
            MeshError::MeasureMismatch { cells, domain } => {
                write!(f, "cell measures sum to {cells} but the domain measures {domain}")
            }
            MeshError::BrokenAdjacency { face } => write!(f, "face {face} has inconsistent cell adjacency"),
            MeshError::BoundaryFace { face } => write!(f, "face {face} is a boundary face and carries no transmissibility"),
            MeshError::FaceOutOfRange { face, faces } => write!(f, "face {face} out of range ({faces} faces)"),
        }
    }
}

impl core::error::Error for MeshError {}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshWarning {
    /// A triangle is obtuse, so its circumcenter lies outside it. Accepted as
    /// long as all center distances stay positive.
    CircumcenterOutside { cell: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub measure: f64,
    /// Two-point flux point: centroid for rectangles, circumcenter for triangles.
    pub center: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaceKind {
    Interior { cells: [usize; 2], distance: f64, transmissibility: f64 },
    Boundary { cell: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    /// Length in 2D, unit in 1D.
    pub measure: f64,
    /// Unit normal, oriented from `cells[0]` to `cells[1]` for interior faces
    /// and outward for boundary faces.
    pub normal: [f64; 2],
    pub kind: FaceKind,
}

/// Interior face in the compact form used by the assembly loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub face: usize,
    pub inner: usize,
    pub outer: usize,
    pub transmissibility: f64,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    cells: Vec<Cell>,
    faces: Vec<Face>,
    links: Vec<Link>,
    cell_face_offsets: Vec<usize>,
    cell_face_ids: Vec<usize>,
    domain_measure: f64,
    angle_tol: f64,
    warnings: Vec<MeshWarning>,
}

impl Mesh {
    /// Uniform Cartesian grid on `[0, lx]` (1D, `ny = None`) or
    /// `[0, lx] x [0, ly]` (2D). Cells are numbered `i + nx * j`.
    pub fn cartesian(nx: usize, ny: Option<usize>, lx: f64, ly: Option<f64>) -> Result<Self, MeshError> {
        if nx == 0 {
            return Err(MeshError::InvalidDimensions { reason: "nx must be at least 1" });
        }
        if !(lx > 0.0) || !lx.is_finite() {
            return Err(MeshError::InvalidDimensions { reason: "Lx must be positive" });
        }
        match (ny, ly) {
            (None, None) => Ok(Self::cartesian_1d(nx, lx)),
            (Some(ny), Some(ly)) => {
                if ny == 0 {
                    return Err(MeshError::InvalidDimensions { reason: "ny must be at least 1" });
                }
                if !(ly > 0.0) || !ly.is_finite() {
                    return Err(MeshError::InvalidDimensions { reason: "Ly must be positive" });
                }
                Ok(Self::cartesian_2d(nx, ny, lx, ly))
            }
            _ => Err(MeshError::InvalidDimensions { reason: "ny and Ly must be given together" }),
        }
        .and_then(|mesh| {
            mesh.validate()?;
            Ok(mesh)
        })
    }

    fn cartesian_1d(nx: usize, lx: f64) -> Self {
        let h = lx / nx as f64;
        let cells = (0..nx)
            .map(|i| Cell { measure: h, center: [(i as f64 + 0.5) * h, 0.0] })
            .collect();
        let mut faces = Vec::with_capacity(nx + 1);
        faces.push(Face { measure: 1.0, normal: [-1.0, 0.0], kind: FaceKind::Boundary { cell: 0 } });
        for i in 0..nx - 1 {
            faces.push(Face {
                measure: 1.0,
                normal: [1.0, 0.0],
                kind: FaceKind::Interior { cells: [i, i + 1], distance: h, transmissibility: 1.0 / h },
            });
        }
        faces.push(Face { measure: 1.0, normal: [1.0, 0.0], kind: FaceKind::Boundary { cell: nx - 1 } });
        Self::assemble(1, cells, faces, lx, CARTESIAN_ANGLE_TOL, Vec::new())
    }

    fn cartesian_2d(nx: usize, ny: usize, lx: f64, ly: f64) -> Self {
        let hx = lx / nx as f64;
        let hy = ly / ny as f64;
        let id = |i: usize, j: usize| i + nx * j;
        let mut cells = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                cells.push(Cell { measure: hx * hy, center: [(i as f64 + 0.5) * hx, (j as f64 + 0.5) * hy] });
            }
        }
        let mut faces = Vec::new();
        // x-normal faces
        for j in 0..ny {
            faces.push(Face { measure: hy, normal: [-1.0, 0.0], kind: FaceKind::Boundary { cell: id(0, j) } });
            for i in 0..nx - 1 {
                faces.push(Face {
                    measure: hy,
                    normal: [1.0, 0.0],
                    kind: FaceKind::Interior { cells: [id(i, j), id(i + 1, j)], distance: hx, transmissibility: hy / hx },
                });
            }
            faces.push(Face { measure: hy, normal: [1.0, 0.0], kind: FaceKind::Boundary { cell: id(nx - 1, j) } });
        }
        // y-normal faces
        for i in 0..nx {
            faces.push(Face { measure: hx, normal: [0.0, -1.0], kind: FaceKind::Boundary { cell: id(i, 0) } });
            for j in 0..ny - 1 {
                faces.push(Face {
                    measure: hx,
                    normal: [0.0, 1.0],
                    kind: FaceKind::Interior { cells: [id(i, j), id(i, j + 1)], distance: hy, transmissibility: hx / hy },
                });
            }
            faces.push(Face { measure: hx, normal: [0.0, 1.0], kind: FaceKind::Boundary { cell: id(i, ny - 1) } });
        }
        Self::assemble(2, cells, faces, lx * ly, CARTESIAN_ANGLE_TOL, Vec::new())
    }

    /// Builds a two-point flux mesh from a triangulation, using circumcenters
    /// as cell points. Fails on non-Delaunay interior edges (the two
    /// circumcenters must lie strictly on opposite sides of the shared edge).
    pub fn from_triangulation(points: &[[f64; 2]], triangles: &[[usize; 3]]) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::InvalidDimensions { reason: "triangulation has no triangles" });
        }
        let mut cells = Vec::with_capacity(triangles.len());
        let mut warnings = Vec::new();
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= points.len() {
                    return Err(MeshError::VertexOutOfRange { triangle: t, vertex: v });
                }
            }
            let [a, b, c] = [points[tri[0]], points[tri[1]], points[tri[2]]];
            let area2 = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
            let scale = {
                let e1 = hypot(b[0] - a[0], b[1] - a[1]);
                let e2 = hypot(c[0] - a[0], c[1] - a[1]);
                e1 * e2
            };
            if !(area2.abs() > 1e-14 * scale) {
                return Err(MeshError::DegenerateTriangle { triangle: t });
            }
            let center = circumcenter(a, b, c);
            if !point_in_triangle(center, a, b, c) {
                warnings.push(MeshWarning::CircumcenterOutside { cell: t });
            }
            cells.push(Cell { measure: 0.5 * area2.abs(), center });
        }

        // edge -> (triangle, opposite vertex) list
        let mut edges: BTreeMap<[usize; 2], Vec<usize>> = BTreeMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for e in 0..3 {
                let (p, q) = (tri[e], tri[(e + 1) % 3]);
                let key = if p < q { [p, q] } else { [q, p] };
                edges.entry(key).or_default().push(t);
            }
        }

        let mut faces = Vec::with_capacity(edges.len());
        for (key, owners) in edges.iter() {
            let (p, q) = (points[key[0]], points[key[1]]);
            let length = hypot(q[0] - p[0], q[1] - p[1]);
            let tangent = [(q[0] - p[0]) / length, (q[1] - p[1]) / length];
            let mut normal = [tangent[1], -tangent[0]];
            let face = faces.len();
            match owners.as_slice() {
                [k] => {
                    // orient outward: away from the triangle's vertex centroid
                    let g = centroid(triangles[*k], points);
                    if (p[0] - g[0]) * normal[0] + (p[1] - g[1]) * normal[1] < 0.0 {
                        normal = [-normal[0], -normal[1]];
                    }
                    faces.push(Face { measure: length, normal, kind: FaceKind::Boundary { cell: *k } });
                }
                [k, l] => {
                    let gk = centroid(triangles[*k], points);
                    if (p[0] - gk[0]) * normal[0] + (p[1] - gk[1]) * normal[1] < 0.0 {
                        normal = [-normal[0], -normal[1]];
                    }
                    let (xk, xl) = (cells[*k].center, cells[*l].center);
                    let distance = (xl[0] - xk[0]) * normal[0] + (xl[1] - xk[1]) * normal[1];
                    if !(distance > 0.0) {
                        return Err(MeshError::NonDelaunay { face, vertices: *key, distance });
                    }
                    faces.push(Face {
                        measure: length,
                        normal,
                        kind: FaceKind::Interior { cells: [*k, *l], distance, transmissibility: length / distance },
                    });
                }
                _ => return Err(MeshError::NonManifoldEdge { vertices: *key }),
            }
        }

        let domain: f64 = cells.iter().map(|c| c.measure).sum();
        let mesh = Self::assemble(2, cells, faces, domain, IMPORT_ANGLE_TOL, warnings);
        mesh.validate()?;
        Ok(mesh)
    }

    fn assemble(
        dim: usize,
        cells: Vec<Cell>,
        faces: Vec<Face>,
        domain_measure: f64,
        angle_tol: f64,
        warnings: Vec<MeshWarning>,
    ) -> Self {
        let mut links = Vec::new();
        let mut counts = vec![0usize; cells.len() + 1];
        for (f, face) in faces.iter().enumerate() {
            match face.kind {
                FaceKind::Interior { cells: [k, l], transmissibility, .. } => {
                    links.push(Link { face: f, inner: k, outer: l, transmissibility });
                    counts[k + 1] += 1;
                    counts[l + 1] += 1;
                }
                FaceKind::Boundary { cell } => counts[cell + 1] += 1,
            }
        }
        for i in 0..cells.len() {
            counts[i + 1] += counts[i];
        }
        let offsets = counts.clone();
        let mut next = counts;
        let mut ids = vec![0usize; offsets[cells.len()]];
        for (f, face) in faces.iter().enumerate() {
            let mut put = |k: usize| {
                ids[next[k]] = f;
                next[k] += 1;
            };
            match face.kind {
                FaceKind::Interior { cells: [k, l], .. } => {
                    put(k);
                    put(l);
                }
                FaceKind::Boundary { cell } => put(cell),
            }
        }
        Mesh {
            dim,
            cells,
            faces,
            links,
            cell_face_offsets: offsets,
            cell_face_ids: ids,
            domain_measure,
            angle_tol,
            warnings,
        }
    }

    /// Checks every admissibility invariant. Generated and imported meshes go
    /// through the same checks.
    pub fn validate(&self) -> Result<(), MeshError> {
        for (k, cell) in self.cells.iter().enumerate() {
            if !(cell.measure > 0.0) {
                return Err(MeshError::NonPositive { what: "cell measure", index: k, value: cell.measure });
            }
        }
        for (f, face) in self.faces.iter().enumerate() {
            if !(face.measure > 0.0) {
                return Err(MeshError::NonPositive { what: "face measure", index: f, value: face.measure });
            }
            match face.kind {
                FaceKind::Interior { cells: [k, l], distance, transmissibility } => {
                    if k == l || k >= self.cells.len() || l >= self.cells.len() {
                        return Err(MeshError::BrokenAdjacency { face: f });
                    }
                    if !(distance > 0.0) {
                        return Err(MeshError::NonPositive { what: "center distance of face", index: f, value: distance });
                    }
                    if !(transmissibility > 0.0) || !transmissibility.is_finite() {
                        return Err(MeshError::NonPositive {
                            what: "transmissibility of face",
                            index: f,
                            value: transmissibility,
                        });
                    }
                    if !self.cell_faces(k).contains(&f) || !self.cell_faces(l).contains(&f) {
                        return Err(MeshError::BrokenAdjacency { face: f });
                    }
                    let (xk, xl) = (self.cells[k].center, self.cells[l].center);
                    let seg = [xl[0] - xk[0], xl[1] - xk[1]];
                    let n = face.normal;
                    let cross = seg[0] * n[1] - seg[1] * n[0];
                    let dot = seg[0] * n[0] + seg[1] * n[1];
                    let angle = atan2(cross.abs(), dot);
                    if angle > self.angle_tol {
                        return Err(MeshError::NotOrthogonal { face: f, angle });
                    }
                }
                FaceKind::Boundary { cell } => {
                    if cell >= self.cells.len() || !self.cell_faces(cell).contains(&f) {
                        return Err(MeshError::BrokenAdjacency { face: f });
                    }
                }
            }
        }
        let total = self.total_cell_measure();
        if (total - self.domain_measure).abs() > MEASURE_REL_TOL * self.domain_measure {
            return Err(MeshError::MeasureMismatch { cells: total, domain: self.domain_measure });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Interior faces only.
    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn cell_faces(&self, cell: usize) -> &[usize] {
        &self.cell_face_ids[self.cell_face_offsets[cell]..self.cell_face_offsets[cell + 1]]
    }

    pub fn measure(&self, cell: usize) -> f64 {
        self.cells[cell].measure
    }

    /// Compensated sum of the cell measures.
    pub fn total_cell_measure(&self) -> f64 {
        crate::math::compensated_sum(self.cells.iter().map(|c| c.measure))
    }

    pub fn domain_measure(&self) -> f64 {
        self.domain_measure
    }

    pub fn warnings(&self) -> &[MeshWarning] {
        &self.warnings
    }

    pub fn num_interior_faces(&self) -> usize {
        self.links.len()
    }

    /// `|sigma| / d_KL` of an interior face.
    pub fn transmissibility(&self, face: usize) -> Result<f64, MeshError> {
        match self.faces.get(face) {
            None => Err(MeshError::FaceOutOfRange { face, faces: self.faces.len() }),
            Some(Face { kind: FaceKind::Interior { transmissibility, .. }, .. }) => Ok(*transmissibility),
            Some(_) => Err(MeshError::BoundaryFace { face }),
        }
    }

    /// Neighbor lists derived from the interior faces.
    pub fn neighbors(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        self.cell_faces(cell).iter().filter_map(move |&f| match self.faces[f].kind {
            FaceKind::Interior { cells: [k, l], .. } => Some(if k == cell { l } else { k }),
            FaceKind::Boundary { .. } => None,
        })
    }
}

fn centroid(tri: [usize; 3], points: &[[f64; 2]]) -> [f64; 2] {
    let s = tri.iter().fold([0.0, 0.0], |acc, &v| [acc[0] + points[v][0], acc[1] + points[v][1]]);
    [s[0] / 3.0, s[1] / 3.0]
}

fn circumcenter(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> [f64; 2] {
    // relative to `a` for accuracy
    let (bx, by) = (b[0] - a[0], b[1] - a[1]);
    let (cx, cy) = (c[0] - a[0], c[1] - a[1]);
    let d = 2.0 * (bx * cy - by * cx);
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    [a[0] + (cy * b2 - by * c2) / d, a[1] + (bx * c2 - cx * b2) / d]
}

fn point_in_triangle(p: [f64; 2], a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> bool {
    let side = |u: [f64; 2], v: [f64; 2]| (v[0] - u[0]) * (p[1] - u[1]) - (v[1] - u[1]) * (p[0] - u[0]);
    let (s1, s2, s3) = (side(a, b), side(b, c), side(c, a));
    let tol = 1e-12 * (s1.abs() + s2.abs() + s3.abs());
    (s1 >= -tol && s2 >= -tol && s3 >= -tol) || (s1 <= tol && s2 <= tol && s3 <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cartesian_2x2() {
        let mesh = Mesh::cartesian(2, Some(2), 1.0, Some(1.0)).unwrap();
        assert_eq!(mesh.num_cells(), 4);
        assert!(mesh.cells().iter().all(|c| c.measure == 0.25));
        assert_eq!(mesh.num_interior_faces(), 4);
        for link in mesh.links() {
            assert_eq!(mesh.transmissibility(link.face).unwrap(), 1.0);
        }
        assert_eq!(mesh.faces().len(), 12);
    }

    #[test]
    fn cartesian_1d_four_cells() {
        let mesh = Mesh::cartesian(4, None, 1.0, None).unwrap();
        assert_eq!(mesh.dim(), 1);
        assert_eq!(mesh.num_cells(), 4);
        assert!(mesh.cells().iter().all(|c| c.measure == 0.25));
        assert_eq!(mesh.num_interior_faces(), 3);
        assert!(mesh.links().iter().all(|l| l.transmissibility == 4.0));
    }

    #[test]
    fn single_cell_has_no_interior_faces() {
        let mesh = Mesh::cartesian(1, Some(1), 1.0, Some(1.0)).unwrap();
        assert_eq!(mesh.num_cells(), 1);
        assert_eq!(mesh.num_interior_faces(), 0);
        assert_eq!(mesh.cell_faces(0).len(), 4);
    }

    #[test]
    fn rejects_non_positive_dimensions() {
        assert!(Mesh::cartesian(0, None, 1.0, None).is_err());
        assert!(Mesh::cartesian(2, Some(0), 1.0, Some(1.0)).is_err());
        assert!(Mesh::cartesian(2, None, -1.0, None).is_err());
        assert!(Mesh::cartesian(2, Some(2), 1.0, Some(0.0)).is_err());
        assert!(Mesh::cartesian(2, Some(2), 1.0, None).is_err());
    }

    #[test]
    fn transmissibility_values() {
        let mesh = Mesh::cartesian(2, Some(2), 1.0, Some(1.0)).unwrap();
        assert_eq!(mesh.transmissibility(mesh.links()[0].face).unwrap(), 1.0);

        let mesh = Mesh::cartesian(10, None, 1.0, None).unwrap();
        let t = mesh.transmissibility(mesh.links()[0].face).unwrap();
        assert!((t - 10.0).abs() < 1e-12);

        // hx = 0.5, hy = 0.25: a face between horizontal neighbours has
        // length hy and center distance hx
        let mesh = Mesh::cartesian(2, Some(4), 1.0, Some(1.0)).unwrap();
        let vertical = mesh
            .links()
            .iter()
            .find(|l| mesh.faces()[l.face].normal == [1.0, 0.0])
            .unwrap();
        assert_eq!(mesh.transmissibility(vertical.face).unwrap(), 0.5);
    }

    #[test]
    fn boundary_face_has_no_transmissibility() {
        let mesh = Mesh::cartesian(3, None, 1.0, None).unwrap();
        assert_eq!(mesh.transmissibility(0), Err(MeshError::BoundaryFace { face: 0 }));
        assert!(matches!(mesh.transmissibility(99), Err(MeshError::FaceOutOfRange { .. })));
    }

    #[test]
    fn kite_triangulation() {
        // circumcenters (1, 0.75) and (1, -0.75); shared edge of length 2
        let points = [[0.0, 0.0], [2.0, 0.0], [1.0, 2.0], [1.0, -2.0]];
        let mesh = Mesh::from_triangulation(&points, &[[0, 1, 2], [0, 3, 1]]).unwrap();
        assert_eq!(mesh.num_cells(), 2);
        assert_eq!(mesh.num_interior_faces(), 1);
        let link = mesh.links()[0];
        assert!((link.transmissibility - 2.0 / 1.5).abs() < 1e-14);
        assert!((mesh.cells()[0].center[1] - 0.75).abs() < 1e-14);
        assert!((mesh.domain_measure() - 4.0).abs() < 1e-14);
        assert!(mesh.warnings().is_empty());
    }

    #[test]
    fn square_split_is_cocircular() {
        // both right triangles share the hypotenuse midpoint as circumcenter
        let points = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let err = Mesh::from_triangulation(&points, &[[0, 1, 2], [0, 2, 3]]).unwrap_err();
        match err {
            MeshError::NonDelaunay { vertices, distance, .. } => {
                assert_eq!(vertices, [0, 2]);
                assert!(distance.abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn flipped_edge_is_reported() {
        let points = [[0.0, 0.0], [2.0, 0.0], [1.0, 2.0], [1.0, -2.0]];
        let err = Mesh::from_triangulation(&points, &[[0, 3, 2], [1, 2, 3]]).unwrap_err();
        match err {
            MeshError::NonDelaunay { vertices, distance, .. } => {
                assert_eq!(vertices, [2, 3]);
                assert!((distance + 3.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn obtuse_boundary_triangle_warns() {
        // both obtuse angles face boundary edges, so the mesh stays Delaunay
        let points = [[0.0, 0.0], [2.0, 0.0], [1.0, 0.3], [2.5, 1.0]];
        let mesh = Mesh::from_triangulation(&points, &[[0, 1, 2], [1, 3, 2]]).unwrap();
        assert_eq!(
            mesh.warnings(),
            &[MeshWarning::CircumcenterOutside { cell: 0 }, MeshWarning::CircumcenterOutside { cell: 1 }]
        );
        let kite = Mesh::from_triangulation(&[[0.0, 0.0], [2.0, 0.0], [1.0, 2.0], [1.0, -2.0]], &[[0, 1, 2], [0, 3, 1]])
            .unwrap();
        assert!(kite.warnings().is_empty());
    }

    #[test]
    fn rejects_bad_indices_and_degenerate_triangles() {
        let points = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        assert!(matches!(
            Mesh::from_triangulation(&points, &[[0, 1, 5]]),
            Err(MeshError::VertexOutOfRange { vertex: 5, .. })
        ));
        assert!(matches!(
            Mesh::from_triangulation(&points, &[[0, 1, 2]]),
            Err(MeshError::DegenerateTriangle { triangle: 0 })
        ));
        assert!(Mesh::from_triangulation(&points, &[]).is_err());
    }

    proptest! {
        #[test]
        fn cartesian_measure_and_adjacency(nx in 1usize..=256, ny in 1usize..=256, lx in 0.1f64..10.0, ly in 0.1f64..10.0) {
            let mesh = Mesh::cartesian(nx, Some(ny), lx, Some(ly)).unwrap();
            let total = mesh.total_cell_measure();
            prop_assert!((total - lx * ly).abs() <= 1e-12 * lx * ly);
            for link in mesh.links() {
                prop_assert!(link.inner != link.outer);
                prop_assert!(mesh.cell_faces(link.inner).contains(&link.face));
                prop_assert!(mesh.cell_faces(link.outer).contains(&link.face));
            }
            prop_assert!(mesh.validate().is_ok());
        }

        #[test]
        fn cartesian_1d_measure(nx in 1usize..=256, lx in 0.1f64..10.0) {
            let mesh = Mesh::cartesian(nx, None, lx, None).unwrap();
            let total = mesh.total_cell_measure();
            prop_assert!((total - lx).abs() <= 1e-12 * lx);
        }
    }
}
