use chflow_core::scheme::discrete_laplacian;
use chflow_core::Mesh;
use proptest::prelude::*;

/// Rows of isosceles triangles, every other row shifted by half a base.
/// All triangles are acute for `height > 0.5`, hence Delaunay.
fn lattice(cols: usize, rows: usize, height: f64) -> (Vec<[f64; 2]>, Vec<[usize; 3]>) {
    let mut points = Vec::new();
    for j in 0..=rows {
        let shift = if j % 2 == 1 { 0.5 } else { 0.0 };
        for i in 0..=cols {
            points.push([i as f64 + shift, j as f64 * height]);
        }
    }
    let id = |i: usize, j: usize| j * (cols + 1) + i;
    let mut triangles = Vec::new();
    for j in 0..rows {
        for i in 0..cols {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            if j % 2 == 0 {
                triangles.push([a, b, c]);
                if i + 1 < cols {
                    triangles.push([b, d, c]);
                }
            } else {
                triangles.push([a, d, c]);
                if i + 1 < cols {
                    triangles.push([a, b, d]);
                }
            }
        }
    }
    (points, triangles)
}

fn shoelace(p: &[[f64; 2]], t: &[usize; 3]) -> f64 {
    let [a, b, c] = [p[t[0]], p[t[1]], p[t[2]]];
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs()
}

proptest! {
    #[test]
    fn cartesian_measures_and_links(nx in 1usize..9, ny in 1usize..9, lx in 0.2..3.0f64, ly in 0.2..3.0f64) {
        let mesh = Mesh::cartesian(nx, Some(ny), lx, Some(ly)).unwrap();
        prop_assert_eq!(mesh.num_cells(), nx * ny);
        prop_assert!((mesh.domain_measure() - lx * ly).abs() < 1e-12);
        prop_assert_eq!(mesh.num_interior_faces(), (nx - 1) * ny + nx * (ny - 1));
        let (hx, hy) = (lx / nx as f64, ly / ny as f64);
        let cells = mesh.cells();
        for l in mesh.links() {
            let dy = (cells[l.inner].center[1] - cells[l.outer].center[1]).abs();
            let horizontal = dy < 0.5 * hy;
            let expected = if horizontal { hy / hx } else { hx / hy };
            prop_assert!((l.transmissibility - expected).abs() < 1e-12 * expected);
        }
    }

    #[test]
    fn laplacian_kills_affine_fields(cols in 2usize..6, rows in 2usize..6, height in 0.6..1.2f64, gx in -2.0..2.0f64, gy in -2.0..2.0f64) {
        let (points, triangles) = lattice(cols, rows, height);
        let mesh = Mesh::from_triangulation(&points, &triangles).unwrap();
        let area: f64 = triangles.iter().map(|t| shoelace(&points, t)).sum();
        prop_assert!((mesh.domain_measure() - area).abs() < 1e-12 * area);
        let field: Vec<f64> = mesh.cells().iter().map(|c| gx * c.center[0] + gy * c.center[1]).collect();
        let lap = discrete_laplacian(&mesh, &field).unwrap();
        for k in 0..mesh.num_cells() {
            if mesh.neighbors(k).count() == 3 {
                prop_assert!(lap[k].abs() < 1e-10, "cell {} gives {}", k, lap[k]);
            }
        }
        // constants are always in the kernel
        let ones = discrete_laplacian(&mesh, &vec![1.0; mesh.num_cells()]).unwrap();
        prop_assert!(ones.iter().all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn flipped_diagonal_is_rejected() {
    // the long diagonal of a flat kite violates the empty-circle condition
    let points = [[0.0, 0.0], [2.0, -0.2], [4.0, 0.0], [2.0, 0.2]];
    assert!(Mesh::from_triangulation(&points, &[[0, 1, 2], [0, 2, 3]]).is_err());
    assert!(Mesh::from_triangulation(&points, &[[0, 1, 3], [1, 2, 3]]).is_ok());
}
