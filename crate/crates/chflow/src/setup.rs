//! Mesh, parameters and initial data from a [`RunConfig`].

use std::path::Path;

use chflow_core::mesh::{Mesh, MeshError};
use chflow_core::model::{ModelError, ModelKind, ModelParams};
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use thiserror::Error;

use crate::config::{InitialSpec, MeshSpec, PsiSpec, RunConfig};
use crate::meshfile::{read_mesh, MeshFileError, Triangulation};

#[derive(Debug, Error)]
pub enum SetupError {
    #[error(transparent)]
    MeshFile(#[from] MeshFileError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("initial data: {0}")]
    Initial(String),
    #[error("{0}")]
    Field(String),
}

/// Geometry of a run, with what the VTK writer needs to draw it.
#[derive(Debug, Clone)]
pub enum Geometry {
    Cartesian { nx: usize, ny: Option<usize>, lx: f64, ly: Option<f64> },
    Triangles(Triangulation),
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub mesh: Mesh,
    pub geometry: Geometry,
    pub c1: Vec<f64>,
}

impl Problem {
    pub fn build(cfg: &RunConfig) -> Result<Self, SetupError> {
        let (mesh, geometry) = match &cfg.mesh {
            &MeshSpec::Cartesian { nx, ny, lx, ly } => {
                (Mesh::cartesian(nx, ny, lx, ly)?, Geometry::Cartesian { nx, ny, lx, ly })
            }
            MeshSpec::File(path) => {
                let (mesh, tri) = read_mesh(path)?;
                (mesh, Geometry::Triangles(tri))
            }
        };
        let c1 = initial_condition(&cfg.initial, &mesh, cfg.seed)?;
        Ok(Problem { mesh, geometry, c1 })
    }

    pub fn params(&self, cfg: &RunConfig, kind: ModelKind) -> Result<ModelParams, SetupError> {
        let n = self.mesh.num_cells();
        let field = |spec: &PsiSpec| -> Result<Vec<f64>, SetupError> {
            let cells = self.mesh.cells().iter();
            Ok(match spec {
                PsiSpec::Constant(v) => vec![*v; n],
                PsiSpec::Linear { gx, gy } => cells.map(|c| gx * c.center[0] + gy * c.center[1]).collect(),
                PsiSpec::File(path) => read_values(path, n, "potential")?,
            })
        };
        let params = ModelParams::new(kind, cfg.alpha, cfg.chi, cfg.theta, cfg.mobility, n)?
            .with_potentials(field(&cfg.psi[0])?, field(&cfg.psi[1])?)?;
        Ok(params)
    }
}

/// Bounding box `[x0, x1, y0, y1]` of the cell centers.
fn center_box(mesh: &Mesh) -> [f64; 4] {
    mesh.cells().iter().map(|c| c.center).fold([f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY], |b, p| {
        [b[0].min(p[0]), b[1].max(p[0]), b[2].min(p[1]), b[3].max(p[1])]
    })
}

/// Cell values of the initial saturation, clamped to `[0, 1]`.
pub fn initial_condition(spec: &InitialSpec, mesh: &Mesh, seed: Option<u64>) -> Result<Vec<f64>, SetupError> {
    let n = mesh.num_cells();
    let mut c = match spec {
        InitialSpec::Uniform(v) => vec![*v; n],
        InitialSpec::Cross { width, length } => {
            if mesh.dim() != 2 {
                return Err(SetupError::Initial("the cross needs a 2D mesh".into()));
            }
            let b = center_box(mesh);
            // centers of the outermost cells bracket the domain symmetrically
            let (cx, cy) = (0.5 * (b[0] + b[1]), 0.5 * (b[2] + b[3]));
            let (hw, hl) = (0.5 * width, 0.5 * length);
            mesh.cells()
                .iter()
                .map(|cell| {
                    let (dx, dy) = ((cell.center[0] - cx).abs(), (cell.center[1] - cy).abs());
                    let horizontal = dx <= hl && dy <= hw;
                    let vertical = dx <= hw && dy <= hl;
                    if horizontal || vertical {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        }
        InitialSpec::Spinodal { amplitude, mean } => {
            let seed = seed.ok_or_else(|| SetupError::Initial("random initial data needs a seed".into()))?;
            let mut rng = Pcg64::seed_from_u64(seed);
            let r: Vec<f64> =
                (0..n).map(|_| if *amplitude > 0.0 { rng.gen_range(-amplitude..*amplitude) } else { 0.0 }).collect();
            let avg = (0..n).map(|k| mesh.measure(k) * r[k]).sum::<f64>() / mesh.domain_measure();
            // centering alone could push a sample past the amplitude
            let scale = if *amplitude > 0.0 { amplitude / (amplitude + avg.abs()) } else { 0.0 };
            r.iter().map(|v| mean + scale * (v - avg)).collect()
        }
        InitialSpec::Cosine { mean, amplitude } => {
            if mesh.dim() != 1 {
                return Err(SetupError::Initial("the cosine profile needs a 1D mesh".into()));
            }
            // 1D grids cover [0, lx]
            let lx = mesh.domain_measure();
            let pi = std::f64::consts::PI;
            mesh.cells().iter().map(|cell| mean + amplitude * (pi * cell.center[0] / lx).cos()).collect()
        }
        InitialSpec::File(path) => {
            let values = read_values(path, n, "initial data")?;
            if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(SetupError::Initial("values must lie in [0, 1]".into()));
            }
            values
        }
    };
    for v in &mut c {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(c)
}

/// Whitespace-separated values, one per cell.
fn read_values(path: &Path, n: usize, what: &str) -> Result<Vec<f64>, SetupError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| SetupError::Io { path: path.display().to_string(), source })?;
    let values = text
        .split_whitespace()
        .map(|t| t.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| SetupError::Field(format!("{what}: cannot parse `{t}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != n {
        return Err(SetupError::Field(format!("{what}: {} values for {n} cells", values.len())));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_half() {
        let mesh = Mesh::cartesian(5, Some(3), 2.0, Some(1.0)).unwrap();
        let c = initial_condition(&InitialSpec::Uniform(0.5), &mesh, None).unwrap();
        let mass: f64 = (0..15).map(|k| mesh.measure(k) * c[k]).sum();
        assert!(c.iter().all(|v| *v == 0.5));
        assert!((mass - 0.5 * 2.0).abs() < 1e-14);
    }

    #[test]
    fn spinodal_bounds_and_mean() {
        let mesh = Mesh::cartesian(16, Some(16), 1.0, Some(1.0)).unwrap();
        let spec = InitialSpec::Spinodal { amplitude: 0.01, mean: 0.5 };
        let c = initial_condition(&spec, &mesh, Some(42)).unwrap();
        assert!(c.iter().all(|v| (0.49..=0.51).contains(v)));
        let mean = c.iter().sum::<f64>() / 256.0;
        assert!((mean - 0.5).abs() < 1e-15);
        assert_eq!(c, initial_condition(&spec, &mesh, Some(42)).unwrap());
        assert_ne!(c, initial_condition(&spec, &mesh, Some(43)).unwrap());
        assert!(initial_condition(&spec, &mesh, None).is_err());
    }

    #[test]
    fn cross_area() {
        // 20 x 20 cells align with the bar edges
        let mesh = Mesh::cartesian(20, Some(20), 1.0, Some(1.0)).unwrap();
        let c = initial_condition(&InitialSpec::Cross { width: 0.2, length: 0.8 }, &mesh, None).unwrap();
        let mass: f64 = (0..400).map(|k| mesh.measure(k) * c[k]).sum();
        // two 0.2 x 0.8 bars sharing a 0.2 x 0.2 square
        assert!((mass - (2.0 * 0.2 * 0.8 - 0.2 * 0.2)).abs() < 1e-12);
        assert!(c.iter().all(|v| *v == 0.0 || *v == 1.0));
    }

    #[test]
    fn cosine_profile() {
        let mesh = Mesh::cartesian(4, None, 1.0, None).unwrap();
        let c = initial_condition(&InitialSpec::Cosine { mean: 0.5, amplitude: 0.3 }, &mesh, None).unwrap();
        let pi = std::f64::consts::PI;
        for (k, v) in c.iter().enumerate() {
            let x = (k as f64 + 0.5) / 4.0;
            assert!((v - (0.5 + 0.3 * (pi * x).cos())).abs() < 1e-14);
        }
    }
}
