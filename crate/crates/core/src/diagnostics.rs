//! Post-step and post-run measurements.

use alloc::vec::Vec;
use core::fmt;

use crate::mesh::Mesh;
use crate::model::{EnergyReport, ModelError, ModelParams, Potentials, State};
use crate::scheme::discrete_laplacian;

#[derive(Debug, Clone, PartialEq)]
pub enum DiagnosticsError {
    EmptyTrajectory,
    SizeMismatch { expected: usize, found: usize },
    InvalidThresholds { lo: f64, hi: f64 },
    InitialEnergyMismatch { nonlocal: f64, local: f64 },
    Model(ModelError),
}

impl fmt::Display for DiagnosticsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagnosticsError::EmptyTrajectory => write!(f, "trajectory has no states"),
            DiagnosticsError::SizeMismatch { expected, found } => write!(f, "expected {expected} entries, found {found}"),
            DiagnosticsError::InvalidThresholds { lo, hi } => write!(f, "thresholds must satisfy lo < hi, got ({lo}, {hi})"),
            DiagnosticsError::InitialEnergyMismatch { nonlocal, local } => {
                write!(f, "initial energies differ: {nonlocal} vs {local}")
            }
            DiagnosticsError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for DiagnosticsError {}

impl From<ModelError> for DiagnosticsError {
    fn from(e: ModelError) -> Self {
        DiagnosticsError::Model(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsCheck {
    pub pass: bool,
    /// Largest distance outside `[0, 1]` (zero on pass).
    pub worst_violation: f64,
    pub worst_cell: Option<usize>,
}

/// Exact check of `0 <= c1 <= 1`; no tolerance.
pub fn check_bounds(c1: &[f64]) -> BoundsCheck {
    let mut out = BoundsCheck { pass: true, worst_violation: 0.0, worst_cell: None };
    for (k, &c) in c1.iter().enumerate() {
        let v = if c.is_nan() { f64::INFINITY } else { (-c).max(c - 1.0) };
        if v > 0.0 && (out.pass || v > out.worst_violation) {
            out = BoundsCheck { pass: false, worst_violation: v, worst_cell: Some(k) };
        }
    }
    out
}

/// Largest relative mass change per phase against the first entry; `None`
/// for a phase with zero initial mass.
pub fn mass_drift(masses: &[[f64; 2]]) -> Result<[Option<f64>; 2], DiagnosticsError> {
    let first = masses.first().ok_or(DiagnosticsError::EmptyTrajectory)?;
    let mut out = [None, None];
    for (i, slot) in out.iter_mut().enumerate() {
        if first[i] != 0.0 {
            let worst = masses.iter().map(|m| ((m[i] - first[i]) / first[i]).abs()).fold(0.0, f64::max);
            *slot = Some(worst);
        }
    }
    Ok(out)
}

/// [`mass_drift`] over a series of energy reports.
pub fn mass_drift_of_reports(reports: &[EnergyReport]) -> Result<[Option<f64>; 2], DiagnosticsError> {
    let masses: Vec<[f64; 2]> = reports.iter().map(|r| r.mass).collect();
    mass_drift(&masses)
}

/// Total measure of cells with `lo < c1 < hi`.
pub fn mixed_region_measure(mesh: &Mesh, c1: &[f64], lo: f64, hi: f64) -> Result<f64, DiagnosticsError> {
    if !(lo < hi) {
        return Err(DiagnosticsError::InvalidThresholds { lo, hi });
    }
    if c1.len() != mesh.num_cells() {
        return Err(DiagnosticsError::SizeMismatch { expected: mesh.num_cells(), found: c1.len() });
    }
    Ok(crate::math::compensated_sum(
        c1.iter().enumerate().filter(|(_, &c)| lo < c && c < hi).map(|(k, _)| mesh.measure(k)),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRow {
    pub t: f64,
    pub nonlocal: f64,
    pub local: f64,
}

/// Energies of two runs at the given times, read from each run's own
/// series (`times_*[i]` is the time of `energies_*[i]`). Each requested time
/// must appear in both series within `1e-12` relative.
pub fn energy_comparison(
    times_nonlocal: &[f64],
    energies_nonlocal: &[EnergyReport],
    times_local: &[f64],
    energies_local: &[EnergyReport],
    times: &[f64],
) -> Result<Vec<EnergyRow>, DiagnosticsError> {
    for (t, e) in [(times_nonlocal, energies_nonlocal), (times_local, energies_local)] {
        if t.len() != e.len() {
            return Err(DiagnosticsError::SizeMismatch { expected: t.len(), found: e.len() });
        }
        if t.is_empty() {
            return Err(DiagnosticsError::EmptyTrajectory);
        }
    }
    let (e0n, e0l) = (energies_nonlocal[0].e_total, energies_local[0].e_total);
    if (e0n - e0l).abs() > 1e-12 {
        return Err(DiagnosticsError::InitialEnergyMismatch { nonlocal: e0n, local: e0l });
    }
    let lookup = |ts: &[f64], es: &[EnergyReport], t: f64| {
        ts.iter().position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0)).map(|i| es[i].e_total)
    };
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let nonlocal = lookup(times_nonlocal, energies_nonlocal, t);
        let local = lookup(times_local, energies_local, t);
        match (nonlocal, local) {
            (Some(nonlocal), Some(local)) => rows.push(EnergyRow { t, nonlocal, local }),
            _ => return Err(DiagnosticsError::SizeMismatch { expected: times.len(), found: rows.len() }),
        }
    }
    Ok(rows)
}

/// Residuals of the steepest-descent relation at a non-local state: the
/// largest cell value of `|mu1 - mu2 + alpha Lap c1 - chi (1 - 2 c1)|` and
/// the normalization `sum |K| (c1 mu1 + c2 mu2)`.
pub fn potential_relation_residual(
    mesh: &Mesh,
    state: &State,
    params: &ModelParams,
) -> Result<(f64, f64), DiagnosticsError> {
    let (mu1, mu2) = match &state.potentials {
        Potentials::Phase { mu1, mu2 } => (mu1, mu2),
        Potentials::Generalized { .. } => {
            return Err(ModelError::WrongModelKind { expected: crate::model::ModelKind::NonLocal }.into())
        }
    };
    if state.c1.len() != mesh.num_cells() || mu1.len() != mesh.num_cells() || mu2.len() != mesh.num_cells() {
        return Err(DiagnosticsError::SizeMismatch { expected: mesh.num_cells(), found: state.c1.len() });
    }
    let lap = discrete_laplacian(mesh, &state.c1).map_err(|_| DiagnosticsError::SizeMismatch {
        expected: mesh.num_cells(),
        found: state.c1.len(),
    })?;
    let c = &state.c1;
    let worst = (0..c.len())
        .map(|k| (mu1[k] - mu2[k] + params.alpha * lap[k] - params.chi * (1.0 - 2.0 * c[k])).abs())
        .fold(0.0, f64::max);
    let norm = crate::math::compensated_sum(
        (0..c.len()).map(|k| mesh.measure(k) * (c[k] * mu1[k] + (1.0 - c[k]) * mu2[k])),
    );
    Ok((worst, norm))
}
