//! Physical parameters, closed-form model functions and discrete energies.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math::{compensated_sum, ln, ln_floored, sqrt};
use crate::mesh::Mesh;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    OutOfDomain { value: f64 },
    InvalidParameter { name: &'static str, value: f64 },
    SizeMismatch { expected: usize, found: usize },
    /// The local model has no thermal diffusion term.
    ThermalTermInLocalModel,
    WrongModelKind { expected: ModelKind },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::OutOfDomain { value } => write!(f, "saturation {value} outside [0, 1]"),
            ModelError::InvalidParameter { name, value } => write!(f, "invalid parameter {name} = {value}"),
            ModelError::SizeMismatch { expected, found } => {
                write!(f, "field has {found} values but the mesh has {expected} cells")
            }
            ModelError::ThermalTermInLocalModel => write!(f, "theta must be (0, 0) for the local model"),
            ModelError::WrongModelKind { expected } => write!(f, "operation requires a {expected:?} state"),
        }
    }
}

impl core::error::Error for ModelError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Classical degenerate Cahn-Hilliard with a single generalized potential.
    Local,
    /// Two-phase two-flux system with one chemical potential per phase.
    NonLocal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub kind: ModelKind,
    /// Interface coefficient `alpha = alpha1 + alpha2`.
    pub alpha: f64,
    pub chi: f64,
    pub theta: [f64; 2],
    pub mobility: [f64; 2],
    /// Per-cell exterior potentials.
    pub psi: [Vec<f64>; 2],
}

impl ModelParams {
    /// Parameters with zero exterior potentials on `num_cells` cells.
    pub fn new(
        kind: ModelKind,
        alpha: f64,
        chi: f64,
        theta: [f64; 2],
        mobility: [f64; 2],
        num_cells: usize,
    ) -> Result<Self, ModelError> {
        let params = ModelParams {
            kind,
            alpha,
            chi,
            theta,
            mobility,
            psi: [vec![0.0; num_cells], vec![0.0; num_cells]],
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_potentials(mut self, psi1: Vec<f64>, psi2: Vec<f64>) -> Result<Self, ModelError> {
        let n = self.psi[0].len();
        for field in [&psi1, &psi2] {
            if field.len() != n {
                return Err(ModelError::SizeMismatch { expected: n, found: field.len() });
            }
        }
        self.psi = [psi1, psi2];
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = |name, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ModelError::InvalidParameter { name, value: v })
            }
        };
        positive("alpha", self.alpha)?;
        positive("chi", self.chi)?;
        positive("m1", self.mobility[0])?;
        positive("m2", self.mobility[1])?;
        for (name, t) in [("theta1", self.theta[0]), ("theta2", self.theta[1])] {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(ModelError::InvalidParameter { name, value: t });
            }
        }
        if self.psi[0].len() != self.psi[1].len() {
            return Err(ModelError::SizeMismatch { expected: self.psi[0].len(), found: self.psi[1].len() });
        }
        if self.kind == ModelKind::Local && (self.theta[0] != 0.0 || self.theta[1] != 0.0) {
            return Err(ModelError::ThermalTermInLocalModel);
        }
        Ok(())
    }

    pub fn num_cells(&self) -> usize {
        self.psi[0].len()
    }

    pub(crate) fn check_mesh(&self, mesh: &Mesh) -> Result<(), ModelError> {
        if self.num_cells() != mesh.num_cells() {
            return Err(ModelError::SizeMismatch { expected: mesh.num_cells(), found: self.num_cells() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Potentials {
    /// `mu1`, `mu2` of the non-local model.
    Phase { mu1: Vec<f64>, mu2: Vec<f64> },
    /// `mu = mu1 - mu2` of the local model.
    Generalized { mu: Vec<f64> },
}

/// One time level. `c2 = 1 - c1` is never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub c1: Vec<f64>,
    pub potentials: Potentials,
    pub time: f64,
}

impl State {
    /// Saturation field with zero potentials for the given model.
    pub fn with_saturation(kind: ModelKind, c1: Vec<f64>) -> Self {
        let n = c1.len();
        let potentials = match kind {
            ModelKind::NonLocal => Potentials::Phase { mu1: vec![0.0; n], mu2: vec![0.0; n] },
            ModelKind::Local => Potentials::Generalized { mu: vec![0.0; n] },
        };
        State { c1, potentials, time: 0.0 }
    }

    pub fn kind(&self) -> ModelKind {
        match self.potentials {
            Potentials::Phase { .. } => ModelKind::NonLocal,
            Potentials::Generalized { .. } => ModelKind::Local,
        }
    }

    pub fn len(&self) -> usize {
        self.c1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c1.is_empty()
    }

    pub fn c2(&self) -> Vec<f64> {
        self.c1.iter().map(|c| 1.0 - c).collect()
    }

    pub(crate) fn check_mesh(&self, mesh: &Mesh) -> Result<(), ModelError> {
        let n = mesh.num_cells();
        let lens = match &self.potentials {
            Potentials::Phase { mu1, mu2 } => [self.c1.len(), mu1.len(), mu2.len()],
            Potentials::Generalized { mu } => [self.c1.len(), mu.len(), n],
        };
        for found in lens {
            if found != n {
                return Err(ModelError::SizeMismatch { expected: n, found });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dissipation {
    /// Discrete `integral |J_tot|^2 / (m1 c1 + m2 c2)`.
    pub total_flux: f64,
    /// Discrete `integral eta(c1) |grad(mu1 - mu2)|^2`.
    pub exchange: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyReport {
    pub e_dir: f64,
    pub e_chem: f64,
    pub e_therm: f64,
    pub e_ext: f64,
    pub e_total: f64,
    /// `sum |K| H(c_i)` per phase.
    pub entropy: [f64; 2],
    pub mass: [f64; 2],
    pub dissipation: Option<Dissipation>,
}

fn check_saturation(c: f64) -> Result<(), ModelError> {
    if (0.0..=1.0).contains(&c) {
        Ok(())
    } else {
        Err(ModelError::OutOfDomain { value: c })
    }
}

/// Degenerate mobility of the local model,
/// `m1 m2 c (1 - c) / (m1 c + m2 (1 - c))`.
pub fn eta(c: f64, m1: f64, m2: f64) -> Result<f64, ModelError> {
    check_saturation(c)?;
    Ok(eta_unchecked(c, m1, m2))
}

#[inline]
pub(crate) fn eta_unchecked(c: f64, m1: f64, m2: f64) -> f64 {
    let den = m1 * c + m2 * (1.0 - c);
    if den == 0.0 {
        0.0
    } else {
        m1 * m2 * c * (1.0 - c) / den
    }
}

#[inline]
pub(crate) fn eta_derivative(c: f64, m1: f64, m2: f64) -> f64 {
    let den = m1 * c + m2 * (1.0 - c);
    // d/dc [c(1-c)/den] = ((1-2c) den - c(1-c)(m1-m2)) / den^2
    m1 * m2 * ((1.0 - 2.0 * c) * den - c * (1.0 - c) * (m1 - m2)) / (den * den)
}

/// Maximizer of `eta` on `[0, 1]`: `sqrt(m2) / (sqrt(m1) + sqrt(m2))`.
pub fn eta_argmax(m1: f64, m2: f64) -> f64 {
    let (s1, s2) = (sqrt(m1), sqrt(m2));
    s2 / (s1 + s2)
}

/// Fraction of the total flux carried by phase 1,
/// `m1 c / (m1 c + m2 (1 - c))`.
pub fn rho(c: f64, m1: f64, m2: f64) -> Result<f64, ModelError> {
    check_saturation(c)?;
    Ok(m1 * c / (m1 * c + m2 * (1.0 - c)))
}

/// Thermal contribution `theta1 log(c) - theta2 log(1 - c)` to the potential
/// difference. A vanishing `theta` switches its term off even at the
/// endpoint; otherwise the raw value is `-inf`/`+inf` at `c = 0`/`c = 1`.
pub fn f_log(c: f64, theta1: f64, theta2: f64) -> f64 {
    let t1 = if theta1 == 0.0 { 0.0 } else { theta1 * ln(c) };
    let t2 = if theta2 == 0.0 { 0.0 } else { theta2 * ln(1.0 - c) };
    t1 - t2
}

/// `f_log` with both logarithms floored at `LOG_FLOOR`, for use on Newton
/// iterates.
pub fn f_log_regularized(c: f64, theta1: f64, theta2: f64) -> f64 {
    theta1 * ln_floored(c) - theta2 * ln_floored(1.0 - c)
}

/// `H(c) = c log c - c + 1`, continuous at `H(0) = 1`.
pub fn entropy_density(c: f64) -> f64 {
    if c <= 0.0 {
        1.0
    } else {
        c * ln(c) - c + 1.0
    }
}

/// Decomposed discrete free energy plus entropies and masses.
pub fn discrete_energy(mesh: &Mesh, state: &State, params: &ModelParams) -> Result<EnergyReport, ModelError> {
    state.check_mesh(mesh)?;
    params.check_mesh(mesh)?;
    let c1 = &state.c1;

    let e_dir = 0.5
        * params.alpha
        * compensated_sum(mesh.links().iter().map(|l| {
            let d = c1[l.inner] - c1[l.outer];
            l.transmissibility * d * d
        }));

    let cells = mesh.cells();
    let e_chem = params.chi * compensated_sum(cells.iter().zip(c1).map(|(k, &c)| k.measure * c * (1.0 - c)));

    let entropy = [
        compensated_sum(cells.iter().zip(c1).map(|(k, &c)| k.measure * entropy_density(c))),
        compensated_sum(cells.iter().zip(c1).map(|(k, &c)| k.measure * entropy_density(1.0 - c))),
    ];
    let e_therm = params.theta[0] * entropy[0] + params.theta[1] * entropy[1];

    let e_ext = compensated_sum(
        cells
            .iter()
            .enumerate()
            .map(|(k, cell)| cell.measure * (c1[k] * params.psi[0][k] + (1.0 - c1[k]) * params.psi[1][k])),
    );

    let mass = [
        compensated_sum(cells.iter().zip(c1).map(|(k, &c)| k.measure * c)),
        compensated_sum(cells.iter().zip(c1).map(|(k, &c)| k.measure * (1.0 - c))),
    ];

    Ok(EnergyReport {
        e_dir,
        e_chem,
        e_therm,
        e_ext,
        e_total: e_dir + e_chem + e_therm + e_ext,
        entropy,
        mass,
        dissipation: None,
    })
}

/// Cell-wise first variation of the discrete energy with respect to `c1`
/// along `c2 = 1 - c1`, i.e. `(dE/dc1_K) / |K|`:
/// `-alpha Lap_h c1 + chi (1 - 2 c1) + f(c1) + psi1 - psi2`.
pub fn energy_gradient(mesh: &Mesh, c1: &[f64], params: &ModelParams) -> Result<Vec<f64>, ModelError> {
    params.check_mesh(mesh)?;
    if c1.len() != mesh.num_cells() {
        return Err(ModelError::SizeMismatch { expected: mesh.num_cells(), found: c1.len() });
    }
    let mut grad = vec![0.0; c1.len()];
    for l in mesh.links() {
        let flux = params.alpha * l.transmissibility * (c1[l.inner] - c1[l.outer]);
        grad[l.inner] += flux;
        grad[l.outer] -= flux;
    }
    for (k, g) in grad.iter_mut().enumerate() {
        *g = *g / mesh.measure(k)
            + params.chi * (1.0 - 2.0 * c1[k])
            + f_log_regularized(c1[k], params.theta[0], params.theta[1])
            + params.psi[0][k]
            - params.psi[1][k];
    }
    Ok(grad)
}

/// Splits the instantaneous dissipation of a non-local state into the part
/// carried by the total flux and the exchange part that the local model
/// retains. Per interior face, with upwinded `a_i = m_i tau c_i,up` and
/// potential jumps `d_i` of `mu_i + psi_i`:
/// `total_flux += (a1 d1 + a2 d2)^2 / (a1 + a2)` and
/// `exchange += a1 a2 (d1 - d2)^2 / (a1 + a2)`. Their sum is
/// `sum_i a_i d_i^2`, the full two-phase dissipation.
pub fn half_step_dissipation(mesh: &Mesh, state: &State, params: &ModelParams) -> Result<Dissipation, ModelError> {
    let (mu1, mu2) = match &state.potentials {
        Potentials::Phase { mu1, mu2 } => (mu1, mu2),
        Potentials::Generalized { .. } => return Err(ModelError::WrongModelKind { expected: ModelKind::NonLocal }),
    };
    state.check_mesh(mesh)?;
    params.check_mesh(mesh)?;
    let c1 = &state.c1;
    let [m1, m2] = params.mobility;
    let mut out = Dissipation::default();
    for l in mesh.links() {
        let (k, j) = (l.inner, l.outer);
        let d1 = (mu1[k] + params.psi[0][k]) - (mu1[j] + params.psi[0][j]);
        let d2 = (mu2[k] + params.psi[1][k]) - (mu2[j] + params.psi[1][j]);
        let a1 = m1 * l.transmissibility * upwind(c1[k], c1[j], d1);
        let a2 = m2 * l.transmissibility * upwind(1.0 - c1[k], 1.0 - c1[j], d2);
        let a = a1 + a2;
        if a > 0.0 {
            let f = a1 * d1 + a2 * d2;
            out.total_flux += f * f / a;
            out.exchange += a1 * a2 * (d1 - d2) * (d1 - d2) / a;
        }
    }
    Ok(out)
}

/// Upstream value for a potential drop `dv = V_K - V_L`; ties take the max.
#[inline]
pub(crate) fn upwind(ck: f64, cl: f64, dv: f64) -> f64 {
    if dv > 0.0 {
        ck
    } else if dv < 0.0 {
        cl
    } else {
        ck.max(cl)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(kind: ModelKind, n: usize) -> ModelParams {
        ModelParams::new(kind, 1.0, 0.8, [0.0, 0.0], [1.0, 1.0], n).unwrap()
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta(0.0, 2.0, 3.0).unwrap(), 0.0);
        assert_eq!(eta(1.0, 2.0, 3.0).unwrap(), 0.0);
        assert_eq!(eta(0.5, 1.0, 1.0).unwrap(), 0.25);
        assert!(matches!(eta(1.5, 1.0, 1.0), Err(ModelError::OutOfDomain { .. })));
        assert!(eta(-0.1, 1.0, 1.0).is_err());
    }

    #[test]
    fn eta_argmax_is_stationary() {
        for (m1, m2) in [(1.0, 1.0), (2.0, 1.0), (0.3, 5.0)] {
            let c = eta_argmax(m1, m2);
            assert!(eta_derivative(c, m1, m2).abs() < 1e-12);
            let h = 1e-4;
            assert!(eta_unchecked(c, m1, m2) >= eta_unchecked(c + h, m1, m2));
            assert!(eta_unchecked(c, m1, m2) >= eta_unchecked(c - h, m1, m2));
        }
        assert_eq!(eta_argmax(1.0, 1.0), 0.5);
    }

    #[test]
    fn eta_derivative_matches_differences() {
        let (m1, m2) = (2.5, 0.7);
        for i in 1..20 {
            let c = i as f64 / 20.0;
            let h = 1e-6;
            let fd = (eta_unchecked(c + h, m1, m2) - eta_unchecked(c - h, m1, m2)) / (2.0 * h);
            assert!((fd - eta_derivative(c, m1, m2)).abs() < 1e-8);
        }
    }

    #[test]
    fn rho_examples() {
        for i in 0..=10 {
            let c = i as f64 / 10.0;
            assert!((rho(c, 3.0, 3.0).unwrap() - c).abs() < 1e-15);
        }
        assert_eq!(rho(0.0, 2.0, 1.0).unwrap(), 0.0);
        assert_eq!(rho(1.0, 2.0, 1.0).unwrap(), 1.0);
        assert!((rho(0.5, 2.0, 1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(rho(1.01, 2.0, 1.0).is_err());
    }

    #[test]
    fn f_log_examples() {
        for c in [0.0, 0.3, 1.0] {
            assert_eq!(f_log(c, 0.0, 0.0), 0.0);
        }
        assert_eq!(f_log(0.5, 0.7, 0.7), 0.0);
        assert!((f_log(0.25, 1.0, 0.0) - (-1.3862944)).abs() < 1e-7);
        assert_eq!(f_log(0.0, 1.0, 0.0), f64::NEG_INFINITY);
        assert_eq!(f_log(1.0, 0.0, 1.0), f64::INFINITY);
        assert!(f_log_regularized(0.0, 1.0, 0.0).is_finite());
    }

    #[test]
    fn uniform_state_energy() {
        let mesh = Mesh::cartesian(4, Some(4), 1.0, Some(1.0)).unwrap();
        let p = ModelParams::new(ModelKind::NonLocal, 3.6e-4, 0.8, [0.0, 0.0], [1.0, 1.0], 16).unwrap();
        let state = State::with_saturation(ModelKind::NonLocal, vec![0.5; 16]);
        let e = discrete_energy(&mesh, &state, &p).unwrap();
        assert_eq!(e.e_dir, 0.0);
        assert!((e.e_chem - 0.2).abs() < 1e-15);
        assert!((e.e_total - 0.2).abs() < 1e-15);
        assert!((e.mass[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pure_phase_has_no_thermal_energy() {
        let mesh = Mesh::cartesian(3, Some(3), 1.0, Some(1.0)).unwrap();
        let p = ModelParams::new(ModelKind::NonLocal, 1.0, 1.0, [1.0, 0.0], [1.0, 1.0], 9).unwrap();
        let state = State::with_saturation(ModelKind::NonLocal, vec![1.0; 9]);
        let e = discrete_energy(&mesh, &state, &p).unwrap();
        assert_eq!(e.e_therm, 0.0);
        // phase 2 is absent, so its entropy sum is |Omega| H(0) = 1
        assert!((e.entropy[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_cell_dirichlet_energy() {
        // brute force: one face, tau = 1 / 0.5 = 2, jump 1 => (1/2) 2 1 = 1
        let mesh = Mesh::cartesian(2, None, 1.0, None).unwrap();
        let p = params(ModelKind::NonLocal, 2);
        let state = State::with_saturation(ModelKind::NonLocal, vec![0.0, 1.0]);
        let e = discrete_energy(&mesh, &state, &p).unwrap();
        let brute: f64 = mesh
            .links()
            .iter()
            .map(|l| 0.5 * p.alpha * l.transmissibility * (state.c1[l.inner] - state.c1[l.outer]).powi(2))
            .sum();
        assert_eq!(brute, 1.0);
        assert_eq!(e.e_dir, 1.0);
    }

    #[test]
    fn size_mismatch_rejected() {
        let mesh = Mesh::cartesian(3, None, 1.0, None).unwrap();
        let p = params(ModelKind::NonLocal, 3);
        let state = State::with_saturation(ModelKind::NonLocal, vec![0.5; 4]);
        assert!(matches!(discrete_energy(&mesh, &state, &p), Err(ModelError::SizeMismatch { .. })));
    }

    #[test]
    fn local_model_rejects_theta() {
        let err = ModelParams::new(ModelKind::Local, 1.0, 1.0, [0.1, 0.0], [1.0, 1.0], 4).unwrap_err();
        assert_eq!(err, ModelError::ThermalTermInLocalModel);
        assert!(ModelParams::new(ModelKind::NonLocal, -1.0, 1.0, [0.0, 0.0], [1.0, 1.0], 4).is_err());
        assert!(ModelParams::new(ModelKind::NonLocal, 1.0, 1.0, [0.0, 0.0], [0.0, 1.0], 4).is_err());
    }

    #[test]
    fn energy_gradient_matches_differences() {
        let mesh = Mesh::cartesian(3, Some(2), 1.0, Some(0.7)).unwrap();
        let mut p = ModelParams::new(ModelKind::NonLocal, 0.3, 0.8, [0.2, 0.1], [1.0, 2.0], 6).unwrap();
        p = p
            .with_potentials(vec![0.1, 0.2, 0.3, 0.0, -0.1, 0.4], vec![0.0, 0.5, 0.1, 0.2, 0.3, 0.1])
            .unwrap();
        let c1 = vec![0.2, 0.5, 0.7, 0.3, 0.9, 0.6];
        let grad = energy_gradient(&mesh, &c1, &p).unwrap();
        let energy = |c: &[f64]| {
            let s = State::with_saturation(ModelKind::NonLocal, c.to_vec());
            discrete_energy(&mesh, &s, &p).unwrap().e_total
        };
        for k in 0..6 {
            let h = 1e-6;
            let mut up = c1.clone();
            let mut dn = c1.clone();
            up[k] += h;
            dn[k] -= h;
            let fd = (energy(&up) - energy(&dn)) / (2.0 * h) / mesh.measure(k);
            assert!((fd - grad[k]).abs() < 1e-6, "cell {k}: {fd} vs {}", grad[k]);
        }
    }

    #[test]
    fn dissipation_examples() {
        let mesh = Mesh::cartesian(4, None, 1.0, None).unwrap();
        let p = params(ModelKind::NonLocal, 4);
        let c1 = vec![0.1, 0.4, 0.6, 0.9];
        // equilibrium: constant potentials
        let state = State { c1: c1.clone(), potentials: Potentials::Phase { mu1: vec![0.3; 4], mu2: vec![-0.2; 4] }, time: 0.0 };
        assert_eq!(half_step_dissipation(&mesh, &state, &p).unwrap(), Dissipation::default());

        // equal spatial variation: no exchange
        let g = vec![0.0, 1.0, 0.5, 2.0];
        let state = State { c1: c1.clone(), potentials: Potentials::Phase { mu1: g.clone(), mu2: g.clone() }, time: 0.0 };
        let d = half_step_dissipation(&mesh, &state, &p).unwrap();
        assert_eq!(d.exchange, 0.0);
        assert!(d.total_flux > 0.0);

        let local = State::with_saturation(ModelKind::Local, c1);
        assert!(half_step_dissipation(&mesh, &local, &p).is_err());
    }

    #[test]
    fn single_face_dissipation() {
        // cells of measure 0.5, tau = 2; phase 1 flows 0 -> 1, phase 2 flows 1 -> 0
        let mesh = Mesh::cartesian(2, None, 1.0, None).unwrap();
        let p = ModelParams::new(ModelKind::NonLocal, 1.0, 1.0, [0.0, 0.0], [2.0, 1.0], 2).unwrap();
        let state = State {
            c1: vec![0.3, 0.8],
            potentials: Potentials::Phase { mu1: vec![1.0, 0.0], mu2: vec![0.0, 0.5] },
            time: 0.0,
        };
        // a1 = 2 * 2 * 0.3, d1 = 1; a2 = 1 * 2 * (1 - 0.8), d2 = -0.5
        let (a1, d1, a2, d2) = (1.2, 1.0, 0.4, -0.5);
        let f1 = a1 * d1;
        let f2 = a2 * d2;
        let d = half_step_dissipation(&mesh, &state, &p).unwrap();
        assert!((d.total_flux - (f1 + f2) * (f1 + f2) / (a1 + a2)).abs() < 1e-14);
        assert!((d.total_flux + d.exchange - (f1 * f1 / a1 + f2 * f2 / a2)).abs() < 1e-14);
    }

    fn swapped(p: &ModelParams) -> ModelParams {
        ModelParams {
            kind: p.kind,
            alpha: p.alpha,
            chi: p.chi,
            theta: [p.theta[1], p.theta[0]],
            mobility: [p.mobility[1], p.mobility[0]],
            psi: [p.psi[1].clone(), p.psi[0].clone()],
        }
    }

    proptest! {
        #[test]
        fn eta_below_linear_mobilities(m1 in 0.01f64..100.0, m2 in 0.01f64..100.0) {
            for i in 0..=1000 {
                let c = i as f64 / 1000.0;
                let e = eta(c, m1, m2).unwrap();
                prop_assert!(e <= (m1 * c).min(m2 * (1.0 - c)) * (1.0 + 1e-14));
                prop_assert!(e >= 0.0);
            }
        }

        #[test]
        fn rho_monotone(m1 in 0.01f64..100.0, m2 in 0.01f64..100.0) {
            let mut prev = 0.0;
            for i in 0..=100 {
                let r = rho(i as f64 / 100.0, m1, m2).unwrap();
                prop_assert!(r >= prev);
                prev = r;
            }
            prop_assert!((prev - 1.0).abs() < 1e-15);
        }

        #[test]
        fn energy_phase_relabeling(
            c in proptest::collection::vec(0.0f64..=1.0, 6),
            psi1 in proptest::collection::vec(-1.0f64..1.0, 6),
            psi2 in proptest::collection::vec(-1.0f64..1.0, 6),
            t1 in 0.0f64..1.0, t2 in 0.0f64..1.0, m1 in 0.1f64..3.0, m2 in 0.1f64..3.0,
        ) {
            let mesh = Mesh::cartesian(3, Some(2), 1.0, Some(1.0)).unwrap();
            let p = ModelParams::new(ModelKind::NonLocal, 0.1, 0.9, [t1, t2], [m1, m2], 6).unwrap()
                .with_potentials(psi1, psi2).unwrap();
            let s = State::with_saturation(ModelKind::NonLocal, c.clone());
            let s_swapped = State::with_saturation(ModelKind::NonLocal, c.iter().map(|x| 1.0 - x).collect());
            let e = discrete_energy(&mesh, &s, &p).unwrap();
            let e_sw = discrete_energy(&mesh, &s_swapped, &swapped(&p)).unwrap();
            prop_assert!((e.e_total - e_sw.e_total).abs() < 1e-12);
            prop_assert!(e.e_dir >= 0.0 && e.e_chem >= 0.0 && e.e_therm >= 0.0);
            prop_assert!(e.entropy[0] >= 0.0 && e.entropy[0] <= 1.0 + 1e-15);
        }

        #[test]
        fn entropy_density_nonnegative(c in 0.0f64..=1.0) {
            let h = entropy_density(c);
            prop_assert!(h >= 0.0);
            if c < 1.0 - 1e-6 { prop_assert!(h > 0.0); }
        }

        #[test]
        fn dirichlet_energy_vanishes_only_for_constants(c in proptest::collection::vec(0.0f64..=1.0, 5)) {
            let mesh = Mesh::cartesian(5, None, 1.0, None).unwrap();
            let p = ModelParams::new(ModelKind::NonLocal, 1.0, 1.0, [0.0, 0.0], [1.0, 1.0], 5).unwrap();
            let e = discrete_energy(&mesh, &State::with_saturation(ModelKind::NonLocal, c.clone()), &p).unwrap();
            let constant = c.iter().all(|x| *x == c[0]);
            prop_assert_eq!(e.e_dir == 0.0, constant);
        }
    }

    #[test]
    fn entropy_density_zero_only_at_one() {
        assert_eq!(entropy_density(1.0), 0.0);
        assert_eq!(entropy_density(0.0), 1.0);
    }
}
