//! Backward-Euler two-point flux residuals for both models.
//!
//! Unknown layout, non-local model (`3 N + 1` unknowns):
//! `x[3k] = c1_K`, `x[3k+1] = mu1_K`, `x[3k+2] = mu2_K`, `x[3N] = lambda`,
//! with rows `3k` (phase-1 conservation), `3k+1` (potential relation),
//! `3k+2` (phase-2 conservation) and `3N` (normalization
//! `sum |K| (c1 mu1 + c2 mu2) = 0`). The multiplier enters both conservation
//! rows as `|K| lambda`; since the conservation rows of the two phases sum to
//! zero identically, any solution has `lambda = 0`.
//!
//! Local model (`2 N` unknowns): `x[2k] = c_K`, `x[2k+1] = mu_K`, rows
//! `2k` (conservation) and `2k+1` (potential relation).
//!
//! Jacobians freeze the upwind (and Godunov) choice of the current iterate.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::mesh::Mesh;
use crate::model::{eta_argmax, eta_derivative, eta_unchecked, upwind, ModelError, ModelKind, ModelParams, Potentials, State};
use crate::sparse::{CscMatrix, SparseLu, Triplets};

#[derive(Debug, Clone, PartialEq)]
pub enum SchemeError {
    Model(ModelError),
    SizeMismatch { expected: usize, found: usize },
    InvalidTimeStep { dt: f64 },
    KindMismatch { params: ModelKind, state: ModelKind },
}

impl fmt::Display for SchemeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeError::Model(e) => write!(f, "{e}"),
            SchemeError::SizeMismatch { expected, found } => write!(f, "expected {expected} values, found {found}"),
            SchemeError::InvalidTimeStep { dt } => write!(f, "time step must be positive, got {dt}"),
            SchemeError::KindMismatch { params, state } => {
                write!(f, "parameters describe the {params:?} model but the state is {state:?}")
            }
        }
    }
}

impl core::error::Error for SchemeError {}

impl From<ModelError> for SchemeError {
    fn from(e: ModelError) -> Self {
        SchemeError::Model(e)
    }
}

/// `(Lap_h u)_K = (1/|K|) sum_{sigma = K|L} tau_sigma (u_L - u_K)`, no-flux
/// at the boundary.
pub fn discrete_laplacian(mesh: &Mesh, field: &[f64]) -> Result<Vec<f64>, SchemeError> {
    if field.len() != mesh.num_cells() {
        return Err(SchemeError::SizeMismatch { expected: mesh.num_cells(), found: field.len() });
    }
    let mut out = vec![0.0; field.len()];
    for l in mesh.links() {
        let flow = l.transmissibility * (field[l.outer] - field[l.inner]);
        out[l.inner] += flow;
        out[l.outer] -= flow;
    }
    for (k, v) in out.iter_mut().enumerate() {
        *v /= mesh.measure(k);
    }
    Ok(out)
}

/// Phase flux from `K` to `L` with upstream mobility plus linear thermal
/// diffusion: `m tau c_up (V_K - V_L) + m theta tau (c_K - c_L)`.
pub fn upstream_flux(ck: f64, cl: f64, vk: f64, vl: f64, tau: f64, m: f64, theta: f64) -> f64 {
    let dv = vk - vl;
    m * tau * upwind(ck, cl, dv) * dv + m * theta * tau * (ck - cl)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GodunovPick {
    Inner,
    Outer,
    Peak,
}

/// Mobility extended by zero outside `[0, 1]`. With the raw formula, `eta`
/// turns negative there and the discrete system gains spurious roots just
/// outside the box.
#[inline]
fn eta_ext(c: f64, m1: f64, m2: f64) -> f64 {
    eta_unchecked(c.clamp(0.0, 1.0), m1, m2)
}

#[inline]
fn eta_ext_derivative(c: f64, m1: f64, m2: f64) -> f64 {
    // one-sided at the end points
    if (0.0..=1.0).contains(&c) {
        eta_derivative(c, m1, m2)
    } else {
        0.0
    }
}

fn godunov_select(ck: f64, cl: f64, q: f64, m1: f64, m2: f64) -> (f64, GodunovPick) {
    if q == 0.0 {
        return (0.0, GodunovPick::Inner);
    }
    let g = |c: f64| eta_ext(c, m1, m2) * q;
    let take_min = ck <= cl;
    let better = |a: f64, b: f64| if take_min { a < b } else { a > b };
    let mut best = (g(ck), GodunovPick::Inner);
    let gl = g(cl);
    if better(gl, best.0) {
        best = (gl, GodunovPick::Outer);
    }
    let peak = eta_argmax(m1, m2);
    if ck.min(cl) < peak && peak < ck.max(cl) {
        let gp = g(peak);
        if better(gp, best.0) {
            best = (gp, GodunovPick::Peak);
        }
    }
    best
}

/// Godunov flux for `eta(c) tau (w_K - w_L)`: the minimum of
/// `g(c) = eta(c) q` over `c` between `c_K` and `c_L` when `c_K <= c_L`,
/// the maximum otherwise. `eta` is concave with a single interior maximum,
/// so only the endpoints and the maximizer are candidates.
pub fn godunov_flux(ck: f64, cl: f64, wk: f64, wl: f64, tau: f64, m1: f64, m2: f64) -> f64 {
    godunov_select(ck, cl, tau * (wk - wl), m1, m2).0
}

/// Equation values ordered as the unknown layout of the module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    kind: ModelKind,
    values: Vec<f64>,
}

impl Residual {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn num_cells(&self) -> usize {
        match self.kind {
            ModelKind::NonLocal => self.values.len() / 3,
            ModelKind::Local => self.values.len() / 2,
        }
    }

    /// Conservation residual of `phase` (0 or 1) at cell `k`. The local model
    /// only has phase 0.
    pub fn conservation(&self, phase: usize, k: usize) -> Option<f64> {
        match (self.kind, phase) {
            (ModelKind::NonLocal, 0) => Some(self.values[3 * k]),
            (ModelKind::NonLocal, 1) => Some(self.values[3 * k + 2]),
            (ModelKind::Local, 0) => Some(self.values[2 * k]),
            _ => None,
        }
    }

    pub fn potential(&self, k: usize) -> f64 {
        match self.kind {
            ModelKind::NonLocal => self.values[3 * k + 1],
            ModelKind::Local => self.values[2 * k + 1],
        }
    }

    pub fn normalization(&self) -> Option<f64> {
        match self.kind {
            ModelKind::NonLocal => self.values.last().copied(),
            ModelKind::Local => None,
        }
    }

    pub fn max_norm(&self) -> f64 {
        crate::math::max_abs(&self.values)
    }
}

/// Number of unknowns per cell and total for a mesh.
pub fn unknowns_per_cell(kind: ModelKind) -> usize {
    match kind {
        ModelKind::NonLocal => 3,
        ModelKind::Local => 2,
    }
}

pub fn num_unknowns(kind: ModelKind, num_cells: usize) -> usize {
    match kind {
        ModelKind::NonLocal => 3 * num_cells + 1,
        ModelKind::Local => 2 * num_cells,
    }
}

/// Packs a state into the unknown vector (`lambda = 0`).
pub fn pack(state: &State) -> Vec<f64> {
    let n = state.len();
    match &state.potentials {
        Potentials::Phase { mu1, mu2 } => {
            let mut x = Vec::with_capacity(3 * n + 1);
            for k in 0..n {
                x.extend_from_slice(&[state.c1[k], mu1[k], mu2[k]]);
            }
            x.push(0.0);
            x
        }
        Potentials::Generalized { mu } => {
            let mut x = Vec::with_capacity(2 * n);
            for k in 0..n {
                x.extend_from_slice(&[state.c1[k], mu[k]]);
            }
            x
        }
    }
}

pub fn unpack(kind: ModelKind, x: &[f64], time: f64) -> State {
    match kind {
        ModelKind::NonLocal => {
            let n = (x.len() - 1) / 3;
            let (mut c1, mut mu1, mut mu2) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
            for k in 0..n {
                c1.push(x[3 * k]);
                mu1.push(x[3 * k + 1]);
                mu2.push(x[3 * k + 2]);
            }
            State { c1, potentials: Potentials::Phase { mu1, mu2 }, time }
        }
        ModelKind::Local => {
            let n = x.len() / 2;
            let (mut c1, mut mu) = (Vec::with_capacity(n), Vec::with_capacity(n));
            for k in 0..n {
                c1.push(x[2 * k]);
                mu.push(x[2 * k + 1]);
            }
            State { c1, potentials: Potentials::Generalized { mu }, time }
        }
    }
}

fn check_step(mesh: &Mesh, new: &State, old: &State, dt: f64, params: &ModelParams) -> Result<(), SchemeError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(SchemeError::InvalidTimeStep { dt });
    }
    params.validate()?;
    params.check_mesh(mesh)?;
    new.check_mesh(mesh)?;
    old.check_mesh(mesh)?;
    for s in [new, old] {
        if s.kind() != params.kind {
            return Err(SchemeError::KindMismatch { params: params.kind, state: s.kind() });
        }
    }
    Ok(())
}

/// Non-local residual at `state_new` (with `lambda = 0`).
pub fn assemble_nonlocal(
    mesh: &Mesh,
    state_new: &State,
    state_old: &State,
    dt: f64,
    params: &ModelParams,
) -> Result<Residual, SchemeError> {
    if params.kind != ModelKind::NonLocal {
        return Err(SchemeError::KindMismatch { params: params.kind, state: ModelKind::NonLocal });
    }
    check_step(mesh, state_new, state_old, dt, params)?;
    let problem = StepProblem::new(mesh, params, &state_old.c1, dt);
    let x = pack(state_new);
    let mut values = vec![0.0; x.len()];
    problem.residual_into(&x, &mut values);
    Ok(Residual { kind: ModelKind::NonLocal, values })
}

/// Local residual at `state_new`.
pub fn assemble_local(
    mesh: &Mesh,
    state_new: &State,
    state_old: &State,
    dt: f64,
    params: &ModelParams,
) -> Result<Residual, SchemeError> {
    if params.kind != ModelKind::Local {
        return Err(SchemeError::KindMismatch { params: params.kind, state: ModelKind::Local });
    }
    check_step(mesh, state_new, state_old, dt, params)?;
    let problem = StepProblem::new(mesh, params, &state_old.c1, dt);
    let x = pack(state_new);
    let mut values = vec![0.0; x.len()];
    problem.residual_into(&x, &mut values);
    Ok(Residual { kind: ModelKind::Local, values })
}

/// One implicit step as a nonlinear system in the packed unknowns.
#[derive(Debug, Clone)]
pub struct StepProblem<'a> {
    mesh: &'a Mesh,
    params: &'a ModelParams,
    old_c1: &'a [f64],
    dt: f64,
}

impl<'a> StepProblem<'a> {
    /// Callers are expected to have validated sizes (see `assemble_*`).
    pub fn new(mesh: &'a Mesh, params: &'a ModelParams, old_c1: &'a [f64], dt: f64) -> Self {
        StepProblem { mesh, params, old_c1, dt }
    }

    pub fn kind(&self) -> ModelKind {
        self.params.kind
    }

    pub fn dim(&self) -> usize {
        num_unknowns(self.params.kind, self.mesh.num_cells())
    }

    pub fn residual_into(&self, x: &[f64], out: &mut [f64]) {
        match self.params.kind {
            ModelKind::NonLocal => self.residual_nonlocal(x, out),
            ModelKind::Local => self.residual_local(x, out),
        }
    }

    pub fn jacobian(&self, x: &[f64]) -> CscMatrix {
        let t = match self.params.kind {
            ModelKind::NonLocal => self.jacobian_nonlocal(x),
            ModelKind::Local => self.jacobian_local(x),
        };
        t.to_csc().expect("jacobian entries are in range by construction")
    }

    /// Pivot row for each column of `jac`, matched cell by cell.
    ///
    /// Inside a pure phase the natural pairing breaks down: where `c2 = 0`,
    /// `mu2` only enters the potential relation, so the phase-2 row cannot
    /// pivot on it. Each cell's diagonal block is therefore assigned by the
    /// row/column permutation with the largest product of row-equilibrated
    /// magnitudes, which keeps the fill-reducing order intact.
    pub fn pivot_rows(&self, jac: &CscMatrix) -> Vec<usize> {
        let dim = jac.ncols();
        let stride = unknowns_per_cell(self.params.kind);
        let mut scale = vec![0.0_f64; dim];
        for j in 0..dim {
            for (r, v) in jac.column(j) {
                scale[r] = scale[r].max(v.abs());
            }
        }
        let mut rows: Vec<usize> = (0..dim).collect();
        let perms: &[&[usize]] = if stride == 3 {
            &[&[0, 1, 2], &[0, 2, 1], &[1, 0, 2], &[1, 2, 0], &[2, 0, 1], &[2, 1, 0]]
        } else {
            &[&[0, 1], &[1, 0]]
        };
        let mut block = [[0.0_f64; 3]; 3];
        for k in 0..self.mesh.num_cells() {
            let base = stride * k;
            for (c, col) in block.iter_mut().enumerate().take(stride) {
                *col = [0.0; 3];
                for (r, v) in jac.column(base + c) {
                    if r >= base && r < base + stride && scale[r] > 0.0 {
                        col[r - base] = v.abs() / scale[r];
                    }
                }
            }
            let mut best = (0.0, 0);
            for (i, perm) in perms.iter().enumerate() {
                let w: f64 = perm.iter().enumerate().map(|(c, &r)| block[c][r]).product();
                if w > best.0 {
                    best = (w, i);
                }
            }
            for (c, &r) in perms[best.1].iter().enumerate() {
                rows[base + c] = base + r;
            }
        }
        rows
    }

    /// Largest distance of a saturation unknown outside `[0, 1]`.
    pub fn bounds_excess(&self, x: &[f64]) -> f64 {
        let stride = unknowns_per_cell(self.params.kind);
        (0..self.mesh.num_cells()).fold(0.0_f64, |m, k| {
            let c = x[stride * k];
            m.max(-c).max(c - 1.0)
        })
    }

    /// Rows whose entries depend on an upwind or Godunov choice that flips
    /// under a perturbation of size `eps`. Central differences across such a
    /// switch do not approximate the frozen-choice Jacobian.
    pub fn rows_near_switch(&self, x: &[f64], eps: f64) -> Vec<usize> {
        let mut flagged = vec![false; x.len()];
        let psi = &self.params.psi;
        let margin = 4.0 * eps;
        match self.params.kind {
            ModelKind::NonLocal => {
                for l in self.mesh.links() {
                    let (k, j) = (l.inner, l.outer);
                    let d1 = (x[3 * k + 1] + psi[0][k]) - (x[3 * j + 1] + psi[0][j]);
                    let d2 = (x[3 * k + 2] + psi[1][k]) - (x[3 * j + 2] + psi[1][j]);
                    let tie = (x[3 * k] - x[3 * j]).abs() <= margin;
                    if d1.abs() <= margin || d2.abs() <= margin || tie {
                        for r in [3 * k, 3 * k + 2, 3 * j, 3 * j + 2] {
                            flagged[r] = true;
                        }
                    }
                }
            }
            ModelKind::Local => {
                let [m1, m2] = self.params.mobility;
                let peak = eta_argmax(m1, m2);
                for l in self.mesh.links() {
                    let (k, j) = (l.inner, l.outer);
                    let (ck, cj) = (x[2 * k], x[2 * j]);
                    let dw = (x[2 * k + 1] + psi[0][k] - psi[1][k]) - (x[2 * j + 1] + psi[0][j] - psi[1][j]);
                    let near_peak = (ck - peak).abs() <= margin || (cj - peak).abs() <= margin;
                    let near_tie = (eta_ext(ck, m1, m2) - eta_ext(cj, m1, m2)).abs() <= margin;
                    if dw.abs() <= margin || near_peak || near_tie || (ck - cj).abs() <= margin {
                        for r in [2 * k, 2 * j] {
                            flagged[r] = true;
                        }
                    }
                }
            }
        }
        flagged.iter().enumerate().filter(|(_, f)| **f).map(|(r, _)| r).collect()
    }

    /// Recomputes the saturation of a (nearly) converged iterate so that it
    /// lies in `[0, 1]` exactly, without clamping.
    ///
    /// With the potentials and upwind choices of `x` frozen, each face flux
    /// is written as `a c_K - b c_L` with `a, b >= 0`. The resulting linear
    /// conservation system is a column diagonally dominant M-matrix, and
    /// eliminating it with diagonal pivots only ever combines terms of one
    /// sign, so its solution is nonnegative in floating point. Solving it once
    /// for `c1` and once for `1 - c1` bounds the saturation from both sides;
    /// each cell takes the solution that is closer to its own bound. The
    /// caller must re-check the residual of the returned vector.
    pub fn restore_bounds(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mesh = self.mesh;
        let p = self.params;
        let n = mesh.num_cells();
        let stride = unknowns_per_cell(p.kind);
        let c: Vec<f64> = (0..n).map(|k| x[stride * k]).collect();
        let [m1, m2] = p.mobility;
        let links = mesh.links();
        let mut lower = Vec::with_capacity(links.len());
        let mut upper = Vec::with_capacity(links.len());
        match p.kind {
            ModelKind::NonLocal => {
                let split = |dv: f64, m: f64, theta: f64, tau: f64| {
                    let d = m * theta * tau;
                    if dv > 0.0 {
                        [m * tau * dv + d, d]
                    } else {
                        [d, -m * tau * dv + d]
                    }
                };
                for l in links {
                    let (k, j, tau) = (l.inner, l.outer, l.transmissibility);
                    let dv1 = (x[3 * k + 1] + p.psi[0][k]) - (x[3 * j + 1] + p.psi[0][j]);
                    let dv2 = (x[3 * k + 2] + p.psi[1][k]) - (x[3 * j + 2] + p.psi[1][j]);
                    lower.push(split(dv1, m1, p.theta[0], tau));
                    upper.push(split(dv2, m2, p.theta[1], tau));
                }
            }
            ModelKind::Local => {
                for l in links {
                    let (k, j, tau) = (l.inner, l.outer, l.transmissibility);
                    let wk = x[2 * k + 1] + p.psi[0][k] - p.psi[1][k];
                    let wj = x[2 * j + 1] + p.psi[0][j] - p.psi[1][j];
                    let q = tau * (wk - wj);
                    let g = godunov_select(c[k], c[j], q, m1, m2).0;
                    // eta(c) = c m1 m2 (1-c)/(...): slope m1 at c = 0 and m2 at c = 1
                    let ratio = |flux: f64, s: f64, slope: f64| if s > 0.0 { flux / s } else { slope };
                    let (dk, dj) = (1.0 - c[k], 1.0 - c[j]);
                    if q > 0.0 {
                        lower.push([ratio(g, c[k], q * m1), 0.0]);
                        upper.push([0.0, ratio(g, dj, q * m2)]);
                    } else if q < 0.0 {
                        lower.push([0.0, ratio(-g, c[j], -q * m1)]);
                        upper.push([ratio(-g, dk, -q * m2), 0.0]);
                    } else {
                        lower.push([0.0, 0.0]);
                        upper.push([0.0, 0.0]);
                    }
                }
            }
        }
        let order = nested_dissection(mesh);
        let old2: Vec<f64> = self.old_c1.iter().map(|c| 1.0 - c).collect();
        let s1 = sign_exact_transport(mesh, self.dt, self.old_c1, &lower, &order)?;
        let s2 = sign_exact_transport(mesh, self.dt, &old2, &upper, &order)?;
        let mut out = x.to_vec();
        for k in 0..n {
            let v = if s1[k] <= s2[k] { s1[k] } else { 1.0 - s2[k] };
            if !(0.0..=1.0).contains(&v) {
                return None;
            }
            out[stride * k] = v;
        }
        if p.kind == ModelKind::NonLocal {
            out[3 * n] = 0.0;
        }
        Some(out)
    }

    fn residual_nonlocal(&self, x: &[f64], out: &mut [f64]) {
        let mesh = self.mesh;
        let p = self.params;
        let n = mesh.num_cells();
        let lambda = x[3 * n];
        let [m1, m2] = p.mobility;
        let [t1, t2] = p.theta;
        let mut norm = 0.0;
        for k in 0..n {
            let vol = mesh.measure(k);
            let dc = x[3 * k] - self.old_c1[k];
            out[3 * k] = vol * dc + vol * lambda;
            out[3 * k + 2] = -vol * dc + vol * lambda;
            out[3 * k + 1] = x[3 * k + 1] - x[3 * k + 2] - p.chi * (1.0 - 2.0 * x[3 * k]);
            norm += vol * (x[3 * k] * x[3 * k + 1] + (1.0 - x[3 * k]) * x[3 * k + 2]);
        }
        out[3 * n] = norm;
        for l in mesh.links() {
            let (k, j, tau) = (l.inner, l.outer, l.transmissibility);
            let (ck, cj) = (x[3 * k], x[3 * j]);
            let f1 = upstream_flux(ck, cj, x[3 * k + 1] + p.psi[0][k], x[3 * j + 1] + p.psi[0][j], tau, m1, t1);
            let f2 = upstream_flux(
                1.0 - ck,
                1.0 - cj,
                x[3 * k + 2] + p.psi[1][k],
                x[3 * j + 2] + p.psi[1][j],
                tau,
                m2,
                t2,
            );
            out[3 * k] += self.dt * f1;
            out[3 * j] -= self.dt * f1;
            out[3 * k + 2] += self.dt * f2;
            out[3 * j + 2] -= self.dt * f2;
            // alpha Lap_h c1
            let lap = p.alpha * tau * (cj - ck);
            out[3 * k + 1] += lap / mesh.measure(k);
            out[3 * j + 1] -= lap / mesh.measure(j);
        }
    }

    fn jacobian_nonlocal(&self, x: &[f64]) -> Triplets {
        let mesh = self.mesh;
        let p = self.params;
        let n = mesh.num_cells();
        let dim = 3 * n + 1;
        let mut t = Triplets::with_capacity(dim, dim, 12 * n + 24 * mesh.num_interior_faces());
        let [m1, m2] = p.mobility;
        let [t1, t2] = p.theta;
        let dt = self.dt;
        for k in 0..n {
            let vol = mesh.measure(k);
            let (c, mu1, mu2) = (x[3 * k], x[3 * k + 1], x[3 * k + 2]);
            t.push(3 * k, 3 * k, vol);
            t.push(3 * k + 2, 3 * k, -vol);
            t.push(3 * k, 3 * n, vol);
            t.push(3 * k + 2, 3 * n, vol);
            t.push(3 * k + 1, 3 * k + 1, 1.0);
            t.push(3 * k + 1, 3 * k + 2, -1.0);
            t.push(3 * k + 1, 3 * k, 2.0 * p.chi);
            t.push(3 * n, 3 * k, vol * (mu1 - mu2));
            t.push(3 * n, 3 * k + 1, vol * c);
            t.push(3 * n, 3 * k + 2, vol * (1.0 - c));
        }
        for l in mesh.links() {
            let (k, j, tau) = (l.inner, l.outer, l.transmissibility);
            let (ck, cj) = (x[3 * k], x[3 * j]);

            // phase 1
            let dv = (x[3 * k + 1] + p.psi[0][k]) - (x[3 * j + 1] + p.psi[0][j]);
            let up_side = upwind_cell(k, j, ck, cj, dv);
            let c_up = if up_side == k { ck } else { cj };
            let a = m1 * tau * c_up;
            let mut add1 = |col: usize, v: f64| {
                t.push(3 * k, col, dt * v);
                t.push(3 * j, col, -dt * v);
            };
            add1(3 * k + 1, a);
            add1(3 * j + 1, -a);
            add1(3 * up_side, m1 * tau * dv);
            add1(3 * k, m1 * t1 * tau);
            add1(3 * j, -m1 * t1 * tau);

            // phase 2, in terms of c1
            let (bk, bj) = (1.0 - ck, 1.0 - cj);
            let dv = (x[3 * k + 2] + p.psi[1][k]) - (x[3 * j + 2] + p.psi[1][j]);
            let up_side = upwind_cell(k, j, bk, bj, dv);
            let c_up = if up_side == k { bk } else { bj };
            let a = m2 * tau * c_up;
            let mut add2 = |col: usize, v: f64| {
                t.push(3 * k + 2, col, dt * v);
                t.push(3 * j + 2, col, -dt * v);
            };
            add2(3 * k + 2, a);
            add2(3 * j + 2, -a);
            add2(3 * up_side, -m2 * tau * dv);
            add2(3 * k, -m2 * t2 * tau);
            add2(3 * j, m2 * t2 * tau);

            let g = p.alpha * tau;
            let (vk, vj) = (mesh.measure(k), mesh.measure(j));
            t.push(3 * k + 1, 3 * j, g / vk);
            t.push(3 * k + 1, 3 * k, -g / vk);
            t.push(3 * j + 1, 3 * k, g / vj);
            t.push(3 * j + 1, 3 * j, -g / vj);
        }
        t
    }

    fn residual_local(&self, x: &[f64], out: &mut [f64]) {
        let mesh = self.mesh;
        let p = self.params;
        let n = mesh.num_cells();
        let [m1, m2] = p.mobility;
        for k in 0..n {
            let vol = mesh.measure(k);
            out[2 * k] = vol * (x[2 * k] - self.old_c1[k]);
            out[2 * k + 1] = x[2 * k + 1] - p.chi * (1.0 - 2.0 * x[2 * k]);
        }
        for l in mesh.links() {
            let (k, j, tau) = (l.inner, l.outer, l.transmissibility);
            let (ck, cj) = (x[2 * k], x[2 * j]);
            let wk = x[2 * k + 1] + p.psi[0][k] - p.psi[1][k];
            let wj = x[2 * j + 1] + p.psi[0][j] - p.psi[1][j];
            let g = godunov_flux(ck, cj, wk, wj, tau, m1, m2);
            out[2 * k] += self.dt * g;
            out[2 * j] -= self.dt * g;
            let lap = p.alpha * tau * (cj - ck);
            out[2 * k + 1] += lap / mesh.measure(k);
            out[2 * j + 1] -= lap / mesh.measure(j);
        }
    }

    fn jacobian_local(&self, x: &[f64]) -> Triplets {
        let mesh = self.mesh;
        let p = self.params;
        let n = mesh.num_cells();
        let dim = 2 * n;
        let mut t = Triplets::with_capacity(dim, dim, 3 * n + 10 * mesh.num_interior_faces());
        let [m1, m2] = p.mobility;
        let dt = self.dt;
        for k in 0..n {
            t.push(2 * k, 2 * k, mesh.measure(k));
            t.push(2 * k + 1, 2 * k + 1, 1.0);
            t.push(2 * k + 1, 2 * k, 2.0 * p.chi);
        }
        for l in mesh.links() {
            let (k, j, tau) = (l.inner, l.outer, l.transmissibility);
            let (ck, cj) = (x[2 * k], x[2 * j]);
            let wk = x[2 * k + 1] + p.psi[0][k] - p.psi[1][k];
            let wj = x[2 * j + 1] + p.psi[0][j] - p.psi[1][j];
            let q = tau * (wk - wj);
            let (_, pick) = godunov_select(ck, cj, q, m1, m2);
            let c_sel = match pick {
                GodunovPick::Inner => ck,
                GodunovPick::Outer => cj,
                GodunovPick::Peak => eta_argmax(m1, m2),
            };
            let e = eta_ext(c_sel, m1, m2);
            let mut add = |col: usize, v: f64| {
                t.push(2 * k, col, dt * v);
                t.push(2 * j, col, -dt * v);
            };
            add(2 * k + 1, e * tau);
            add(2 * j + 1, -e * tau);
            match pick {
                GodunovPick::Inner => add(2 * k, eta_ext_derivative(ck, m1, m2) * q),
                GodunovPick::Outer => add(2 * j, eta_ext_derivative(cj, m1, m2) * q),
                GodunovPick::Peak => {}
            }
            let g = p.alpha * tau;
            let (vk, vj) = (mesh.measure(k), mesh.measure(j));
            t.push(2 * k + 1, 2 * j, g / vk);
            t.push(2 * k + 1, 2 * k, -g / vk);
            t.push(2 * j + 1, 2 * k, g / vj);
            t.push(2 * j + 1, 2 * j, -g / vj);
        }
        t
    }
}

/// Solves `|K| (s_K - old_K) + dt sum (a s_K - b s_L) = 0` where
/// `coeffs[i] = [a, b]` belongs to `mesh.links()[i]` (flux from inner to
/// outer). Returns `None` if a computed value is negative, which only
/// happens when the coefficients are not admissible.
fn sign_exact_transport(mesh: &Mesh, dt: f64, old: &[f64], coeffs: &[[f64; 2]], order: &[usize]) -> Option<Vec<f64>> {
    let n = mesh.num_cells();
    let mut t = Triplets::with_capacity(n, n, n + 4 * coeffs.len());
    for k in 0..n {
        t.push(k, k, mesh.measure(k));
    }
    for (l, &[a, b]) in mesh.links().iter().zip(coeffs) {
        if !(a >= 0.0 && b >= 0.0) {
            return None;
        }
        let (k, j) = (l.inner, l.outer);
        t.push(k, k, dt * a);
        t.push(k, j, -dt * b);
        t.push(j, j, dt * b);
        t.push(j, k, -dt * a);
    }
    let m = t.to_csc().ok()?;
    // diagonal pivots only: elimination then never mixes signs
    let lu = SparseLu::factor(&m, order, f64::MIN_POSITIVE).ok()?;
    let rhs: Vec<f64> = (0..n).map(|k| mesh.measure(k) * old[k]).collect();
    let s = lu.solve(&rhs).ok()?;
    if s.iter().all(|v| *v >= 0.0) {
        Some(s)
    } else {
        None
    }
}

/// Cell whose saturation enters the advective flux from `k` to `j`; ties
/// pick the larger saturation, and the inner cell if those are equal too.
#[inline]
fn upwind_cell(k: usize, j: usize, ck: f64, cj: f64, dv: f64) -> usize {
    if dv > 0.0 || (dv == 0.0 && ck >= cj) {
        k
    } else {
        j
    }
}

/// Fill-reducing cell order by geometric nested dissection: split at the
/// median of the longer axis, emit both halves recursively and the
/// separator (cells on the first side touching the second) last.
pub fn nested_dissection(mesh: &Mesh) -> Vec<usize> {
    const LEAF: usize = 8;
    enum Task {
        Split(Vec<usize>),
        Emit(Vec<usize>),
    }
    let n = mesh.num_cells();
    let mut order = Vec::with_capacity(n);
    let mut mark = vec![0u32; n];
    let mut stamp = 0u32;
    let mut stack = vec![Task::Split((0..n).collect())];
    while let Some(task) = stack.pop() {
        let mut cells = match task {
            Task::Emit(cells) => {
                order.extend_from_slice(&cells);
                continue;
            }
            Task::Split(cells) => cells,
        };
        if cells.len() <= LEAF {
            order.extend_from_slice(&cells);
            continue;
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for &k in &cells {
            let x = mesh.cells()[k].center;
            for a in 0..2 {
                lo[a] = lo[a].min(x[a]);
                hi[a] = hi[a].max(x[a]);
            }
        }
        let axis = if hi[1] - lo[1] > hi[0] - lo[0] { 1 } else { 0 };
        let centers = mesh.cells();
        cells.sort_unstable_by(|&a, &b| {
            centers[a].center[axis]
                .partial_cmp(&centers[b].center[axis])
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let right = cells.split_off(cells.len() / 2);
        stamp += 1;
        for &k in &right {
            mark[k] = stamp;
        }
        let (sep, left): (Vec<usize>, Vec<usize>) =
            cells.into_iter().partition(|&k| mesh.neighbors(k).any(|j| mark[j] == stamp));
        stack.push(Task::Emit(sep));
        stack.push(Task::Split(right));
        stack.push(Task::Split(left));
    }
    order
}

/// Column order of the packed unknowns following `cell_order`; the
/// multiplier of the non-local model goes last.
pub fn unknown_order(kind: ModelKind, cell_order: &[usize]) -> Vec<usize> {
    let stride = unknowns_per_cell(kind);
    let mut out = Vec::with_capacity(num_unknowns(kind, cell_order.len()));
    for &k in cell_order {
        out.extend((0..stride).map(|u| stride * k + u));
    }
    if kind == ModelKind::NonLocal {
        out.push(stride * cell_order.len());
    }
    out
}
