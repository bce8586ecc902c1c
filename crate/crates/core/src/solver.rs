//! Damped Newton iterations, a finite-difference Jacobian check and the
//! adaptive backward-Euler time driver.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math::max_abs;
use crate::mesh::Mesh;
use crate::model::{discrete_energy, half_step_dissipation, EnergyReport, ModelError, ModelKind, ModelParams, State};
use crate::scheme::{nested_dissection, pack, unknown_order, unpack, SchemeError, StepProblem};
use crate::sparse::{solve_refined, CscMatrix, SparseError, SparseLu};

/// A square nonlinear system `R(x) = 0` with an analytic Jacobian.
pub trait NonlinearSystem {
    fn dim(&self) -> usize;
    fn residual(&self, x: &[f64], out: &mut [f64]);
    fn jacobian(&self, x: &[f64]) -> CscMatrix;

    /// Fill-reducing column order for the factorization.
    fn column_order(&self) -> Option<&[usize]> {
        None
    }

    /// Preferred pivot row for every column of `jac`.
    fn pivot_rows(&self, _jac: &CscMatrix) -> Option<Vec<usize>> {
        None
    }

    /// How far the bounded unknowns of `x` lie outside their admissible
    /// range (zero when admissible).
    fn bounds_excess(&self, _x: &[f64]) -> f64 {
        0.0
    }

    /// An admissible vector close to a converged but slightly inadmissible
    /// `x`, produced by the system's own equations (never by clamping).
    fn restore_bounds(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Absolute infinity-norm tolerance on the residual.
    pub tol_residual: f64,
    pub max_iter: usize,
    /// Initial step factor of the line search.
    pub damping: f64,
    pub backtrack_ratio: f64,
    pub max_backtracks: usize,
    /// Iterates may leave `[0, 1]` by at most this much during the search.
    pub bound_slack: f64,
    pub dt_shrink: f64,
    pub dt_grow: f64,
    /// Threshold for partial pivoting in the sparse LU.
    pub pivot_tol: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tol_residual: 1e-9,
            max_iter: 50,
            damping: 1.0,
            backtrack_ratio: 0.5,
            max_backtracks: 30,
            bound_slack: 0.1,
            dt_shrink: 0.5,
            dt_grow: 1.5,
            pivot_tol: 1e-3,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |name: &'static str, value: f64| Err(SolverError::InvalidConfig { name, value });
        if !(self.tol_residual > 0.0) {
            return bad("tol_residual", self.tol_residual);
        }
        if self.max_iter == 0 {
            return bad("max_iter", 0.0);
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("damping", self.damping);
        }
        if !(self.backtrack_ratio > 0.0 && self.backtrack_ratio < 1.0) {
            return bad("backtrack_ratio", self.backtrack_ratio);
        }
        if !(self.bound_slack >= 0.0) {
            return bad("bound_slack", self.bound_slack);
        }
        if !(self.dt_shrink > 0.0 && self.dt_shrink < 1.0) {
            return bad("dt_shrink", self.dt_shrink);
        }
        if !(self.dt_grow >= 1.0) {
            return bad("dt_grow", self.dt_grow);
        }
        if !(self.pivot_tol > 0.0 && self.pivot_tol <= 1.0) {
            return bad("pivot_tol", self.pivot_tol);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    InvalidConfig { name: &'static str, value: f64 },
    Scheme(SchemeError),
    Linear { iteration: usize, source: SparseError },
    MaxIterations { iterations: usize, residual_norm: f64 },
    LineSearch { iteration: usize, residual_norm: f64 },
    /// The residual converged but the saturation left `[0, 1]`.
    OutOfBounds { excess: f64 },
    NonFinite { iteration: usize },
    TimeStepUnderflow { t: f64, dt: f64, last: Box<SolverError> },
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::InvalidConfig { name, value } => write!(f, "invalid solver setting {name} = {value}"),
            SolverError::Scheme(e) => write!(f, "{e}"),
            SolverError::Linear { iteration, source } => write!(f, "linear solve failed in iteration {iteration}: {source}"),
            SolverError::MaxIterations { iterations, residual_norm } => {
                write!(f, "no convergence after {iterations} iterations (residual {residual_norm:e})")
            }
            SolverError::LineSearch { iteration, residual_norm } => {
                write!(f, "line search failed in iteration {iteration} (residual {residual_norm:e})")
            }
            SolverError::OutOfBounds { excess } => write!(f, "converged saturation leaves [0, 1] by {excess:e}"),
            SolverError::NonFinite { iteration } => write!(f, "non-finite residual in iteration {iteration}"),
            SolverError::TimeStepUnderflow { t, dt, last } => {
                write!(f, "time step fell to {dt:e} at t = {t}; last failure: {last}")
            }
        }
    }
}

impl core::error::Error for SolverError {}

impl From<SchemeError> for SolverError {
    fn from(e: SchemeError) -> Self {
        SolverError::Scheme(e)
    }
}

impl From<ModelError> for SolverError {
    fn from(e: ModelError) -> Self {
        SolverError::Scheme(SchemeError::Model(e))
    }
}

const MAX_RESTORES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual_norm: f64,
    pub backtracks: usize,
}

/// Damped Newton from `x0`. Steps are halved until the iterate stays within
/// `bound_slack` of the admissible range and the residual infinity-norm
/// decreases by the factor `1 - 1e-4 * step`.
///
/// A converged iterate must be admissible. If it is not, the system may
/// offer a restored vector ([`NonlinearSystem::restore_bounds`]); that one is
/// accepted when its residual also meets the tolerance, and otherwise Newton
/// continues from it.
pub fn newton_solve<S: NonlinearSystem + ?Sized>(
    system: &S,
    x0: Vec<f64>,
    cfg: &NewtonConfig,
) -> Result<(Vec<f64>, NewtonReport), SolverError> {
    newton_solve_cached(system, x0, cfg, &mut None)
}

/// Refinement sweeps allowed when a stale factorization preconditions a new
/// Jacobian before a fresh one is computed.
const STALE_REFINE: usize = 10;

/// [`newton_solve`] that keeps its last LU factors in `cache`.
///
/// Each linear solve first tries iterative refinement against the current
/// Jacobian with the cached factors, and refactors only when that does not
/// reach the accuracy target. The cache may be carried across calls on
/// systems of the same dimension and sparsity.
pub fn newton_solve_cached<S: NonlinearSystem + ?Sized>(
    system: &S,
    x0: Vec<f64>,
    cfg: &NewtonConfig,
    cache: &mut Option<SparseLu>,
) -> Result<(Vec<f64>, NewtonReport), SolverError> {
    cfg.validate()?;
    let n = system.dim();
    let identity: Vec<usize>;
    let order = match system.column_order() {
        Some(o) => o,
        None => {
            identity = (0..n).collect();
            &identity
        }
    };
    let mut x = x0;
    let mut r = vec![0.0; n];
    system.residual(&x, &mut r);
    let mut norm = max_abs(&r);
    if !norm.is_finite() {
        return Err(SolverError::NonFinite { iteration: 0 });
    }
    let mut backtracks = 0;
    let mut trial = vec![0.0; n];
    let mut r_trial = vec![0.0; n];
    let mut restores = 0;
    for it in 0..=cfg.max_iter {
        if norm <= cfg.tol_residual {
            let excess = system.bounds_excess(&x);
            if excess == 0.0 {
                return Ok((x, NewtonReport { iterations: it, residual_norm: norm, backtracks }));
            }
            let restored = match system.restore_bounds(&x) {
                Some(v) if restores < MAX_RESTORES => v,
                _ => return Err(SolverError::OutOfBounds { excess }),
            };
            restores += 1;
            system.residual(&restored, &mut r);
            x = restored;
            norm = max_abs(&r);
            if norm <= cfg.tol_residual && system.bounds_excess(&x) == 0.0 {
                return Ok((x, NewtonReport { iterations: it, residual_norm: norm, backtracks }));
            }
        }
        if it == cfg.max_iter {
            break;
        }
        let jac = system.jacobian(&x);
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let stale = match cache.as_ref() {
            Some(lu) if lu.dim() == n => solve_refined(&jac, lu, &rhs, 1e-12, STALE_REFINE).ok(),
            _ => None,
        };
        let dx = match stale {
            Some(dx) => dx,
            None => {
                *cache = None;
                let lu = match system.pivot_rows(&jac) {
                    Some(rows) => SparseLu::factor_with_rows(&jac, order, &rows, cfg.pivot_tol),
                    None => SparseLu::factor(&jac, order, cfg.pivot_tol),
                }
                .map_err(|source| SolverError::Linear { iteration: it, source })?;
                let dx = solve_refined(&jac, &lu, &rhs, 1e-12, 4)
                    .map_err(|source| SolverError::Linear { iteration: it, source })?;
                *cache = Some(lu);
                dx
            }
        };

        let mut step = cfg.damping;
        let mut accepted = false;
        for _ in 0..=cfg.max_backtracks {
            for i in 0..n {
                trial[i] = x[i] + step * dx[i];
            }
            if system.bounds_excess(&trial) <= cfg.bound_slack {
                system.residual(&trial, &mut r_trial);
                let t = max_abs(&r_trial);
                if t.is_finite() && t <= (1.0 - 1e-4 * step) * norm {
                    core::mem::swap(&mut x, &mut trial);
                    core::mem::swap(&mut r, &mut r_trial);
                    norm = t;
                    accepted = true;
                    break;
                }
            }
            step *= cfg.backtrack_ratio;
            backtracks += 1;
        }
        if !accepted {
            return Err(SolverError::LineSearch { iteration: it, residual_norm: norm });
        }
    }
    Err(SolverError::MaxIterations { iterations: cfg.max_iter, residual_norm: norm })
}

/// Largest entry-wise discrepancy between the analytic Jacobian and central
/// differences with step `epsilon`, measured as `|a - d| / max(|a|, 1)`.
/// Rows listed in `skip_rows` are ignored (use this for rows touching an
/// upwind switch, where the residual is not differentiable).
pub fn jacobian_fd_check<S: NonlinearSystem + ?Sized>(system: &S, x: &[f64], epsilon: f64, skip_rows: &[usize]) -> f64 {
    let n = system.dim();
    let jac = system.jacobian(x);
    let mut skip = vec![false; n];
    for &r in skip_rows {
        skip[r] = true;
    }
    let mut xp = x.to_vec();
    let (mut rp, mut rm) = (vec![0.0; n], vec![0.0; n]);
    let mut worst = 0.0_f64;
    for col in 0..n {
        xp[col] = x[col] + epsilon;
        system.residual(&xp, &mut rp);
        xp[col] = x[col] - epsilon;
        system.residual(&xp, &mut rm);
        xp[col] = x[col];
        for row in 0..n {
            if skip[row] {
                continue;
            }
            let fd = (rp[row] - rm[row]) / (2.0 * epsilon);
            let a = jac.get(row, col);
            worst = worst.max((fd - a).abs() / a.abs().max(1.0));
        }
    }
    worst
}

impl NonlinearSystem for StepProblem<'_> {
    fn dim(&self) -> usize {
        StepProblem::dim(self)
    }

    fn residual(&self, x: &[f64], out: &mut [f64]) {
        self.residual_into(x, out)
    }

    fn jacobian(&self, x: &[f64]) -> CscMatrix {
        StepProblem::jacobian(self, x)
    }

    fn pivot_rows(&self, jac: &CscMatrix) -> Option<Vec<usize>> {
        Some(StepProblem::pivot_rows(self, jac))
    }

    fn bounds_excess(&self, x: &[f64]) -> f64 {
        StepProblem::bounds_excess(self, x)
    }

    fn restore_bounds(&self, x: &[f64]) -> Option<Vec<f64>> {
        StepProblem::restore_bounds(self, x)
    }
}

struct OrderedStep<'a> {
    problem: StepProblem<'a>,
    order: &'a [usize],
}

impl NonlinearSystem for OrderedStep<'_> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn residual(&self, x: &[f64], out: &mut [f64]) {
        self.problem.residual_into(x, out)
    }

    fn jacobian(&self, x: &[f64]) -> CscMatrix {
        self.problem.jacobian(x)
    }

    fn column_order(&self) -> Option<&[usize]> {
        Some(self.order)
    }

    fn pivot_rows(&self, jac: &CscMatrix) -> Option<Vec<usize>> {
        Some(self.problem.pivot_rows(jac))
    }

    fn bounds_excess(&self, x: &[f64]) -> f64 {
        self.problem.bounds_excess(x)
    }

    fn restore_bounds(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.problem.restore_bounds(x)
    }
}

/// Advances `previous` by one backward-Euler step of size `dt`, starting
/// Newton from `previous` itself.
pub fn implicit_step(
    mesh: &Mesh,
    params: &ModelParams,
    previous: &State,
    dt: f64,
    cfg: &NewtonConfig,
) -> Result<(State, NewtonReport), SolverError> {
    let order = unknown_order(params.kind, &nested_dissection(mesh));
    step_with_order(mesh, params, previous, dt, cfg, &order, &mut None)
}

fn step_with_order(
    mesh: &Mesh,
    params: &ModelParams,
    previous: &State,
    dt: f64,
    cfg: &NewtonConfig,
    order: &[usize],
    cache: &mut Option<SparseLu>,
) -> Result<(State, NewtonReport), SolverError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(SchemeError::InvalidTimeStep { dt }.into());
    }
    params.validate()?;
    params.check_mesh(mesh)?;
    previous.check_mesh(mesh)?;
    if previous.kind() != params.kind {
        return Err(SchemeError::KindMismatch { params: params.kind, state: previous.kind() }.into());
    }
    let system = OrderedStep { problem: StepProblem::new(mesh, params, &previous.c1, dt), order };
    let (x, report) = newton_solve_cached(&system, pack(previous), cfg, cache)?;
    Ok((unpack(params.kind, &x, previous.time + dt), report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub t_end: f64,
    pub dt0: f64,
    /// Times at which the state is stored; steps land on them exactly.
    pub sample_times: Vec<f64>,
    pub newton: NewtonConfig,
}

impl RunSettings {
    pub fn new(t_end: f64, dt0: f64) -> Self {
        RunSettings { t_end, dt0, sample_times: Vec::new(), newton: NewtonConfig::default() }
    }
}

/// One accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub newton_iters: usize,
    pub residual_norm: f64,
    pub e_total: f64,
    /// Failed attempts (with halved steps) before this one succeeded.
    pub rejected_attempts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub final_state: State,
    /// States at the requested sample times inside `[t0, t_end]`, in order.
    pub snapshots: Vec<State>,
    /// Energy of the initial state followed by one report per accepted step.
    pub energies: Vec<EnergyReport>,
    pub steps: Vec<StepRecord>,
}

fn report(mesh: &Mesh, state: &State, params: &ModelParams) -> Result<EnergyReport, SolverError> {
    let mut e = discrete_energy(mesh, state, params)?;
    if params.kind == ModelKind::NonLocal {
        e.dissipation = Some(half_step_dissipation(mesh, state, params)?);
    }
    Ok(e)
}

/// Runs the implicit scheme from `initial` to `settings.t_end`.
///
/// Failed steps are retried with `dt * dt_shrink` until the step drops
/// below `dt0 * 2^-20`; after a success the step grows by `dt_grow` up to
/// `dt0`. `observer` sees every accepted step.
pub fn run(
    mesh: &Mesh,
    params: &ModelParams,
    initial: State,
    settings: &RunSettings,
    mut observer: impl FnMut(&StepRecord, &State, &EnergyReport),
) -> Result<RunOutput, SolverError> {
    let cfg = &settings.newton;
    cfg.validate()?;
    if !(settings.dt0 > 0.0) || !settings.dt0.is_finite() {
        return Err(SchemeError::InvalidTimeStep { dt: settings.dt0 }.into());
    }
    params.validate()?;
    params.check_mesh(mesh)?;
    initial.check_mesh(mesh)?;
    if initial.kind() != params.kind {
        return Err(SchemeError::KindMismatch { params: params.kind, state: initial.kind() }.into());
    }
    let t0 = initial.time;
    let t_end = settings.t_end;
    let mut targets: Vec<f64> = settings.sample_times.iter().copied().filter(|&s| s >= t0 && s <= t_end).collect();
    targets.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    targets.dedup();

    let mut snapshots = Vec::new();
    let mut next_sample = 0;
    while next_sample < targets.len() && targets[next_sample] <= t0 {
        snapshots.push(initial.clone());
        next_sample += 1;
    }
    let mut energies = vec![report(mesh, &initial, params)?];
    let mut steps = Vec::new();
    let order = unknown_order(params.kind, &nested_dissection(mesh));
    let dt_min = settings.dt0 * libm::ldexp(1.0, -20);
    let mut lu_cache = None;

    let mut state = initial;
    let mut dt_nominal = settings.dt0;
    while state.time < t_end {
        let target = if next_sample < targets.len() { targets[next_sample] } else { t_end };
        let mut rejected = 0;
        let (new_state, newton, dt) = loop {
            let mut dt = dt_nominal.min(target - state.time);
            let landing = state.time + dt >= target - 1e-12 * dt_nominal;
            if landing {
                dt = target - state.time;
            }
            match step_with_order(mesh, params, &state, dt, cfg, &order, &mut lu_cache) {
                Ok((mut s, rep)) => {
                    if landing {
                        s.time = target;
                    }
                    break (s, rep, dt);
                }
                Err(SolverError::Scheme(e)) => return Err(SolverError::Scheme(e)),
                Err(e) => {
                    rejected += 1;
                    dt_nominal = dt * cfg.dt_shrink;
                    if dt_nominal < dt_min {
                        return Err(SolverError::TimeStepUnderflow { t: state.time, dt: dt_nominal, last: Box::new(e) });
                    }
                }
            }
        };
        state = new_state;
        let energy = report(mesh, &state, params)?;
        let record = StepRecord {
            step: steps.len() + 1,
            t: state.time,
            dt,
            newton_iters: newton.iterations,
            residual_norm: newton.residual_norm,
            e_total: energy.e_total,
            rejected_attempts: rejected,
        };
        observer(&record, &state, &energy);
        steps.push(record);
        energies.push(energy);
        while next_sample < targets.len() && targets[next_sample] <= state.time {
            snapshots.push(state.clone());
            next_sample += 1;
        }
        dt_nominal = (dt_nominal * cfg.dt_grow).min(settings.dt0);
    }
    Ok(RunOutput { final_state: state, snapshots, energies, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Potentials;
    use crate::sparse::Triplets;

    struct Affine {
        a: Vec<Vec<f64>>,
        target: Vec<f64>,
    }

    impl NonlinearSystem for Affine {
        fn dim(&self) -> usize {
            self.target.len()
        }
        fn residual(&self, x: &[f64], out: &mut [f64]) {
            for (i, row) in self.a.iter().enumerate() {
                out[i] = row.iter().zip(x.iter().zip(&self.target)).map(|(a, (x, t))| a * (x - t)).sum();
            }
        }
        fn jacobian(&self, _x: &[f64]) -> CscMatrix {
            let n = self.dim();
            let mut t = Triplets::new(n, n);
            for (i, row) in self.a.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    if v != 0.0 {
                        t.push(i, j, v);
                    }
                }
            }
            t.to_csc().unwrap()
        }
    }

    #[test]
    fn affine_residual_converges_in_one_step() {
        let sys = Affine {
            a: vec![vec![4.0, 1.0, 0.0], vec![1.0, -3.0, 2.0], vec![0.0, 2.0, 5.0]],
            target: vec![0.3, -1.2, 2.5],
        };
        let (x, rep) = newton_solve(&sys, vec![0.0; 3], &NewtonConfig::default()).unwrap();
        assert_eq!(rep.iterations, 1);
        for (a, b) in x.iter().zip(&sys.target) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(jacobian_fd_check(&sys, &[0.1, 0.2, 0.3], 1e-6, &[]) < 1e-9);
    }

    #[test]
    fn rejects_invalid_config() {
        let cfg = NewtonConfig { backtrack_ratio: 1.0, ..NewtonConfig::default() };
        assert!(matches!(cfg.validate(), Err(SolverError::InvalidConfig { name: "backtrack_ratio", .. })));
        let cfg = NewtonConfig { max_iter: 0, ..NewtonConfig::default() };
        assert!(cfg.validate().is_err());
    }

    fn equilibrium(kind: ModelKind, n: usize, c: f64, chi: f64) -> State {
        let g = chi * (1.0 - 2.0 * c);
        let potentials = match kind {
            ModelKind::NonLocal => Potentials::Phase { mu1: vec![(1.0 - c) * g; n], mu2: vec![-c * g; n] },
            ModelKind::Local => Potentials::Generalized { mu: vec![g; n] },
        };
        State { c1: vec![c; n], potentials, time: 0.0 }
    }

    #[test]
    fn equilibrium_guess_needs_no_iteration() {
        let mesh = Mesh::cartesian(4, Some(3), 1.0, Some(1.0)).unwrap();
        for kind in [ModelKind::NonLocal, ModelKind::Local] {
            let params = ModelParams::new(kind, 1e-3, 0.8, [0.0, 0.0], [1.0, 1.0], 12).unwrap();
            let s = equilibrium(kind, 12, 0.3, 0.8);
            let (next, rep) = implicit_step(&mesh, &params, &s, 0.1, &NewtonConfig::default()).unwrap();
            assert!(rep.iterations <= 1);
            assert_eq!(next.c1, s.c1);
        }
    }

    #[test]
    fn zero_horizon_returns_initial_state() {
        let mesh = Mesh::cartesian(3, None, 1.0, None).unwrap();
        let params = ModelParams::new(ModelKind::Local, 1e-3, 0.8, [0.0, 0.0], [1.0, 1.0], 3).unwrap();
        let s = State::with_saturation(ModelKind::Local, vec![0.2, 0.5, 0.7]);
        let out = run(&mesh, &params, s.clone(), &RunSettings::new(0.0, 0.1), |_, _, _| {}).unwrap();
        assert!(out.steps.is_empty());
        assert_eq!(out.final_state, s);
        assert_eq!(out.energies.len(), 1);
    }

    #[test]
    fn uniform_state_stays_put() {
        let mesh = Mesh::cartesian(5, Some(5), 1.0, Some(1.0)).unwrap();
        let params = ModelParams::new(ModelKind::NonLocal, 1e-3, 0.8, [0.0, 0.0], [1.0, 2.0], 25).unwrap();
        let s = State::with_saturation(ModelKind::NonLocal, vec![0.4; 25]);
        let out = run(&mesh, &params, s, &RunSettings::new(0.05, 0.01), |_, _, _| {}).unwrap();
        assert_eq!(out.steps.len(), 5);
        for e in &out.energies {
            assert!((e.e_total - out.energies[0].e_total).abs() < 1e-14);
        }
        assert!(out.final_state.c1.iter().all(|&c| (c - 0.4).abs() < 1e-14));
        assert!((out.final_state.time - 0.05).abs() < 1e-15);
    }

    #[test]
    fn steps_land_on_sample_times() {
        let mesh = Mesh::cartesian(8, None, 1.0, None).unwrap();
        let params = ModelParams::new(ModelKind::Local, 1e-2, 0.5, [0.0, 0.0], [1.0, 1.0], 8).unwrap();
        let c: Vec<f64> = (0..8).map(|k| 0.3 + 0.05 * k as f64).collect();
        let mut settings = RunSettings::new(0.1, 0.03);
        settings.sample_times = vec![0.0, 0.05, 0.1, 0.2];
        let out = run(&mesh, &params, State::with_saturation(ModelKind::Local, c), &settings, |_, _, _| {}).unwrap();
        let times: Vec<f64> = out.snapshots.iter().map(|s| s.time).collect();
        assert_eq!(times, vec![0.0, 0.05, 0.1]);
        assert_eq!(out.steps.last().unwrap().t, 0.1);
    }
}
