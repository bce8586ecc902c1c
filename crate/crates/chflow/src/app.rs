//! Command implementations behind the CLI.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chflow_core::diagnostics::{check_bounds, energy_comparison, mixed_region_measure, DiagnosticsError};
use chflow_core::jko1d::{compare_trajectories, jko_run, JkoConfig, JkoError, Trajectory1D};
use chflow_core::mesh::MeshWarning;
use chflow_core::model::{discrete_energy, EnergyReport, ModelError, ModelKind, ModelParams, State};
use chflow_core::solver::{run, RunOutput, RunSettings, SolverError, StepRecord};
use thiserror::Error;

use crate::config::{read_config, ConfigError, MeshSpec, RunConfig};
use crate::meshfile::{read_mesh, MeshFileError};
use crate::output::{energy_csv, table_csv, vtk_snapshot, write, EnergyRow};
use crate::setup::{Problem, SetupError};

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Setup(#[from] SetupError),
    #[error(transparent)]
    MeshFile(#[from] MeshFileError),
    #[error("{0}")]
    Unsupported(String),
    #[error("solver failed: {0}")]
    Solver(#[from] SolverError),
    #[error("minimizing movement failed: {0}")]
    Jko(#[from] JkoError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("state at t = {t} leaves [0, 1] by {violation:e} in cell {cell}")]
    Bounds { t: f64, violation: f64, cell: usize },
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl AppError {
    /// 2 for bad input, 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) | AppError::Setup(_) | AppError::MeshFile(_) | AppError::Unsupported(_) => 2,
            _ => 3,
        }
    }
}

/// A finished finite-volume run with its energy series.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub output: RunOutput,
    /// Initial state followed by one row per accepted step.
    pub rows: Vec<EnergyRow>,
    pub log: String,
}

impl Simulation {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn reports(&self) -> Vec<EnergyReport> {
        self.rows.iter().map(|r| r.report).collect()
    }
}

pub fn settings(cfg: &RunConfig) -> RunSettings {
    let mut s = RunSettings::new(cfg.t_end, cfg.dt0);
    s.sample_times = cfg.output_times.iter().copied().filter(|&t| t > 0.0).collect();
    s.newton = cfg.newton;
    s
}

/// Run one model, recording energies and the mixed-region measure of every
/// accepted state. `extra` sees each accepted step as well.
pub fn simulate(
    problem: &Problem,
    params: &ModelParams,
    settings: &RunSettings,
    mut extra: impl FnMut(&StepRecord, &State, &EnergyReport),
) -> Result<Simulation, AppError> {
    let mesh = &problem.mesh;
    let initial = State::with_saturation(params.kind, problem.c1.clone());
    let mixed = |c: &[f64]| mixed_region_measure(mesh, c, 0.1, 0.9);
    let mut rows = vec![EnergyRow {
        t: 0.0,
        report: discrete_energy(mesh, &initial, params)?,
        mixed_measure: mixed(&initial.c1)?,
    }];
    let mut log = String::new();
    let _ = writeln!(log, "model {:?}, {} cells, t_end {}, dt0 {}", params.kind, mesh.num_cells(), settings.t_end, settings.dt0);
    let mut failure: Option<AppError> = None;
    let result = run(mesh, params, initial, settings, |rec, state, report| {
        let _ = writeln!(
            log,
            "step {} t {:e} dt {:e} newton {} residual {:e} energy {:e} rejected {}",
            rec.step, rec.t, rec.dt, rec.newton_iters, rec.residual_norm, rec.e_total, rec.rejected_attempts
        );
        let bounds = check_bounds(&state.c1);
        if !bounds.pass && failure.is_none() {
            failure = Some(AppError::Bounds {
                t: rec.t,
                violation: bounds.worst_violation,
                cell: bounds.worst_cell.unwrap_or(0),
            });
        }
        match mixed(&state.c1) {
            Ok(m) => rows.push(EnergyRow { t: rec.t, report: *report, mixed_measure: m }),
            Err(e) => {
                failure.get_or_insert(e.into());
            }
        }
        extra(rec, state, report);
    });
    let output = match result {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(log, "aborted: {e}");
            return Err(e.into());
        }
    };
    if let Some(e) = failure {
        return Err(e);
    }
    let _ = writeln!(log, "finished after {} steps", output.steps.len());
    Ok(Simulation { output, rows, log })
}

fn put(path: PathBuf, contents: &str) -> Result<(), AppError> {
    write(&path, contents).map_err(|source| AppError::Output { path: path.display().to_string(), source })
}

fn snapshot_name(index: usize, t: f64) -> String {
    format!("snapshot_{index:03}_t{t:e}.vtk")
}

/// Write the log, energy CSV and snapshots of one run into `dir`.
fn emit(dir: &Path, problem: &Problem, sim: &Simulation, initial: &State) -> Result<(), AppError> {
    put(dir.join("run.log"), &sim.log)?;
    put(dir.join("energy.csv"), &energy_csv(&sim.rows))?;
    let mut states = vec![initial];
    states.extend(sim.output.snapshots.iter());
    for (i, s) in states.iter().enumerate() {
        put(dir.join(snapshot_name(i, s.time)), &vtk_snapshot(&problem.geometry, s))?;
    }
    Ok(())
}

/// `run <config>`: a single model.
pub fn cmd_run(config: &Path) -> Result<String, AppError> {
    let cfg = read_config(config)?;
    let problem = Problem::build(&cfg)?;
    let params = problem.params(&cfg, cfg.model)?;
    let sim = simulate(&problem, &params, &settings(&cfg), |_, _, _| {})?;
    let initial = State::with_saturation(cfg.model, problem.c1.clone());
    emit(&cfg.output_dir, &problem, &sim, &initial)?;
    let last = sim.rows.last().map(|r| r.report.e_total).unwrap_or(f64::NAN);
    Ok(format!(
        "{:?} run: {} steps, final energy {last:e}, output in {}",
        cfg.model,
        sim.output.steps.len(),
        cfg.output_dir.display()
    ))
}

/// `compare <config>`: both models from one initial state.
pub fn cmd_compare(config: &Path) -> Result<String, AppError> {
    let cfg = read_config(config)?;
    if cfg.theta.iter().any(|t| *t > 0.0) {
        return Err(AppError::Unsupported("comparison needs theta1 = theta2 = 0 (the local model has no thermal term)".into()));
    }
    let problem = Problem::build(&cfg)?;
    let st = settings(&cfg);
    let mut sims = Vec::with_capacity(2);
    for (kind, sub) in [(ModelKind::NonLocal, "nonlocal"), (ModelKind::Local, "local")] {
        let params = problem.params(&cfg, kind)?;
        let sim = simulate(&problem, &params, &st, |_, _, _| {})?;
        emit(&cfg.output_dir.join(sub), &problem, &sim, &State::with_saturation(kind, problem.c1.clone()))?;
        sims.push(sim);
    }
    let mut times = vec![0.0];
    times.extend(st.sample_times.iter().copied());
    let table = energy_comparison(&sims[0].times(), &sims[0].reports(), &sims[1].times(), &sims[1].reports(), &times)?;
    let mixed_at = |sim: &Simulation, t: f64| {
        sim.rows.iter().find(|r| (r.t - t).abs() <= 1e-12 * t.max(1.0)).map(|r| r.mixed_measure).unwrap_or(f64::NAN)
    };
    let rows: Vec<Vec<f64>> = table
        .iter()
        .map(|r| vec![r.t, r.nonlocal, r.local, mixed_at(&sims[0], r.t), mixed_at(&sims[1], r.t)])
        .collect();
    put(
        cfg.output_dir.join("energy_comparison.csv"),
        &table_csv(&["t", "e_nonlocal", "e_local", "mixed_nonlocal", "mixed_local"], &rows),
    )?;
    let mut msg = String::from("t, E_nonlocal, E_local\n");
    for r in &table {
        let _ = writeln!(msg, "{:e}, {:e}, {:e}", r.t, r.nonlocal, r.local);
    }
    Ok(msg)
}

/// `jko1d <config>`: minimizing movements against the non-local scheme on
/// a 1D grid.
pub fn cmd_jko1d(config: &Path) -> Result<String, AppError> {
    let cfg = read_config(config)?;
    let MeshSpec::Cartesian { ny: None, lx, .. } = cfg.mesh else {
        return Err(AppError::Unsupported("jko1d needs a 1D Cartesian grid (omit `ny`)".into()));
    };
    if cfg.theta.iter().any(|t| *t > 0.0) {
        return Err(AppError::Unsupported("jko1d needs theta1 = theta2 = 0".into()));
    }
    let problem = Problem::build(&cfg)?;
    let tau = cfg.jko_tau;
    let steps = (cfg.t_end / tau).round() as usize;
    let multiple = |t: f64| ((t / tau).round() * tau - t).abs() <= 1e-9 * tau;
    if !multiple(cfg.t_end) || !cfg.output_times.iter().all(|&t| multiple(t)) {
        return Err(AppError::Unsupported("t_end and output_times must be multiples of jko_tau".into()));
    }
    let params = problem.params(&cfg, ModelKind::NonLocal)?;
    let st = settings(&cfg);
    let sim = simulate(&problem, &params, &st, |_, _, _| {})?;
    let jko = jko_run(&problem.c1, lx, tau, steps, 1, &params, &JkoConfig::default())?;

    let mut fv = Trajectory1D { length: lx, times: vec![0.0], states: vec![problem.c1.clone()] };
    for s in &sim.output.snapshots {
        fv.times.push(s.time);
        fv.states.push(s.c1.clone());
    }
    let mut times = vec![0.0];
    times.extend(st.sample_times.iter().copied());
    let gaps = compare_trajectories(&fv, &jko.trajectory, &times)?;

    let step_rows: Vec<Vec<f64>> = jko
        .steps
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![(i + 1) as f64, (i + 1) as f64 * tau, r.energy, r.w2_sum, r.objective, r.iterations as f64, r.pg_norm]
        })
        .collect();
    put(
        cfg.output_dir.join("jko_steps.csv"),
        &table_csv(&["step", "t", "energy", "w2_sum", "objective", "iterations", "pg_norm"], &step_rows),
    )?;
    let gap_rows: Vec<Vec<f64>> = times.iter().zip(&gaps).map(|(t, g)| vec![*t, *g]).collect();
    put(cfg.output_dir.join("jko_compare.csv"), &table_csv(&["t", "l2_gap"], &gap_rows))?;

    let n = problem.c1.len();
    let h = lx / n as f64;
    let mut header = vec!["x".to_string()];
    let mut columns: Vec<&Vec<f64>> = Vec::new();
    for &t in &times {
        if let (Some(a), Some(b)) = (state_at(&fv, t), state_at(&jko.trajectory, t)) {
            header.push(format!("fv_t{t:e}"));
            header.push(format!("jko_t{t:e}"));
            columns.push(a);
            columns.push(b);
        }
    }
    let profile_rows: Vec<Vec<f64>> = (0..n)
        .map(|k| std::iter::once((k as f64 + 0.5) * h).chain(columns.iter().map(|c| c[k])).collect())
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    put(cfg.output_dir.join("profiles.csv"), &table_csv(&header_refs, &profile_rows))?;
    put(cfg.output_dir.join("run.log"), &sim.log)?;

    let mut msg = String::from("t, L2 gap (finite volume vs minimizing movement)\n");
    for (t, g) in times.iter().zip(&gaps) {
        let _ = writeln!(msg, "{t:e}, {g:e}");
    }
    Ok(msg)
}

fn state_at(tr: &Trajectory1D, t: f64) -> Option<&Vec<f64>> {
    tr.times.iter().position(|&s| (s - t).abs() <= 1e-12 * t.max(1.0)).map(|i| &tr.states[i])
}

/// `check-mesh <file>`: parse, validate and summarize a triangle mesh.
pub fn cmd_check_mesh(path: &Path) -> Result<String, AppError> {
    let (mesh, _) = read_mesh(path)?;
    let mut msg = format!(
        "{} cells, {} interior faces, {} boundary faces, area {:e}\n",
        mesh.num_cells(),
        mesh.num_interior_faces(),
        mesh.faces().len() - mesh.num_interior_faces(),
        mesh.domain_measure()
    );
    for w in mesh.warnings() {
        match w {
            MeshWarning::CircumcenterOutside { cell } => {
                let _ = writeln!(msg, "warning: circumcenter of cell {cell} lies outside the triangle");
            }
        }
    }
    Ok(msg)
}
