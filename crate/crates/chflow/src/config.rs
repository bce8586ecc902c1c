//! Flat `key = value` run configuration.
//!
//! One key per line, `#` starts a comment, keys are case-sensitive and may
//! appear at most once. Unknown keys are rejected. A `preset` fixes every
//! physical parameter; setting one of those keys alongside a preset is a
//! contradiction. Numerical and output keys may always be set.
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `preset` | `cross`, `spinodal` or `custom` | `custom` |
//! | `model` | `nonlocal` or `local` (ignored by `compare`) | `nonlocal` |
//! | `nx`, `ny` | Cartesian cells; omit `ny` for 1D | preset: 32 x 32 |
//! | `lx`, `ly` | domain lengths | 1 |
//! | `mesh_file` | triangle mesh instead of `nx`/`ny` | |
//! | `alpha`, `chi` | interface and chemical coefficients | required for `custom` |
//! | `theta1`, `theta2` | thermal coefficients | 0 |
//! | `m1`, `m2` | mobilities | 1 |
//! | `psi1`, `psi2` | `zero`, a constant, `linear:gx,gy` for `gx x + gy y`, or `file:path` with one value per cell | `zero` |
//! | `initial` | `cross`, `spinodal`, `uniform`, `cosine` or `file` | preset |
//! | `cross_width`, `cross_length` | arm width and length | `0.2 lx`, `0.8 lx` |
//! | `spinodal_amplitude`, `spinodal_mean` | noise half-width and target mean | 0.01, 0.5 |
//! | `uniform_value` | constant saturation | 0.5 |
//! | `cosine_mean`, `cosine_amplitude` | `mean + amplitude cos(pi x / lx)` | 0.5, 0.3 |
//! | `initial_file` | one saturation per line, cell order | |
//! | `t_end`, `dt0` | horizon and initial step | preset: 0.1, 1e-4 |
//! | `output_times` | comma-separated snapshot times | preset |
//! | `newton_tol`, `newton_max_iter` | Newton stopping rule | 1e-9, 50 |
//! | `jko_tau` | minimizing-movement step (`jko1d`) | 1e-4 |
//! | `output_dir` | artifact directory | `out` |
//! | `rng` | random generator; only `pcg64` | `pcg64` |
//! | `seed` | generator seed, required for `spinodal` initial data | |
//!
//! Relative paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chflow_core::model::ModelKind;
use chflow_core::solver::NewtonConfig;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { key: String, line: usize },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("contradictory configuration: {0}")]
    Contradiction(String),
}

const KEYS: &[&str] = &[
    "preset",
    "model",
    "nx",
    "ny",
    "lx",
    "ly",
    "mesh_file",
    "alpha",
    "chi",
    "theta1",
    "theta2",
    "m1",
    "m2",
    "psi1",
    "psi2",
    "initial",
    "cross_width",
    "cross_length",
    "spinodal_amplitude",
    "spinodal_mean",
    "uniform_value",
    "cosine_mean",
    "cosine_amplitude",
    "initial_file",
    "t_end",
    "dt0",
    "output_times",
    "newton_tol",
    "newton_max_iter",
    "jko_tau",
    "output_dir",
    "rng",
    "seed",
];

/// Keys a preset fixes.
const PHYSICAL: &[&str] = &["alpha", "chi", "theta1", "theta2", "m1", "m2", "psi1", "psi2"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Cross,
    Spinodal,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSpec {
    Cartesian { nx: usize, ny: Option<usize>, lx: f64, ly: Option<f64> },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PsiSpec {
    Constant(f64),
    /// `gx x + gy y` at cell centers.
    Linear { gx: f64, gy: f64 },
    /// One value per cell, cell order.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    /// Union of a horizontal and a vertical centered bar.
    Cross { width: f64, length: f64 },
    Spinodal { amplitude: f64, mean: f64 },
    Uniform(f64),
    Cosine { mean: f64, amplitude: f64 },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Preset,
    pub mesh: MeshSpec,
    pub model: ModelKind,
    pub alpha: f64,
    pub chi: f64,
    pub theta: [f64; 2],
    pub mobility: [f64; 2],
    pub psi: [PsiSpec; 2],
    pub initial: InitialSpec,
    pub t_end: f64,
    pub dt0: f64,
    pub output_times: Vec<f64>,
    pub newton: NewtonConfig,
    pub jko_tau: f64,
    pub output_dir: PathBuf,
    pub seed: Option<u64>,
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|(_, v)| v.as_str())
    }

    fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| invalid(key, format!("cannot parse `{v}`"))))
            .transpose()
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.num::<f64>(key)?.unwrap_or(default))
    }
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), reason: reason.into() }
}

fn tokenize(text: &str) -> Result<Entries, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or(ConfigError::Syntax { line })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax { line });
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey { key: key.to_string(), line });
        }
        if map.insert(key.to_string(), (line, value.to_string())).is_some() {
            return Err(ConfigError::Duplicate { key: key.to_string(), line });
        }
    }
    Ok(Entries { map })
}

fn parse_psi(key: &str, value: &str, base: &Path) -> Result<PsiSpec, ConfigError> {
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| invalid(key, format!("cannot parse `{s}`")));
    if value == "zero" {
        return Ok(PsiSpec::Constant(0.0));
    }
    if let Some(path) = value.strip_prefix("file:") {
        return Ok(PsiSpec::File(base.join(path.trim())));
    }
    if let Some(g) = value.strip_prefix("linear:") {
        return match g.split(',').collect::<Vec<_>>().as_slice() {
            [gx, gy] => Ok(PsiSpec::Linear { gx: num(gx)?, gy: num(gy)? }),
            _ => Err(invalid(key, "expected `linear:gx,gy`")),
        };
    }
    num(value).map(PsiSpec::Constant).map_err(|_| invalid(key, "expected `zero`, a number, `linear:gx,gy` or `file:path`"))
}

fn parse_times(value: &str) -> Result<Vec<f64>, ConfigError> {
    let mut times = Vec::new();
    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let t: f64 = part.parse().map_err(|_| invalid("output_times", format!("cannot parse `{part}`")))?;
        if !(t >= 0.0) || !t.is_finite() {
            return Err(invalid("output_times", format!("time {t} must be finite and nonnegative")));
        }
        times.push(t);
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("output_times", "times must be strictly increasing"));
    }
    Ok(times)
}

/// Parse a configuration; relative paths are resolved against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<RunConfig, ConfigError> {
    let e = tokenize(text)?;
    let preset = match e.get("preset").unwrap_or("custom") {
        "cross" => Preset::Cross,
        "spinodal" => Preset::Spinodal,
        "custom" => Preset::Custom,
        other => return Err(invalid("preset", format!("unknown preset `{other}`"))),
    };
    if preset != Preset::Custom {
        if let Some(key) = PHYSICAL.iter().find(|k| e.has(k)) {
            return Err(ConfigError::Contradiction(format!("`{key}` cannot be set together with a preset")));
        }
    }
    let model = match e.get("model").unwrap_or("nonlocal") {
        "nonlocal" => ModelKind::NonLocal,
        "local" => ModelKind::Local,
        other => return Err(invalid("model", format!("unknown model `{other}`"))),
    };

    let lx = e.f64_or("lx", 1.0)?;
    let mesh = match (e.get("mesh_file"), e.has("nx") || e.has("ny") || e.has("lx") || e.has("ly")) {
        (Some(_), true) => {
            return Err(ConfigError::Contradiction("`mesh_file` excludes `nx`, `ny`, `lx` and `ly`".into()))
        }
        (Some(path), false) => MeshSpec::File(base.join(path)),
        (None, _) => {
            let default_n = if preset == Preset::Custom { None } else { Some(32) };
            let nx = e.num::<usize>("nx")?.or(default_n).ok_or(ConfigError::Missing("nx"))?;
            let ny = match e.num::<usize>("ny")? {
                Some(ny) => Some(ny),
                None if preset != Preset::Custom && !e.has("nx") => Some(32),
                None => None,
            };
            if ny.is_none() && e.has("ly") {
                return Err(ConfigError::Contradiction("`ly` given for a 1D grid".into()));
            }
            let ly = ny.map(|_| e.f64_or("ly", 1.0)).transpose()?;
            if nx == 0 || ny == Some(0) {
                return Err(invalid("nx", "cell counts must be positive"));
            }
            if !(lx > 0.0) || ly.is_some_and(|l| !(l > 0.0)) {
                return Err(invalid("lx", "domain lengths must be positive"));
            }
            MeshSpec::Cartesian { nx, ny, lx, ly }
        }
    };

    let (alpha, chi) = match preset {
        Preset::Cross => (3.6e-4, 0.8),
        Preset::Spinodal => (3e-4, 0.96),
        Preset::Custom => (
            e.num("alpha")?.ok_or(ConfigError::Missing("alpha"))?,
            e.num("chi")?.ok_or(ConfigError::Missing("chi"))?,
        ),
    };
    let theta = [e.f64_or("theta1", 0.0)?, e.f64_or("theta2", 0.0)?];
    let mobility = [e.f64_or("m1", 1.0)?, e.f64_or("m2", 1.0)?];
    let psi = [
        e.get("psi1").map(|v| parse_psi("psi1", v, base)).transpose()?.unwrap_or(PsiSpec::Constant(0.0)),
        e.get("psi2").map(|v| parse_psi("psi2", v, base)).transpose()?.unwrap_or(PsiSpec::Constant(0.0)),
    ];
    if !(alpha > 0.0) || !(chi > 0.0) {
        return Err(invalid("alpha", "alpha and chi must be positive"));
    }
    if theta.iter().any(|t| !(*t >= 0.0)) {
        return Err(invalid("theta1", "thermal coefficients must be nonnegative"));
    }
    if mobility.iter().any(|m| !(*m > 0.0)) {
        return Err(invalid("m1", "mobilities must be positive"));
    }
    if model == ModelKind::Local && theta.iter().any(|t| *t > 0.0) {
        return Err(ConfigError::Contradiction("the local model requires theta1 = theta2 = 0".into()));
    }

    let initial_kind = match (e.get("initial"), preset) {
        (Some(kind), _) => kind,
        (None, Preset::Cross) => "cross",
        (None, Preset::Spinodal) => "spinodal",
        (None, Preset::Custom) => return Err(ConfigError::Missing("initial")),
    };
    let initial = match initial_kind {
        "cross" => InitialSpec::Cross {
            width: e.f64_or("cross_width", 0.2 * lx)?,
            length: e.f64_or("cross_length", 0.8 * lx)?,
        },
        "spinodal" => InitialSpec::Spinodal {
            amplitude: e.f64_or("spinodal_amplitude", 0.01)?,
            mean: e.f64_or("spinodal_mean", 0.5)?,
        },
        "uniform" => InitialSpec::Uniform(e.f64_or("uniform_value", 0.5)?),
        "cosine" => InitialSpec::Cosine {
            mean: e.f64_or("cosine_mean", 0.5)?,
            amplitude: e.f64_or("cosine_amplitude", 0.3)?,
        },
        "file" => InitialSpec::File(base.join(e.get("initial_file").ok_or(ConfigError::Missing("initial_file"))?)),
        other => return Err(invalid("initial", format!("unknown initial condition `{other}`"))),
    };
    if let InitialSpec::Cross { width, length } = initial {
        if !(width > 0.0) || !(length >= width) {
            return Err(invalid("cross_width", "need 0 < cross_width <= cross_length"));
        }
    }
    if let InitialSpec::Spinodal { amplitude, mean } = initial {
        if !(amplitude >= 0.0) || !(0.0..=1.0).contains(&mean) {
            return Err(invalid("spinodal_amplitude", "need amplitude >= 0 and mean in [0, 1]"));
        }
    }

    let (def_t_end, def_times): (Option<f64>, Vec<f64>) = match preset {
        Preset::Cross => (Some(0.1), vec![0.01, 0.02, 0.1]),
        Preset::Spinodal => (Some(0.05), vec![0.005, 0.01, 0.02, 0.05]),
        Preset::Custom => (None, Vec::new()),
    };
    let t_end = e.num::<f64>("t_end")?.or(def_t_end).ok_or(ConfigError::Missing("t_end"))?;
    let dt0 = e.f64_or("dt0", 1e-4)?;
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(invalid("t_end", "must be finite and nonnegative"));
    }
    if !(dt0 > 0.0) || !dt0.is_finite() {
        return Err(invalid("dt0", "must be positive"));
    }
    let mut output_times = match e.get("output_times") {
        Some(v) => parse_times(v)?,
        None => def_times,
    };
    output_times.retain(|&t| t <= t_end);

    let mut newton = NewtonConfig::default();
    if let Some(tol) = e.num::<f64>("newton_tol")? {
        newton.tol_residual = tol;
    }
    if let Some(it) = e.num::<usize>("newton_max_iter")? {
        newton.max_iter = it;
    }
    newton.validate().map_err(|err| invalid("newton_tol", err.to_string()))?;

    let jko_tau = e.f64_or("jko_tau", 1e-4)?;
    if !(jko_tau > 0.0) {
        return Err(invalid("jko_tau", "must be positive"));
    }
    if let Some(rng) = e.get("rng") {
        if rng != "pcg64" {
            return Err(invalid("rng", format!("unsupported generator `{rng}`; only `pcg64` is available")));
        }
    }
    let seed = e.num::<u64>("seed")?;
    if matches!(initial, InitialSpec::Spinodal { .. }) && seed.is_none() {
        return Err(ConfigError::Missing("seed"));
    }
    let output_dir = base.join(e.get("output_dir").unwrap_or("out"));

    Ok(RunConfig {
        preset,
        mesh,
        model,
        alpha,
        chi,
        theta,
        mobility,
        psi,
        initial,
        t_end,
        dt0,
        output_times,
        newton,
        jko_tau,
        output_dir,
        seed,
    })
}

pub fn read_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        parse_config(text, Path::new("/base"))
    }

    #[test]
    fn cross_preset() {
        let c = parse("preset = cross\n").unwrap();
        assert_eq!((c.alpha, c.chi), (3.6e-4, 0.8));
        assert_eq!(c.mobility, [1.0, 1.0]);
        assert_eq!(c.theta, [0.0, 0.0]);
        assert_eq!(c.psi, [PsiSpec::Constant(0.0), PsiSpec::Constant(0.0)]);
        assert_eq!(c.mesh, MeshSpec::Cartesian { nx: 32, ny: Some(32), lx: 1.0, ly: Some(1.0) });
        assert_eq!(c.initial, InitialSpec::Cross { width: 0.2, length: 0.8 });
        assert_eq!(c.output_times, vec![0.01, 0.02, 0.1]);
        assert_eq!((c.t_end, c.dt0), (0.1, 1e-4));
    }

    #[test]
    fn spinodal_preset_needs_seed() {
        assert!(matches!(parse("preset = spinodal\n"), Err(ConfigError::Missing("seed"))));
        let c = parse("preset = spinodal\nseed = 7\n").unwrap();
        assert_eq!((c.alpha, c.chi), (3e-4, 0.96));
        assert_eq!(c.initial, InitialSpec::Spinodal { amplitude: 0.01, mean: 0.5 });
        assert_eq!(c.seed, Some(7));
    }

    #[test]
    fn rejections() {
        assert!(matches!(parse("preset = cross\nfoo = 1\n"), Err(ConfigError::UnknownKey { line: 2, .. })));
        assert!(matches!(parse("preset = cross\nnx = 4\nnx = 5\n"), Err(ConfigError::Duplicate { .. })));
        assert!(matches!(parse("preset = cross\nalpha = 1\n"), Err(ConfigError::Contradiction(_))));
        assert!(matches!(parse("just words\n"), Err(ConfigError::Syntax { line: 1 })));
        let local_theta = "alpha = 1e-3\nchi = 1\nnx = 4\ninitial = uniform\nt_end = 0\nmodel = local\ntheta1 = 0.1\n";
        assert!(matches!(parse(local_theta), Err(ConfigError::Contradiction(_))));
        assert!(matches!(parse("preset = cross\nmesh_file = m.txt\nnx = 3\n"), Err(ConfigError::Contradiction(_))));
        assert!(matches!(parse("preset = cross\nrng = mt\n"), Err(ConfigError::Invalid { .. })));
        assert!(matches!(parse("alpha = 1\nchi = 1\nnx = 4\nt_end = 0\n"), Err(ConfigError::Missing("initial"))));
    }

    #[test]
    fn custom_one_dimensional() {
        let text = "alpha = 3.6e-4\nchi = 0.8\nnx = 64\ninitial = cosine\nt_end = 0.02\noutput_times = 0.01, 0.02\npsi1 = linear:1,0 # tilt\npsi2 = file:psi.txt\n";
        let c = parse(text).unwrap();
        assert_eq!(c.mesh, MeshSpec::Cartesian { nx: 64, ny: None, lx: 1.0, ly: None });
        assert_eq!(c.initial, InitialSpec::Cosine { mean: 0.5, amplitude: 0.3 });
        assert_eq!(c.psi[0], PsiSpec::Linear { gx: 1.0, gy: 0.0 });
        assert_eq!(c.output_dir, Path::new("/base/out"));
        assert!(matches!(parse(&text.replace("0.01, 0.02", "0.02, 0.01")), Err(ConfigError::Invalid { .. })));
    }
}
