//! One-dimensional minimizing-movement (JKO) reference solver.
//!
//! Densities are piecewise constant on a uniform grid of `[0, L]`, so their
//! cumulative distributions are piecewise linear and their quantile
//! functions are piecewise linear in the mass variable. Wasserstein
//! distances, optimal maps and Kantorovich potentials are therefore computed
//! in closed form by merging breakpoints; no transport problem is
//! discretized.
//!
//! A step minimizes `E(c) + (W_1^2(c, c1_prev) + W_2^2(1 - c, c2_prev)) / (2 tau)`
//! over `0 <= c <= 1` with fixed mass by spectral projected gradient, using
//! the exact Euclidean projection onto the box-and-mass set.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math::{compensated_sum, sqrt};
use crate::mesh::Mesh;
use crate::model::{discrete_energy, energy_gradient, ModelError, ModelKind, ModelParams, State};

#[derive(Debug, Clone, PartialEq)]
pub enum JkoError {
    EmptyGrid,
    InvalidLength { length: f64 },
    NegativeDensity { cell: usize, value: f64 },
    MassMismatch { a: f64, b: f64 },
    GridMismatch,
    ZeroMass,
    InvalidTimeStep { tau: f64 },
    InvalidMobility { m: f64 },
    /// Saturation outside `[0, 1]` or inconsistent with the parameters.
    InvalidState,
    NonConvergence { iterations: usize, pg_norm: f64 },
    Model(ModelError),
}

impl fmt::Display for JkoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JkoError::EmptyGrid => write!(f, "density grid has no cells"),
            JkoError::InvalidLength { length } => write!(f, "domain length must be positive, got {length}"),
            JkoError::NegativeDensity { cell, value } => write!(f, "negative density {value} in cell {cell}"),
            JkoError::MassMismatch { a, b } => write!(f, "densities carry different masses ({a} vs {b})"),
            JkoError::GridMismatch => write!(f, "densities live on different grids"),
            JkoError::ZeroMass => write!(f, "density has zero mass"),
            JkoError::InvalidTimeStep { tau } => write!(f, "time step must be positive, got {tau}"),
            JkoError::InvalidMobility { m } => write!(f, "mobility must be positive, got {m}"),
            JkoError::InvalidState => write!(f, "saturation must lie in [0, 1] on the parameter grid"),
            JkoError::NonConvergence { iterations, pg_norm } => {
                write!(f, "no convergence after {iterations} iterations (projected gradient {pg_norm:e})")
            }
            JkoError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for JkoError {}

impl From<ModelError> for JkoError {
    fn from(e: ModelError) -> Self {
        JkoError::Model(e)
    }
}

const MASS_TOL: f64 = 1e-10;

/// Nonnegative piecewise-constant density on a uniform grid of `[0, length]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Density1D {
    length: f64,
    values: Vec<f64>,
}

impl Density1D {
    pub fn new(length: f64, values: Vec<f64>) -> Result<Self, JkoError> {
        if values.is_empty() {
            return Err(JkoError::EmptyGrid);
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(JkoError::InvalidLength { length });
        }
        if let Some((cell, &value)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
            return Err(JkoError::NegativeDensity { cell, value });
        }
        Ok(Density1D { length, values })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn num_cells(&self) -> usize {
        self.values.len()
    }

    pub fn h(&self) -> f64 {
        self.length / self.values.len() as f64
    }

    pub fn center(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.h()
    }

    pub fn mass(&self) -> f64 {
        let h = self.h();
        compensated_sum(self.values.iter().map(|v| h * v))
    }

    fn same_grid(&self, other: &Density1D) -> bool {
        self.values.len() == other.values.len() && self.length == other.length
    }

    /// Positive-mass pieces `(s_start, s_end, x_left, density)` of the
    /// quantile function.
    fn pieces(&self) -> Vec<Piece> {
        let h = self.h();
        let mut s = 0.0;
        let mut out = Vec::with_capacity(self.values.len());
        for (k, &v) in self.values.iter().enumerate() {
            if v > 0.0 {
                let end = s + h * v;
                out.push(Piece { s0: s, s1: end, x0: k as f64 * h, rho: v });
                s = end;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    s0: f64,
    s1: f64,
    x0: f64,
    rho: f64,
}

impl Piece {
    #[inline]
    fn quantile(&self, s: f64) -> f64 {
        self.x0 + (s - self.s0) / self.rho
    }
}

fn check_pair(a: &Density1D, b: &Density1D, m: f64) -> Result<(f64, f64), JkoError> {
    if !a.same_grid(b) {
        return Err(JkoError::GridMismatch);
    }
    if !(m > 0.0) || !m.is_finite() {
        return Err(JkoError::InvalidMobility { m });
    }
    let (ma, mb) = (a.mass(), b.mass());
    if (ma - mb).abs() > MASS_TOL * ma.max(mb).max(1.0) {
        return Err(JkoError::MassMismatch { a: ma, b: mb });
    }
    Ok((ma, mb))
}

/// `W^2 = (1/m) int_0^M |Q_a(s) - Q_b(s)|^2 ds`, exact for piecewise
/// constant densities.
pub fn wasserstein_sq(a: &Density1D, b: &Density1D, m: f64) -> Result<f64, JkoError> {
    let (ma, mb) = check_pair(a, b, m)?;
    let total = ma.min(mb);
    if total == 0.0 {
        return Ok(0.0);
    }
    let (pa, pb) = (a.pieces(), b.pieces());
    let (mut i, mut j) = (0, 0);
    let mut s = 0.0;
    let mut acc = 0.0;
    let mut carry = 0.0;
    while i < pa.len() && j < pb.len() && s < total {
        let next = pa[i].s1.min(pb[j].s1).min(total);
        if next > s {
            let d0 = pa[i].quantile(s) - pb[j].quantile(s);
            let d1 = pa[i].quantile(next) - pb[j].quantile(next);
            let term = (next - s) * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0;
            // Neumaier-compensated accumulation
            let t = acc + term;
            carry += if acc.abs() >= term.abs() { (acc - t) + term } else { (term - t) + acc };
            acc = t;
            s = next;
        }
        if pa[i].s1 <= s {
            i += 1;
        }
        if j < pb.len() && pb[j].s1 <= s {
            j += 1;
        }
    }
    Ok((acc + carry) / m)
}

/// Quadratic Wasserstein distance with mobility weight: `sqrt(W^2)`.
pub fn wasserstein_1d(a: &Density1D, b: &Density1D, m: f64) -> Result<f64, JkoError> {
    wasserstein_sq(a, b, m).map(sqrt)
}

/// Kantorovich potential of the transport from `a` to `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kantorovich {
    /// Cell averages of `phi`, normalized so that `sum h a phi = 0`.
    pub phi: Vec<f64>,
    /// `m int a |phi'|^2`, which equals `W^2` when `phi' = (x - T) / m`.
    pub transport_cost: f64,
    h: f64,
    m: f64,
    b_pieces: Vec<Piece>,
    a_cum: Vec<f64>,
    gaps: Vec<Option<Gap>>,
}

impl Kantorovich {
    /// Monotone rearrangement `T = Q_b o F_a`. On a gap in the support of
    /// `a`, `F_a` is flat and `T` jumps from the left limit of `Q_b` to the
    /// right limit at the midpoint between them (the c-transform
    /// extension), so that `phi = dist^2 / 2m` there when `b = a`.
    pub fn transport_map(&self, x: f64) -> f64 {
        let n = self.a_cum.len() - 1;
        let k = ((x / self.h) as usize).min(n - 1);
        if let Some(gap) = self.gaps[k] {
            return gap.target(x);
        }
        let s = self.a_cum[k] + (x - k as f64 * self.h).clamp(0.0, self.h) * self.density(k);
        quantile_at(&self.b_pieces, s)
    }

    /// `phi'(x) = (x - T(x)) / m`.
    pub fn derivative(&self, x: f64) -> f64 {
        (x - self.transport_map(x)) / self.m
    }

    fn density(&self, k: usize) -> f64 {
        (self.a_cum[k + 1] - self.a_cum[k]) / self.h
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Gap {
    left: f64,
    right: f64,
    split: f64,
}

impl Gap {
    fn target(&self, x: f64) -> f64 {
        if x < self.split {
            self.left
        } else {
            self.right
        }
    }
}

/// Generalized inverse `inf { x : F(x) >= s }` restricted to the support.
fn quantile_at(pieces: &[Piece], s: f64) -> f64 {
    if pieces.is_empty() {
        return 0.0;
    }
    if s <= pieces[0].s0 {
        return pieces[0].x0;
    }
    let idx = pieces.partition_point(|p| p.s1 < s);
    let p = pieces[idx.min(pieces.len() - 1)];
    p.quantile(s.min(p.s1))
}

fn left_limit(pieces: &[Piece], s: f64) -> Option<f64> {
    let idx = pieces.partition_point(|p| p.s0 < s);
    (idx > 0).then(|| {
        let p = pieces[idx - 1];
        p.quantile(s.min(p.s1))
    })
}

fn right_limit(pieces: &[Piece], s: f64) -> Option<f64> {
    let idx = pieces.partition_point(|p| p.s1 <= s);
    pieces.get(idx).map(|p| p.quantile(s.max(p.s0)))
}

/// Target of every zero-density cell of `a`, per maximal run of such cells.
fn gap_targets(values: &[f64], h: f64, a_cum: &[f64], b_pieces: &[Piece]) -> Vec<Option<Gap>> {
    let n = values.len();
    let mut gaps = vec![None; n];
    let mut k = 0;
    while k < n {
        if values[k] > 0.0 {
            k += 1;
            continue;
        }
        let start = k;
        while k < n && values[k] <= 0.0 {
            k += 1;
        }
        let (xl, xr) = (start as f64 * h, k as f64 * h);
        let s = a_cum[start];
        let gap = match (left_limit(b_pieces, s), right_limit(b_pieces, s)) {
            (Some(l), Some(r)) => Gap { left: l, right: r, split: (0.5 * (l + r)).clamp(xl, xr) },
            (Some(l), None) => Gap { left: l, right: l, split: xr },
            (None, Some(r)) => Gap { left: r, right: r, split: xl },
            (None, None) => Gap { left: 0.0, right: 0.0, split: xl },
        };
        for g in &mut gaps[start..k] {
            *g = Some(gap);
        }
    }
    gaps
}

/// Kantorovich potential with `phi' = (x - T(x)) / m`, as exact cell
/// averages.
pub fn kantorovich_gradient(a: &Density1D, b: &Density1D, m: f64) -> Result<Kantorovich, JkoError> {
    check_pair(a, b, m)?;
    let n = a.num_cells();
    let h = a.h();
    let b_pieces = b.pieces();
    let mut a_cum = Vec::with_capacity(n + 1);
    a_cum.push(0.0);
    let mut s = 0.0;
    for &v in &a.values {
        if v > 0.0 {
            s += h * v;
        }
        a_cum.push(s);
    }
    let gaps = gap_targets(&a.values, h, &a_cum, &b_pieces);

    let mut phi = vec![0.0; n];
    let mut phi_left = 0.0;
    let mut cost = 0.0;
    let mut j = 0;
    for k in 0..n {
        let xk = k as f64 * h;
        let right = xk + h;
        let rho = a.values[k];
        // piecewise-linear phi' on [xk, right] as (y0, y1, p0, p1)
        let mut weighted = 0.0; // int (right - y) phi'(y) dy
        let mut total = 0.0; // int phi'(y) dy
        let mut segment = |y0: f64, y1: f64, p0: f64, p1: f64| {
            let len = y1 - y0;
            let (w0, w1) = (right - y0, right - y1);
            total += len * (p0 + p1) / 2.0;
            weighted += len * (2.0 * w0 * p0 + w0 * p1 + w1 * p0 + 2.0 * w1 * p1) / 6.0;
            len * (p0 * p0 + p0 * p1 + p1 * p1) / 3.0
        };
        if rho > 0.0 {
            let (s0, s1) = (a_cum[k], a_cum[k + 1]);
            while j + 1 < b_pieces.len() && b_pieces[j].s1 <= s0 {
                j += 1;
            }
            let mut s = s0;
            let mut jj = j;
            let mut local = 0.0;
            while s < s1 {
                let piece = b_pieces[jj.min(b_pieces.len() - 1)];
                let next = if jj + 1 < b_pieces.len() { piece.s1.min(s1) } else { s1 };
                if next > s {
                    let y0 = xk + (s - s0) / rho;
                    let y1 = if next >= s1 { right } else { xk + (next - s0) / rho };
                    let p0 = (y0 - piece.quantile(s)) / m;
                    let p1 = (y1 - piece.quantile(next)) / m;
                    local += segment(y0, y1, p0, p1);
                }
                s = next;
                if jj + 1 < b_pieces.len() && piece.s1 <= s {
                    jj += 1;
                } else if next >= s1 {
                    break;
                }
            }
            cost += m * rho * local;
        } else {
            let gap = gaps[k].expect("zero cell without gap target");
            if gap.split > xk && gap.split < right {
                segment(xk, gap.split, (xk - gap.left) / m, (gap.split - gap.left) / m);
                segment(gap.split, right, (gap.split - gap.right) / m, (right - gap.right) / m);
            } else {
                let t = gap.target(0.5 * (xk + right));
                segment(xk, right, (xk - t) / m, (right - t) / m);
            }
        }
        phi[k] = phi_left + weighted / h;
        phi_left += total;
    }
    let mass = a.mass();
    if mass > 0.0 {
        let mean = compensated_sum(phi.iter().zip(&a.values).map(|(p, v)| h * v * p)) / mass;
        for p in phi.iter_mut() {
            *p -= mean;
        }
    }
    Ok(Kantorovich { phi, transport_cost: cost, h, m, b_pieces, a_cum, gaps })
}

/// Euclidean projection onto `{0 <= c <= 1, h sum c = mass}`:
/// `c = clip(y - nu, 0, 1)` with the shift `nu` found by bisection and then
/// solved exactly on the set of unclipped cells.
pub fn project_box_mass(y: &[f64], h: f64, mass: f64) -> Vec<f64> {
    let target = mass / h;
    let count = |nu: f64| y.iter().map(|v| (v - nu).clamp(0.0, 1.0)).sum::<f64>();
    let (lo0, hi0) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), &v| (l.min(v), u.max(v)));
    // count(lo0 - 1) = n, count(hi0) = 0
    let (mut lo, mut hi) = (lo0 - 1.0, hi0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut nu = 0.5 * (lo + hi);
    // exact shift for the active pattern at nu
    let (mut free_sum, mut free, mut upper) = (0.0, 0usize, 0usize);
    for &v in y {
        let z = v - nu;
        if z >= 1.0 {
            upper += 1;
        } else if z > 0.0 {
            free += 1;
            free_sum += v;
        }
    }
    if free > 0 {
        let exact = (free_sum + upper as f64 - target) / free as f64;
        if exact.is_finite() && (exact - nu).abs() <= (hi - lo).abs().max(1e-12) * 4.0 + 1e-12 {
            nu = exact;
        }
    }
    y.iter().map(|v| (v - nu).clamp(0.0, 1.0)).collect()
}

/// Relative rounding level of the objective value.
const NOISE: f64 = 1e-14;

/// Largest entry-wise move of a gradient step before projection.
const MAX_MOVE: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JkoConfig {
    /// Stop when `|P(c - g) - c|_inf` falls below this, `g` being the
    /// gradient of the step objective. For very small steps the threshold
    /// is raised to the rounding level of `g`, about `16 eps length^2 /
    /// (m tau)`.
    pub pg_tol: f64,
    pub max_iter: usize,
}

impl Default for JkoConfig {
    fn default() -> Self {
        JkoConfig { pg_tol: 1e-7, max_iter: 10_000 }
    }
}

/// Outcome of one minimizing-movement step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JkoStepReport {
    pub iterations: usize,
    pub pg_norm: f64,
    /// `E(c^{n-1})`.
    pub energy_prev: f64,
    /// `E(c^n)`.
    pub energy: f64,
    /// `W_1^2(c1^n, c1^{n-1}) + W_2^2(c2^n, c2^{n-1})`.
    pub w2_sum: f64,
    /// `E(c^n) + w2_sum / (2 tau)`.
    pub objective: f64,
}

/// The step's objective on a fixed 1D grid.
struct Objective<'a> {
    mesh: Mesh,
    params: &'a ModelParams,
    prev1: Density1D,
    prev2: Density1D,
    tau: f64,
    length: f64,
}

impl Objective<'_> {
    fn energy(&self, c: &[f64]) -> Result<f64, JkoError> {
        let state = State::with_saturation(self.params.kind, c.to_vec());
        Ok(discrete_energy(&self.mesh, &state, self.params)?.e_total)
    }

    fn distances(&self, c: &[f64]) -> Result<f64, JkoError> {
        let d1 = Density1D { length: self.length, values: c.to_vec() };
        let d2 = Density1D { length: self.length, values: c.iter().map(|v| 1.0 - v).collect() };
        let [m1, m2] = self.params.mobility;
        Ok(wasserstein_sq(&d1, &self.prev1, m1)? + wasserstein_sq(&d2, &self.prev2, m2)?)
    }

    fn value(&self, c: &[f64]) -> Result<(f64, f64, f64), JkoError> {
        let e = self.energy(c)?;
        let w = self.distances(c)?;
        Ok((e + w / (2.0 * self.tau), e, w))
    }

    fn gradient(&self, c: &[f64]) -> Result<Vec<f64>, JkoError> {
        let mut g = energy_gradient(&self.mesh, c, self.params)?;
        let d1 = Density1D { length: self.length, values: c.to_vec() };
        let d2 = Density1D { length: self.length, values: c.iter().map(|v| 1.0 - v).collect() };
        let [m1, m2] = self.params.mobility;
        let k1 = kantorovich_gradient(&d1, &self.prev1, m1)?;
        let k2 = kantorovich_gradient(&d2, &self.prev2, m2)?;
        for (k, gk) in g.iter_mut().enumerate() {
            *gk += (k1.phi[k] - k2.phi[k]) / self.tau;
        }
        Ok(g)
    }
}

fn pg_norm(c: &[f64], g: &[f64], h: f64, mass: f64) -> f64 {
    let y: Vec<f64> = c.iter().zip(g).map(|(x, d)| x - d).collect();
    let p = project_box_mass(&y, h, mass);
    p.iter().zip(c).fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
}

fn check_params(params: &ModelParams, c: &[f64]) -> Result<(), JkoError> {
    params.validate()?;
    if params.num_cells() != c.len() {
        return Err(ModelError::SizeMismatch { expected: c.len(), found: params.num_cells() }.into());
    }
    if c.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(JkoError::InvalidState);
    }
    Ok(())
}

/// One minimizing-movement step from `prev` (the saturation `c1` on a
/// uniform grid of `[0, length]`).
///
/// Spectral projected gradient: Barzilai-Borwein step lengths along the
/// projected direction with Armijo backtracking, so every iterate stays
/// feasible. Once decreases fall below the rounding of the objective, a
/// step is accepted on the slope at its end point instead, and the
/// objective may then rise by at most `1e-14 |F|` per iteration.
pub fn jko_step(
    prev: &[f64],
    length: f64,
    tau: f64,
    params: &ModelParams,
    cfg: &JkoConfig,
) -> Result<(Vec<f64>, JkoStepReport), JkoError> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(JkoError::InvalidTimeStep { tau });
    }
    check_params(params, prev)?;
    let n = prev.len();
    let prev1 = Density1D::new(length, prev.to_vec())?;
    let prev2 = Density1D::new(length, prev.iter().map(|v| 1.0 - v).collect())?;
    let mesh = Mesh::cartesian(n, None, length, None).map_err(|_| JkoError::InvalidLength { length })?;
    let h = length / n as f64;
    let mass = prev1.mass();
    let obj = Objective { mesh, params, prev1, prev2, tau, length };

    let mut c = prev.to_vec();
    let (mut f, mut e, mut w) = obj.value(&c)?;
    let energy_prev = e;
    let mut g = obj.gradient(&c)?;
    let mut pg = pg_norm(&c, &g, h, mass);
    let mut step = tau.min(1.0);
    let mut iterations = 0;
    // rounding in phi is about eps length^2 / m, so the transport gradient
    // cannot resolve stationarity below this
    let m_min = params.mobility[0].min(params.mobility[1]);
    let tol = cfg.pg_tol.max(16.0 * f64::EPSILON * length * length / (m_min * tau));
    while pg > tol {
        if iterations >= cfg.max_iter {
            return Err(JkoError::NonConvergence { iterations, pg_norm: pg });
        }
        iterations += 1;
        // c lives in [0, 1]; longer moves only cost precision in the projection
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let st = if gmax > 0.0 { step.min(MAX_MOVE / gmax) } else { step };
        let y: Vec<f64> = c.iter().zip(&g).map(|(x, d)| x - st * d).collect();
        let target = project_box_mass(&y, h, mass);
        let d: Vec<f64> = target.iter().zip(&c).map(|(t, x)| t - x).collect();
        let slope = h * g.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = c.iter().zip(&d).map(|(x, dd)| (x + lambda * dd).clamp(0.0, 1.0)).collect();
            if trial == c {
                break;
            }
            let (ft, et, wt) = obj.value(&trial)?;
            if ft <= f + 1e-4 * lambda * slope {
                accepted = Some((trial, ft, et, wt, None));
                break;
            }
            // Near a minimizer the decrease drops below the rounding of f;
            // then judge the step by the slope at the trial point instead.
            if ft - f <= NOISE * f.abs().max(1.0) {
                let gt = obj.gradient(&trial)?;
                let end_slope = h * gt.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
                if end_slope <= -0.8 * slope {
                    accepted = Some((trial, ft, et, wt, Some(gt)));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((trial, ft, et, wt, gt)) = accepted else {
            // no acceptable step along the projected direction
            return Err(JkoError::NonConvergence { iterations, pg_norm: pg });
        };
        let g_new = match gt {
            Some(gt) => gt,
            None => obj.gradient(&trial)?,
        };
        let s: Vec<f64> = trial.iter().zip(&c).map(|(a, b)| a - b).collect();
        let ss: f64 = s.iter().map(|v| v * v).sum();
        let sy: f64 = s.iter().zip(g_new.iter().zip(&g)).map(|(si, (gn, go))| si * (gn - go)).sum();
        step = if sy > 0.0 { (ss / sy).clamp(1e-14, 1e14) } else { 1e3 * step.max(1e-14) };
        c = trial;
        g = g_new;
        f = ft;
        e = et;
        w = wt;
        pg = pg_norm(&c, &g, h, mass);
    }
    Ok((c, JkoStepReport { iterations, pg_norm: pg, energy_prev, energy: e, w2_sum: w, objective: f }))
}

/// JKO iterates sampled at given times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory1D {
    pub length: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JkoRun {
    pub trajectory: Trajectory1D,
    pub steps: Vec<JkoStepReport>,
}

/// `steps` minimizing movements of size `tau` from `initial`, storing the
/// iterate after each multiple of `sample_every` steps (and the start).
pub fn jko_run(
    initial: &[f64],
    length: f64,
    tau: f64,
    steps: usize,
    sample_every: usize,
    params: &ModelParams,
    cfg: &JkoConfig,
) -> Result<JkoRun, JkoError> {
    if params.kind != ModelKind::NonLocal && params.kind != ModelKind::Local {
        return Err(JkoError::InvalidState);
    }
    check_params(params, initial)?;
    let every = sample_every.max(1);
    let mut c = initial.to_vec();
    let mut traj = Trajectory1D { length, times: vec![0.0], states: vec![c.clone()] };
    let mut reports = Vec::with_capacity(steps);
    for n in 1..=steps {
        let (next, rep) = jko_step(&c, length, tau, params, cfg)?;
        c = next;
        reports.push(rep);
        if n % every == 0 || n == steps {
            traj.times.push(n as f64 * tau);
            traj.states.push(c.clone());
        }
    }
    Ok(JkoRun { trajectory: traj, steps: reports })
}

/// `|c_a(t) - c_b(t)|_{L^2}` at each requested time; both trajectories must
/// share the grid and contain each time within `1e-12` relative.
pub fn compare_trajectories(a: &Trajectory1D, b: &Trajectory1D, times: &[f64]) -> Result<Vec<f64>, JkoError> {
    if a.length != b.length || a.states.first().map(Vec::len) != b.states.first().map(Vec::len) {
        return Err(JkoError::GridMismatch);
    }
    fn find(tr: &Trajectory1D, t: f64) -> Option<&Vec<f64>> {
        tr.times.iter().position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0)).map(|i| &tr.states[i])
    }
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let (Some(x), Some(y)) = (find(a, t), find(b, t)) else {
            return Err(JkoError::GridMismatch);
        };
        if x.len() != y.len() || x.is_empty() {
            return Err(JkoError::GridMismatch);
        }
        let h = a.length / x.len() as f64;
        out.push(sqrt(compensated_sum(x.iter().zip(y).map(|(p, q)| h * (p - q) * (p - q)))));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dens(values: &[f64]) -> Density1D {
        Density1D::new(1.0, values.to_vec()).unwrap()
    }

    #[test]
    fn identical_densities_are_at_distance_zero() {
        let a = dens(&[0.2, 0.7, 0.0, 1.0, 0.4]);
        assert_eq!(wasserstein_sq(&a, &a, 1.0).unwrap(), 0.0);
        let k = kantorovich_gradient(&a, &a, 1.0).unwrap();
        for (i, p) in k.phi.iter().enumerate() {
            // the empty cell [0.4, 0.6] averages dist^2 / 2 = 0.01 / 6
            let expected = if i == 2 { 0.01 / 6.0 } else { 0.0 };
            assert!((p - expected).abs() < 1e-15, "{i}: {p}");
        }
    }

    #[test]
    fn half_interval_example() {
        let a = dens(&[1.0, 1.0, 0.0, 0.0]);
        let b = dens(&[0.0, 0.0, 1.0, 1.0]);
        assert!((wasserstein_sq(&a, &b, 1.0).unwrap() - 0.125).abs() < 1e-15);
        assert!((wasserstein_1d(&a, &b, 1.0).unwrap() - 0.125_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn translation_examples() {
        // b = a shifted left by two cells: T(x) = x - d, phi' = d / m
        let a = dens(&[0.0, 0.0, 0.0, 0.3, 0.9, 0.5, 0.0, 0.0]);
        let b = dens(&[0.0, 0.3, 0.9, 0.5, 0.0, 0.0, 0.0, 0.0]);
        let (d, m) = (0.25, 2.0);
        let w = wasserstein_sq(&a, &b, m).unwrap();
        assert!((w - a.mass() * d * d / m).abs() < 1e-12);
        let k = kantorovich_gradient(&a, &b, m).unwrap();
        for x in [0.38, 0.4, 0.5, 0.6, 0.74] {
            assert!((k.derivative(x) - d / m).abs() < 1e-12);
        }
        assert!((k.transport_cost - w).abs() < 1e-12);
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let a = dens(&[1.0, 0.0]);
        assert!(matches!(wasserstein_sq(&a, &dens(&[0.5, 0.0]), 1.0), Err(JkoError::MassMismatch { .. })));
        assert!(matches!(wasserstein_sq(&a, &dens(&[0.5, 0.5, 0.0, 0.0]), 1.0), Err(JkoError::GridMismatch)));
        assert!(Density1D::new(1.0, vec![0.1, -0.1]).is_err());
    }

    #[test]
    fn projection_hits_box_and_mass() {
        let y = [1.7, -0.3, 0.45, 0.2, 0.9, 1.2, 0.0, 0.6];
        let h = 0.125;
        for mass in [0.1, 0.4, 0.6, 0.95] {
            let p = project_box_mass(&y, h, mass);
            assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!((h * p.iter().sum::<f64>() - mass).abs() < 1e-14);
            // optimality: the shift is common to all free cells
            let shifts: Vec<f64> = p.iter().zip(&y).filter(|(v, _)| **v > 0.0 && **v < 1.0).map(|(v, y)| y - v).collect();
            for s in &shifts {
                assert!((s - shifts[0]).abs() < 1e-14);
            }
        }
    }

    proptest! {
        #[test]
        fn metric_axioms(
            raw in proptest::collection::vec(proptest::collection::vec(0.0..1.0f64, 12), 3),
        ) {
            // normalize all three to unit mass
            let ds: Vec<Density1D> = raw
                .iter()
                .map(|v| {
                    let s: f64 = v.iter().sum::<f64>() / 12.0;
                    dens(&v.iter().map(|x| x / s.max(1e-3)).collect::<Vec<_>>())
                })
                .collect();
            let scale = |d: &Density1D| { let m = d.mass(); dens(&d.values().iter().map(|v| v / m).collect::<Vec<_>>()) };
            let (a, b, c) = (scale(&ds[0]), scale(&ds[1]), scale(&ds[2]));
            let ab = wasserstein_1d(&a, &b, 1.3).unwrap();
            let ba = wasserstein_1d(&b, &a, 1.3).unwrap();
            let bc = wasserstein_1d(&b, &c, 1.3).unwrap();
            let ac = wasserstein_1d(&a, &c, 1.3).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-12);
            prop_assert!(ac <= ab + bc + 1e-9);
            prop_assert!(ab >= 0.0);
        }

        #[test]
        fn projection_is_idempotent(y in proptest::collection::vec(-1.0..2.0f64, 1..20), frac in 0.05..0.95f64) {
            let h = 1.0 / y.len() as f64;
            let mass = frac;
            let p = project_box_mass(&y, h, mass);
            prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!((h * p.iter().sum::<f64>() - mass).abs() < 1e-12);
            let q = project_box_mass(&p, h, mass);
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
