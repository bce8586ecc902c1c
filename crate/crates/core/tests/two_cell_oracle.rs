//! Implicit steps on two cells against a brute-force scalar oracle.
//!
//! With two cells, mass conservation leaves one free saturation. The oracle
//! finds it by bisection on the first conservation equation, written out
//! here from the flux definitions. For the non-local model a nested
//! bisection finds the potential jump that balances the two phase fluxes.

use chflow_core::model::Potentials;
use chflow_core::solver::implicit_step;
use chflow_core::{Mesh, ModelKind, ModelParams, NewtonConfig, State};
use proptest::prelude::*;

const DT: f64 = 1e-3;

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (flo, fhi) = (f(lo), f(hi));
    assert!(flo <= 0.0 && fhi >= 0.0, "no bracket: f({lo}) = {flo}, f({hi}) = {fhi}");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn eta(c: f64, m1: f64, m2: f64) -> f64 {
    m1 * m2 * c * (1.0 - c) / (m1 * c + m2 * (1.0 - c))
}

/// Maximum of the concave mobility on `[a, b]` by golden sections.
fn eta_max(a: f64, b: f64, m1: f64, m2: f64) -> f64 {
    let (mut a, mut b) = (a.min(b), a.max(b));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let x1 = b - r * (b - a);
        let x2 = a + r * (b - a);
        if eta(x1, m1, m2) < eta(x2, m1, m2) {
            a = x1;
        } else {
            b = x2;
        }
    }
    eta(0.5 * (a + b), m1, m2)
}

#[derive(Debug)]
struct Case {
    old: [f64; 2],
    alpha: f64,
    chi: f64,
    m: [f64; 2],
}

impl Case {
    // two cells of width 1/2 on [0, 1]: |K| = 1/2, transmissibility 2
    const VOL: f64 = 0.5;
    const TAU: f64 = 2.0;

    fn other(&self, c0: f64) -> f64 {
        self.old[0] + self.old[1] - c0
    }

    /// `mu1 - mu2` (or `mu`) in both cells.
    fn w(&self, c0: f64) -> [f64; 2] {
        let c1 = self.other(c0);
        let lap0 = Self::TAU * (c1 - c0) / Self::VOL;
        let f = |c: f64, lap: f64| self.chi * (1.0 - 2.0 * c) - self.alpha * lap;
        [f(c0, lap0), f(c1, -lap0)]
    }

    fn local_flux(&self, c0: f64) -> f64 {
        let c1 = self.other(c0);
        let w = self.w(c0);
        let q = Self::TAU * (w[0] - w[1]);
        let [m1, m2] = self.m;
        // Godunov: minimum of eta q between c0 and c1 when c0 <= c1,
        // maximum otherwise; eta is concave, so its minimum sits at an end
        let lo = eta(c0, m1, m2).min(eta(c1, m1, m2));
        let hi = eta_max(c0, c1, m1, m2);
        let take_min = c0 <= c1;
        match (take_min, q >= 0.0) {
            (true, true) | (false, false) => lo * q,
            _ => hi * q,
        }
    }

    /// Phase-one flux and potential jump `mu1_0 - mu1_1`.
    fn nonlocal_flux(&self, c0: f64) -> (f64, f64) {
        let c1 = self.other(c0);
        let w = self.w(c0);
        let dw = w[0] - w[1];
        let [m1, m2] = self.m;
        let phase = |d1: f64| {
            let up1 = if d1 > 0.0 { c0 } else { c1 };
            let d2 = d1 - dw;
            let up2 = if d2 > 0.0 { 1.0 - c0 } else { 1.0 - c1 };
            (Self::TAU * m1 * up1 * d1, Self::TAU * m2 * up2 * d2)
        };
        // the total flux is zero on two cells
        let bound = 10.0 * (dw.abs() + 1.0);
        let d1 = bisect(-bound, bound, |d| {
            let (f1, f2) = phase(d);
            f1 + f2
        });
        (phase(d1).0, d1)
    }

    fn solve(&self, kind: ModelKind) -> f64 {
        let s = self.old[0] + self.old[1];
        let (lo, hi) = ((s - 1.0).max(0.0), s.min(1.0));
        bisect(lo, hi, |c0| {
            let flux = match kind {
                ModelKind::NonLocal => self.nonlocal_flux(c0).0,
                ModelKind::Local => self.local_flux(c0),
            };
            (c0 - self.old[0]) * Self::VOL / DT + flux
        })
    }

    fn step(&self, kind: ModelKind) -> State {
        let mesh = Mesh::cartesian(2, None, 1.0, None).unwrap();
        let params = ModelParams::new(kind, self.alpha, self.chi, [0.0, 0.0], self.m, 2).unwrap();
        let prev = State::with_saturation(kind, self.old.to_vec());
        let cfg = NewtonConfig { tol_residual: 1e-12, ..NewtonConfig::default() };
        implicit_step(&mesh, &params, &prev, DT, &cfg).unwrap().0
    }
}

fn case() -> impl Strategy<Value = Case> {
    (0.1..0.9f64, 0.1..0.9f64, 1e-3..0.05f64, 0.1..1.5f64, 0.3..3.0f64, 0.3..3.0f64)
        .prop_map(|(a, b, alpha, chi, m1, m2)| Case { old: [a, b], alpha, chi, m: [m1, m2] })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn local_step_matches_oracle(case in case()) {
        let expected = case.solve(ModelKind::Local);
        let got = case.step(ModelKind::Local);
        prop_assert!((got.c1[0] - expected).abs() < 1e-9, "{} vs {}", got.c1[0], expected);
        prop_assert!((got.c1[0] + got.c1[1] - case.old[0] - case.old[1]).abs() < 1e-13);
    }

    #[test]
    fn nonlocal_step_matches_oracle(case in case()) {
        let expected = case.solve(ModelKind::NonLocal);
        let got = case.step(ModelKind::NonLocal);
        prop_assert!((got.c1[0] - expected).abs() < 1e-9, "{} vs {}", got.c1[0], expected);
        let (_, jump) = case.nonlocal_flux(expected);
        let Potentials::Phase { mu1, .. } = &got.potentials else { unreachable!() };
        prop_assert!((mu1[0] - mu1[1] - jump).abs() < 1e-6 * (1.0 + jump.abs()));
    }
}

#[test]
fn equal_cells_stay_put() {
    let case = Case { old: [0.4, 0.4], alpha: 0.01, chi: 0.8, m: [1.0, 1.0] };
    for kind in [ModelKind::NonLocal, ModelKind::Local] {
        let got = case.step(kind);
        assert!((got.c1[0] - 0.4).abs() < 1e-12);
    }
}
