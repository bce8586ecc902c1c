//! Numerical kernels for two-phase degenerate Cahn-Hilliard flows.
//!
//! The crate covers two models sharing one energy:
//!
//! * the two-flux *non-local* system, where each phase is transported by its
//!   own upstream-mobility flux and only the divergence of the total flux
//!   vanishes, and
//! * the classical *local* degenerate Cahn-Hilliard equation with mobility
//!   `eta(c) = m1 m2 c (1 - c) / (m1 c + m2 (1 - c))`, discretized with a
//!   Godunov flux.
//!
//! Both are advanced with a backward-Euler two-point flux finite-volume
//! scheme solved by damped Newton iterations ([`solver`]). A one-dimensional
//! minimizing-movement solver built on exact quantile Wasserstein distances
//! ([`jko1d`]) serves as an independent reference for the 1D dynamics.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command-line front end live in the `chflow` crate.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod diagnostics;
pub mod jko1d;
pub mod mesh;
pub mod model;
pub mod scheme;
pub mod solver;
pub mod sparse;

mod math;

pub use mesh::{Mesh, MeshError};
pub use model::{EnergyReport, ModelError, ModelKind, ModelParams, Potentials, State};
pub use solver::{NewtonConfig, RunOutput, RunSettings, StepRecord};
