//! File formats, configuration and command-line front end for
//! [`chflow_core`].

pub mod app;
pub mod config;
pub mod meshfile;
pub mod output;
pub mod setup;
