//! Coverage simulation for UAV-mounted base stations under three deployment
//! disciplines: free-flying UAVs (with or without battery swapping), tethered
//! UAVs, and intermittently tethered UAVs that move between ground anchors.
//!
//! The crate is organized bottom-up:
//!
//! - [`scenario`]: world model and the TOML scenario format
//! - [`pointprocess`]: clustered user populations and their Voronoi CoV
//! - [`channel`]: air-to-ground path loss and coverage disks
//! - [`placement`]: coverage-maximizing placement solvers
//! - [`mission`]: time-stepped service missions with batteries and tethers
//! - [`experiments`]: seeded Monte-Carlo presets and CSV result tables

// Negated comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod experiments;
pub mod geom;
pub mod mission;
pub mod placement;
pub mod pointprocess;
pub mod scenario;
pub mod seeding;

pub use error::{Error, Result};
