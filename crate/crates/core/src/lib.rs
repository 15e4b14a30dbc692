//! Second-order FDTD for 2D TMz Maxwell around PEC obstacles described by
//! level sets on uniform grids.
//!
//! The time march is a θ-scheme corrected by back-and-forth error
//! compensation; ghost values inside the conductor come from PDE-based
//! extension along the level-set normal. Open boundaries use a
//! convolutional PML with total-field/scattered-field injection.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod cli;
pub mod config;
pub mod emcore;
pub mod error;
pub mod extension;
pub mod grid;
pub mod harness;
pub mod levelset;
pub mod snapshot;

pub use boundary::{IncidentWave, PmlParams, Window};
pub use config::{parse_config, render_config, SimConfig};
pub use emcore::{run, Closure, EMState, Scheme, Simulation, SolverParams};
pub use error::{Error, Result};
pub use extension::ExtensionParams;
pub use grid::{Grid2D, ScalarField, VectorField};
pub use levelset::{Layer, LayerMask, LevelSetBundle, PecShape};
