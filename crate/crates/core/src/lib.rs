//! Adaptive staggered-grid immersed-boundary solver for incompressible
//! fluid-structure interaction.
//!
//! The crate couples a fiber-based Lagrangian elasticity model to an
//! incompressible Stokes/Navier-Stokes solver on a block-structured locally
//! refined MAC grid, with lumped-parameter (Windkessel) circulation models
//! providing pressure boundary conditions. See the `driver` module for the
//! batch simulation entry points used by the `ibflow` CLI.

pub mod advect;
pub mod circulation;
pub mod composite;
pub mod delta;
pub mod driver;
pub mod error;
pub mod fiber;
pub mod field;
pub mod geom;
pub mod hierarchy;
pub mod regrid;
pub mod solver;

pub use error::{Error, Result};
pub use field::{CellField, FaceField, GHOST_WIDTH};
pub use geom::{DomainGeometry, IndexBox};
pub use hierarchy::{Level, NestingReport, PatchHierarchy};
