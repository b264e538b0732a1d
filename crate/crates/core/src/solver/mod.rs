//! Incompressible Stokes solver: physical boundary conditions, subdomain
//! solvers, and the projection-preconditioned FGMRES outer iteration.

pub mod bc;
pub mod fgmres;
pub mod helmholtz;
pub mod poisson;
pub mod stokes;
pub mod vectors;

pub use bc::{BcKind, BcValues, BoundaryConditionSet, FaceSpec, PhysicalBcFill, PressureSource};
pub use fgmres::{fgmres, FgmresOptions, FgmresResult, Operator, Preconditioner};
pub use helmholtz::{cg_faces, helmholtz_solve_face, poisson_solve_cell, HelmholtzOp};
pub use poisson::{FacPoisson, PoissonStats};
pub use stokes::{
    apply_stokes_operator, solve_stokes, PackedStokesOp, ProjectionPrecond, StokesOptions,
    StokesSolveStats, StokesSystem,
};
pub use vectors::StokesPacking;
