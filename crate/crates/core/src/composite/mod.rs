//! Composite-grid discretization: restriction, coarse-fine interface
//! interpolation, and the composite divergence, gradient, Laplacian and
//! vorticity operators.

pub mod cf_interp;
pub mod ops;
pub mod restrict;

pub use cf_interp::{fill_cf_ghost_cell_level, fill_cf_ghost_face_level};
pub use ops::{
    cell_laplacian_stencil, composite_divergence, composite_gradient, composite_laplacian_face,
    sync_cell, sync_face_conservative, sync_face_cubic, vorticity_magnitude, CellBc, FaceBc,
};
pub use restrict::{
    restrict_cell_cubic, restrict_cell_cubic_level, restrict_face_conservative,
    restrict_face_conservative_level, restrict_face_cubic, restrict_face_cubic_level,
};
