//! Composite-grid divergence, gradient, Laplacian and vorticity.
//!
//! Each operator assumes its input has been synchronized with the right
//! restriction and ghost fills; the `sync_*` helpers centralize those
//! sequences (restrict, then per level: sibling ghosts, coarse-fine ghosts,
//! physical ghosts).

use crate::field::{
    fill_ghost_sibling_cell, fill_ghost_sibling_face, CellField, FaceField,
};

use super::cf_interp::{fill_cf_ghost_cell_level, fill_cf_ghost_face_level};
use super::restrict::{restrict_cell_cubic, restrict_face_conservative, restrict_face_cubic};

/// Physical boundary ghost fill for cell-centered data. The unit impl leaves
/// ghosts untouched (for analytically preset fields in tests).
pub trait CellBc {
    fn fill_cell_physical(&self, f: &mut CellField, level: usize);
}

/// Physical boundary ghost fill for face-centered data.
pub trait FaceBc {
    fn fill_face_physical(&self, u: &mut FaceField, level: usize);
}

impl CellBc for () {
    fn fill_cell_physical(&self, _f: &mut CellField, _level: usize) {}
}

impl FaceBc for () {
    fn fill_face_physical(&self, _u: &mut FaceField, _level: usize) {}
}

/// Synchronize cell data for gradient-type stencils: cubic restriction, then
/// sibling, coarse-fine, and physical ghosts per level, coarse levels first.
pub fn sync_cell(f: &mut CellField, bc: &impl CellBc) {
    restrict_cell_cubic(f);
    for l in 0..f.hier.num_levels() {
        fill_ghost_sibling_cell(f, l);
        if l > 0 {
            fill_cf_ghost_cell_level(f, l);
        }
        bc.fill_cell_physical(f, l);
    }
}

/// Synchronize face data for Laplacian-type stencils (cubic restriction).
/// Sibling duplicates are reconciled before restriction so fine reads see
/// owner values, and again afterwards so ghosts track restricted data.
pub fn sync_face_cubic(u: &mut FaceField, bc: &impl FaceBc) {
    for l in 0..u.hier.num_levels() {
        fill_ghost_sibling_face(u, l);
    }
    restrict_face_cubic(u);
    for l in 0..u.hier.num_levels() {
        fill_ghost_sibling_face(u, l);
        if l > 0 {
            fill_cf_ghost_face_level(u, l);
        }
        bc.fill_face_physical(u, l);
    }
}

/// Synchronize face data for the divergence: conservative restriction (the
/// per-cell stencil reads no ghost faces, but duplicated sibling faces must
/// agree before fine values are averaged down).
pub fn sync_face_conservative(u: &mut FaceField) {
    for l in 0..u.hier.num_levels() {
        fill_ghost_sibling_face(u, l);
    }
    restrict_face_conservative(u);
}

/// Per-cell divergence over every level. Input must be conservatively
/// restricted. Accumulates one term per axis so the uniform-grid composition
/// with the gradient reproduces the textbook cell Laplacian bitwise.
pub fn composite_divergence(u: &FaceField, out: &mut CellField) {
    let dim = u.hier.dim();
    for l in 0..u.hier.num_levels() {
        let inv_h = 1.0 / u.hier.levels[l].h;
        for (pi, pbox) in u.hier.levels[l].boxes.iter().enumerate() {
            for c in pbox.iter() {
                let mut acc = 0.0;
                for a in 0..dim {
                    let mut hi = c;
                    hi[a] += 1;
                    acc += (u.patches[l][pi][a].at(hi) - u.patches[l][pi][a].at(c)) * inv_h;
                }
                out.patches[l][pi].set(c, acc);
            }
        }
    }
}

/// Face-normal pressure gradient over every level (all faces of each patch,
/// including patch-boundary faces, which read ghost cells).
pub fn composite_gradient(p: &CellField, out: &mut FaceField) {
    let dim = p.hier.dim();
    for l in 0..p.hier.num_levels() {
        let inv_h = 1.0 / p.hier.levels[l].h;
        for (pi, pbox) in p.hier.levels[l].boxes.iter().enumerate() {
            for a in 0..dim {
                for f in pbox.face_box(a).iter() {
                    let mut lo = f;
                    lo[a] -= 1;
                    out.patches[l][pi][a]
                        .set(f, (p.patches[l][pi].at(f) - p.patches[l][pi].at(lo)) * inv_h);
                }
            }
        }
    }
}

/// Componentwise 5-point (7-point in 3D) Laplacian at faces. Input must be
/// cubic-restricted with all ghosts filled.
pub fn composite_laplacian_face(u: &FaceField, out: &mut FaceField) {
    let dim = u.hier.dim();
    for l in 0..u.hier.num_levels() {
        let inv_h2 = 1.0 / (u.hier.levels[l].h * u.hier.levels[l].h);
        for (pi, pbox) in u.hier.levels[l].boxes.iter().enumerate() {
            for comp in 0..dim {
                let arr = &u.patches[l][pi][comp];
                for f in pbox.face_box(comp).iter() {
                    let c = arr.at(f);
                    let mut acc = 0.0;
                    for a in 0..dim {
                        let mut hi = f;
                        let mut lo = f;
                        hi[a] += 1;
                        lo[a] -= 1;
                        acc += (arr.at(hi) - 2.0 * c + arr.at(lo)) * inv_h2;
                    }
                    out.patches[l][pi][comp].set(f, acc);
                }
            }
        }
    }
}

/// Euclidean norm of the discrete curl, averaged to cell centers from node
/// (2D) or edge (3D) circulations. Needs one filled ghost layer.
pub fn vorticity_magnitude(u: &FaceField, out: &mut CellField) {
    let dim = u.hier.dim();
    for l in 0..u.hier.num_levels() {
        let inv_h = 1.0 / u.hier.levels[l].h;
        for (pi, pbox) in u.hier.levels[l].boxes.iter().enumerate() {
            let p = &u.patches[l][pi];
            if dim == 2 {
                let node_curl = |i: i64, j: i64| {
                    (p[1].at([i, j, 0]) - p[1].at([i - 1, j, 0])) * inv_h
                        - (p[0].at([i, j, 0]) - p[0].at([i, j - 1, 0])) * inv_h
                };
                for c in pbox.iter() {
                    let (i, j) = (c[0], c[1]);
                    let w = 0.25
                        * (node_curl(i, j)
                            + node_curl(i + 1, j)
                            + node_curl(i, j + 1)
                            + node_curl(i + 1, j + 1));
                    out.patches[l][pi].set(c, w.abs());
                }
            } else {
                for c in pbox.iter() {
                    // Centered differences of face-averaged components.
                    let avg = |comp: usize, along: usize, shift: i64, c: [i64; 3]| {
                        // component `comp` averaged to the center of cell
                        // shifted by `shift` along `along`
                        let mut cc = c;
                        cc[along] += shift;
                        let mut hi = cc;
                        hi[comp] += 1;
                        0.5 * (p[comp].at(cc) + p[comp].at(hi))
                    };
                    let d = |comp: usize, along: usize, c: [i64; 3]| {
                        (avg(comp, along, 1, c) - avg(comp, along, -1, c)) * 0.5 * inv_h
                    };
                    let wx = d(2, 1, c) - d(1, 2, c);
                    let wy = d(0, 2, c) - d(2, 0, c);
                    let wz = d(1, 0, c) - d(0, 1, c);
                    out.patches[l][pi].set(c, (wx * wx + wy * wy + wz * wz).sqrt());
                }
            }
        }
    }
}

/// The uniform-grid cell Laplacian stencil written exactly as the
/// divergence-of-gradient composition; shared by the multigrid smoother so
/// the two agree bitwise on uniform grids.
#[inline(always)]
pub fn cell_laplacian_stencil(
    p: &crate::field::PatchArray,
    c: [i64; 3],
    dim: usize,
    inv_h: f64,
) -> f64 {
    let pc = p.at(c);
    let mut acc = 0.0;
    for a in 0..dim {
        let mut hi = c;
        let mut lo = c;
        hi[a] += 1;
        lo[a] -= 1;
        acc += ((p.at(hi) - pc) * inv_h - (pc - p.at(lo)) * inv_h) * inv_h;
    }
    acc
}
