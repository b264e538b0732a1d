//! Flattening of composite-grid (velocity, pressure) states into plain
//! vectors for the Krylov iteration.
//!
//! Only true degrees of freedom are packed: owned valid faces and valid
//! cells, in a fixed (level, patch, axis, lexicographic) order, so inner
//! products have one deterministic summation order regardless of how the
//! stencil work is distributed. On periodic axes the high-plane boundary
//! faces duplicate the low plane and are skipped.

use std::sync::Arc;

use crate::field::{CellField, FaceField};
use crate::hierarchy::PatchHierarchy;

use super::bc::BoundaryConditionSet;

#[derive(Clone, Debug)]
pub struct StokesPacking {
    /// Data-array offsets of packed faces: [level][patch][axis].
    face_off: Vec<Vec<Vec<Vec<u32>>>>,
    /// Data-array offsets of packed cells: [level][patch].
    cell_off: Vec<Vec<Vec<u32>>>,
    pub n_faces: usize,
    pub n_cells: usize,
    /// Packed rows of faces lying on solid-wall boundary planes (their
    /// momentum rows are scaled identities).
    pub wall_rows: Vec<u32>,
    /// Ghost width the stored offsets were computed for; packed fields must
    /// match it.
    ghost: i64,
}

impl StokesPacking {
    pub fn build(hier: &Arc<PatchHierarchy>, bc: &BoundaryConditionSet) -> Self {
        let dim = hier.dim();
        let ghost = crate::field::GHOST_WIDTH;
        let dom0 = hier.domain.domain_box();
        let mut face_off = Vec::new();
        let mut cell_off = Vec::new();
        let mut n_faces = 0;
        let mut n_cells = 0;
        let mut wall_rows = Vec::new();
        // Template arrays for offset computation.
        for (l, level) in hier.levels.iter().enumerate() {
            let ratio = hier.cumulative_ratio(l);
            let mut lvl_faces = Vec::new();
            let mut lvl_cells = Vec::new();
            for (pi, pbox) in level.boxes.iter().enumerate() {
                let mut per_axis = Vec::new();
                for a in 0..dim {
                    let fb = pbox.face_box(a);
                    let arr = crate::field::PatchArray::new(fb, ghost);
                    let mut offs = Vec::new();
                    for f in fb.iter() {
                        if !hier.face_is_owned(l, pi, a, f) || !hier.face_is_valid(l, pi, a, f) {
                            continue;
                        }
                        // Periodic duplicate: skip the high domain plane.
                        if bc.is_periodic(a) && f[a] == level.index_domain.hi[a] + 1 {
                            continue;
                        }
                        let on_lo = f[a] == level.index_domain.lo[a];
                        let on_hi = f[a] == level.index_domain.hi[a] + 1;
                        if on_lo || on_hi {
                            let mut lvl0 = [0_i64; 3];
                            for t in 0..3 {
                                lvl0[t] =
                                    f[t].div_euclid(ratio).clamp(dom0.lo[t], dom0.hi[t]);
                            }
                            if bc.kind_at(a, on_hi, lvl0) == super::bc::BcKind::SolidWall {
                                wall_rows.push((n_faces + offs.len()) as u32);
                            }
                        }
                        offs.push(arr.offset(f) as u32);
                    }
                    n_faces += offs.len();
                    per_axis.push(offs);
                }
                lvl_faces.push(per_axis);
                let carr = crate::field::PatchArray::new(*pbox, ghost);
                let mut offs = Vec::new();
                for c in pbox.iter() {
                    if hier.cell_is_valid(l, pi, c) {
                        offs.push(carr.offset(c) as u32);
                    }
                }
                n_cells += offs.len();
                lvl_cells.push(offs);
            }
            face_off.push(lvl_faces);
            cell_off.push(lvl_cells);
        }
        StokesPacking { face_off, cell_off, n_faces, n_cells, wall_rows, ghost }
    }

    pub fn len(&self) -> usize {
        self.n_faces + self.n_cells
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pack(&self, u: &FaceField, p: &CellField, out: &mut [f64]) {
        assert_eq!(out.len(), self.len());
        assert_eq!(u.ghost, self.ghost, "packed face field has a foreign layout");
        assert_eq!(p.ghost, self.ghost, "packed cell field has a foreign layout");
        let mut k = 0;
        for (l, lvl) in self.face_off.iter().enumerate() {
            for (pi, per_axis) in lvl.iter().enumerate() {
                for (a, offs) in per_axis.iter().enumerate() {
                    let data = u.patches[l][pi][a].data();
                    for &o in offs {
                        out[k] = data[o as usize];
                        k += 1;
                    }
                }
            }
        }
        for (l, lvl) in self.cell_off.iter().enumerate() {
            for (pi, offs) in lvl.iter().enumerate() {
                let data = p.patches[l][pi].data();
                for &o in offs {
                    out[k] = data[o as usize];
                    k += 1;
                }
            }
        }
    }

    pub fn unpack(&self, x: &[f64], u: &mut FaceField, p: &mut CellField) {
        assert_eq!(x.len(), self.len());
        assert_eq!(u.ghost, self.ghost);
        assert_eq!(p.ghost, self.ghost);
        let mut k = 0;
        for (l, lvl) in self.face_off.iter().enumerate() {
            for (pi, per_axis) in lvl.iter().enumerate() {
                for (a, offs) in per_axis.iter().enumerate() {
                    let data = u.patches[l][pi][a].data_mut();
                    for &o in offs {
                        data[o as usize] = x[k];
                        k += 1;
                    }
                }
            }
        }
        for (l, lvl) in self.cell_off.iter().enumerate() {
            for (pi, offs) in lvl.iter().enumerate() {
                let data = p.patches[l][pi].data_mut();
                for &o in offs {
                    data[o as usize] = x[k];
                    k += 1;
                }
            }
        }
    }

    /// Pack only the face block (velocity subvector).
    pub fn pack_faces(&self, u: &FaceField, out: &mut [f64]) {
        assert_eq!(out.len(), self.n_faces);
        assert_eq!(u.ghost, self.ghost);
        let mut k = 0;
        for (l, lvl) in self.face_off.iter().enumerate() {
            for (pi, per_axis) in lvl.iter().enumerate() {
                for (a, offs) in per_axis.iter().enumerate() {
                    let data = u.patches[l][pi][a].data();
                    for &o in offs {
                        out[k] = data[o as usize];
                        k += 1;
                    }
                }
            }
        }
    }

    pub fn unpack_faces(&self, x: &[f64], u: &mut FaceField) {
        assert_eq!(x.len(), self.n_faces);
        assert_eq!(u.ghost, self.ghost);
        let mut k = 0;
        for (l, lvl) in self.face_off.iter().enumerate() {
            for (pi, per_axis) in lvl.iter().enumerate() {
                for (a, offs) in per_axis.iter().enumerate() {
                    let data = u.patches[l][pi][a].data_mut();
                    for &o in offs {
                        data[o as usize] = x[k];
                        k += 1;
                    }
                }
            }
        }
    }

    /// Pack only the cell block (pressure subvector).
    pub fn pack_cells_only(&self, p: &CellField, out: &mut [f64]) {
        assert_eq!(out.len(), self.n_cells);
        assert_eq!(p.ghost, self.ghost);
        let mut k = 0;
        for (l, lvl) in self.cell_off.iter().enumerate() {
            for (pi, offs) in lvl.iter().enumerate() {
                let data = p.patches[l][pi].data();
                for &o in offs {
                    out[k] = data[o as usize];
                    k += 1;
                }
            }
        }
    }

    pub fn unpack_cells_only(&self, x: &[f64], p: &mut CellField) {
        assert_eq!(x.len(), self.n_cells);
        assert_eq!(p.ghost, self.ghost);
        let mut k = 0;
        for (l, lvl) in self.cell_off.iter().enumerate() {
            for (pi, offs) in lvl.iter().enumerate() {
                let data = p.patches[l][pi].data_mut();
                for &o in offs {
                    data[o as usize] = x[k];
                    k += 1;
                }
            }
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for i in 0..y.len() {
        y[i] += alpha * x[i];
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    for v in x.iter_mut() {
        *v *= alpha;
    }
}
