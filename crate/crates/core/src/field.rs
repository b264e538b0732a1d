//! Cell-centered and face-staggered data over a patch hierarchy.
//!
//! Every patch stores a dense array including a ghost margin. Velocity
//! components live on the faces normal to their own axis; pressure-like
//! quantities live at cell centers. Ghost entries overlapping a sibling
//! patch are filled by copying; coarse-fine and physical ghosts are filled
//! by the composite-operator and boundary-condition modules.

use std::sync::Arc;

use crate::geom::IndexBox;
use crate::hierarchy::PatchHierarchy;

/// Ghost width used throughout; covers the PPM reconstruction stencil
/// (which needs limited edges of both neighbor cells) and the widest
/// coarse-fine interpolation stencil.
pub const GHOST_WIDTH: i64 = 3;

/// Dense array over one patch's index box plus a ghost margin.
#[derive(Clone, Debug)]
pub struct PatchArray {
    /// Interior index box (cells, or faces for staggered data).
    pub bx: IndexBox,
    pub ghost: i64,
    data: Vec<f64>,
    stride: [i64; 3],
    origin: [i64; 3],
}

impl PatchArray {
    pub fn new(bx: IndexBox, ghost: i64) -> Self {
        let g = ghost;
        let s = bx.shape();
        let (gx, gy, gz) = if bx.dim == 3 { (g, g, g) } else { (g, g, 0) };
        let nx = s[0] + 2 * gx;
        let ny = s[1] + 2 * gy;
        let nz = s[2] + 2 * gz;
        PatchArray {
            bx,
            ghost,
            data: vec![0.0; (nx * ny * nz) as usize],
            stride: [1, nx, nx * ny],
            origin: [bx.lo[0] - gx, bx.lo[1] - gy, bx.lo[2] - gz],
        }
    }

    /// Index box including the ghost margin.
    pub fn ghost_box(&self) -> IndexBox {
        let mut b = self.bx.grow(self.ghost);
        if self.bx.dim == 2 {
            b.lo[2] = 0;
            b.hi[2] = 0;
        }
        b
    }

    #[inline(always)]
    pub fn offset(&self, idx: [i64; 3]) -> usize {
        let o = (idx[0] - self.origin[0])
            + (idx[1] - self.origin[1]) * self.stride[1]
            + (idx[2] - self.origin[2]) * self.stride[2];
        debug_assert!(
            o >= 0 && (o as usize) < self.data.len(),
            "index {idx:?} outside array over {:?} + {} ghosts",
            self.bx,
            self.ghost
        );
        o as usize
    }

    #[inline(always)]
    pub fn at(&self, idx: [i64; 3]) -> f64 {
        self.data[self.offset(idx)]
    }

    #[inline(always)]
    pub fn at_mut(&mut self, idx: [i64; 3]) -> &mut f64 {
        let o = self.offset(idx);
        &mut self.data[o]
    }

    #[inline(always)]
    pub fn set(&mut self, idx: [i64; 3], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Scalar field at cell centers over every level of a hierarchy.
#[derive(Clone, Debug)]
pub struct CellField {
    pub hier: Arc<PatchHierarchy>,
    /// patches[level][patch]
    pub patches: Vec<Vec<PatchArray>>,
    pub ghost: i64,
}

impl CellField {
    pub fn new(hier: Arc<PatchHierarchy>) -> Self {
        Self::with_ghost(hier, GHOST_WIDTH)
    }

    pub fn with_ghost(hier: Arc<PatchHierarchy>, ghost: i64) -> Self {
        let patches = hier
            .levels
            .iter()
            .map(|lvl| lvl.boxes.iter().map(|b| PatchArray::new(*b, ghost)).collect())
            .collect();
        Self { hier, patches, ghost }
    }

    pub fn fill(&mut self, v: f64) {
        for lvl in &mut self.patches {
            for p in lvl {
                p.fill(v);
            }
        }
    }

    /// Evaluate `f` at every cell center (interior and ghost).
    pub fn set_from_fn(&mut self, mut f: impl FnMut([f64; 3]) -> f64) {
        let dim = self.hier.dim();
        for (l, lvl) in self.patches.iter_mut().enumerate() {
            let h = self.hier.levels[l].h;
            for p in lvl {
                for idx in p.ghost_box().iter() {
                    let x = crate::geom::cell_center(idx, h, dim);
                    p.set(idx, f(x));
                }
            }
        }
    }

    /// Maximum |value| over valid interior cells.
    pub fn max_abs_valid(&self) -> f64 {
        let mut m: f64 = 0.0;
        for (l, lvl) in self.patches.iter().enumerate() {
            for (pi, p) in lvl.iter().enumerate() {
                for idx in p.bx.iter() {
                    if self.hier.cell_is_valid(l, pi, idx) {
                        m = m.max(p.at(idx).abs());
                    }
                }
            }
        }
        m
    }
}

/// Staggered vector field: component `a` on the faces normal to axis `a`.
#[derive(Clone, Debug)]
pub struct FaceField {
    pub hier: Arc<PatchHierarchy>,
    /// patches[level][patch][axis], axis < dim
    pub patches: Vec<Vec<Vec<PatchArray>>>,
    pub ghost: i64,
}

impl FaceField {
    pub fn new(hier: Arc<PatchHierarchy>) -> Self {
        Self::with_ghost(hier, GHOST_WIDTH)
    }

    pub fn with_ghost(hier: Arc<PatchHierarchy>, ghost: i64) -> Self {
        let dim = hier.dim();
        let patches = hier
            .levels
            .iter()
            .map(|lvl| {
                lvl.boxes
                    .iter()
                    .map(|b| (0..dim).map(|a| PatchArray::new(b.face_box(a), ghost)).collect())
                    .collect()
            })
            .collect();
        Self { hier, patches, ghost }
    }

    pub fn fill(&mut self, v: f64) {
        for lvl in &mut self.patches {
            for p in lvl {
                for comp in p {
                    comp.fill(v);
                }
            }
        }
    }

    /// Evaluate `f(x, axis)` at every face center (interior and ghost).
    pub fn set_from_fn(&mut self, mut f: impl FnMut([f64; 3], usize) -> f64) {
        let dim = self.hier.dim();
        for (l, lvl) in self.patches.iter_mut().enumerate() {
            let h = self.hier.levels[l].h;
            for p in lvl {
                for (a, comp) in p.iter_mut().enumerate() {
                    for idx in comp.ghost_box().iter() {
                        let x = crate::geom::face_center(idx, a, h, dim);
                        comp.set(idx, f(x, a));
                    }
                }
            }
        }
    }

    /// Maximum |component| over valid owned faces.
    pub fn max_abs_valid(&self) -> f64 {
        let dim = self.hier.dim();
        let mut m: f64 = 0.0;
        for (l, lvl) in self.patches.iter().enumerate() {
            for (pi, p) in lvl.iter().enumerate() {
                for a in 0..dim {
                    for idx in p[a].bx.iter() {
                        if self.hier.face_is_valid(l, pi, a, idx) {
                            m = m.max(p[a].at(idx).abs());
                        }
                    }
                }
            }
        }
        m
    }
}

/// Copy sibling interior values into ghost cells overlapping another patch
/// of the same level. Ghosts outside every sibling patch are not touched.
pub fn fill_ghost_sibling_cell(f: &mut CellField, level: usize) {
    let hier = f.hier.clone();
    let boxes = &hier.levels[level].boxes;
    for dst in 0..boxes.len() {
        for src in 0..boxes.len() {
            if src == dst {
                continue;
            }
            let want = f.patches[level][dst].ghost_box();
            let Some(ov) = want.intersect(&boxes[src]) else { continue };
            // Split borrow: copy via a temporary of the overlap values.
            let vals: Vec<f64> =
                ov.iter().map(|idx| f.patches[level][src].at(idx)).collect();
            for (idx, v) in ov.iter().zip(vals) {
                f.patches[level][dst].set(idx, v);
            }
        }
    }
}

/// Sibling exchange for staggered data. Owned face values are authoritative:
/// they are copied both into ghost faces and onto duplicated boundary faces
/// of abutting patches.
pub fn fill_ghost_sibling_face(f: &mut FaceField, level: usize) {
    let hier = f.hier.clone();
    let dim = hier.dim();
    let nboxes = hier.levels[level].boxes.len();
    for dst in 0..nboxes {
        for src in 0..nboxes {
            if src == dst {
                continue;
            }
            for a in 0..dim {
                let want = f.patches[level][dst][a].ghost_box();
                let src_faces = f.patches[level][src][a].bx;
                let Some(ov) = want.intersect(&src_faces) else { continue };
                let vals: Vec<(usize, f64)> = ov
                    .iter()
                    .filter(|idx| hier.face_is_owned(level, src, a, *idx))
                    .map(|idx| {
                        (
                            f.patches[level][dst][a].offset(idx),
                            f.patches[level][src][a].at(idx),
                        )
                    })
                    .collect();
                for (o, v) in vals {
                    f.patches[level][dst][a].data_mut()[o] = v;
                }
            }
        }
    }
}
