//! The block-structured locally refined grid hierarchy.
//!
//! Levels are unions of non-overlapping rectangular patches sharing one grid
//! spacing. Level 0 covers the whole domain; each finer level must nest
//! inside the next coarser one, except where it touches the physical domain
//! boundary. Grid data covered by a finer level is "invalid" (slaved to a
//! restriction of the fine data); the rest is "valid".

use crate::error::{Error, Result};
use crate::geom::{DomainGeometry, IndexBox};

#[derive(Clone, Debug)]
pub struct Level {
    /// Patch boxes in this level's own index space.
    pub boxes: Vec<IndexBox>,
    /// Grid spacing on this level (cm).
    pub h: f64,
    /// Refinement ratio to the next coarser level (1 on level 0).
    pub ratio_to_coarser: i64,
    /// The whole domain in this level's index space.
    pub index_domain: IndexBox,
}

impl Level {
    pub fn region_contains(&self, idx: [i64; 3]) -> bool {
        self.boxes.iter().any(|b| b.contains(idx))
    }
}

/// Per-patch classification masks, precomputed from the grid geometry.
///
/// `cell_valid` marks cells not covered by the next finer level. The face
/// masks mark, per axis, faces not covered by fine faces (`face_valid`) and
/// faces this patch owns when a face is shared with an abutting sibling
/// patch (`face_owned`); owned+valid entries are the true composite-grid
/// degrees of freedom.
#[derive(Clone, Debug)]
pub struct PatchMasks {
    pub cell_valid: Vec<u8>,
    pub face_valid: [Vec<u8>; 3],
    pub face_owned: [Vec<u8>; 3],
}

#[derive(Clone, Debug)]
pub struct PatchHierarchy {
    pub domain: DomainGeometry,
    pub levels: Vec<Level>,
    masks: Vec<Vec<PatchMasks>>,
}

/// Outcome of the proper-nesting audit; empty `violations` means pass.
#[derive(Clone, Debug, Default)]
pub struct NestingReport {
    pub violations: Vec<String>,
}

impl NestingReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

fn mask_offset(b: &IndexBox, idx: [i64; 3]) -> usize {
    let s = b.shape();
    (((idx[2] - b.lo[2]) * s[1] + (idx[1] - b.lo[1])) * s[0] + (idx[0] - b.lo[0])) as usize
}

impl PatchHierarchy {
    /// Build and validate a hierarchy from per-level box lists.
    ///
    /// `level_boxes[l]` holds the level-`l` patch boxes in level-`l` index
    /// space. The same refinement ratio is used between all level pairs.
    pub fn build(
        domain: DomainGeometry,
        level_boxes: Vec<Vec<IndexBox>>,
        ratio: i64,
    ) -> Result<Self> {
        if level_boxes.is_empty() {
            return Err(Error::Geometry("hierarchy needs at least one level".into()));
        }
        if level_boxes.len() > 1 && (ratio < 2 || (ratio & (ratio - 1)) != 0) {
            return Err(Error::Geometry(format!(
                "refinement ratio must be a power of two >= 2, got {ratio}"
            )));
        }

        let mut levels = Vec::with_capacity(level_boxes.len());
        let mut index_domain = domain.domain_box();
        let mut h = domain.h0;
        for (l, boxes) in level_boxes.iter().enumerate() {
            if boxes.is_empty() {
                return Err(Error::Geometry(format!("level {l} has no patches")));
            }
            for b in boxes {
                if b.dim != domain.dim {
                    return Err(Error::Geometry("box dimension mismatch".into()));
                }
                if !index_domain.contains_box(b) {
                    return Err(Error::Geometry(format!(
                        "level {l} box {b:?} extends outside the domain {index_domain:?}"
                    )));
                }
                if l > 0 && !b.is_aligned(ratio) {
                    return Err(Error::Geometry(format!(
                        "level {l} box {b:?} is not aligned to level {} cell faces",
                        l - 1
                    )));
                }
            }
            for (i, a) in boxes.iter().enumerate() {
                for b in boxes.iter().skip(i + 1) {
                    if a.intersects(b) {
                        return Err(Error::Geometry(format!(
                            "level {l} patches overlap: {a:?} and {b:?}"
                        )));
                    }
                }
            }
            if l == 0 {
                let covered: i64 = boxes.iter().map(|b| b.num_cells()).sum();
                if covered != index_domain.num_cells() {
                    return Err(Error::Geometry(
                        "level 0 must cover the domain exactly".into(),
                    ));
                }
            }
            levels.push(Level {
                boxes: boxes.clone(),
                h,
                ratio_to_coarser: if l == 0 { 1 } else { ratio },
                index_domain,
            });
            index_domain = index_domain.refine(ratio);
            h /= ratio as f64;
        }

        let mut hier = Self { domain, levels, masks: Vec::new() };
        let report = hier.check_proper_nesting();
        if !report.passes() {
            return Err(Error::Geometry(format!(
                "proper nesting violated: {}",
                report.violations.join("; ")
            )));
        }
        hier.masks = hier.compute_masks();
        Ok(hier)
    }

    /// Single uniform level covering the domain.
    pub fn uniform(domain: DomainGeometry) -> Self {
        Self::build(domain, vec![vec![domain.domain_box()]], 2).expect("uniform hierarchy")
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn finest(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.domain.dim
    }

    /// Passes iff every level l+1 cell is interior to the level l region,
    /// relaxed where the cell touches the physical domain boundary.
    pub fn check_proper_nesting(&self) -> NestingReport {
        let mut report = NestingReport::default();
        let dim = self.domain.dim;
        for l in 1..self.levels.len() {
            let ratio = self.levels[l].ratio_to_coarser;
            let coarse = &self.levels[l - 1];
            for fine_box in &self.levels[l].boxes {
                let footprint = fine_box.coarsen(ratio);
                for c in footprint.iter() {
                    if !coarse.region_contains(c) {
                        report.violations.push(format!(
                            "level {l} cell footprint {c:?} not covered by level {}",
                            l - 1
                        ));
                        continue;
                    }
                    // Strict interiority: every in-domain neighbor (including
                    // corners) of the footprint must be in the coarse region.
                    let r: i64 = 1;
                    for dk in if dim == 3 { -r..=r } else { 0..=0 } {
                        for dj in -r..=r {
                            for di in -r..=r {
                                let n = [c[0] + di, c[1] + dj, c[2] + dk];
                                if !coarse.index_domain.contains(n) {
                                    continue; // relaxed at the domain boundary
                                }
                                if !coarse.region_contains(n) {
                                    report.violations.push(format!(
                                        "level {l} footprint cell {c:?} touches the \
                                         level {} region boundary at {n:?}",
                                        l - 1
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
        report.violations.dedup();
        report
    }

    fn compute_masks(&self) -> Vec<Vec<PatchMasks>> {
        let dim = self.domain.dim;
        let mut all = Vec::with_capacity(self.levels.len());
        for (l, level) in self.levels.iter().enumerate() {
            // Fine region in this level's index space.
            let fine_footprints: Vec<IndexBox> = if l + 1 < self.levels.len() {
                let r = self.levels[l + 1].ratio_to_coarser;
                self.levels[l + 1].boxes.iter().map(|b| b.coarsen(r)).collect()
            } else {
                Vec::new()
            };
            let mut level_masks = Vec::with_capacity(level.boxes.len());
            for pbox in &level.boxes {
                let mut cell_valid = vec![1_u8; pbox.num_cells() as usize];
                for fb in &fine_footprints {
                    if let Some(ov) = pbox.intersect(fb) {
                        for c in ov.iter() {
                            cell_valid[mask_offset(pbox, c)] = 0;
                        }
                    }
                }
                let mut face_valid: [Vec<u8>; 3] = Default::default();
                let mut face_owned: [Vec<u8>; 3] = Default::default();
                for axis in 0..dim {
                    let fbox = pbox.face_box(axis);
                    let mut valid = vec![1_u8; fbox.num_cells() as usize];
                    for fb in &fine_footprints {
                        let cover = fb.face_box(axis);
                        if let Some(ov) = fbox.intersect(&cover) {
                            for f in ov.iter() {
                                valid[mask_offset(&fbox, f)] = 0;
                            }
                        }
                    }
                    // A face is owned by the patch holding the adjacent cell
                    // on its high side; the top boundary face falls back to
                    // the low-side patch when no sibling holds the high cell.
                    let mut owned = vec![1_u8; fbox.num_cells() as usize];
                    for f in fbox.iter() {
                        let own = f[axis] <= pbox.hi[axis] || !level.region_contains(f);
                        owned[mask_offset(&fbox, f)] = own as u8;
                    }
                    face_valid[axis] = valid;
                    face_owned[axis] = owned;
                }
                level_masks.push(PatchMasks { cell_valid, face_valid, face_owned });
            }
            all.push(level_masks);
        }
        all
    }

    pub fn masks(&self, level: usize, patch: usize) -> &PatchMasks {
        &self.masks[level][patch]
    }

    pub fn cell_is_valid(&self, level: usize, patch: usize, idx: [i64; 3]) -> bool {
        let b = &self.levels[level].boxes[patch];
        self.masks[level][patch].cell_valid[mask_offset(b, idx)] != 0
    }

    pub fn face_is_valid(&self, level: usize, patch: usize, axis: usize, idx: [i64; 3]) -> bool {
        let fb = self.levels[level].boxes[patch].face_box(axis);
        self.masks[level][patch].face_valid[axis][mask_offset(&fb, idx)] != 0
    }

    pub fn face_is_owned(&self, level: usize, patch: usize, axis: usize, idx: [i64; 3]) -> bool {
        let fb = self.levels[level].boxes[patch].face_box(axis);
        self.masks[level][patch].face_owned[axis][mask_offset(&fb, idx)] != 0
    }

    /// Cumulative refinement ratio of `level` relative to level 0.
    pub fn cumulative_ratio(&self, level: usize) -> i64 {
        self.levels[..=level].iter().map(|l| l.ratio_to_coarser).product()
    }
}
