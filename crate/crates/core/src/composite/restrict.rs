//! Fine-to-coarse restriction operators.
//!
//! Invalid coarse values (those covered by a finer level) are overwritten by
//! restrictions of the overlying fine data: cell-centered quantities and
//! face-centered quantities destined for the Laplacian use tensor-product
//! cubic sampling with weights (-1/16, 9/16, 9/16, -1/16) on the four
//! closest fine values per axis, while face-centered quantities destined for
//! the divergence use the conservative mean of the overlying fine faces.
//! With refinement ratio 2 the cubic procedures revert to linear
//! interpolation.

use crate::field::{CellField, FaceField};
use crate::geom::IndexBox;

/// Tensor-product weights per axis: (fine offset from `ratio*I`, weight).
/// Cubic needs an even ratio >= 4; ratio 2 falls back to linear.
fn cubic_axis_weights(ratio: i64) -> Vec<(i64, f64)> {
    assert!(ratio % 2 == 0, "cubic restriction requires an even refinement ratio");
    if ratio == 2 {
        return vec![(0, 0.5), (1, 0.5)];
    }
    let m = ratio / 2;
    vec![
        (m - 2, -1.0 / 16.0),
        (m - 1, 9.0 / 16.0),
        (m, 9.0 / 16.0),
        (m + 1, -1.0 / 16.0),
    ]
}

/// Rectangles of invalid coarse cells, each backed by exactly one fine patch.
fn transfer_regions(
    coarse_boxes: &[IndexBox],
    fine_boxes: &[IndexBox],
    ratio: i64,
) -> Vec<(usize, usize, IndexBox)> {
    let mut regions = Vec::new();
    for (ci, cb) in coarse_boxes.iter().enumerate() {
        for (fi, fb) in fine_boxes.iter().enumerate() {
            if let Some(ov) = cb.intersect(&fb.coarsen(ratio)) {
                regions.push((ci, fi, ov));
            }
        }
    }
    regions
}

/// Cell-centered cubic restriction of level `fine_level` into the invalid
/// cells of the next coarser level.
pub fn restrict_cell_cubic_level(f: &mut CellField, fine_level: usize) {
    assert!(fine_level >= 1);
    let hier = f.hier.clone();
    let dim = hier.dim();
    let ratio = hier.levels[fine_level].ratio_to_coarser;
    let w = cubic_axis_weights(ratio);
    let regions = transfer_regions(
        &hier.levels[fine_level - 1].boxes,
        &hier.levels[fine_level].boxes,
        ratio,
    );
    for (ci, fi, region) in regions {
        let (coarse_slice, fine_slice) = split_level_pair(&mut f.patches, fine_level);
        let coarse = &mut coarse_slice[ci];
        let fine = &fine_slice[fi];
        for c in region.iter() {
            let base = [c[0] * ratio, c[1] * ratio, c[2] * ratio];
            let mut acc = 0.0;
            if dim == 2 {
                for (oj, wj) in &w {
                    for (oi, wi) in &w {
                        acc += wi * wj * fine.at([base[0] + oi, base[1] + oj, 0]);
                    }
                }
            } else {
                for (ok, wk) in &w {
                    for (oj, wj) in &w {
                        for (oi, wi) in &w {
                            acc += wi
                                * wj
                                * wk
                                * fine.at([base[0] + oi, base[1] + oj, base[2] + ok]);
                        }
                    }
                }
            }
            coarse.set(c, acc);
        }
    }
}

/// Sweep cubic cell restriction from the finest level down to level 0.
pub fn restrict_cell_cubic(f: &mut CellField) {
    for l in (1..f.hier.num_levels()).rev() {
        restrict_cell_cubic_level(f, l);
    }
}

/// Conservative restriction: a coarse face value is the mean of the
/// `ratio^(d-1)` overlying fine faces, which preserves the face flux exactly.
pub fn restrict_face_conservative_level(u: &mut FaceField, fine_level: usize) {
    assert!(fine_level >= 1);
    let hier = u.hier.clone();
    let dim = hier.dim();
    let ratio = hier.levels[fine_level].ratio_to_coarser;
    let inv = 1.0 / (ratio as f64).powi(dim as i32 - 1);
    for axis in 0..dim {
        let coarse_fb: Vec<IndexBox> = hier.levels[fine_level - 1]
            .boxes
            .iter()
            .map(|b| b.face_box(axis))
            .collect();
        let fine_foot_fb: Vec<IndexBox> = hier.levels[fine_level]
            .boxes
            .iter()
            .map(|b| b.coarsen(ratio).face_box(axis))
            .collect();
        let mut regions = Vec::new();
        for (ci, cb) in coarse_fb.iter().enumerate() {
            for (fi, fb) in fine_foot_fb.iter().enumerate() {
                if let Some(ov) = cb.intersect(fb) {
                    regions.push((ci, fi, ov));
                }
            }
        }
        let (t1, t2) = transverse_axes(axis);
        for (ci, fi, region) in regions {
            let (coarse_slice, fine_slice) = split_level_pair(&mut u.patches, fine_level);
            let coarse = &mut coarse_slice[ci][axis];
            let fine = &fine_slice[fi][axis];
            for fidx in region.iter() {
                let mut base = [0_i64; 3];
                for a in 0..3 {
                    base[a] = fidx[a] * ratio;
                }
                let mut acc = 0.0;
                for b in 0..ratio {
                    if dim == 2 {
                        let mut g = base;
                        g[t1] += b;
                        acc += fine.at(g);
                    } else {
                        for c in 0..ratio {
                            let mut g = base;
                            g[t1] += b;
                            g[t2] += c;
                            acc += fine.at(g);
                        }
                    }
                }
                coarse.set(fidx, acc * inv);
            }
        }
    }
}

pub fn restrict_face_conservative(u: &mut FaceField) {
    for l in (1..u.hier.num_levels()).rev() {
        restrict_face_conservative_level(u, l);
    }
}

/// Face-centered cubic restriction: the coarse face coincides with a fine
/// face plane, and transverse directions use the cubic sampling weights.
pub fn restrict_face_cubic_level(u: &mut FaceField, fine_level: usize) {
    assert!(fine_level >= 1);
    let hier = u.hier.clone();
    let dim = hier.dim();
    let ratio = hier.levels[fine_level].ratio_to_coarser;
    let w = cubic_axis_weights(ratio);
    for axis in 0..dim {
        let coarse_fb: Vec<IndexBox> = hier.levels[fine_level - 1]
            .boxes
            .iter()
            .map(|b| b.face_box(axis))
            .collect();
        let fine_foot_fb: Vec<IndexBox> = hier.levels[fine_level]
            .boxes
            .iter()
            .map(|b| b.coarsen(ratio).face_box(axis))
            .collect();
        let mut regions = Vec::new();
        for (ci, cb) in coarse_fb.iter().enumerate() {
            for (fi, fb) in fine_foot_fb.iter().enumerate() {
                if let Some(ov) = cb.intersect(fb) {
                    regions.push((ci, fi, ov));
                }
            }
        }
        let (t1, t2) = transverse_axes(axis);
        for (ci, fi, region) in regions {
            let (coarse_slice, fine_slice) = split_level_pair(&mut u.patches, fine_level);
            let coarse = &mut coarse_slice[ci][axis];
            let fine = &fine_slice[fi][axis];
            for fidx in region.iter() {
                let mut base = [0_i64; 3];
                for a in 0..3 {
                    base[a] = fidx[a] * ratio;
                }
                let mut acc = 0.0;
                if dim == 2 {
                    for (o1, w1) in &w {
                        let mut g = base;
                        g[t1] += o1;
                        acc += w1 * fine.at(g);
                    }
                } else {
                    for (o2, w2) in &w {
                        for (o1, w1) in &w {
                            let mut g = base;
                            g[t1] += o1;
                            g[t2] += o2;
                            acc += w1 * w2 * fine.at(g);
                        }
                    }
                }
                coarse.set(fidx, acc);
            }
        }
    }
}

pub fn restrict_face_cubic(u: &mut FaceField) {
    for l in (1..u.hier.num_levels()).rev() {
        restrict_face_cubic_level(u, l);
    }
}

/// Axes transverse to `axis` (second entry unused in 2D).
pub(crate) fn transverse_axes(axis: usize) -> (usize, usize) {
    match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// Borrow level `fine-1` mutably and level `fine` immutably at once.
fn split_level_pair<T>(patches: &mut [Vec<T>], fine: usize) -> (&mut Vec<T>, &Vec<T>) {
    let (lo, hi) = patches.split_at_mut(fine);
    (&mut lo[fine - 1], &hi[0])
}
