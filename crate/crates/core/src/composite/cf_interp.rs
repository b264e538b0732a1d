//! Ghost interpolation at coarse-fine interfaces.
//!
//! Ghost values on the coarse side of a fine patch are built in two steps:
//! first interpolate coarse values tangentially to align them with the fine
//! columns, then interpolate normally using two interior fine values plus
//! the aligned coarse value. Tangential interpolation is quadratic for
//! cell-centered data and interface-normal velocity components, and cubic
//! for interface-tangential velocity components (which live on `ratio + 1`
//! face planes per coarse face span). In 3D the tangential step is a tensor
//! product with a quadratic rule along the second tangential direction.
//!
//! The tangential weights below are the closed forms, written for the
//! relative fine offset `alpha` within the abutting coarse cell; the normal
//! step evaluates the same quadratic polynomial at both ghost layers, which
//! at the first layer reduces to the standard displayed coefficients (see
//! the unit tests for the explicit identity).

use crate::field::{CellField, FaceField, PatchArray};
use crate::geom::IndexBox;

use super::restrict::transverse_axes;

/// Quadratic tangential weights on coarse cells T-1, T, T+1 for the fine
/// column at offset `alpha` in coarse cell T (cell-centered alignment).
pub fn tangential_quadratic(alpha: i64, n: i64) -> [f64; 3] {
    let p = (2 * alpha + 1 - n) as f64;
    let q = (2 * alpha + 1 - 3 * n) as f64;
    let r = (2 * alpha + 1 + n) as f64;
    let n2 = (n * n) as f64;
    [p * q / (8.0 * n2), -r * q / (4.0 * n2), r * p / (8.0 * n2)]
}

/// Cubic tangential weights on coarse faces C-1, C, C+1, C+2 for the fine
/// face at offset `alpha` in coarse span C (face alignment).
pub fn tangential_cubic(alpha: i64, n: i64) -> [f64; 4] {
    let a = alpha as f64;
    let nf = n as f64;
    let n3 = nf * nf * nf;
    [
        -a * (a - nf) * (a - 2.0 * nf) / (6.0 * n3),
        (a - nf) * (a - 2.0 * nf) * (a + nf) / (2.0 * n3),
        -a * (a + nf) * (a - 2.0 * nf) / (2.0 * n3),
        a * (a - nf) * (a + nf) / (6.0 * n3),
    ]
}

/// Quadratic Lagrange weights at `xi` for nodes `x`.
pub fn lagrange3(x: [f64; 3], xi: f64) -> [f64; 3] {
    [
        (xi - x[1]) * (xi - x[2]) / ((x[0] - x[1]) * (x[0] - x[2])),
        (xi - x[0]) * (xi - x[2]) / ((x[1] - x[0]) * (x[1] - x[2])),
        (xi - x[0]) * (xi - x[1]) / ((x[2] - x[0]) * (x[2] - x[1])),
    ]
}

/// Read-only view of one level's patches with a deterministic search order
/// and graceful fallback to ghost entries (used where a coarse stencil runs
/// past the coarse region into already-filled physical or interface ghosts).
struct LevelReader<'a> {
    boxes: &'a [IndexBox],
    arrays: Vec<&'a PatchArray>,
}

impl<'a> LevelReader<'a> {
    fn read(&self, idx: [i64; 3], cache: &mut usize) -> f64 {
        let n = self.boxes.len();
        for step in 0..n {
            let pi = (*cache + step) % n;
            if self.arrays[pi].bx.contains(idx) {
                *cache = pi;
                return self.arrays[pi].at(idx);
            }
        }
        for (pi, arr) in self.arrays.iter().enumerate() {
            if arr.ghost_box().contains(idx) {
                // Prefer a patch adjacent to the index along one axis only.
                let mut clamped = idx;
                for a in 0..3 {
                    clamped[a] = clamped[a].clamp(arr.bx.lo[a], arr.bx.hi[a]);
                }
                let off_axes =
                    (0..3).filter(|&a| clamped[a] != idx[a]).count();
                if off_axes <= 1 {
                    let _ = pi;
                    return arr.at(idx);
                }
            }
        }
        for arr in &self.arrays {
            if arr.ghost_box().contains(idx) {
                return arr.at(idx);
            }
        }
        panic!("coarse value at {idx:?} unreachable from any patch");
    }
}

struct Side {
    axis: usize,
    dir: i64,
}

fn sides(dim: usize) -> Vec<Side> {
    let mut s = Vec::new();
    for axis in 0..dim {
        for dir in [-1_i64, 1] {
            s.push(Side { axis, dir });
        }
    }
    s
}

/// Fill both coarse-fine ghost layers of cell-centered data on `level`,
/// interpolating from level-1 data (whose invalid cells must already hold
/// cubic-restricted values).
pub fn fill_cf_ghost_cell_level(f: &mut CellField, level: usize) {
    assert!(level >= 1);
    let hier = f.hier.clone();
    let dim = hier.dim();
    let ratio = hier.levels[level].ratio_to_coarser;
    let layers = f.ghost;
    let (coarse_patches, fine_patches) = {
        let (lo, hi) = f.patches.split_at_mut(level);
        (&lo[level - 1], &mut hi[0])
    };
    let reader = LevelReader {
        boxes: &hier.levels[level - 1].boxes,
        arrays: coarse_patches.iter().collect(),
    };
    let mut cache = 0_usize;
    for (pi, pbox) in hier.levels[level].boxes.iter().enumerate() {
        for side in sides(dim) {
            let (a, dir) = (side.axis, side.dir);
            let jc = coarse_row(pbox, a, dir, ratio);
            let mid_node = -((ratio + 1) as f64) / 2.0;
            for m in 1..=layers {
                let mut slab = *pbox;
                let row = if dir < 0 { pbox.lo[a] - m } else { pbox.hi[a] + m };
                slab.lo[a] = row;
                slab.hi[a] = row;
                let wn = lagrange3([0.0, 1.0, mid_node], -(m as f64));
                for g in slab.iter() {
                    if !hier.levels[level].index_domain.contains(g)
                        || hier.levels[level].region_contains(g)
                    {
                        continue;
                    }
                    let mid = tangential_interp_cell(&reader, g, a, jc, ratio, dim, &mut cache);
                    let mut n0 = g;
                    let mut n1 = g;
                    if dir < 0 {
                        n0[a] = pbox.lo[a];
                        n1[a] = pbox.lo[a] + 1;
                    } else {
                        n0[a] = pbox.hi[a];
                        n1[a] = pbox.hi[a] - 1;
                    }
                    let patch = &fine_patches[pi];
                    let v = wn[0] * patch.at(n0) + wn[1] * patch.at(n1) + wn[2] * mid;
                    fine_patches[pi].set(g, v);
                }
            }
        }
    }
}

/// Fill both coarse-fine ghost layers of all velocity components on `level`.
/// Interface-normal components interpolate quadratically in every direction;
/// interface-tangential components use cubic interpolation along their own
/// axis. Level-1 invalid faces must hold cubic-restricted values.
pub fn fill_cf_ghost_face_level(u: &mut FaceField, level: usize) {
    assert!(level >= 1);
    let hier = u.hier.clone();
    let dim = hier.dim();
    let ratio = hier.levels[level].ratio_to_coarser;
    let layers = u.ghost;
    let (coarse_patches, fine_patches) = {
        let (lo, hi) = u.patches.split_at_mut(level);
        (&lo[level - 1], &mut hi[0])
    };
    let mut cache = 0_usize;
    for (pi, pbox) in hier.levels[level].boxes.iter().enumerate() {
        for comp in 0..dim {
            let reader = LevelReader {
                boxes: &hier.levels[level - 1].boxes,
                arrays: coarse_patches.iter().map(|p| &p[comp]).collect(),
            };
            let face_domain = hier.levels[level].index_domain.face_box(comp);
            let face_region: Vec<IndexBox> =
                hier.levels[level].boxes.iter().map(|b| b.face_box(comp)).collect();
            for side in sides(dim) {
                let (a, dir) = (side.axis, side.dir);
                if comp == a {
                    // Normal component: ghost faces beyond the boundary face.
                    let iface = if dir < 0 { pbox.lo[a] } else { pbox.hi[a] + 1 };
                    let jc_face = iface / ratio + if dir < 0 { -1 } else { 1 };
                    for m in 1..=layers {
                        let mut slab = pbox.face_box(comp);
                        let row = iface + dir * m;
                        slab.lo[a] = row;
                        slab.hi[a] = row;
                        let wn = lagrange3([0.0, 1.0, -(ratio as f64)], -(m as f64));
                        for g in slab.iter() {
                            if !face_domain.contains(g)
                                || face_region.iter().any(|b| b.contains(g))
                            {
                                continue;
                            }
                            let mid = tangential_interp_cell(
                                &reader, g, a, jc_face, ratio, dim, &mut cache,
                            );
                            let mut n0 = g;
                            let mut n1 = g;
                            n0[a] = iface;
                            n1[a] = iface - dir;
                            let patch = &fine_patches[pi][comp];
                            let v = wn[0] * patch.at(n0) + wn[1] * patch.at(n1) + wn[2] * mid;
                            fine_patches[pi][comp].set(g, v);
                        }
                    }
                } else {
                    // Tangential component: ghost faces in the ghost cell rows.
                    let jc = coarse_row(pbox, a, dir, ratio);
                    let mid_node = -((ratio + 1) as f64) / 2.0;
                    for m in 1..=layers {
                        let mut slab = pbox.face_box(comp);
                        let row = if dir < 0 { pbox.lo[a] - m } else { pbox.hi[a] + m };
                        slab.lo[a] = row;
                        slab.hi[a] = row;
                        let wn = lagrange3([0.0, 1.0, mid_node], -(m as f64));
                        for g in slab.iter() {
                            if !face_domain.contains(g)
                                || face_region.iter().any(|b| b.contains(g))
                            {
                                continue;
                            }
                            let mid = tangential_interp_face(
                                &reader, g, a, comp, jc, ratio, dim, &mut cache,
                            );
                            let mut n0 = g;
                            let mut n1 = g;
                            if dir < 0 {
                                n0[a] = pbox.lo[a];
                                n1[a] = pbox.lo[a] + 1;
                            } else {
                                n0[a] = pbox.hi[a];
                                n1[a] = pbox.hi[a] - 1;
                            }
                            let patch = &fine_patches[pi][comp];
                            let v = wn[0] * patch.at(n0) + wn[1] * patch.at(n1) + wn[2] * mid;
                            fine_patches[pi][comp].set(g, v);
                        }
                    }
                }
            }
        }
    }
}

fn coarse_row(pbox: &IndexBox, axis: usize, dir: i64, ratio: i64) -> i64 {
    if dir < 0 {
        pbox.lo[axis].div_euclid(ratio) - 1
    } else {
        (pbox.hi[axis] + 1).div_euclid(ratio)
    }
}

/// Tensor-product quadratic tangential interpolation of coarse cell-aligned
/// data to the fine column through `g`, at coarse normal row `jc`.
fn tangential_interp_cell(
    reader: &LevelReader,
    g: [i64; 3],
    axis: usize,
    jc: i64,
    ratio: i64,
    dim: usize,
    cache: &mut usize,
) -> f64 {
    let (t1, t2) = transverse_axes(axis);
    let c1 = g[t1].div_euclid(ratio);
    let w1 = tangential_quadratic(g[t1] - c1 * ratio, ratio);
    let mut acc = 0.0;
    if dim == 2 {
        for (d1, w) in w1.iter().enumerate() {
            let mut idx = [0_i64; 3];
            idx[axis] = jc;
            idx[t1] = c1 + d1 as i64 - 1;
            acc += w * reader.read(idx, cache);
        }
    } else {
        let c2 = g[t2].div_euclid(ratio);
        let w2 = tangential_quadratic(g[t2] - c2 * ratio, ratio);
        for (d2, wb) in w2.iter().enumerate() {
            for (d1, wa) in w1.iter().enumerate() {
                let mut idx = [0_i64; 3];
                idx[axis] = jc;
                idx[t1] = c1 + d1 as i64 - 1;
                idx[t2] = c2 + d2 as i64 - 1;
                acc += wa * wb * reader.read(idx, cache);
            }
        }
    }
    acc
}

/// Tangential interpolation for an interface-tangential velocity component:
/// cubic along the component's own (face-aligned) axis, quadratic along the
/// remaining tangential axis in 3D.
#[allow(clippy::too_many_arguments)]
fn tangential_interp_face(
    reader: &LevelReader,
    g: [i64; 3],
    axis: usize,
    comp: usize,
    jc: i64,
    ratio: i64,
    dim: usize,
    cache: &mut usize,
) -> f64 {
    let cc = g[comp].div_euclid(ratio);
    let wc = tangential_cubic(g[comp] - cc * ratio, ratio);
    let mut acc = 0.0;
    if dim == 2 {
        for (dc, w) in wc.iter().enumerate() {
            let mut idx = [0_i64; 3];
            idx[axis] = jc;
            idx[comp] = cc + dc as i64 - 1;
            acc += w * reader.read(idx, cache);
        }
    } else {
        let t: usize = (0..3).find(|&x| x != axis && x != comp).unwrap();
        let ct = g[t].div_euclid(ratio);
        let wt = tangential_quadratic(g[t] - ct * ratio, ratio);
        for (dt, wb) in wt.iter().enumerate() {
            for (dc, wa) in wc.iter().enumerate() {
                let mut idx = [0_i64; 3];
                idx[axis] = jc;
                idx[comp] = cc + dc as i64 - 1;
                idx[t] = ct + dt as i64 - 1;
                acc += wa * wb * reader.read(idx, cache);
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composite::restrict::{restrict_cell_cubic, restrict_face_cubic};
    use crate::hierarchy::PatchHierarchy;
    use crate::geom::DomainGeometry;
    use std::sync::Arc;

    fn hier2(ratio: i64) -> Arc<PatchHierarchy> {
        let d = DomainGeometry::new(2, [1.0, 1.0, 0.0], [8, 8, 1]).unwrap();
        let q = 2 * ratio;
        let fine = IndexBox::new_2d([q, q], [6 * ratio - 1, 6 * ratio - 1]).unwrap();
        Arc::new(PatchHierarchy::build(d, vec![vec![d.domain_box()], vec![fine]], ratio).unwrap())
    }

    fn hier3(ratio: i64) -> Arc<PatchHierarchy> {
        let d = DomainGeometry::new(3, [1.0, 1.0, 1.0], [8, 8, 8]).unwrap();
        let q = 2 * ratio;
        let fine =
            IndexBox::new_3d([q, q, q], [6 * ratio - 1, 6 * ratio - 1, 6 * ratio - 1]).unwrap();
        Arc::new(PatchHierarchy::build(d, vec![vec![d.domain_box()], vec![fine]], ratio).unwrap())
    }

    #[test]
    fn tangential_weights_match_generic_lagrange() {
        // Independent oracle: the closed forms are Lagrange interpolation of
        // the coarse samples at the fine alignment.
        for n in [2_i64, 4, 8] {
            for alpha in 0..n {
                let xi = (2 * alpha + 1 - n) as f64 / (2 * n) as f64;
                let oracle = lagrange3([-1.0, 0.0, 1.0], xi);
                let ours = tangential_quadratic(alpha, n);
                for k in 0..3 {
                    assert!((oracle[k] - ours[k]).abs() < 1e-14, "quad n={n} a={alpha}");
                }
            }
            for alpha in 0..=n {
                let nf = n as f64;
                let nodes = [-nf, 0.0, nf, 2.0 * nf];
                let xi = alpha as f64;
                let mut oracle = [0.0_f64; 4];
                for i in 0..4 {
                    let mut w = 1.0;
                    for j in 0..4 {
                        if i != j {
                            w *= (xi - nodes[j]) / (nodes[i] - nodes[j]);
                        }
                    }
                    oracle[i] = w;
                }
                let ours = tangential_cubic(alpha, n);
                for k in 0..4 {
                    assert!((oracle[k] - ours[k]).abs() < 1e-14, "cubic n={n} a={alpha}");
                }
            }
        }
    }

    #[test]
    fn first_layer_normal_weights_match_displayed_forms() {
        for n in [2_i64, 4, 8] {
            let nf = n as f64;
            // Cell-centered: ghost row one fine cell outside.
            let w = lagrange3([0.0, 1.0, -(nf + 1.0) / 2.0], -1.0);
            let displayed = [
                2.0 * (nf - 1.0) / (1.0 + nf),
                -(nf - 1.0) / (3.0 + nf),
                8.0 / ((1.0 + nf) * (3.0 + nf)),
            ];
            for k in 0..3 {
                assert!((w[k] - displayed[k]).abs() < 1e-14);
            }
            // Face-normal component: ghost face one fine face outside.
            let w = lagrange3([0.0, 1.0, -nf], -1.0);
            let displayed = [
                2.0 * (nf - 1.0) / nf,
                -(nf - 1.0) / (1.0 + nf),
                2.0 / (nf * (1.0 + nf)),
            ];
            for k in 0..3 {
                assert!((w[k] - displayed[k]).abs() < 1e-14);
            }
        }
    }

    fn poison_cf_cell_ghosts(f: &mut CellField, level: usize) {
        let hier = f.hier.clone();
        let region = hier.levels[level].boxes.clone();
        for p in &mut f.patches[level] {
            let inner = p.bx;
            for idx in p.ghost_box().iter() {
                if !inner.contains(idx)
                    && hier.levels[level].index_domain.contains(idx)
                    && !region.iter().any(|b| b.contains(idx))
                {
                    p.set(idx, f64::NAN);
                }
            }
        }
    }

    #[test]
    fn cell_ghosts_quadratic_exact() {
        for ratio in [2_i64, 4] {
            for dim in [2, 3] {
                let hier = if dim == 2 { hier2(ratio) } else { hier3(ratio) };
                let mut f = CellField::new(hier.clone());
                let poly = |x: [f64; 3]| {
                    x[0] * x[0] - x[1] * x[1] + 0.5 * x[0] * x[1] + 2.0 * x[2] * x[2]
                        - x[0] * x[2]
                        + 3.0 * x[1]
                        - 1.0
                };
                f.set_from_fn(poly);
                poison_cf_cell_ghosts(&mut f, 1);
                restrict_cell_cubic(&mut f);
                fill_cf_ghost_cell_level(&mut f, 1);
                let h = hier.levels[1].h;
                let pbox = hier.levels[1].boxes[0];
                for idx in pbox.grow(2).iter() {
                    if pbox.contains(idx) || !hier.levels[1].index_domain.contains(idx) {
                        continue;
                    }
                    // Corner ghosts (offset in more than one axis) are not
                    // part of the two-step scheme's contract.
                    let off = (0..dim)
                        .filter(|&a| idx[a] < pbox.lo[a] || idx[a] > pbox.hi[a])
                        .count();
                    if off > 1 {
                        continue;
                    }
                    let x = crate::geom::cell_center(idx, h, dim);
                    let got = f.patches[1][0].at(idx);
                    assert!(
                        (got - poly(x)).abs() < 1e-12,
                        "dim {dim} ratio {ratio} ghost {idx:?}: {got} vs {}",
                        poly(x)
                    );
                }
            }
        }
    }

    #[test]
    fn face_normal_ghosts_quadratic_exact() {
        for ratio in [2_i64, 4] {
            let hier = hier2(ratio);
            let mut u = FaceField::new(hier.clone());
            // Quadratic in the normal coordinate and linear tangentially for
            // each component.
            let f0 = |x: [f64; 3]| x[0] * x[0] + 2.0 * x[1] - 0.5 * x[0] * x[1];
            let f1 = |x: [f64; 3]| x[1] * x[1] - 3.0 * x[0] + x[0] * x[1];
            u.set_from_fn(|x, a| if a == 0 { f0(x) } else { f1(x) });
            restrict_face_cubic(&mut u);
            fill_cf_ghost_face_level(&mut u, 1);
            let h = hier.levels[1].h;
            let pbox = hier.levels[1].boxes[0];
            for comp in 0..2 {
                let fb = pbox.face_box(comp);
                for idx in fb.grow(2).iter() {
                    if fb.contains(idx) || !hier.levels[1].index_domain.face_box(comp).contains(idx)
                    {
                        continue;
                    }
                    let off = (0..2)
                        .filter(|&a| idx[a] < fb.lo[a] || idx[a] > fb.hi[a])
                        .count();
                    if off > 1 {
                        continue;
                    }
                    let x = crate::geom::face_center(idx, comp, h, 2);
                    let want = if comp == 0 { f0(x) } else { f1(x) };
                    let got = u.patches[1][0][comp].at(idx);
                    assert!(
                        (got - want).abs() < 1e-12,
                        "ratio {ratio} comp {comp} ghost {idx:?}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn face_tangential_ghosts_cubic_exact() {
        // u1 cubic in x (its own axis), constant in y: the ghost rows above
        // and below the patch exercise the cubic tangential rule exactly.
        for ratio in [2_i64, 4] {
            let hier = hier2(ratio);
            let mut u = FaceField::new(hier.clone());
            let f0 = |x: [f64; 3]| x[0] * x[0] * x[0] - 2.0 * x[0] + 1.0;
            u.set_from_fn(|x, a| if a == 0 { f0(x) } else { 0.0 });
            restrict_face_cubic(&mut u);
            fill_cf_ghost_face_level(&mut u, 1);
            let h = hier.levels[1].h;
            let pbox = hier.levels[1].boxes[0];
            let fb = pbox.face_box(0);
            for m in 1..=2_i64 {
                for row in [pbox.lo[1] - m, pbox.hi[1] + m] {
                    for i in fb.lo[0]..=fb.hi[0] {
                        let idx = [i, row, 0];
                        let x = crate::geom::face_center(idx, 0, h, 2);
                        let got = u.patches[1][0][0].at(idx);
                        assert!(
                            (got - f0(x)).abs() < 1e-12,
                            "ratio {ratio} ghost {idx:?}: {got} vs {}",
                            f0(x)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn face_ghosts_quadratic_normal_exact_3d() {
        let hier = hier3(2);
        let mut u = FaceField::new(hier.clone());
        let fs = [
            |x: [f64; 3]| x[1] * x[1] + x[2] - 2.0 * x[1] * x[2] + x[0],
            |x: [f64; 3]| x[2] * x[2] - x[0] + x[0] * x[2] + 2.0,
            |x: [f64; 3]| x[0] * x[0] + 3.0 * x[1] - x[0] * x[1],
        ];
        u.set_from_fn(|x, a| fs[a](x));
        restrict_face_cubic(&mut u);
        fill_cf_ghost_face_level(&mut u, 1);
        let h = hier.levels[1].h;
        let pbox = hier.levels[1].boxes[0];
        for comp in 0..3 {
            let fb = pbox.face_box(comp);
            for idx in fb.grow(2).iter() {
                if fb.contains(idx) || !hier.levels[1].index_domain.face_box(comp).contains(idx) {
                    continue;
                }
                let off = (0..3)
                    .filter(|&a| idx[a] < fb.lo[a] || idx[a] > fb.hi[a])
                    .count();
                if off > 1 {
                    continue;
                }
                let x = crate::geom::face_center(idx, comp, h, 3);
                let got = u.patches[1][0][comp].at(idx);
                let want = fs[comp](x);
                assert!(
                    (got - want).abs() < 1e-12,
                    "comp {comp} ghost {idx:?}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn constant_preserved() {
        let hier = hier2(4);
        let mut f = CellField::new(hier.clone());
        f.set_from_fn(|_| 7.25);
        poison_cf_cell_ghosts(&mut f, 1);
        restrict_cell_cubic(&mut f);
        fill_cf_ghost_cell_level(&mut f, 1);
        let pbox = hier.levels[1].boxes[0];
        for m in 1..=2_i64 {
            let idx = [pbox.lo[0] - m, pbox.lo[1] + 3, 0];
            assert!((f.patches[1][0].at(idx) - 7.25).abs() < 1e-14);
        }
    }
}
