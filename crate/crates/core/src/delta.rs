//! Lagrangian-Eulerian coupling through the regularized delta function.
//!
//! Forces on curvilinear mesh nodes are spread to faces of the finest grid
//! level, and grid velocities are interpolated back to the nodes, using the
//! tensor-product four-point kernel. Both operators act only on the finest
//! level; regridding guarantees every node stays at least two fine cells
//! away from the coarse-fine interface, so the support of the kernel never
//! straddles a resolution jump.

use crate::error::{Error, Result};
use crate::fiber::FiberMesh;
use crate::field::FaceField;
use crate::geom::face_center;

/// The one-dimensional four-point kernel. Support is |r| < 2; the translates
/// sum to one for every r, and phi(0) = 1/2, phi(+-1) = 1/4.
pub fn delta_kernel_1d(r: f64) -> f64 {
    let a = r.abs();
    if a < 1.0 {
        (3.0 - 2.0 * a + (1.0 + 4.0 * a - 4.0 * a * a).sqrt()) / 8.0
    } else if a < 2.0 {
        (5.0 - 2.0 * a - (-7.0 + 12.0 * a - 4.0 * a * a).sqrt()) / 8.0
    } else {
        0.0
    }
}

/// Kernel weights and the first grid index they apply to, for a point at
/// coordinate `x` against grid positions `(i + offset) * h`.
///
/// `offset` is 0.5 for cell-centered alignment and 0.0 for face alignment.
#[inline]
fn kernel_weights(x: f64, h: f64, offset: f64) -> (i64, [f64; 4]) {
    let s = x / h - offset;
    let base = s.floor() as i64 - 1;
    let mut w = [0.0; 4];
    for (k, wk) in w.iter_mut().enumerate() {
        *wk = delta_kernel_1d(s - (base + k as i64) as f64);
    }
    (base, w)
}

fn check_node_placement(mesh: &FiberMesh, u: &FaceField) -> Result<()> {
    let hier = &u.hier;
    let dim = hier.dim();
    let finest = hier.finest();
    let h = hier.levels[finest].h;
    let level = &hier.levels[finest];
    for (ni, x) in mesh.positions.iter().enumerate() {
        for a in 0..dim {
            if x[a] < 0.0 || x[a] > hier.domain.lengths[a] {
                return Err(Error::Geometry(format!(
                    "node {ni} at {x:?} lies outside the domain"
                )));
            }
        }
        let mut cell = [0_i64; 3];
        for a in 0..dim {
            cell[a] = (x[a] / h).floor() as i64;
        }
        // The kernel touches cells within +-2; all of them must be covered
        // by the finest level unless they fall outside the domain.
        let r = 2_i64;
        let dim3 = if dim == 3 { r } else { 0 };
        for dk in -dim3..=dim3 {
            for dj in -r..=r {
                for di in -r..=r {
                    let c = [cell[0] + di, cell[1] + dj, cell[2] + dk];
                    if !level.index_domain.contains(c) {
                        continue;
                    }
                    if !level.region_contains(c) {
                        return Err(Error::Geometry(format!(
                            "node {ni} at {x:?} is closer than two cells to the \
                             coarse-fine interface (cell {c:?} uncovered)"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Spread per-node forces (per unit curvilinear volume) onto faces of the
/// finest level: f_a(face) = sum_nodes F_a phi(dx) ds1 ds2 ds3 / h^d per
/// kernel tensor weight. Coarser levels are zeroed on their valid regions.
///
/// Accumulation order is patch-by-patch in node-index order, so the result
/// is independent of how patches are distributed over workers.
pub fn spread_force(mesh: &FiberMesh, forces: &[[f64; 3]], out: &mut FaceField) -> Result<()> {
    assert_eq!(forces.len(), mesh.positions.len());
    out.fill(0.0);
    check_node_placement(mesh, out)?;
    let hier = out.hier.clone();
    let dim = hier.dim();
    let finest = hier.finest();
    let h = hier.levels[finest].h;
    let ds_vol = mesh.ds_volume();
    let inv_hd = 1.0 / h.powi(dim as i32);
    let scale = ds_vol * inv_hd;

    for (pi, _pbox) in hier.levels[finest].boxes.iter().enumerate() {
        for a in 0..dim {
            let arr = &mut out.patches[finest][pi][a];
            let fb = arr.bx;
            for (ni, x) in mesh.positions.iter().enumerate() {
                let fa = forces[ni][a];
                if fa == 0.0 {
                    continue;
                }
                // Alignment: component a lives at integer positions along a,
                // half-integer along the others.
                let (bi, wi) = kernel_weights(x[0], h, if a == 0 { 0.0 } else { 0.5 });
                let (bj, wj) = kernel_weights(x[1], h, if a == 1 { 0.0 } else { 0.5 });
                let (bk, wk) = if dim == 3 {
                    kernel_weights(x[2], h, if a == 2 { 0.0 } else { 0.5 })
                } else {
                    (0, [1.0, 0.0, 0.0, 0.0])
                };
                let kr = if dim == 3 { 4 } else { 1 };
                for dk in 0..kr {
                    if wk[dk] == 0.0 {
                        continue;
                    }
                    for dj in 0..4 {
                        if wj[dj] == 0.0 {
                            continue;
                        }
                        for di in 0..4 {
                            let idx = [bi + di as i64, bj + dj as i64, bk + dk as i64];
                            if !fb.contains(idx) {
                                continue;
                            }
                            let w = wi[di] * wj[dj] * wk[dk];
                            if w != 0.0 {
                                *arr.at_mut(idx) += fa * w * scale;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Interpolate face velocities to the nodes: the adjoint of `spread_force`
/// with weight h^d per face.
pub fn interpolate_velocity(mesh: &FiberMesh, u: &FaceField) -> Result<Vec<[f64; 3]>> {
    check_node_placement(mesh, u)?;
    let hier = &u.hier;
    let dim = hier.dim();
    let finest = hier.finest();
    let h = hier.levels[finest].h;
    let level = &hier.levels[finest];

    let mut vel = vec![[0.0_f64; 3]; mesh.positions.len()];
    for (ni, x) in mesh.positions.iter().enumerate() {
        for a in 0..dim {
            let (bi, wi) = kernel_weights(x[0], h, if a == 0 { 0.0 } else { 0.5 });
            let (bj, wj) = kernel_weights(x[1], h, if a == 1 { 0.0 } else { 0.5 });
            let (bk, wk) = if dim == 3 {
                kernel_weights(x[2], h, if a == 2 { 0.0 } else { 0.5 })
            } else {
                (0, [1.0, 0.0, 0.0, 0.0])
            };
            let mut acc = 0.0;
            let kr = if dim == 3 { 4 } else { 1 };
            for dk in 0..kr {
                for dj in 0..4 {
                    for di in 0..4 {
                        let w = wi[di] * wj[dj] * wk[dk];
                        if w == 0.0 {
                            continue;
                        }
                        let idx = [bi + di as i64, bj + dj as i64, bk + dk as i64];
                        acc += w * face_value(u, level, finest, a, idx, ni, x);
                    }
                }
            }
            vel[ni][a] = acc;
        }
    }
    Ok(vel)
}

/// Face value lookup across the finest level's patches. Ghost entries are
/// used for faces just outside a patch (e.g. at the physical boundary where
/// the kernel support is clipped by an attached structure).
fn face_value(
    u: &FaceField,
    level: &crate::hierarchy::Level,
    l: usize,
    axis: usize,
    idx: [i64; 3],
    ni: usize,
    x: &[f64; 3],
) -> f64 {
    for (pi, b) in level.boxes.iter().enumerate() {
        if b.face_box(axis).contains(idx) {
            return u.patches[l][pi][axis].at(idx);
        }
    }
    for (pi, _b) in level.boxes.iter().enumerate() {
        if u.patches[l][pi][axis].ghost_box().contains(idx) {
            return u.patches[l][pi][axis].at(idx);
        }
    }
    let _ = face_center(idx, axis, level.h, u.hier.dim());
    panic!("node {ni} at {x:?}: face {idx:?} (axis {axis}) not reachable on the finest level");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::FiberMesh;
    use crate::geom::DomainGeometry;
    use crate::hierarchy::PatchHierarchy;
    use rand::{Rng, SeedableRng};
    use std::sync::Arc;

    #[test]
    fn kernel_point_values() {
        assert_eq!(delta_kernel_1d(2.0), 0.0);
        assert_eq!(delta_kernel_1d(-2.0), 0.0);
        assert!((delta_kernel_1d(0.0) - 0.5).abs() < 1e-15);
        assert!((delta_kernel_1d(1.0) - 0.25).abs() < 1e-15);
        assert!((delta_kernel_1d(-1.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn kernel_partition_of_unity() {
        for n in 0..1000 {
            let r = n as f64 / 1000.0;
            let s: f64 = (-3..=3).map(|j| delta_kernel_1d(r - j as f64)).sum();
            assert!((s - 1.0).abs() <= 1e-14, "r = {r}: sum = {s}");
        }
    }

    #[test]
    fn kernel_nonnegative_on_support() {
        for n in -400..=400 {
            let r = n as f64 / 100.0;
            assert!(delta_kernel_1d(r) >= 0.0);
        }
    }

    fn mesh_at(points: Vec<[f64; 3]>, dim: usize) -> FiberMesh {
        FiberMesh::free_nodes(points, [0.1, if dim == 2 { 1.0 } else { 0.1 }, 0.1])
    }

    fn uniform2(n: i64) -> Arc<PatchHierarchy> {
        Arc::new(PatchHierarchy::uniform(
            DomainGeometry::new(2, [1.0, 1.0, 0.0], [n, n, 1]).unwrap(),
        ))
    }

    #[test]
    fn spread_total_force_matches_ds_volume() {
        let hier = uniform2(16);
        let mesh = mesh_at(vec![[0.53, 0.47, 0.0]], 2);
        let mut f = FaceField::new(hier.clone());
        spread_force(&mesh, &[[1.0, 0.0, 0.0]], &mut f).unwrap();
        let h = hier.levels[0].h;
        let mut total = 0.0;
        for idx in hier.levels[0].boxes[0].face_box(0).iter() {
            total += f.patches[0][0][0].at(idx) * h * h;
        }
        let ds_vol = mesh.ds_volume();
        assert!(
            (total - ds_vol).abs() < 1e-13 * ds_vol,
            "total spread force {total} vs {ds_vol}"
        );
    }

    #[test]
    fn coincident_nodes_double_the_field() {
        let hier = uniform2(16);
        let p = [0.31, 0.62, 0.0];
        let m1 = mesh_at(vec![p], 2);
        let m2 = mesh_at(vec![p, p], 2);
        let mut f1 = FaceField::new(hier.clone());
        let mut f2 = FaceField::new(hier.clone());
        spread_force(&m1, &[[0.5, -1.0, 0.0]], &mut f1).unwrap();
        spread_force(&m2, &[[0.5, -1.0, 0.0]; 2], &mut f2).unwrap();
        for a in 0..2 {
            for idx in hier.levels[0].boxes[0].face_box(a).iter() {
                let v1 = f1.patches[0][0][a].at(idx);
                let v2 = f2.patches[0][0][a].at(idx);
                assert!((v2 - 2.0 * v1).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn interpolation_of_uniform_field_is_exact() {
        let hier = uniform2(16);
        let mesh = mesh_at(vec![[0.511, 0.273, 0.0], [0.125, 0.8, 0.0]], 2);
        let mut u = FaceField::new(hier);
        u.set_from_fn(|_, a| [3.0, -1.5, 0.0][a]);
        let v = interpolate_velocity(&mesh, &u).unwrap();
        for vi in v {
            assert!((vi[0] - 3.0).abs() < 1e-13);
            assert!((vi[1] + 1.5).abs() < 1e-13);
        }
    }

    #[test]
    fn spread_interpolate_adjointness_2d_and_3d() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for dim in [2_usize, 3] {
            let hier = if dim == 2 {
                uniform2(12)
            } else {
                Arc::new(PatchHierarchy::uniform(
                    DomainGeometry::new(3, [1.0, 1.0, 1.0], [8, 8, 8]).unwrap(),
                ))
            };
            let h = hier.levels[0].h;
            let n_nodes = 5;
            let pts: Vec<[f64; 3]> = (0..n_nodes)
                .map(|_| {
                    let mut p = [0.0; 3];
                    for x in p.iter_mut().take(dim) {
                        *x = 0.2 + 0.6 * rng.gen::<f64>();
                    }
                    p
                })
                .collect();
            let mesh = mesh_at(pts, dim);
            let forces: Vec<[f64; 3]> = (0..n_nodes)
                .map(|_| {
                    let mut f = [0.0; 3];
                    for x in f.iter_mut().take(dim) {
                        *x = rng.gen::<f64>() - 0.5;
                    }
                    f
                })
                .collect();
            let mut u = FaceField::new(hier.clone());
            u.set_from_fn(|_, _| 0.0);
            for lvl in &mut u.patches {
                for p in lvl {
                    for comp in p.iter_mut().take(dim) {
                        for v in comp.data_mut() {
                            *v = rng.gen::<f64>() - 0.5;
                        }
                    }
                }
            }
            let mut f = FaceField::new(hier.clone());
            spread_force(&mesh, &forces, &mut f).unwrap();
            let v = interpolate_velocity(&mesh, &u).unwrap();

            // <S F, u> h^d over faces == <F, S* u> ds over nodes.
            let mut lhs = 0.0;
            let hd = h.powi(dim as i32);
            for a in 0..dim {
                for idx in hier.levels[0].boxes[0].face_box(a).iter() {
                    lhs += f.patches[0][0][a].at(idx) * u.patches[0][0][a].at(idx) * hd;
                }
            }
            let ds = mesh.ds_volume();
            let mut rhs = 0.0;
            for ni in 0..n_nodes {
                for a in 0..dim {
                    rhs += forces[ni][a] * v[ni][a] * ds;
                }
            }
            let scale = lhs.abs().max(rhs.abs()).max(1e-30);
            assert!(
                ((lhs - rhs) / scale).abs() < 1e-12,
                "dim {dim}: adjointness violated: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn node_too_close_to_interface_rejected() {
        let d = DomainGeometry::new(2, [1.0, 1.0, 0.0], [8, 8, 1]).unwrap();
        let fine = crate::geom::IndexBox::new_2d([4, 4], [11, 11]).unwrap();
        let hier = Arc::new(
            PatchHierarchy::build(d, vec![vec![d.domain_box()], vec![fine]], 2).unwrap(),
        );
        // Node just inside the fine region but within two cells of its edge.
        let mesh = mesh_at(vec![[0.26, 0.5, 0.0]], 2);
        let mut f = FaceField::new(hier.clone());
        let err = spread_force(&mesh, &[[1.0, 0.0, 0.0]], &mut f);
        assert!(err.is_err());
        // Node in the center is fine.
        let mesh = mesh_at(vec![[0.5, 0.5, 0.0]], 2);
        assert!(spread_force(&mesh, &[[1.0, 0.0, 0.0]], &mut f).is_ok());
    }

    #[test]
    fn moving_node_by_h_shifts_footprint_by_one_cell() {
        let hier = uniform2(16);
        let h = hier.levels[0].h;
        let p0 = [0.5 + 0.3 * h, 0.5 + 0.6 * h, 0.0];
        let p1 = [p0[0] + h, p0[1], 0.0];
        let mut f0 = FaceField::new(hier.clone());
        let mut f1 = FaceField::new(hier.clone());
        spread_force(&mesh_at(vec![p0], 2), &[[1.0, 2.0, 0.0]], &mut f0).unwrap();
        spread_force(&mesh_at(vec![p1], 2), &[[1.0, 2.0, 0.0]], &mut f1).unwrap();
        for a in 0..2 {
            for idx in hier.levels[0].boxes[0].face_box(a).grow(-3).iter() {
                let shifted = [idx[0] + 1, idx[1], 0];
                assert!(
                    (f0.patches[0][0][a].at(idx) - f1.patches[0][0][a].at(shifted)).abs() < 1e-13
                );
            }
        }
    }
}
