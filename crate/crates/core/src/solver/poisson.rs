//! Cell-centered composite-grid Poisson solver (FAC multigrid).
//!
//! Solves div(grad(phi)) = rhs for the canonical composite operator, with
//! homogeneous boundary conditions derived from the velocity boundary set:
//! solid walls give Neumann closures, prescribed-pressure and open regions
//! give Dirichlet, periodic wraps. One V-cycle relaxes each refinement
//! level with red-black Gauss-Seidel, forms the composite residual, and
//! recurses onto the next coarser level; below level 0 the grid is
//! coalesced into a single array and coarsened by factors of two.
//!
//! As a preconditioner component exactly one V-cycle is applied; as a
//! standalone solver V-cycles repeat until the requested tolerance. Pure
//! Neumann/periodic configurations are singular: the right-hand side has
//! its mean removed (flagged to the caller) and the solution is pinned to
//! zero mean.

use std::sync::Arc;

use crate::composite::{
    cell_laplacian_stencil, composite_divergence, composite_gradient, restrict_cell_cubic_level,
    sync_cell, sync_face_conservative, CellBc,
};
use crate::field::{fill_ghost_sibling_cell, CellField, FaceField, PatchArray};
use crate::hierarchy::PatchHierarchy;

use super::bc::{BcKind, BoundaryConditionSet, PhysicalBcFill};

pub struct FacPoisson {
    hier: Arc<PatchHierarchy>,
    bc: BoundaryConditionSet,
    /// True when no Dirichlet region exists anywhere (singular operator).
    pub needs_pinning: bool,
    pre_sweeps: usize,
    post_sweeps: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct PoissonStats {
    pub cycles: usize,
    pub final_residual: f64,
    pub initial_residual: f64,
    pub mean_removed: f64,
}

impl FacPoisson {
    pub fn new(hier: Arc<PatchHierarchy>, bc: BoundaryConditionSet) -> Self {
        let needs_pinning = !bc.any_pressure();
        FacPoisson { hier, bc, needs_pinning, pre_sweeps: 2, post_sweeps: 2 }
    }

    fn ghost_refresh(&self, phi: &mut CellField, level: usize) {
        if level > 0 {
            restrict_cell_cubic_level(phi, level);
        }
        fill_ghost_sibling_cell(phi, level);
        if level > 0 {
            crate::composite::fill_cf_ghost_cell_level(phi, level);
        }
        PhysicalBcFill::homogeneous(&self.bc).fill_cell_physical(phi, level);
    }

    /// Red-black Gauss-Seidel sweeps on one level.
    fn smooth_level(&self, level: usize, phi: &mut CellField, rhs: &CellField, sweeps: usize) {
        let dim = self.hier.dim();
        let h = self.hier.levels[level].h;
        let h2 = h * h;
        let diag = 2.0 * dim as f64;
        for _ in 0..sweeps {
            for color in 0..2_i64 {
                self.ghost_refresh(phi, level);
                for (pi, pbox) in self.hier.levels[level].boxes.iter().enumerate() {
                    let rp = &rhs.patches[level][pi];
                    let pp = &mut phi.patches[level][pi];
                    for c in pbox.iter() {
                        if (c[0] + c[1] + c[2]).rem_euclid(2) != color {
                            continue;
                        }
                        let mut nb = 0.0;
                        for a in 0..dim {
                            let mut hi = c;
                            let mut lo = c;
                            hi[a] += 1;
                            lo[a] -= 1;
                            nb += pp.at(hi) + pp.at(lo);
                        }
                        pp.set(c, (nb - h2 * rp.at(c)) / diag);
                    }
                }
            }
        }
    }

    /// Composite residual rhs - L(phi) at every cell (valid entries are the
    /// meaningful ones).
    pub fn composite_residual(&self, phi: &mut CellField, rhs: &CellField, out: &mut CellField) {
        let fill = PhysicalBcFill::homogeneous(&self.bc);
        sync_cell(phi, &fill);
        let mut grad = FaceField::with_ghost(self.hier.clone(), 1);
        composite_gradient(phi, &mut grad);
        sync_face_conservative(&mut grad);
        composite_divergence(&grad, out);
        for l in 0..self.hier.num_levels() {
            for (pi, pbox) in self.hier.levels[l].boxes.iter().enumerate() {
                for c in pbox.iter() {
                    let v = rhs.patches[l][pi].at(c) - out.patches[l][pi].at(c);
                    out.patches[l][pi].set(c, v);
                }
            }
        }
    }

    /// L2 norm (volume weighted) of a cell field over valid cells.
    pub fn norm_valid(&self, f: &CellField) -> f64 {
        let dim = self.hier.dim();
        let mut s = 0.0;
        for l in 0..self.hier.num_levels() {
            let w = self.hier.levels[l].h.powi(dim as i32);
            for (pi, pbox) in self.hier.levels[l].boxes.iter().enumerate() {
                for c in pbox.iter() {
                    if self.hier.cell_is_valid(l, pi, c) {
                        let v = f.patches[l][pi].at(c);
                        s += w * v * v;
                    }
                }
            }
        }
        s.sqrt()
    }

    fn mean_valid(&self, f: &CellField) -> f64 {
        let dim = self.hier.dim();
        let mut s = 0.0;
        let mut vol = 0.0;
        for l in 0..self.hier.num_levels() {
            let w = self.hier.levels[l].h.powi(dim as i32);
            for (pi, pbox) in self.hier.levels[l].boxes.iter().enumerate() {
                for c in pbox.iter() {
                    if self.hier.cell_is_valid(l, pi, c) {
                        s += w * f.patches[l][pi].at(c);
                        vol += w;
                    }
                }
            }
        }
        s / vol
    }

    fn shift_valid(&self, f: &mut CellField, delta: f64) {
        for l in 0..self.hier.num_levels() {
            for (pi, pbox) in self.hier.levels[l].boxes.iter().enumerate() {
                for c in pbox.iter() {
                    *f.patches[l][pi].at_mut(c) += delta;
                }
            }
        }
    }

    /// One FAC V-cycle, updating `phi` in place.
    pub fn vcycle(&self, phi: &mut CellField, rhs: &CellField) {
        self.recurse(self.hier.finest(), phi, rhs);
        if self.needs_pinning {
            let m = self.mean_valid(phi);
            self.shift_valid(phi, -m);
        }
    }

    fn recurse(&self, level: usize, phi: &mut CellField, rhs: &CellField) {
        if level == 0 {
            self.solve_level0(phi, rhs);
            return;
        }
        self.smooth_level(level, phi, rhs, self.pre_sweeps);

        // Composite residual, restricted onto the next coarser level.
        let mut resid = CellField::with_ghost(self.hier.clone(), phi.ghost);
        self.composite_residual(phi, rhs, &mut resid);
        let ratio = self.hier.levels[level].ratio_to_coarser;
        let mut rhs_c = CellField::with_ghost(self.hier.clone(), rhs.ghost);
        let dim = self.hier.dim();
        let cl = level - 1;
        for (pi, pbox) in self.hier.levels[cl].boxes.iter().enumerate() {
            for c in pbox.iter() {
                if self.hier.cell_is_valid(cl, pi, c) {
                    rhs_c.patches[cl][pi].set(c, resid.patches[cl][pi].at(c));
                } else {
                    // Conservative average of the overlying fine residuals.
                    let mut acc = 0.0;
                    let r3 = if dim == 3 { ratio } else { 1 };
                    for dk in 0..r3 {
                        for dj in 0..ratio {
                            for di in 0..ratio {
                                let f = [c[0] * ratio + di, c[1] * ratio + dj, c[2] * ratio + dk];
                                acc += self.read_fine_cell(&resid, level, f);
                            }
                        }
                    }
                    let count = (ratio * ratio * r3) as f64;
                    rhs_c.patches[cl][pi].set(c, acc / count);
                }
            }
        }

        let mut e = CellField::with_ghost(self.hier.clone(), phi.ghost);
        self.recurse(cl, &mut e, &rhs_c);

        // Correct the coarser levels and prolong onto this one.
        for k in 0..=cl {
            for (pi, pbox) in self.hier.levels[k].boxes.iter().enumerate() {
                for c in pbox.iter() {
                    *phi.patches[k][pi].at_mut(c) += e.patches[k][pi].at(c);
                }
            }
        }
        fill_ghost_sibling_cell(&mut e, cl);
        PhysicalBcFill::homogeneous(&self.bc).fill_cell_physical(&mut e, cl);
        self.prolong_add(level, &e, phi);

        self.smooth_level(level, phi, rhs, self.post_sweeps);
    }

    fn read_fine_cell(&self, f: &CellField, level: usize, idx: [i64; 3]) -> f64 {
        for (pi, b) in self.hier.levels[level].boxes.iter().enumerate() {
            if b.contains(idx) {
                return f.patches[level][pi].at(idx);
            }
        }
        panic!("fine cell {idx:?} not covered on level {level}");
    }

    /// Linear cell-centered prolongation of the coarse correction, added
    /// into the fine level.
    fn prolong_add(&self, level: usize, e: &CellField, phi: &mut CellField) {
        let dim = self.hier.dim();
        let ratio = self.hier.levels[level].ratio_to_coarser;
        let cl = level - 1;
        for (pi, pbox) in self.hier.levels[level].boxes.iter().enumerate() {
            for f in pbox.iter() {
                let mut val = 0.0;
                // Tensor-product linear interpolation from the coarse cells.
                let mut coarse = [0_i64; 3];
                let mut frac = [0.0_f64; 3];
                for a in 0..dim {
                    coarse[a] = f[a].div_euclid(ratio);
                    frac[a] =
                        (f[a] - coarse[a] * ratio) as f64 / ratio as f64 + 0.5 / ratio as f64
                            - 0.5;
                }
                let corners = 1 << dim;
                for corner in 0..corners {
                    let mut idx = coarse;
                    let mut w = 1.0;
                    for a in 0..dim {
                        let off = (corner >> a) & 1;
                        let s = frac[a].signum() as i64;
                        let fa = frac[a].abs();
                        if off == 1 {
                            idx[a] = coarse[a] + s;
                            w *= fa;
                        } else {
                            w *= 1.0 - fa;
                        }
                    }
                    if w != 0.0 {
                        val += w * self.read_coarse_with_ghosts(e, cl, idx);
                    }
                }
                *phi.patches[level][pi].at_mut(f) += val;
            }
        }
    }

    fn read_coarse_with_ghosts(&self, f: &CellField, level: usize, idx: [i64; 3]) -> f64 {
        for (pi, b) in self.hier.levels[level].boxes.iter().enumerate() {
            if b.contains(idx) {
                return f.patches[level][pi].at(idx);
            }
        }
        for (pi, _b) in self.hier.levels[level].boxes.iter().enumerate() {
            if f.patches[level][pi].ghost_box().contains(idx) {
                return f.patches[level][pi].at(idx);
            }
        }
        panic!("coarse cell {idx:?} unreachable on level {level}");
    }

    // ----- level 0: coalesce into one array and run plain multigrid -----

    fn solve_level0(&self, phi: &mut CellField, rhs: &CellField) {
        let domain = self.hier.domain.domain_box();
        let mut phi0 = PatchArray::new(domain, 1);
        let mut rhs0 = PatchArray::new(domain, 1);
        for (pi, pbox) in self.hier.levels[0].boxes.iter().enumerate() {
            for c in pbox.iter() {
                phi0.set(c, phi.patches[0][pi].at(c));
                rhs0.set(c, rhs.patches[0][pi].at(c));
            }
        }
        let h = self.hier.levels[0].h;
        self.mg_uniform(&mut phi0, &rhs0, h, 1);
        for (pi, pbox) in self.hier.levels[0].boxes.iter().enumerate() {
            for c in pbox.iter() {
                phi.patches[0][pi].set(c, phi0.at(c));
            }
        }
    }

    /// Homogeneous BC ghost fill on a single sub-level array; `scale` maps
    /// this array's cells to level-0 cells for region lookup.
    fn fill_sub_ghosts(&self, arr: &mut PatchArray, scale: i64) {
        let dim = self.hier.dim();
        let b = arr.bx;
        let dom0 = self.hier.domain.domain_box();
        for axis in 0..dim {
            for side in 0..2 {
                let mut slab = b;
                for t in 0..dim {
                    if t < axis {
                        slab.lo[t] -= 1;
                        slab.hi[t] += 1;
                    }
                }
                let row = if side == 0 { b.lo[axis] - 1 } else { b.hi[axis] + 1 };
                slab.lo[axis] = row;
                slab.hi[axis] = row;
                for g in slab.iter() {
                    let mut lvl0 = [0_i64; 3];
                    for a in 0..3 {
                        lvl0[a] = (g[a] * scale).clamp(dom0.lo[a], dom0.hi[a]);
                    }
                    let kind = self.bc.kind_at(axis, side == 1, lvl0);
                    let mut mirror = g;
                    mirror[axis] = if side == 0 { b.lo[axis] } else { b.hi[axis] };
                    let v = match kind {
                        BcKind::SolidWall => arr.at(mirror),
                        BcKind::Periodic => {
                            let n = b.shape()[axis];
                            let mut w = g;
                            w[axis] = if side == 0 { g[axis] + n } else { g[axis] - n };
                            arr.at(w)
                        }
                        _ => -arr.at(mirror), // homogeneous Dirichlet at the face
                    };
                    arr.set(g, v);
                }
            }
        }
    }

    fn mg_uniform(&self, phi: &mut PatchArray, rhs: &PatchArray, h: f64, scale: i64) {
        let dim = self.hier.dim();
        let b = phi.bx;
        let shape = b.shape();
        let h2 = h * h;
        let diag = 2.0 * dim as f64;
        let smooth = |phi: &mut PatchArray, sweeps: usize, me: &Self| {
            for _ in 0..sweeps {
                for color in 0..2_i64 {
                    me.fill_sub_ghosts(phi, scale);
                    for c in b.iter() {
                        if (c[0] + c[1] + c[2]).rem_euclid(2) != color {
                            continue;
                        }
                        let mut nb = 0.0;
                        for a in 0..dim {
                            let mut hi = c;
                            let mut lo = c;
                            hi[a] += 1;
                            lo[a] -= 1;
                            nb += phi.at(hi) + phi.at(lo);
                        }
                        phi.set(c, (nb - h2 * rhs.at(c)) / diag);
                    }
                }
            }
        };

        let can_coarsen =
            (0..dim).all(|a| shape[a] % 2 == 0 && shape[a] >= 4);
        if !can_coarsen {
            smooth(phi, 30, self);
            return;
        }
        smooth(phi, self.pre_sweeps, self);

        // Residual, restricted by averaging 2^d children.
        self.fill_sub_ghosts(phi, scale);
        let inv_h = 1.0 / h;
        let cb = b.coarsen(2);
        let mut rhs_c = PatchArray::new(cb, 1);
        let kids = 1 << dim;
        for c in cb.iter() {
            let mut acc = 0.0;
            for kid in 0..kids {
                let mut f = [c[0] * 2, c[1] * 2, c[2] * 2];
                for a in 0..dim {
                    f[a] += (kid >> a) & 1;
                }
                if dim == 2 {
                    f[2] = 0;
                }
                let r = rhs.at(f) - cell_laplacian_stencil(phi, f, dim, inv_h);
                acc += r;
            }
            rhs_c.set(c, acc / kids as f64);
        }
        let mut e_c = PatchArray::new(cb, 1);
        self.mg_uniform(&mut e_c, &rhs_c, 2.0 * h, scale * 2);

        // Bilinear prolongation of the correction.
        self.fill_sub_ghosts(&mut e_c, scale * 2);
        for f in b.iter() {
            let mut val = 0.0;
            let mut coarse = [0_i64; 3];
            let mut frac = [0.0_f64; 3];
            for a in 0..dim {
                coarse[a] = f[a].div_euclid(2);
                frac[a] = if f[a] % 2 == 0 { -0.25 } else { 0.25 };
            }
            let corners = 1 << dim;
            for corner in 0..corners {
                let mut idx = coarse;
                let mut w = 1.0;
                for a in 0..dim {
                    if (corner >> a) & 1 == 1 {
                        idx[a] = coarse[a] + frac[a].signum() as i64;
                        w *= frac[a].abs();
                    } else {
                        w *= 1.0 - frac[a].abs();
                    }
                }
                val += w * e_c.at(idx);
            }
            *phi.at_mut(f) += val;
        }

        smooth(phi, self.post_sweeps, self);
    }

    /// Iterate V-cycles until the composite residual drops below
    /// `tol_rel * max(|rhs|, initial residual)` or `max_cycles` is reached.
    pub fn solve(
        &self,
        phi: &mut CellField,
        rhs: &CellField,
        tol_rel: f64,
        max_cycles: usize,
    ) -> PoissonStats {
        let mut rhs_work = rhs.clone();
        let mut mean_removed = 0.0;
        if self.needs_pinning {
            mean_removed = self.mean_valid(&rhs_work);
            if mean_removed != 0.0 {
                self.shift_valid(&mut rhs_work, -mean_removed);
            }
        }
        let mut resid = CellField::with_ghost(self.hier.clone(), phi.ghost);
        self.composite_residual(phi, &rhs_work, &mut resid);
        let r0 = self.norm_valid(&resid);
        let rhs_norm = self.norm_valid(&rhs_work).max(r0);
        let target = tol_rel * rhs_norm.max(f64::MIN_POSITIVE);
        let mut cycles = 0;
        let mut rn = r0;
        while rn > target && cycles < max_cycles {
            self.vcycle(phi, &rhs_work);
            cycles += 1;
            self.composite_residual(phi, &rhs_work, &mut resid);
            rn = self.norm_valid(&resid);
        }
        if self.needs_pinning {
            let m = self.mean_valid(phi);
            self.shift_valid(phi, -m);
        }
        PoissonStats { cycles, final_residual: rn, initial_residual: r0, mean_removed }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{DomainGeometry, IndexBox};

    fn uniform_hier(n: i64) -> Arc<PatchHierarchy> {
        Arc::new(PatchHierarchy::uniform(
            DomainGeometry::new(2, [1.0, 1.0, 0.0], [n, n, 1]).unwrap(),
        ))
    }

    #[test]
    fn vcycle_contracts_uniform_poisson() {
        let hier = uniform_hier(64);
        let bc = BoundaryConditionSet::all_walls(2);
        let fac = FacPoisson::new(hier.clone(), bc);
        let mut rhs = CellField::new(hier.clone());
        rhs.set_from_fn(|x| {
            (2.0 * std::f64::consts::PI * x[0]).cos() * (2.0 * std::f64::consts::PI * x[1]).cos()
        });
        let mut phi = CellField::new(hier.clone());
        let mut resid = CellField::new(hier.clone());
        fac.composite_residual(&mut phi, &rhs, &mut resid);
        let mut prev = fac.norm_valid(&resid);
        for _ in 0..3 {
            fac.vcycle(&mut phi, &rhs);
            fac.composite_residual(&mut phi, &rhs, &mut resid);
            let rn = fac.norm_valid(&resid);
            let rate = rn / prev;
            assert!(rate <= 0.2, "V-cycle contraction rate {rate}");
            prev = rn;
        }
    }

    #[test]
    fn zero_rhs_neumann_gives_zero_mean_constant() {
        let hier = uniform_hier(16);
        let bc = BoundaryConditionSet::all_walls(2);
        let fac = FacPoisson::new(hier.clone(), bc);
        let mut phi = CellField::new(hier.clone());
        phi.set_from_fn(|_| 3.7);
        let rhs = CellField::new(hier.clone());
        let stats = fac.solve(&mut phi, &rhs, 1e-10, 20);
        assert!(stats.final_residual <= 1e-10 * 1.0_f64.max(stats.initial_residual));
        // Mean pinned to zero.
        assert!(fac.mean_valid(&phi).abs() < 1e-12);
    }

    #[test]
    fn manufactured_solution_second_order() {
        // phi = cos(2 pi x) cos(2 pi y), homogeneous Neumann, mean zero.
        let mut errs = Vec::new();
        for n in [16_i64, 32] {
            let hier = uniform_hier(n);
            let bc = BoundaryConditionSet::all_walls(2);
            let fac = FacPoisson::new(hier.clone(), bc);
            let k = 2.0 * std::f64::consts::PI;
            let mut rhs = CellField::new(hier.clone());
            rhs.set_from_fn(|x| -2.0 * k * k * (k * x[0]).cos() * (k * x[1]).cos());
            let mut phi = CellField::new(hier.clone());
            let stats = fac.solve(&mut phi, &rhs, 1e-11, 60);
            assert!(
                stats.final_residual <= 1e-10 * stats.initial_residual.max(1.0),
                "{stats:?}"
            );
            let h = hier.levels[0].h;
            let mut err2 = 0.0;
            for c in hier.levels[0].boxes[0].iter() {
                let x = crate::geom::cell_center(c, h, 2);
                let want = (k * x[0]).cos() * (k * x[1]).cos();
                let d = phi.patches[0][0].at(c) - want;
                err2 += d * d * h * h;
            }
            errs.push(err2.sqrt());
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.85, "MMS order {order}: {errs:?}");
    }

    #[test]
    fn composite_two_level_solve_converges() {
        let d = DomainGeometry::new(2, [1.0, 1.0, 0.0], [16, 16, 1]).unwrap();
        let fine = IndexBox::new_2d([8, 8], [23, 23]).unwrap();
        let hier = Arc::new(
            PatchHierarchy::build(d, vec![vec![d.domain_box()], vec![fine]], 2).unwrap(),
        );
        let mut bc = BoundaryConditionSet::all_walls(2);
        bc.specs[0][0] = super::super::bc::FaceSpec::uniform(BcKind::OpenZeroPressure);
        let fac = FacPoisson::new(hier.clone(), bc);
        let mut rhs = CellField::new(hier.clone());
        rhs.set_from_fn(|x| x[0] - x[1] * x[1]);
        let mut phi = CellField::new(hier.clone());
        let stats = fac.solve(&mut phi, &rhs, 1e-10, 60);
        assert!(
            stats.final_residual <= 1e-9 * stats.initial_residual.max(1.0),
            "composite solve stalled: {stats:?}"
        );
    }

    #[test]
    fn periodic_poisson_solves() {
        let hier = uniform_hier(32);
        let bc = BoundaryConditionSet::all_periodic(2);
        let fac = FacPoisson::new(hier.clone(), bc);
        let k = 2.0 * std::f64::consts::PI;
        let mut rhs = CellField::new(hier.clone());
        rhs.set_from_fn(|x| (k * x[0]).sin() * (k * x[1]).cos());
        let mut phi = CellField::new(hier.clone());
        let stats = fac.solve(&mut phi, &rhs, 1e-10, 40);
        assert!(stats.final_residual <= 1e-9 * stats.initial_residual.max(1.0), "{stats:?}");
    }
}
