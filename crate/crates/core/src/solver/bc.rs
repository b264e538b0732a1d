//! Physical boundary conditions on the outer domain boundary.
//!
//! Three condition kinds appear in the model: solid walls (homogeneous
//! velocity Dirichlet; no pressure condition permitted), prescribed-pressure
//! boundaries (normal traction plus zero tangential slip, which pins the
//! boundary pressure pointwise), and the zero-pressure open boundary. A
//! periodic variant exists for verification runs on single-level grids.
//!
//! Discretely: at a wall the normal velocity lives on the boundary face and
//! is held at zero, tangential ghosts reflect oddly for no-slip, and
//! pressure ghosts reflect evenly. At a pressure boundary the ghost pressure
//! is set so the face-centered gradient sees the prescribed value at the
//! wall (odd reflection about P), the normal-velocity ghost copies its
//! mirror (d u_n / d n = 0 from incompressibility plus zero slip), and
//! tangential ghosts again reflect oddly.

use crate::circulation::{BoundaryRegion, MMHG_TO_BARYE};
use crate::composite::{CellBc, FaceBc};
use crate::error::{Error, Result};
use crate::field::{CellField, FaceField};

#[derive(Clone, Copy, PartialEq, Debug)]
pub enum PressureSource {
    /// Fixed pressure in mmHg.
    Constant(f64),
    /// The driving (left-ventricular) pressure P_LV(t).
    Upstream,
    /// The circulation-model loading pressure P_Ao(t).
    Downstream,
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub enum BcKind {
    SolidWall,
    PrescribedPressure(PressureSource),
    OpenZeroPressure,
    Periodic,
}

/// Boundary condition layout for one face of the domain box: a default kind
/// plus optional rectangular overrides (level-0 cell coordinates transverse
/// to the face; first matching region wins).
#[derive(Clone, Debug)]
pub struct FaceSpec {
    pub default: BcKind,
    pub regions: Vec<(BoundaryRegion, BcKind)>,
}

impl FaceSpec {
    pub fn uniform(kind: BcKind) -> Self {
        FaceSpec { default: kind, regions: Vec::new() }
    }
}

/// Conditions for all 2d faces of the domain: `specs[axis][side]`, side 0 is
/// the low face.
#[derive(Clone, Debug)]
pub struct BoundaryConditionSet {
    pub dim: usize,
    pub specs: [[FaceSpec; 2]; 3],
}

/// Concrete pressure values (in barye) for the time-dependent sources; zero
/// for homogeneous operator application.
#[derive(Clone, Copy, Debug, Default)]
pub struct BcValues {
    pub upstream: f64,
    pub downstream: f64,
}

impl BcValues {
    pub fn from_mmhg(p_lv: f64, p_ao: f64) -> Self {
        BcValues { upstream: p_lv * MMHG_TO_BARYE, downstream: p_ao * MMHG_TO_BARYE }
    }
}

impl BoundaryConditionSet {
    pub fn all_walls(dim: usize) -> Self {
        BoundaryConditionSet {
            dim,
            specs: std::array::from_fn(|_| {
                [FaceSpec::uniform(BcKind::SolidWall), FaceSpec::uniform(BcKind::SolidWall)]
            }),
        }
    }

    pub fn all_periodic(dim: usize) -> Self {
        BoundaryConditionSet {
            dim,
            specs: std::array::from_fn(|_| {
                [FaceSpec::uniform(BcKind::Periodic), FaceSpec::uniform(BcKind::Periodic)]
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for a in 0..self.dim {
            let lo = &self.specs[a][0];
            let hi = &self.specs[a][1];
            let lo_periodic = lo.default == BcKind::Periodic;
            let hi_periodic = hi.default == BcKind::Periodic;
            if lo_periodic != hi_periodic {
                return Err(Error::Config(format!(
                    "axis {a}: periodic conditions must pair on opposite faces"
                )));
            }
            if lo_periodic && (!lo.regions.is_empty() || !hi.regions.is_empty()) {
                return Err(Error::Config(format!(
                    "axis {a}: periodic faces cannot carry region overrides"
                )));
            }
        }
        Ok(())
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        self.specs[axis][0].default == BcKind::Periodic
    }

    pub fn any_pressure(&self) -> bool {
        let check = |k: &BcKind| {
            matches!(k, BcKind::PrescribedPressure(_) | BcKind::OpenZeroPressure)
        };
        (0..self.dim).any(|a| {
            (0..2).any(|s| {
                check(&self.specs[a][s].default)
                    || self.specs[a][s].regions.iter().any(|(_, k)| check(k))
            })
        })
    }

    /// Kind at a transverse position given in level-0 cell coordinates.
    pub fn kind_at(&self, axis: usize, high: bool, level0_idx: [i64; 3]) -> BcKind {
        let spec = &self.specs[axis][high as usize];
        for (rect, kind) in &spec.regions {
            let mut inside = true;
            for t in 0..self.dim {
                if t == axis {
                    continue;
                }
                if level0_idx[t] < rect.lo[t] || level0_idx[t] > rect.hi[t] {
                    inside = false;
                    break;
                }
            }
            if inside {
                return *kind;
            }
        }
        spec.default
    }

    fn pressure_value(&self, kind: BcKind, values: &BcValues) -> f64 {
        match kind {
            BcKind::PrescribedPressure(PressureSource::Constant(mmhg)) => mmhg * MMHG_TO_BARYE,
            BcKind::PrescribedPressure(PressureSource::Upstream) => values.upstream,
            BcKind::PrescribedPressure(PressureSource::Downstream) => values.downstream,
            BcKind::OpenZeroPressure => 0.0,
            _ => 0.0,
        }
    }
}

/// Ghost filler implementing the discrete boundary conditions; `values` are
/// zero for the homogeneous (Krylov operator) variant. Wall faces are reset
/// to zero, which also decouples their scaled-identity momentum rows from
/// the interior equations (keeping the velocity block symmetric).
pub struct PhysicalBcFill<'a> {
    pub set: &'a BoundaryConditionSet,
    pub values: BcValues,
}

impl<'a> PhysicalBcFill<'a> {
    pub fn homogeneous(set: &'a BoundaryConditionSet) -> Self {
        PhysicalBcFill { set, values: BcValues::default() }
    }

    pub fn with_values(set: &'a BoundaryConditionSet, values: BcValues) -> Self {
        PhysicalBcFill { set, values }
    }
}

/// Transverse iteration extents for the side-fill pass of `axis`: ghost
/// corners are covered by the highest-axis pass that reaches them, reading
/// mirror values already filled by earlier passes.
fn pass_box(
    interior: crate::geom::IndexBox,
    axis: usize,
    ghost: i64,
    dim: usize,
) -> crate::geom::IndexBox {
    let mut b = interior;
    for t in 0..dim {
        if t < axis {
            b.lo[t] -= ghost;
            b.hi[t] += ghost;
        }
    }
    b
}

fn level0_coords(idx: [i64; 3], ratio: i64, domain: &crate::geom::IndexBox) -> [i64; 3] {
    let mut c = [0_i64; 3];
    for a in 0..3 {
        c[a] = idx[a].div_euclid(ratio).clamp(domain.lo[a], domain.hi[a]);
    }
    c
}

/// Wrap `idx` into the level domain along every periodic axis.
fn wrap_periodic(
    set: &BoundaryConditionSet,
    idx: [i64; 3],
    periods: &[i64; 3],
    dim: usize,
) -> [i64; 3] {
    let mut w = idx;
    for a in 0..dim {
        if set.is_periodic(a) {
            w[a] = w[a].rem_euclid(periods[a]);
        }
    }
    w
}

/// Read a cell value at `idx` from any patch of `level`, falling back to
/// ghost entries (already filled by an earlier axis pass) at mixed
/// periodic/wall corners.
fn read_cell_wrapped(f: &CellField, level: usize, idx: [i64; 3]) -> f64 {
    for (pi, b) in f.hier.levels[level].boxes.iter().enumerate() {
        if b.contains(idx) {
            return f.patches[level][pi].at(idx);
        }
    }
    for pi in 0..f.hier.levels[level].boxes.len() {
        if f.patches[level][pi].ghost_box().contains(idx) {
            return f.patches[level][pi].at(idx);
        }
    }
    panic!("periodic wrap target {idx:?} not covered on level {level}");
}

fn read_face_wrapped(u: &FaceField, level: usize, axis: usize, idx: [i64; 3]) -> f64 {
    for (pi, b) in u.hier.levels[level].boxes.iter().enumerate() {
        if b.face_box(axis).contains(idx) {
            return u.patches[level][pi][axis].at(idx);
        }
    }
    for pi in 0..u.hier.levels[level].boxes.len() {
        if u.patches[level][pi][axis].ghost_box().contains(idx) {
            return u.patches[level][pi][axis].at(idx);
        }
    }
    panic!("periodic wrap target face {idx:?} not covered on level {level}");
}

impl CellBc for PhysicalBcFill<'_> {
    fn fill_cell_physical(&self, f: &mut CellField, level: usize) {
        let hier = f.hier.clone();
        let dim = hier.dim();
        let ghost = f.ghost;
        let domain = hier.levels[level].index_domain;
        let dom0 = hier.domain.domain_box();
        let ratio = hier.cumulative_ratio(level);
        let periods: [i64; 3] = std::array::from_fn(|a| domain.shape()[a]);
        for pi in 0..hier.levels[level].boxes.len() {
            let pbox = hier.levels[level].boxes[pi];
            for axis in 0..dim {
                for side in 0..2 {
                    let at_boundary = if side == 0 {
                        pbox.lo[axis] == domain.lo[axis]
                    } else {
                        pbox.hi[axis] == domain.hi[axis]
                    };
                    if !at_boundary {
                        continue;
                    }
                    let slab_base = pass_box(pbox, axis, ghost, dim);
                    for m in 1..=ghost {
                        let row = if side == 0 { pbox.lo[axis] - m } else { pbox.hi[axis] + m };
                        let mut slab = slab_base;
                        slab.lo[axis] = row;
                        slab.hi[axis] = row;
                        for g in slab.iter() {
                            let kind = self.set.kind_at(
                                axis,
                                side == 1,
                                level0_coords(g, ratio, &dom0),
                            );
                            let mut mirror = g;
                            mirror[axis] = if side == 0 {
                                pbox.lo[axis] + m - 1
                            } else {
                                pbox.hi[axis] - m + 1
                            };
                            let v = match kind {
                                BcKind::SolidWall => f.patches[level][pi].at(mirror),
                                BcKind::PrescribedPressure(_) | BcKind::OpenZeroPressure => {
                                    let p = self.set.pressure_value(kind, &self.values);
                                    2.0 * p - f.patches[level][pi].at(mirror)
                                }
                                BcKind::Periodic => {
                                    let w = wrap_periodic(self.set, g, &periods, dim);
                                    read_cell_wrapped(f, level, w)
                                }
                            };
                            f.patches[level][pi].set(g, v);
                        }
                    }
                }
            }
        }
    }
}

impl FaceBc for PhysicalBcFill<'_> {
    fn fill_face_physical(&self, u: &mut FaceField, level: usize) {
        let hier = u.hier.clone();
        let dim = hier.dim();
        let ghost = u.ghost;
        let domain = hier.levels[level].index_domain;
        let dom0 = hier.domain.domain_box();
        let ratio = hier.cumulative_ratio(level);
        let periods: [i64; 3] = std::array::from_fn(|a| domain.shape()[a]);
        for pi in 0..hier.levels[level].boxes.len() {
            let pbox = hier.levels[level].boxes[pi];
            for axis in 0..dim {
                for side in 0..2 {
                    let at_boundary = if side == 0 {
                        pbox.lo[axis] == domain.lo[axis]
                    } else {
                        pbox.hi[axis] == domain.hi[axis]
                    };
                    if !at_boundary {
                        continue;
                    }
                    for comp in 0..dim {
                        let fb = pbox.face_box(comp);
                        let slab_base = pass_box(fb, axis, ghost, dim);
                        if comp == axis {
                            // Normal component: boundary face plane plus ghosts.
                            let plane = if side == 0 { fb.lo[axis] } else { fb.hi[axis] };
                            for m in 0..=ghost {
                                let row = if side == 0 { plane - m } else { plane + m };
                                let mut slab = slab_base;
                                slab.lo[axis] = row;
                                slab.hi[axis] = row;
                                for g in slab.iter() {
                                    let kind = self.set.kind_at(
                                        axis,
                                        side == 1,
                                        level0_coords(g, ratio, &dom0),
                                    );
                                    let mut mirror = g;
                                    mirror[axis] = if side == 0 { plane + m } else { plane - m };
                                    let v = match kind {
                                        BcKind::SolidWall => {
                                            if m == 0 {
                                                0.0
                                            } else {
                                                -u.patches[level][pi][comp].at(mirror)
                                            }
                                        }
                                        BcKind::PrescribedPressure(_)
                                        | BcKind::OpenZeroPressure => {
                                            if m == 0 {
                                                continue; // boundary face is a DOF
                                            }
                                            u.patches[level][pi][comp].at(mirror)
                                        }
                                        BcKind::Periodic => {
                                            if m == 0 && side == 0 {
                                                continue; // low plane owns the DOF
                                            }
                                            let w = wrap_periodic(self.set, g, &periods, dim);
                                            read_face_wrapped(u, level, comp, w)
                                        }
                                    };
                                    u.patches[level][pi][comp].set(g, v);
                                }
                            }
                        } else {
                            // Tangential component: ghost rows with odd
                            // reflection for no-slip (all non-periodic kinds).
                            for m in 1..=ghost {
                                let row = if side == 0 {
                                    pbox.lo[axis] - m
                                } else {
                                    pbox.hi[axis] + m
                                };
                                let mut slab = slab_base;
                                slab.lo[axis] = row;
                                slab.hi[axis] = row;
                                for g in slab.iter() {
                                    let kind = self.set.kind_at(
                                        axis,
                                        side == 1,
                                        level0_coords(g, ratio, &dom0),
                                    );
                                    let mut mirror = g;
                                    mirror[axis] = if side == 0 {
                                        pbox.lo[axis] + m - 1
                                    } else {
                                        pbox.hi[axis] - m + 1
                                    };
                                    let v = match kind {
                                        BcKind::Periodic => {
                                            let w = wrap_periodic(self.set, g, &periods, dim);
                                            read_face_wrapped(u, level, comp, w)
                                        }
                                        _ => -u.patches[level][pi][comp].at(mirror),
                                    };
                                    u.patches[level][pi][comp].set(g, v);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}
