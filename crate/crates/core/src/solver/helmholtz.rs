//! Face-centered Helmholtz subsolver: (rho/dt) I - (mu/2) Lap.
//!
//! The operator is well conditioned at the flows and timestep sizes of
//! interest, so plain conjugate gradient suffices; as a preconditioner
//! component exactly two iterations are applied from a zero guess.

use std::sync::Arc;

use crate::composite::{composite_laplacian_face, sync_face_cubic};
use crate::error::{Error, Result};
use crate::field::{CellField, FaceField};
use crate::hierarchy::PatchHierarchy;

use super::bc::{BoundaryConditionSet, PhysicalBcFill};
use super::vectors::{axpy, dot, StokesPacking};

pub struct HelmholtzOp {
    pub hier: Arc<PatchHierarchy>,
    pub bc: BoundaryConditionSet,
    pub rho: f64,
    pub mu: f64,
    pub dt: f64,
    packing: Arc<StokesPacking>,
    u: FaceField,
    lap: FaceField,
}

impl HelmholtzOp {
    pub fn new(
        hier: Arc<PatchHierarchy>,
        bc: BoundaryConditionSet,
        packing: Arc<StokesPacking>,
        rho: f64,
        mu: f64,
        dt: f64,
    ) -> Result<Self> {
        if rho <= 0.0 || dt <= 0.0 || mu < 0.0 {
            return Err(Error::Config(
                "Helmholtz operator needs rho > 0, dt > 0, mu >= 0 (else not SPD)".into(),
            ));
        }
        Ok(HelmholtzOp {
            u: FaceField::new(hier.clone()),
            lap: FaceField::with_ghost(hier.clone(), 1),
            hier,
            bc,
            packing,
            rho,
            mu,
            dt,
        })
    }

    /// y = (rho/dt) x - (mu/2) Lap x on packed face vectors, with identity
    /// rows (scaled by rho/dt) at solid-wall boundary faces.
    pub fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        let sc = self.rho / self.dt;
        self.u.fill(0.0);
        self.packing.unpack_faces(x, &mut self.u);
        let fill = PhysicalBcFill::homogeneous(&self.bc);
        sync_face_cubic(&mut self.u, &fill);
        composite_laplacian_face(&self.u, &mut self.lap);
        let dim = self.hier.dim();
        for l in 0..self.hier.num_levels() {
            for (pi, pbox) in self.hier.levels[l].boxes.iter().enumerate() {
                for a in 0..dim {
                    for f in pbox.face_box(a).iter() {
                        let v = sc * self.u.patches[l][pi][a].at(f)
                            - 0.5 * self.mu * self.lap.patches[l][pi][a].at(f);
                        self.u.patches[l][pi][a].set(f, v);
                    }
                }
            }
        }
        self.packing.pack_faces(&self.u, y);
        for &row in &self.packing.wall_rows {
            y[row as usize] = sc * x[row as usize];
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Conjugate gradient on the packed face system, run either for a fixed
/// iteration count (preconditioner mode, `tol = 0`) or to a residual
/// reduction `tol` relative to |b|.
pub fn cg_faces(
    op: &mut HelmholtzOp,
    b: &[f64],
    x: &mut [f64],
    max_iters: usize,
    tol_rel: f64,
) -> CgStats {
    let n = b.len();
    let mut r = vec![0.0; n];
    let mut q = vec![0.0; n];
    op.apply(x, &mut q);
    for i in 0..n {
        r[i] = b[i] - q[i];
    }
    let bnorm = dot(b, b).sqrt().max(f64::MIN_POSITIVE);
    let mut rr = dot(&r, &r);
    if rr.sqrt() <= tol_rel * bnorm {
        return CgStats { iterations: 0, residual: rr.sqrt() };
    }
    let mut p = r.clone();
    let mut iters = 0;
    for _ in 0..max_iters {
        op.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            break; // loss of positive definiteness; bail with best iterate
        }
        let alpha = rr / pq;
        axpy(alpha, &p, x);
        axpy(-alpha, &q, &mut r);
        let rr_new = dot(&r, &r);
        iters += 1;
        if rr_new.sqrt() <= tol_rel * bnorm {
            rr = rr_new;
            break;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    CgStats { iterations: iters, residual: rr.sqrt() }
}

/// Standalone face Helmholtz solve to tolerance. `rhs` and the returned
/// solution live on the faces of `op`'s hierarchy.
pub fn helmholtz_solve_face(
    op: &mut HelmholtzOp,
    rhs: &FaceField,
    tol_rel: f64,
    max_iters: usize,
) -> (FaceField, CgStats) {
    let packing = op.packing.clone();
    let mut b = vec![0.0; packing.n_faces];
    packing.pack_faces(rhs, &mut b);
    let sc = op.rho / op.dt;
    for &row in &packing.wall_rows {
        b[row as usize] = 0.0;
    }
    let _ = sc;
    let mut x = vec![0.0; packing.n_faces];
    let stats = cg_faces(op, &b, &mut x, max_iters, tol_rel);
    let mut out = FaceField::new(op.hier.clone());
    packing.unpack_faces(&x, &mut out);
    (out, stats)
}

/// Standalone composite Poisson solve (see `FacPoisson` for the policy).
pub fn poisson_solve_cell(
    fac: &super::poisson::FacPoisson,
    rhs: &CellField,
    tol_rel: f64,
    max_cycles: usize,
) -> (CellField, super::poisson::PoissonStats) {
    let mut phi = CellField::new(rhs.hier.clone());
    let stats = fac.solve(&mut phi, rhs, tol_rel, max_cycles);
    (phi, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::DomainGeometry;

    fn setup(n: i64, mu: f64) -> (Arc<PatchHierarchy>, BoundaryConditionSet, HelmholtzOp) {
        let hier = Arc::new(PatchHierarchy::uniform(
            DomainGeometry::new(2, [1.0, 1.0, 0.0], [n, n, 1]).unwrap(),
        ));
        let bc = BoundaryConditionSet::all_walls(2);
        let packing = Arc::new(StokesPacking::build(&hier, &bc));
        let op =
            HelmholtzOp::new(hier.clone(), bc.clone(), packing, 1.0, mu, 0.01).unwrap();
        (hier, bc, op)
    }

    #[test]
    fn zero_viscosity_is_diagonal_scaling() {
        let (hier, _bc, mut op) = setup(8, 0.0);
        let mut rhs = FaceField::new(hier.clone());
        rhs.set_from_fn(|x, a| if a == 0 { x[0] + 0.3 } else { -x[1] });
        let (sol, stats) = helmholtz_solve_face(&mut op, &rhs, 1e-12, 10);
        assert!(stats.iterations <= 1, "diagonal system took {} iterations", stats.iterations);
        // Interior faces: u = (dt/rho) rhs.
        for f in hier.levels[0].boxes[0].face_box(0).grow(-1).iter() {
            let want = 0.01 * rhs.patches[0][0][0].at(f);
            assert!((sol.patches[0][0][0].at(f) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn manufactured_solution_second_order() {
        // u1 = sin(pi x) sin(pi y) vanishes on the boundary; solve
        // (rho/dt) u - (mu/2) lap u = f with the analytic f.
        let mut errs = Vec::new();
        for n in [16_i64, 32] {
            let hier = Arc::new(PatchHierarchy::uniform(
                DomainGeometry::new(2, [1.0, 1.0, 0.0], [n, n, 1]).unwrap(),
            ));
            let bc = BoundaryConditionSet::all_walls(2);
            let packing = Arc::new(StokesPacking::build(&hier, &bc));
            let (rho, mu, dt) = (1.2, 0.7, 0.05);
            let mut op = HelmholtzOp::new(hier.clone(), bc, packing, rho, mu, dt).unwrap();
            let pi_ = std::f64::consts::PI;
            let exact = move |x: [f64; 3]| (pi_ * x[0]).sin() * (pi_ * x[1]).sin();
            let mut rhs = FaceField::new(hier.clone());
            rhs.set_from_fn(|x, a| {
                if a == 0 {
                    (rho / dt) * exact(x) + 0.5 * mu * 2.0 * pi_ * pi_ * exact(x)
                } else {
                    0.0
                }
            });
            let (sol, stats) = helmholtz_solve_face(&mut op, &rhs, 1e-12, 500);
            assert!(stats.residual < 1e-9, "{stats:?}");
            let h = hier.levels[0].h;
            let mut e2 = 0.0;
            let mut cnt = 0;
            for f in hier.levels[0].boxes[0].face_box(0).iter() {
                let x = crate::geom::face_center(f, 0, h, 2);
                let d = sol.patches[0][0][0].at(f) - exact(x);
                e2 += d * d;
                cnt += 1;
            }
            errs.push((e2 / cnt as f64).sqrt());
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.85, "order {order}, errors {errs:?}");
    }

    #[test]
    fn invalid_parameters_rejected() {
        let hier = Arc::new(PatchHierarchy::uniform(
            DomainGeometry::new(2, [1.0, 1.0, 0.0], [8, 8, 1]).unwrap(),
        ));
        let bc = BoundaryConditionSet::all_walls(2);
        let packing = Arc::new(StokesPacking::build(&hier, &bc));
        assert!(HelmholtzOp::new(hier.clone(), bc.clone(), packing.clone(), 1.0, -0.1, 0.01)
            .is_err());
        assert!(HelmholtzOp::new(hier, bc, packing, 1.0, 0.1, 0.0).is_err());
    }
}
