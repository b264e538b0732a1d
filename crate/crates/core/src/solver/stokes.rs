//! The unsplit time-discrete incompressible Stokes system and its solver.
//!
//! One timestep couples velocity and pressure through the block system
//!
//! ```text
//!   [ rho/dt I - mu/2 Lap   Grad ] [u]   [b_u]
//!   [ -Div                  0    ] [p] = [ 0 ]
//! ```
//!
//! solved by FGMRES with the projection method as preconditioner: an
//! approximate velocity solve (two CG iterations), a scaled divergence, an
//! approximate pressure Poisson solve (one FAC V-cycle), and the coupled
//! velocity/pressure update. Because the Krylov method drives the unsplit
//! residual to tolerance, no splitting error survives and boundary
//! conditions act on the true system.
//!
//! Solid-wall boundary faces are retained as unknowns with momentum rows
//! replaced by scaled identities, which keeps the operator square and the
//! preconditioner blocks well-posed.

use std::sync::Arc;

use crate::composite::{
    composite_divergence, composite_gradient, composite_laplacian_face, sync_cell,
    sync_face_conservative, sync_face_cubic, FaceBc,
};
use crate::error::{Error, Result};
use crate::field::{CellField, FaceField};
use crate::hierarchy::PatchHierarchy;

use super::bc::{BcValues, BoundaryConditionSet, PhysicalBcFill};
use super::fgmres::{fgmres, FgmresOptions, Operator, Preconditioner};
use super::helmholtz::{cg_faces, HelmholtzOp};
use super::poisson::FacPoisson;
use super::vectors::StokesPacking;

#[derive(Clone, Copy, Debug)]
pub struct StokesOptions {
    pub tol_rel: f64,
    pub restart: usize,
    pub max_iters: usize,
    /// CG iterations in the velocity subsolve of the preconditioner.
    pub precond_cg_iters: usize,
    /// FAC V-cycles in the pressure subsolve of the preconditioner.
    pub precond_vcycles: usize,
    /// When > 0, run the preconditioner subsolves to this tolerance instead
    /// of the fixed iteration counts (verification mode).
    pub exact_subsolve_tol: f64,
}

impl Default for StokesOptions {
    fn default() -> Self {
        StokesOptions {
            tol_rel: 1e-8,
            restart: 30,
            max_iters: 200,
            precond_cg_iters: 2,
            precond_vcycles: 1,
            exact_subsolve_tol: 0.0,
        }
    }
}

pub struct StokesSystem {
    pub hier: Arc<PatchHierarchy>,
    pub bc: BoundaryConditionSet,
    pub rho: f64,
    pub mu: f64,
    pub dt: f64,
    pub packing: Arc<StokesPacking>,
    pub fac: FacPoisson,
}

impl StokesSystem {
    pub fn new(
        hier: Arc<PatchHierarchy>,
        bc: BoundaryConditionSet,
        rho: f64,
        mu: f64,
        dt: f64,
    ) -> Result<Self> {
        if rho <= 0.0 {
            return Err(Error::Config(format!("density must be positive, got {rho}")));
        }
        if mu < 0.0 {
            return Err(Error::Config(format!("viscosity must be nonnegative, got {mu}")));
        }
        if dt <= 0.0 {
            return Err(Error::Config(format!("timestep must be positive, got {dt}")));
        }
        bc.validate()?;
        let packing = Arc::new(StokesPacking::build(&hier, &bc));
        let fac = FacPoisson::new(hier.clone(), bc.clone());
        Ok(StokesSystem { hier, bc, rho, mu, dt, packing, fac })
    }

    pub fn scaling(&self) -> f64 {
        self.rho / self.dt
    }
}

/// Apply the Stokes block operator to fields in place (they are
/// synchronized as a side effect), producing the momentum and continuity
/// residual fields. `keep_dofs` selects the Krylov-operator ghost
/// convention; state applications pass false.
pub fn apply_stokes_operator(
    sys: &StokesSystem,
    u: &mut FaceField,
    p: &mut CellField,
    values: BcValues,
    out_m: &mut FaceField,
    out_c: &mut CellField,
    lap: &mut FaceField,
    grad: &mut FaceField,
) {
    let fill = PhysicalBcFill { set: &sys.bc, values };
    let sc = sys.scaling();
    let dim = sys.hier.dim();

    sync_face_cubic(u, &fill);
    composite_laplacian_face(u, lap);
    sync_cell(p, &fill);
    composite_gradient(p, grad);

    for l in 0..sys.hier.num_levels() {
        for (pi, pbox) in sys.hier.levels[l].boxes.iter().enumerate() {
            for a in 0..dim {
                for f in pbox.face_box(a).iter() {
                    let v = sc * u.patches[l][pi][a].at(f)
                        - 0.5 * sys.mu * lap.patches[l][pi][a].at(f)
                        + grad.patches[l][pi][a].at(f);
                    out_m.patches[l][pi][a].set(f, v);
                }
            }
        }
    }

    sync_face_conservative(u);
    composite_divergence(u, out_c);
    for l in 0..sys.hier.num_levels() {
        for pi in 0..sys.hier.levels[l].boxes.len() {
            for v in out_c.patches[l][pi].data_mut() {
                *v = -*v;
            }
        }
    }
}

/// Packed Krylov view of the Stokes operator.
pub struct PackedStokesOp<'a> {
    pub sys: &'a StokesSystem,
    pub values: BcValues,
    u: FaceField,
    p: CellField,
    om: FaceField,
    oc: CellField,
    lap: FaceField,
    grad: FaceField,
}

impl<'a> PackedStokesOp<'a> {
    pub fn new(sys: &'a StokesSystem, values: BcValues) -> Self {
        PackedStokesOp {
            u: FaceField::new(sys.hier.clone()),
            p: CellField::new(sys.hier.clone()),
            om: FaceField::new(sys.hier.clone()),
            oc: CellField::new(sys.hier.clone()),
            lap: FaceField::with_ghost(sys.hier.clone(), 1),
            grad: FaceField::with_ghost(sys.hier.clone(), 1),
            sys,
            values,
        }
    }
}

impl Operator for PackedStokesOp<'_> {
    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        let packing = &self.sys.packing;
        packing.unpack(x, &mut self.u, &mut self.p);
        apply_stokes_operator(
            self.sys,
            &mut self.u,
            &mut self.p,
            self.values,
            &mut self.om,
            &mut self.oc,
            &mut self.lap,
            &mut self.grad,
        );
        packing.pack(&self.om, &self.oc, y);
        let sc = self.sys.scaling();
        for &row in &packing.wall_rows {
            y[row as usize] = sc * x[row as usize];
        }
    }
}

/// The projection-method preconditioner B ~ A^-1: velocity subsolve, scaled
/// divergence, Poisson subsolve, then the coupled pressure/velocity update
///
/// ```text
///   u* = H^-1 r_u;  phi = (Div Grad)^-1 (r_p + Div u*);
///   u  = u* - Grad phi;  p = (rho/dt) phi - (mu/2) Div Grad phi.
/// ```
pub struct ProjectionPrecond<'a> {
    sys: &'a StokesSystem,
    helm: HelmholtzOp,
    opts: StokesOptions,
    uf: FaceField,
    grad: FaceField,
    phi: CellField,
    rhs_c: CellField,
    div: CellField,
    pout: CellField,
}

impl<'a> ProjectionPrecond<'a> {
    pub fn new(sys: &'a StokesSystem, opts: StokesOptions) -> Self {
        let helm = HelmholtzOp::new(
            sys.hier.clone(),
            sys.bc.clone(),
            sys.packing.clone(),
            sys.rho,
            sys.mu,
            sys.dt,
        )
        .expect("system parameters validated at construction");
        ProjectionPrecond {
            uf: FaceField::new(sys.hier.clone()),
            grad: FaceField::new(sys.hier.clone()),
            phi: CellField::new(sys.hier.clone()),
            rhs_c: CellField::new(sys.hier.clone()),
            div: CellField::new(sys.hier.clone()),
            pout: CellField::new(sys.hier.clone()),
            sys,
            helm,
            opts,
        }
    }
}

impl Preconditioner for ProjectionPrecond<'_> {
    fn apply(&mut self, r: &[f64], z: &mut [f64]) {
        let packing = self.sys.packing.clone();
        let nf = packing.n_faces;
        let (r_u, r_p) = r.split_at(nf);
        let sc = self.sys.scaling();

        // Velocity subsolve.
        let mut ustar = vec![0.0; nf];
        if self.opts.exact_subsolve_tol > 0.0 {
            cg_faces(&mut self.helm, r_u, &mut ustar, 10_000, self.opts.exact_subsolve_tol);
        } else {
            cg_faces(&mut self.helm, r_u, &mut ustar, self.opts.precond_cg_iters, 0.0);
        }
        for &row in &packing.wall_rows {
            ustar[row as usize] = r_u[row as usize] / sc;
        }

        // Pressure Poisson right-hand side: r_p + Div u*. The unpacked field
        // needs wall/periodic closure before its divergence is meaningful.
        packing.unpack_faces(&ustar, &mut self.uf);
        let fill = PhysicalBcFill::homogeneous(&self.sys.bc);
        for l in 0..self.sys.hier.num_levels() {
            fill.fill_face_physical(&mut self.uf, l);
        }
        sync_face_conservative(&mut self.uf);
        composite_divergence(&self.uf, &mut self.div);
        let mut tmp = vec![0.0; packing.n_cells];
        packing.pack_cells_only(&self.div, &mut tmp);
        for (t, rp) in tmp.iter_mut().zip(r_p) {
            *t += rp;
        }
        self.rhs_c.fill(0.0);
        packing.unpack_cells_only(&tmp, &mut self.rhs_c);

        // Poisson subsolve from a zero guess.
        self.phi.fill(0.0);
        if self.opts.exact_subsolve_tol > 0.0 {
            self.sys.fac.solve(&mut self.phi, &self.rhs_c, self.opts.exact_subsolve_tol, 500);
        } else {
            for _ in 0..self.opts.precond_vcycles {
                self.sys.fac.vcycle(&mut self.phi, &self.rhs_c);
            }
        }

        // Coupled update: u = u* - Grad phi, p = (rho/dt - mu/2 DivGrad) phi.
        sync_cell(&mut self.phi, &fill);
        composite_gradient(&self.phi, &mut self.grad);
        let dim = self.sys.hier.dim();
        for l in 0..self.sys.hier.num_levels() {
            for (pi, pbox) in self.sys.hier.levels[l].boxes.iter().enumerate() {
                for a in 0..dim {
                    for f in pbox.face_box(a).iter() {
                        let v = self.uf.patches[l][pi][a].at(f)
                            - self.grad.patches[l][pi][a].at(f);
                        self.uf.patches[l][pi][a].set(f, v);
                    }
                }
            }
        }
        sync_face_conservative(&mut self.grad);
        composite_divergence(&self.grad, &mut self.div);
        for l in 0..self.sys.hier.num_levels() {
            for (pi, pbox) in self.sys.hier.levels[l].boxes.iter().enumerate() {
                for c in pbox.iter() {
                    let v = sc * self.phi.patches[l][pi].at(c)
                        - 0.5 * self.sys.mu * self.div.patches[l][pi].at(c);
                    self.pout.patches[l][pi].set(c, v);
                }
            }
        }
        packing.pack(&self.uf, &self.pout, z);
        for &row in &packing.wall_rows {
            z[row as usize] = r_u[row as usize] / sc;
        }
    }
}

#[derive(Debug, Clone)]
pub struct StokesSolveStats {
    pub iterations: usize,
    pub residual: f64,
    pub rhs_scale: f64,
    pub converged: bool,
    pub max_divergence: f64,
}

/// Solve the time-discrete Stokes system for (u, p) with boundary pressure
/// values fixed at `values`. `u`/`p` enter as the initial approximation and
/// leave holding the solution. The momentum right-hand side carries all
/// explicit terms (Crank-Nicolson half-Laplacian, advection, spread force).
pub fn solve_stokes(
    sys: &StokesSystem,
    rhs_m: &FaceField,
    u: &mut FaceField,
    p: &mut CellField,
    values: BcValues,
    opts: &StokesOptions,
) -> Result<StokesSolveStats> {
    let packing = sys.packing.clone();
    let n = packing.len();
    let mut b = vec![0.0; n];
    let zero_p = CellField::new(sys.hier.clone());
    packing.pack(rhs_m, &zero_p, &mut b);
    for &row in &packing.wall_rows {
        b[row as usize] = 0.0;
    }

    // Affine pieces: scale = |b - A(0)|, r0 = b - A(x0).
    let mut op_affine = PackedStokesOp::new(sys, values);
    let mut x0 = vec![0.0; n];
    packing.pack(u, p, &mut x0);
    let mut ax = vec![0.0; n];
    let zero = vec![0.0; n];
    op_affine.apply(&zero, &mut ax);
    let mut scale = 0.0;
    for i in 0..n {
        let v = b[i] - ax[i];
        scale += v * v;
    }
    let scale = scale.sqrt();
    op_affine.apply(&x0, &mut ax);
    let mut r0 = vec![0.0; n];
    for i in 0..n {
        r0[i] = b[i] - ax[i];
    }

    if scale == 0.0 && super::vectors::norm(&r0) == 0.0 {
        return Ok(StokesSolveStats {
            iterations: 0,
            residual: 0.0,
            rhs_scale: 0.0,
            converged: true,
            max_divergence: 0.0,
        });
    }

    let mut op = PackedStokesOp::new(sys, BcValues::default());
    let mut precond = ProjectionPrecond::new(sys, *opts);
    let mut delta = vec![0.0; n];
    let tol_abs = opts.tol_rel * scale.max(f64::MIN_POSITIVE);
    let res = fgmres(
        &mut op,
        &mut precond,
        &r0,
        &mut delta,
        &FgmresOptions { tol_abs, restart: opts.restart, max_iters: opts.max_iters },
    );

    for i in 0..n {
        x0[i] += delta[i];
    }
    packing.unpack(&x0, u, p);

    // Pure-Neumann pressure: pin the mean.
    if !sys.bc.any_pressure() {
        let mut mean = 0.0;
        let mut count = 0.0;
        let dim = sys.hier.dim();
        for l in 0..sys.hier.num_levels() {
            let w = sys.hier.levels[l].h.powi(dim as i32);
            for (pi, pbox) in sys.hier.levels[l].boxes.iter().enumerate() {
                for c in pbox.iter() {
                    if sys.hier.cell_is_valid(l, pi, c) {
                        mean += w * p.patches[l][pi].at(c);
                        count += w;
                    }
                }
            }
        }
        let mean = mean / count;
        for l in 0..sys.hier.num_levels() {
            for pi in 0..sys.hier.levels[l].boxes.len() {
                for v in p.patches[l][pi].data_mut() {
                    *v -= mean;
                }
            }
        }
    }

    // Resulting divergence over valid cells.
    let fill = PhysicalBcFill::with_values(&sys.bc, values);
    sync_face_cubic(u, &fill);
    sync_face_conservative(u);
    let mut div = CellField::with_ghost(sys.hier.clone(), 1);
    composite_divergence(u, &mut div);
    let max_div = div.max_abs_valid();

    Ok(StokesSolveStats {
        iterations: res.iterations,
        residual: res.residual,
        rhs_scale: scale,
        converged: res.converged,
        max_divergence: max_div,
    })
}
