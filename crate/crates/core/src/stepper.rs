//! The linear decoupled time stepper: phase-field step with the resolved
//! convective coupling and a mass-conserving Lagrange multiplier, viscous
//! step with skew advection and Navier slip, and a pressure-correction
//! projection, together with the per-step energy and mass diagnostics.

use crate::fem::{
    self, assemble_boundary_load, assemble_boundary_weighted_mass, assemble_convection_skew, assemble_load,
    assemble_load_vector, assemble_mass, assemble_stiffness, assemble_weighted_mass, boundary_integral, edge_value,
    tri_geom, Field, Space, TriGeom, EDGE_QP, N_TRI_QP, TRI_QP,
};
use crate::linalg::{self, bicgstab_solve, cg_op, cg_solve, BandedCholesky, CsrMatrix, LinOp, LinalgError, Preconditioner};
use crate::mesh::{Mesh, WallTag};
use crate::model::{surf_g, surf_g1, ModelError, PhysParams, StabSpec, Walls};
use std::cell::Cell;
use std::collections::BTreeSet;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StepError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{stage} solve failed: {source}")]
    Solver { stage: &'static str, source: LinalgError },
    #[error("degenerate mass constraint in the phase step (w^T d1 = {0:e})")]
    DegenerateConstraint(f64),
}

/// Discrete state at one time level.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub u: Field,
    pub p: Field,
    pub phi: Field,
    pub q: Field,
}

/// Per-step diagnostics: energy components, the terms of the discrete energy
/// law, mass, the Lagrange multiplier, and solver iteration counts.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepReport {
    pub xi: f64,
    pub e_kin: f64,
    pub e_grad: f64,
    pub e_q: f64,
    pub e_surf: f64,
    pub e_total: f64,
    pub grad_p_term: f64,
    pub d_visc: f64,
    pub d_phi: f64,
    pub d_slip: f64,
    pub energy_residual: f64,
    pub mass: f64,
    pub cg_iters_phase: usize,
    pub solver_iters_velocity: usize,
    pub cg_iters_projection: usize,
}

/// Inhomogeneous source terms (manufactured-solution support). All closures
/// receive the evaluation time (the scheme uses the end of the step) and the
/// physical point.
pub struct Forcing {
    /// Momentum body force.
    pub body: Box<dyn Fn(f64, [f64; 2]) -> [f64; 2] + Sync>,
    /// Phase-equation volume source.
    pub phase: Box<dyn Fn(f64, [f64; 2]) -> f64 + Sync>,
    /// Inhomogeneous Navier data: nu dn(u_tau) + l u_tau on the wall.
    pub slip: Box<dyn Fn(WallTag, f64, [f64; 2]) -> f64 + Sync>,
    /// Inhomogeneous contact-line data: eps dn(phi) + g'(phi) on the wall.
    pub sclc: Box<dyn Fn(WallTag, f64, [f64; 2]) -> f64 + Sync>,
}

/// Precomputed discrete operators for a fixed mesh pair and parameter set.
pub struct Stepper {
    pub params: PhysParams,
    pub walls: Walls,
    /// Resolved stabilization constant.
    pub s_stab: f64,
    pub p_space: Arc<Space>,
    pub u_space: Arc<Space>,
    pub f_space: Arc<Space>,
    pub solver_tol: f64,
    pub solver_maxit: usize,
    geoms: Vec<TriGeom>,
    grad_p: CsrMatrix,
    /// Preconditioner for the projection Schur complement: Cholesky of the
    /// coarse pressure stiffness (spectrally equivalent, one dof pinned to
    /// remove the constant nullspace).
    schur_precond: BandedCholesky,
    mass_phi: CsrMatrix,
    mass_phi_diag: Vec<f64>,
    stiff_phi: CsrMatrix,
    mass_u: CsrMatrix,
    /// Velocity mass with constrained rows/columns eliminated; used by the
    /// projection so constrained dofs never move.
    mass_u_elim: CsrMatrix,
    mass_u_elim_diag: Vec<f64>,
    stiff_u: CsrMatrix,
    /// Sum over walls of l_w times the tangential boundary mass.
    slip_mass: CsrMatrix,
    /// Boundary mass over walls with active contact-line terms.
    sclc_mass: CsrMatrix,
    sclc_walls: BTreeSet<WallTag>,
    slip_walls: BTreeSet<WallTag>,
    /// Integrals of the scalar basis functions (the mass functional).
    w_phi: Vec<f64>,
    w_p: Vec<f64>,
    area: f64,
}

impl Stepper {
    pub fn new(
        coarse: Arc<Mesh>,
        fine: Arc<Mesh>,
        params: PhysParams,
        walls: Walls,
        stab: StabSpec,
        solver_tol: f64,
        solver_maxit: usize,
    ) -> Result<Stepper, StepError> {
        params.validate()?;
        walls.validate()?;
        let s_stab = stab.resolve(&walls)?;
        let p_space = Space::scalar(coarse);
        let f_space = Space::scalar(fine.clone());
        let u_space = Space::velocity(fine.clone());
        let geoms: Vec<TriGeom> = (0..fine.n_triangles()).map(|t| tri_geom(&fine, t)).collect();
        let mass_phi = assemble_mass(&f_space);
        let stiff_phi = assemble_stiffness(&f_space, 1.0);
        let mass_u = assemble_mass(&u_space);
        let mut mass_u_elim = mass_u.clone();
        let mut scratch = vec![0.0; u_space.n_dof()];
        fem::apply_dirichlet(&mut mass_u_elim, &mut scratch, &u_space.constrained, &u_space.bc_values);
        let stiff_u = assemble_stiffness(&u_space, 1.0);
        let sclc_walls: BTreeSet<WallTag> =
            WallTag::ALL.iter().copied().filter(|&w| walls.get(w).active_sclc).collect();
        let slip_walls: BTreeSet<WallTag> =
            WallTag::ALL.iter().copied().filter(|&w| walls.get(w).slip_l > 0.0).collect();
        let slip_mass =
            assemble_boundary_weighted_mass(&u_space, &slip_walls, &|w, _, _, _| walls.get(w).slip_l);
        let sclc_mass = assemble_boundary_weighted_mass(&f_space, &sclc_walls, &|_, _, _, _| 1.0);
        let grad_p = fem::assemble_pressure_gradient(&p_space, &u_space);
        let mass_u_elim_diag = mass_u_elim.diagonal();
        let mut stiff_p = assemble_stiffness(&p_space, params.dt);
        // pin one dof so the Neumann stiffness factorizes
        let pin = stiff_p.max_abs();
        let (cols0, _) = stiff_p.row(0);
        let diag_pos = stiff_p.row_offsets[0] + cols0.binary_search(&0).expect("diagonal entry present");
        stiff_p.values[diag_pos] += pin;
        let schur_precond = BandedCholesky::new(&stiff_p)
            .map_err(|e| StepError::Solver { stage: "projection preconditioner", source: e })?;
        let w_phi = assemble_load(&f_space, &|_, _, _| 1.0);
        let w_p = assemble_load(&p_space, &|_, _, _| 1.0);
        let area = fine.total_area();
        Ok(Stepper {
            params,
            walls,
            s_stab,
            p_space,
            u_space,
            f_space,
            solver_tol,
            solver_maxit,
            geoms,
            grad_p,
            mass_phi_diag: mass_phi.diagonal(),
            mass_phi,
            stiff_phi,
            schur_precond,
            mass_u_elim_diag,
            mass_u_elim,
            mass_u,
            stiff_u,
            slip_mass,
            sclc_mass,
            sclc_walls,
            slip_walls,
            w_phi,
            w_p,
            area,
        })
    }

    /// State at t = 0 from an initial phase field: u = 0, p = 0,
    /// q = (phi^2 - 1)/eps nodewise.
    pub fn initial_state(&self, phi0: Field) -> SimState {
        let eps = self.params.eps;
        let q_values = phi0.values.iter().map(|&v| (v * v - 1.0) / eps).collect();
        SimState {
            t: 0.0,
            u: Field::zeros(self.u_space.clone()),
            p: Field::zeros(self.p_space.clone()),
            phi: Field { space: self.f_space.clone(), values: phi0.values },
            q: Field { space: self.f_space.clone(), values: q_values },
        }
    }

    /// The resolved coupling coefficient D = 1 / (1 + (lambda dt / M) |grad phi|^2).
    pub fn coupling_coefficient(&self, grad_phi_sq: f64) -> f64 {
        1.0 / (1.0 + self.params.lambda * self.params.dt / self.params.mobility * grad_phi_sq)
    }

    /// Per-triangle gradient of phi^n and coupling coefficient D.
    pub fn resolve_coupling(&self, phi: &Field) -> (Vec<[f64; 2]>, Vec<f64>) {
        let n_tri = self.f_space.mesh.n_triangles();
        let mut gphi = Vec::with_capacity(n_tri);
        let mut dcoef = Vec::with_capacity(n_tri);
        for t in 0..n_tri {
            let g = phi.grad_scalar(t, &self.geoms[t]);
            gphi.push(g);
            dcoef.push(self.coupling_coefficient(g[0] * g[0] + g[1] * g[1]));
        }
        (gphi, dcoef)
    }

    /// Step 1: phase field, auxiliary variable, and Lagrange multiplier.
    pub fn step_phase(
        &self,
        state: &SimState,
        gphi: &[[f64; 2]],
        dcoef: &[f64],
        forcing: Option<&Forcing>,
    ) -> Result<(Field, Field, f64, usize), StepError> {
        let PhysParams { eps, mobility: m, dt, .. } = self.params;
        let fs = &self.f_space;
        let mesh = &fs.mesh;
        let phi_n = &state.phi;
        let t_new = state.t + dt;

        let wm_d = assemble_weighted_mass(fs, &|t, _, _| dcoef[t]);
        let wm_phi2 = assemble_weighted_mass(fs, &|t, qi, _| {
            let v = phi_n.eval_scalar(t, TRI_QP[qi].0);
            v * v
        });
        let a = CsrMatrix::linear_combination(&[
            (1.0 / dt, &wm_d),
            (m * eps, &self.stiff_phi),
            (2.0 * m / eps, &wm_phi2),
            (m * self.s_stab, &self.sclc_mass),
        ]);

        // right-hand side of the weak form moved off the unknown increment
        let mut b = assemble_load(fs, &|t, qi, _| {
            let u = state.u.eval_vector(t, TRI_QP[qi].0);
            -dcoef[t] * (u[0] * gphi[t][0] + u[1] * gphi[t][1])
        });
        let k_phi = self.stiff_phi.mul(&phi_n.values);
        let bulk = assemble_load(fs, &|t, qi, _| {
            phi_n.eval_scalar(t, TRI_QP[qi].0) * state.q.eval_scalar(t, TRI_QP[qi].0)
        });
        let bnd = assemble_boundary_load(fs, &self.sclc_walls, &|w, e, qi, _| {
            let phi_w = edge_value(phi_n, &mesh.boundary_edges[e], EDGE_QP[qi].0);
            surf_g1(phi_w, self.walls.get(w).theta_s_rad())
        });
        for i in 0..fs.n_dof() {
            b[i] -= m * eps * k_phi[i] + m * bulk[i] + m * bnd[i];
        }
        if let Some(f) = forcing {
            let src = assemble_load(fs, &|_, _, xy| (f.phase)(t_new, xy));
            let all = BTreeSet::from(WallTag::ALL);
            let hb = assemble_boundary_load(fs, &all, &|w, _, _, xy| (f.sclc)(w, t_new, xy));
            for i in 0..fs.n_dof() {
                b[i] += src[i] + m * hb[i];
            }
        }
        let c: Vec<f64> = self.w_phi.iter().map(|&w| m * w).collect();

        let (d0, rep0) = cg_solve(&a, &b, self.solver_tol, self.solver_maxit, Preconditioner::Jacobi)
            .map_err(|e| StepError::Solver { stage: "phase", source: e })?;
        let (d1, rep1) = cg_solve(&a, &c, self.solver_tol, self.solver_maxit, Preconditioner::Jacobi)
            .map_err(|e| StepError::Solver { stage: "phase multiplier", source: e })?;
        let denom = linalg::dot(&self.w_phi, &d1);
        if !denom.is_finite() || denom.abs() < 1e-300 {
            return Err(StepError::DegenerateConstraint(denom));
        }
        let xi = linalg::dot(&self.w_phi, &d0) / denom;
        let d: Vec<f64> = d0.iter().zip(&d1).map(|(a0, a1)| a0 - xi * a1).collect();
        let phi_new = Field {
            space: fs.clone(),
            values: phi_n.values.iter().zip(&d).map(|(p, di)| p + di).collect(),
        };

        // weak update of q: M dq = (2/eps) (phi^n (phi^{n+1} - phi^n), psi)
        let dfield = Field { space: fs.clone(), values: d };
        let rhs_q = assemble_load(fs, &|t, qi, _| {
            2.0 / eps * phi_n.eval_scalar(t, TRI_QP[qi].0) * dfield.eval_scalar(t, TRI_QP[qi].0)
        });
        let (dq, rep_q) = cg_op(&self.mass_phi, &rhs_q, None, self.solver_tol, self.solver_maxit, Some(&self.mass_phi_diag))
            .map_err(|e| StepError::Solver { stage: "auxiliary variable", source: e })?;
        let q_new = Field {
            space: fs.clone(),
            values: state.q.values.iter().zip(&dq).map(|(q, dqi)| q + dqi).collect(),
        };
        Ok((phi_new, q_new, xi, rep0.iterations + rep1.iterations + rep_q.iterations))
    }

    /// The quadrature-point fields phidot and ustar of the resolved coupling.
    pub fn compute_phidot_ustar(
        &self,
        state: &SimState,
        phi_new: &Field,
        gphi: &[[f64; 2]],
        dcoef: &[f64],
    ) -> (Vec<f64>, Vec<[f64; 2]>) {
        let PhysParams { lambda, mobility: m, dt, .. } = self.params;
        let n_tri = self.f_space.mesh.n_triangles();
        let mut phidot = vec![0.0; n_tri * N_TRI_QP];
        let mut ustar = vec![[0.0; 2]; n_tri * N_TRI_QP];
        let c = lambda * dt / m;
        for t in 0..n_tri {
            for (qi, &(bary, _)) in TRI_QP.iter().enumerate() {
                let u = state.u.eval_vector(t, bary);
                let dphi = phi_new.eval_scalar(t, bary) - state.phi.eval_scalar(t, bary);
                let adv = u[0] * gphi[t][0] + u[1] * gphi[t][1];
                let pd = dcoef[t] * (dphi / dt + adv);
                phidot[t * N_TRI_QP + qi] = pd;
                ustar[t * N_TRI_QP + qi] = [u[0] - c * pd * gphi[t][0], u[1] - c * pd * gphi[t][1]];
            }
        }
        (phidot, ustar)
    }

    /// Step 2: intermediate velocity.
    pub fn step_velocity(
        &self,
        state: &SimState,
        ustar: &[[f64; 2]],
        forcing: Option<&Forcing>,
    ) -> Result<(Field, usize), StepError> {
        let PhysParams { nu, g0, dt, .. } = self.params;
        let us = &self.u_space;
        let t_new = state.t + dt;

        let conv = assemble_convection_skew(&state.u);
        let mut a = CsrMatrix::linear_combination(&[
            (1.0 / dt, &self.mass_u),
            (1.0, &conv),
            (nu, &self.stiff_u),
            (1.0, &self.slip_mass),
        ]);

        let mut b = assemble_load_vector(us, &|t, qi, _| {
            let v = ustar[t * N_TRI_QP + qi];
            [v[0] / dt, v[1] / dt]
        });
        let gp = self.grad_p.mul(&state.p.values);
        for i in 0..us.n_dof() {
            b[i] -= gp[i];
        }
        if g0 != 0.0 {
            let grav = assemble_load_vector(us, &|t, qi, _| [0.0, g0 * state.phi.eval_scalar(t, TRI_QP[qi].0)]);
            for i in 0..us.n_dof() {
                b[i] += grav[i];
            }
        }
        if self.walls.any_moving() {
            let all = BTreeSet::from(WallTag::ALL);
            let wall_drive = assemble_boundary_load(us, &all, &|w, _, _, _| {
                let spec = self.walls.get(w);
                spec.slip_l * spec.u_wall
            });
            for i in 0..us.n_dof() {
                b[i] += wall_drive[i];
            }
        }
        if let Some(f) = forcing {
            let body = assemble_load_vector(us, &|_, _, xy| (f.body)(t_new, xy));
            let all = BTreeSet::from(WallTag::ALL);
            let hs = assemble_boundary_load(us, &all, &|w, _, _, xy| (f.slip)(w, t_new, xy));
            for i in 0..us.n_dof() {
                b[i] += body[i] + hs[i];
            }
        }
        fem::apply_dirichlet(&mut a, &mut b, &us.constrained, &us.bc_values);
        let (x, rep) = bicgstab_solve(&a, &b, self.solver_tol, self.solver_maxit, Preconditioner::Jacobi)
            .map_err(|e| StepError::Solver { stage: "velocity", source: e })?;
        Ok((Field { space: us.clone(), values: x }, rep.iterations))
    }

    fn mass_u_solve(&self, rhs: &[f64], stage: &'static str) -> Result<(Vec<f64>, usize), StepError> {
        // inner solve tolerance sits below the outer Krylov tolerance so the
        // Schur operator behaves like an exact one
        let tol = (self.solver_tol * 0.1).max(1e-14);
        let (x, rep) = cg_op(&self.mass_u_elim, rhs, None, tol, self.solver_maxit, Some(&self.mass_u_elim_diag))
            .map_err(|e| StepError::Solver { stage, source: e })?;
        Ok((x, rep.iterations))
    }

    /// Step 3: projection onto discretely divergence-free fields and the
    /// pressure increment.
    pub fn step_project(&self, u_tilde: &Field, p_n: &Field) -> Result<(Field, Field, usize), StepError> {
        let dt = self.params.dt;
        let rhs = self.grad_p.mul_transpose(&u_tilde.values);
        let op = SchurOp { stepper: self, failed: Cell::new(None) };
        let prec = |r: &[f64], z: &mut [f64]| self.schur_precond.solve_into(r, z);
        let (psi, rep) = linalg::cg_prec_op(&op, &rhs, None, self.solver_tol, self.solver_maxit, &prec).map_err(|e| {
            if let Some(inner) = op.failed.take() {
                inner
            } else {
                StepError::Solver { stage: "projection", source: e }
            }
        })?;
        if let Some(inner) = op.failed.take() {
            return Err(inner);
        }
        let gpsi = self.grad_p.mul(&psi);
        let (w, _) = self.mass_u_solve(&gpsi, "projection velocity update")?;
        let u_new = Field {
            space: self.u_space.clone(),
            values: u_tilde.values.iter().zip(&w).map(|(ut, wi)| ut - dt * wi).collect(),
        };
        let mut p_values: Vec<f64> = p_n.values.iter().zip(&psi).map(|(p, ps)| p + ps).collect();
        let mean = linalg::dot(&self.w_p, &p_values) / self.area;
        for v in &mut p_values {
            *v -= mean;
        }
        Ok((u_new, Field { space: self.p_space.clone(), values: p_values }, rep.iterations))
    }

    /// Energy components of a state: kinetic, gradient, quadratized bulk, and
    /// wall energies, plus the total.
    pub fn compute_energy(&self, u: &Field, phi: &Field, q: &Field) -> (f64, f64, f64, f64, f64) {
        let PhysParams { lambda, eps, .. } = self.params;
        let mesh = &self.f_space.mesh;
        let e_kin = 0.5 * fem::l2_norm(u).powi(2);
        let mut grad_sq = 0.0;
        for t in 0..mesh.n_triangles() {
            let g = phi.grad_scalar(t, &self.geoms[t]);
            grad_sq += self.geoms[t].area * (g[0] * g[0] + g[1] * g[1]);
        }
        let e_grad = 0.5 * lambda * eps * grad_sq;
        let e_q = 0.25 * lambda * eps * fem::l2_norm(q).powi(2);
        let e_surf = lambda
            * boundary_integral(mesh, &self.sclc_walls, &|w, e, qi, _| {
                let phi_w = edge_value(phi, &mesh.boundary_edges[e], EDGE_QP[qi].0);
                surf_g(phi_w, self.walls.get(w).theta_s_rad())
            });
        (e_kin, e_grad, e_q, e_surf, e_kin + e_grad + e_q + e_surf)
    }

    /// The pressure term of the energy law: (dt^2/2) (Gp)^T M^{-1} (Gp).
    pub fn grad_p_term(&self, p: &Field) -> Result<f64, StepError> {
        let gp = self.grad_p.mul(&p.values);
        let (z, _) = self.mass_u_solve(&gp, "pressure energy term")?;
        Ok(0.5 * self.params.dt * self.params.dt * linalg::dot(&gp, &z))
    }

    /// Discrete divergence of a velocity field (for tests and diagnostics).
    pub fn discrete_divergence(&self, u: &Field) -> Vec<f64> {
        self.grad_p.mul_transpose(&u.values)
    }

    pub fn mass_of(&self, phi: &Field) -> f64 {
        linalg::dot(&self.w_phi, &phi.values)
    }

    /// One full step; returns the new state and the diagnostics, including the
    /// residual of the discrete energy law.
    pub fn advance(&self, state: &SimState, forcing: Option<&Forcing>) -> Result<(SimState, StepReport), StepError> {
        let PhysParams { nu, lambda, mobility: m, dt, .. } = self.params;
        let mesh = &self.f_space.mesh;
        let (gphi, dcoef) = self.resolve_coupling(&state.phi);
        let (phi_new, q_new, xi, it_phase) = self.step_phase(state, &gphi, &dcoef, forcing)?;
        let (phidot, ustar) = self.compute_phidot_ustar(state, &phi_new, &gphi, &dcoef);
        let (u_tilde, it_vel) = self.step_velocity(state, &ustar, forcing)?;
        let (u_new, p_new, it_proj) = self.step_project(&u_tilde, &state.p)?;

        let (e_kin0, e_grad0, e_q0, e_surf0, e_tot0) = self.compute_energy(&state.u, &state.phi, &state.q);
        let _ = (e_kin0, e_grad0, e_q0, e_surf0);
        let gp_old = self.grad_p_term(&state.p)?;
        let (e_kin, e_grad, e_q, e_surf, e_total) = self.compute_energy(&u_new, &phi_new, &q_new);
        let gp_new = self.grad_p_term(&p_new)?;

        let mut visc_sq = 0.0;
        for t in 0..mesh.n_triangles() {
            let g = u_tilde.grad_vector(t, &self.geoms[t]);
            visc_sq += self.geoms[t].area
                * (g[0][0] * g[0][0] + g[0][1] * g[0][1] + g[1][0] * g[1][0] + g[1][1] * g[1][1]);
        }
        let d_visc = dt * nu * visc_sq;
        let mut pd_sq = 0.0;
        for t in 0..mesh.n_triangles() {
            for (qi, &(_, wq)) in TRI_QP.iter().enumerate() {
                let v = phidot[t * N_TRI_QP + qi];
                pd_sq += wq * self.geoms[t].area * v * v;
            }
        }
        let d_phi = dt * lambda / m * pd_sq;
        let d_slip = dt
            * boundary_integral(mesh, &self.slip_walls, &|w, e, qi, _| {
                let spec = self.walls.get(w);
                let be = &mesh.boundary_edges[e];
                let comp = w.tangential_component();
                let tq = EDGE_QP[qi].0;
                let ut = (1.0 - tq) * u_tilde.values[2 * be.nodes[0] + comp]
                    + tq * u_tilde.values[2 * be.nodes[1] + comp];
                let s = ut - spec.u_wall;
                spec.slip_l * s * s
            });
        let energy_residual = (e_total + gp_new + d_visc + d_phi + d_slip) - (e_tot0 + gp_old);
        let report = StepReport {
            xi,
            e_kin,
            e_grad,
            e_q,
            e_surf,
            e_total,
            grad_p_term: gp_new,
            d_visc,
            d_phi,
            d_slip,
            energy_residual,
            mass: self.mass_of(&phi_new),
            cg_iters_phase: it_phase,
            solver_iters_velocity: it_vel,
            cg_iters_projection: it_proj,
        };
        let new_state = SimState { t: state.t + dt, u: u_new, p: p_new, phi: phi_new, q: q_new };
        Ok((new_state, report))
    }
}

/// Matrix-free pressure Schur complement dt G^T M^{-1} G.
struct SchurOp<'a> {
    stepper: &'a Stepper,
    failed: Cell<Option<StepError>>,
}

impl LinOp for SchurOp<'_> {
    fn dim(&self) -> usize {
        self.stepper.p_space.n_dof()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let gx = self.stepper.grad_p.mul(x);
        match self.stepper.mass_u_solve(&gx, "projection inner mass") {
            Ok((z, _)) => {
                let gtz = self.stepper.grad_p.mul_transpose(&z);
                for (yi, v) in y.iter_mut().zip(gtz) {
                    *yi = self.stepper.params.dt * v;
                }
            }
            Err(e) => {
                // surface the inner failure through the outer solve
                self.failed.set(Some(e));
                y.copy_from_slice(x);
            }
        }
    }
}
