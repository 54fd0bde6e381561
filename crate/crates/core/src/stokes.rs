//! Nonlinear solvers for the inertia-free (Stokes-type) flow problems.
//!
//! Discrete unknowns are the homogeneous velocity v (zero on wall dofs, the
//! boundary data carried by a lifting ũ) and the pressure p.  The mixed
//! system is
//!   N(v) − Bᵀp = f,   B(ũ + v) = 0,
//! where N collects the nonlinear viscous operators of the constitutive
//! model, B is the divergence matrix against the pressure space, and f the
//! assembled body-force/traction loads.  Solvers: monolithic damped Newton
//! on the saddle system, augmented Lagrangian (Uzawa) outer iteration,
//! Birger–Kachanov frozen-coefficient steps, a preconditioned Richardson
//! (contraction) iteration with computable rate, a least-squares gradient
//! fallback, and λ-continuation toward the limit yield-stress solution.

use std::time::Instant;

use crate::assemble::{
    assemble_divdiv, assemble_divergence, assemble_mass, assemble_strain_gram,
    assemble_traction_load, assemble_volume_load, norm_l2, norm_x,
};
use crate::error::{Error, Result};
use crate::mesh::BoundaryTag;
use crate::operators::{EField, OperatorContext, OperatorKind};
use crate::space::FeSpace;
use crate::sparse::{dot, norm2, power_method, LuFactor, SparseMatrix, Triplets};
use crate::viscosity::{MuFunction, ViscosityModel};

/// Inner linearization used by the outer iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerMethod {
    /// Frozen-coefficient fixed point (linear solve per step).
    BirgerKachanov,
    /// Preconditioned Richardson iteration with contraction-rate control.
    Contraction,
    /// Damped Newton on the (quasi-Newton) tangent.
    Newton,
    /// Least-squares gradient descent fallback.
    Gradient,
}

/// Preconditioner choice for the contraction iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    /// Component-wise Laplacian; block-diagonal, one scalar factorization
    /// reused for both components.
    VectorLaplacian,
    /// The strain-rate Gram matrix itself (exact X-norm).
    StrainGram,
}

/// Solver parameters shared by all schemes.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Augmentation weight r > 0.
    pub r: f64,
    /// Pressure step ρ of the augmented Lagrangian update (must satisfy
    /// 0 < ρ < 2r).
    pub rho: f64,
    /// Contraction step; `None` resolves to the optimal t₀.
    pub t: Option<f64>,
    /// Strictly decreasing positive λ values for continuation.
    pub lambda_schedule: Vec<f64>,
    /// Velocity-increment stopping tolerance.
    pub tol_velocity: f64,
    /// ‖div v‖ stopping tolerance.
    pub tol_divergence: f64,
    /// Dual-norm residual stopping tolerance.
    pub tol_residual: f64,
    /// Outer-iteration cap.
    pub max_outer: usize,
    /// Inner-iteration cap.
    pub max_inner: usize,
    /// Inner linearization.
    pub inner_method: InnerMethod,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            r: 1.0,
            rho: 1.0,
            t: None,
            lambda_schedule: vec![1e-2, 1e-3, 1e-4, 1e-5],
            tol_velocity: 1e-10,
            tol_divergence: 1e-10,
            tol_residual: 1e-10,
            max_outer: 200,
            max_inner: 60,
            inner_method: InnerMethod::Newton,
        }
    }
}

impl SolverConfig {
    /// Checks the admissibility constraints on the parameters.
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0) {
            return Err(Error::InvalidConfig("augmentation weight r must be positive".into()));
        }
        if !(self.rho > 0.0 && self.rho < 2.0 * self.r) {
            return Err(Error::InvalidConfig(format!(
                "pressure step rho = {} must lie in (0, 2r) = (0, {})",
                self.rho,
                2.0 * self.r
            )));
        }
        for w in self.lambda_schedule.windows(2) {
            if !(w[1] > 0.0 && w[1] < w[0]) {
                return Err(Error::InvalidConfig(
                    "lambda schedule must be strictly positive and strictly decreasing".into(),
                ));
            }
        }
        if let Some(&l) = self.lambda_schedule.first() {
            if !(l > 0.0) {
                return Err(Error::InvalidConfig("lambda values must be positive".into()));
            }
        }
        Ok(())
    }
}

/// One outer-iteration record.
#[derive(Debug, Clone, Copy)]
pub struct IterRecord {
    /// ‖div v‖_{L₂} of the total velocity.
    pub div_norm: f64,
    /// Dual-norm momentum residual.
    pub residual: f64,
    /// L₂ norm of the pressure increment.
    pub p_increment: f64,
}

/// Diagnostics of one solve.
#[derive(Debug, Clone, Default)]
pub struct SolverReport {
    /// Per-outer-iteration measurements, as taken.
    pub iterations: Vec<IterRecord>,
    /// (q₁, q₂, q₃, t₀, k₀) when the contraction method was used.
    pub constants: Option<(f64, f64, f64, f64, f64)>,
    /// Whether the tolerances were met.
    pub converged: bool,
    /// Wall-clock seconds.
    pub wall_time: f64,
    /// Free-form diagnostics.
    pub notes: Vec<String>,
    /// Pressure iterates (augmented Lagrangian only).
    pub p_history: Vec<Vec<f64>>,
}

/// Velocity and pressure of a solved flow problem; `v` is the total
/// velocity (lifting included).
#[derive(Debug, Clone)]
pub struct FlowState {
    /// Total velocity dof vector.
    pub v: Vec<f64>,
    /// Pressure dof vector.
    pub p: Vec<f64>,
}

/// A divergence-free extension of the boundary velocity data.
#[derive(Debug, Clone)]
pub struct LiftingField {
    /// Velocity dof vector matching the boundary data on wall dofs.
    pub u: Vec<f64>,
    /// Weak divergence norm ‖Bũ‖ actually achieved.
    pub div_norm: f64,
}

/// Load data for the momentum equation.
#[derive(Default)]
pub struct Loads<'a> {
    /// Body force K(x).
    pub body: Option<&'a dyn Fn([f64; 2]) -> [f64; 2]>,
    /// Surface traction F(x) on traction edges.
    pub traction: Option<&'a dyn Fn([f64; 2]) -> [f64; 2]>,
    /// Pre-assembled extra dual vector (e.g. electric forces).
    pub extra: Option<&'a [f64]>,
}

impl<'a> Loads<'a> {
    /// Assembles the dual vector (K,h) + (F,h) + extra.
    pub fn assemble(&self, v_space: &FeSpace) -> Vec<f64> {
        let mut f = vec![0.0; v_space.n_dofs()];
        if let Some(k) = self.body {
            for (a, b) in f.iter_mut().zip(assemble_volume_load(v_space, k)) {
                *a += b;
            }
        }
        if let Some(tr) = self.traction {
            let load =
                assemble_traction_load(v_space, &|t| t == BoundaryTag::Traction, &|x, _| tr(x));
            for (a, b) in f.iter_mut().zip(load) {
                *a += b;
            }
        }
        if let Some(extra) = self.extra {
            assert_eq!(extra.len(), f.len());
            for (a, b) in f.iter_mut().zip(extra) {
                *a += b;
            }
        }
        f
    }
}

/// The operators making up N(v) for each model variant.
fn model_kinds(model: &ViscosityModel) -> Result<Vec<OperatorKind>> {
    Ok(match model {
        ViscosityModel::Regular(_) => vec![OperatorKind::L],
        ViscosityModel::RegularizedBingham { lambda, .. } => {
            if *lambda <= 0.0 {
                return Err(Error::InvalidConfig(
                    "flow solvers need lambda > 0 for yield-stress models".into(),
                ));
            }
            vec![OperatorKind::L, OperatorKind::DJLambda]
        }
        ViscosityModel::SingularBingham { .. } => {
            return Err(Error::InvalidConfig(
                "the unregularized Bingham model cannot be solved directly; use a \
                 lambda > 0 regularization with continuation"
                    .into(),
            ));
        }
        ViscosityModel::ExtendedBingham { lambda, .. } => {
            if *lambda <= 0.0 {
                return Err(Error::InvalidConfig(
                    "flow solvers need lambda > 0 for yield-stress models".into(),
                ));
            }
            vec![OperatorKind::L1, OperatorKind::DJLambda]
        }
        ViscosityModel::GivenMu { lambda, .. } => {
            if *lambda <= 0.0 {
                return Err(Error::InvalidConfig(
                    "flow solvers need lambda > 0 for yield-stress models".into(),
                ));
            }
            vec![OperatorKind::L2, OperatorKind::DYLambda]
        }
    })
}

/// Shared assembled context of one flow problem.
pub struct FlowProblem<'a> {
    /// Constitutive model.
    pub model: &'a ViscosityModel,
    /// Direction-factor configuration.
    pub mu_fn: &'a MuFunction,
    /// Electric field.
    pub e_field: EField<'a>,
    /// Velocity space.
    pub v_space: &'a FeSpace,
    /// Pressure space.
    pub p_space: &'a FeSpace,
    /// Lifting ũ.
    pub lifting: &'a [f64],
    /// Assembled load dual vector.
    pub f: Vec<f64>,
    /// Extra linear operator added to the momentum equation (e.g. frozen
    /// convection); enters residual as `E v` and the tangent as `E`.
    pub extra_linear: Option<SparseMatrix>,
    kinds: Vec<OperatorKind>,
    pub(crate) free: Vec<usize>,
    pub(crate) b: SparseMatrix,
    divdiv: SparseMatrix,
    /// Projected grad-div Bᵀ M_lumped⁻¹ B: vanishes exactly on weakly
    /// divergence-free fields, so augmented fixed points match the mixed
    /// solution.
    d_al: SparseMatrix,
    mp_lumped: Vec<f64>,
    m_p: SparseMatrix,
    gram_lu: LuFactor,
    traction_empty: bool,
}

/// Bᵀ diag(w)⁻¹ B for the lumped pressure mass weights `w`.
fn projected_graddiv(b: &SparseMatrix, w: &[f64]) -> SparseMatrix {
    let mut t = Triplets::new(b.ncols, b.ncols);
    for i in 0..b.nrows {
        let inv = 1.0 / w[i];
        let range = b.indptr[i]..b.indptr[i + 1];
        for k in range.clone() {
            for l in range.clone() {
                t.push(b.indices[k], b.indices[l], inv * b.values[k] * b.values[l]);
            }
        }
    }
    t.into_csr()
}

impl<'a> FlowProblem<'a> {
    /// Assembles the shared matrices of the problem.
    pub fn new(
        model: &'a ViscosityModel,
        mu_fn: &'a MuFunction,
        e_field: EField<'a>,
        v_space: &'a FeSpace,
        p_space: &'a FeSpace,
        lifting: &'a [f64],
        loads: &Loads,
    ) -> Result<Self> {
        assert_eq!(lifting.len(), v_space.n_dofs());
        let kinds = model_kinds(model)?;
        let free = crate::infsup::free_velocity_dofs(v_space);
        if free.is_empty() {
            return Err(Error::InvalidMesh("no unconstrained velocity dofs".into()));
        }
        let gram = assemble_strain_gram(v_space).restrict(&free);
        let b = assemble_divergence(v_space, p_space)?;
        let m_p = assemble_mass(p_space);
        let mp_lumped: Vec<f64> = (0..m_p.nrows)
            .map(|i| m_p.values[m_p.indptr[i]..m_p.indptr[i + 1]].iter().sum())
            .collect();
        let d_al = projected_graddiv(&b, &mp_lumped);
        Ok(FlowProblem {
            model,
            mu_fn,
            e_field,
            v_space,
            p_space,
            lifting,
            f: loads.assemble(v_space),
            extra_linear: None,
            kinds,
            free,
            b,
            divdiv: assemble_divdiv(v_space),
            d_al,
            mp_lumped,
            m_p,
            gram_lu: LuFactor::new(&gram)?,
            traction_empty: !v_space.mesh.boundary_edges.iter().any(|e| !e.tag.is_wall()),
        })
    }

    fn ctx(&self, kind: OperatorKind) -> OperatorContext<'_> {
        OperatorContext {
            kind,
            model: self.model,
            mu_fn: self.mu_fn,
            space: self.v_space,
            lifting: self.lifting,
            e_field: self.e_field,
            frozen: None,
        }
    }

    /// N(v): sum of the model's operator residuals, plus any extra linear
    /// operator.
    pub fn n_residual(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut r = vec![0.0; self.v_space.n_dofs()];
        for &k in &self.kinds {
            for (a, b) in r.iter_mut().zip(self.ctx(k).residual(v)?) {
                *a += b;
            }
        }
        if let Some(e) = &self.extra_linear {
            for (a, b) in r.iter_mut().zip(e.matvec(v)) {
                *a += b;
            }
        }
        Ok(r)
    }

    /// Tangent of N at v (direction factors frozen at the state).
    pub fn n_tangent(&self, v: &[f64]) -> Result<SparseMatrix> {
        let mut t: Option<SparseMatrix> = None;
        for &k in &self.kinds {
            let tk = self.ctx(k).tangent(v)?;
            t = Some(match t {
                None => tk,
                Some(acc) => add_sparse(&acc, &tk),
            });
        }
        let mut t = t.unwrap();
        if let Some(e) = &self.extra_linear {
            t = add_sparse(&t, e);
        }
        Ok(t)
    }

    pub(crate) fn total(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(self.lifting).map(|(a, b)| a + b).collect()
    }

    /// Weak divergence norm ‖B(ũ+v)‖ (the residual of the discrete
    /// incompressibility constraint).
    pub fn div_norm(&self, v: &[f64]) -> f64 {
        norm2(&self.b.matvec(&self.total(v)))
    }

    /// Pointwise ‖div(ũ+v)‖_{L₂}; for Taylor–Hood this only vanishes up to
    /// the discretization error.
    pub fn div_l2(&self, v: &[f64]) -> f64 {
        let t = self.total(v);
        dot(&t, &self.divdiv.matvec(&t)).max(0.0).sqrt()
    }

    /// Dual X-norm of a momentum residual restricted to the free dofs.
    pub fn dual_norm(&self, r: &[f64]) -> f64 {
        let rf: Vec<f64> = self.free.iter().map(|&d| r[d]).collect();
        dot(&rf, &self.gram_lu.solve(&rf)).max(0.0).sqrt()
    }

    /// Momentum residual N(v) − Bᵀp − f.
    pub fn momentum_residual(&self, v: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.n_residual(v)?;
        let btp = self.b.matvec_transpose(p);
        for i in 0..r.len() {
            r[i] -= btp[i] + self.f[i];
        }
        Ok(r)
    }

    /// M_lumped⁻¹ B (ũ+v): the pressure-space representation of div v, with
    /// the same lumped mass as the augmentation so the dual update is stable
    /// for 0 < ρ < 2r.
    fn div_pressure(&self, v: &[f64]) -> Result<Vec<f64>> {
        let bv = self.b.matvec(&self.total(v));
        Ok(bv.iter().zip(&self.mp_lumped).map(|(x, m)| x / m).collect())
    }
}

/// Entrywise sum of two CSR matrices of equal shape.
pub(crate) fn add_sparse(a: &SparseMatrix, b: &SparseMatrix) -> SparseMatrix {
    assert_eq!((a.nrows, a.ncols), (b.nrows, b.ncols));
    let mut t = Triplets::new(a.nrows, a.ncols);
    for m in [a, b] {
        for r in 0..m.nrows {
            for k in m.indptr[r]..m.indptr[r + 1] {
                t.push(r, m.indices[k], m.values[k]);
            }
        }
    }
    t.into_csr()
}

/// Dof layout of the saddle system: free velocity dofs, then pressure, then
/// (walls only) the mean-pressure multiplier.
struct SaddleLayout {
    vmap: Vec<usize>,
    nf: usize,
    np: usize,
    gauged: bool,
    gauge: Vec<f64>,
}

impl SaddleLayout {
    fn new(p: &FlowProblem) -> Self {
        let mut vmap = vec![usize::MAX; p.v_space.n_dofs()];
        for (i, &d) in p.free.iter().enumerate() {
            vmap[d] = i;
        }
        let np = p.p_space.n_dofs();
        // gauge row: (q, 1)_{L₂} per pressure basis function
        let ones = vec![1.0; np];
        let gauge = p.m_p.matvec(&ones);
        SaddleLayout { vmap, nf: p.free.len(), np, gauged: p.traction_empty, gauge }
    }

    fn size(&self) -> usize {
        self.nf + self.np + usize::from(self.gauged)
    }

    /// Assembles [T  −Bᵀ; B  0] (+ gauge border) over the free dofs.
    fn matrix(&self, p: &FlowProblem, t: &SparseMatrix) -> SparseMatrix {
        let n = self.size();
        let mut tri = Triplets::new(n, n);
        for r in 0..t.nrows {
            let rr = self.vmap[r];
            if rr == usize::MAX {
                continue;
            }
            for k in t.indptr[r]..t.indptr[r + 1] {
                let cc = self.vmap[t.indices[k]];
                if cc != usize::MAX {
                    tri.push(rr, cc, t.values[k]);
                }
            }
        }
        for r in 0..p.b.nrows {
            for k in p.b.indptr[r]..p.b.indptr[r + 1] {
                let cc = self.vmap[p.b.indices[k]];
                if cc != usize::MAX {
                    tri.push(self.nf + r, cc, p.b.values[k]); // B
                    tri.push(cc, self.nf + r, -p.b.values[k]); // −Bᵀ
                }
            }
        }
        if self.gauged {
            let g = self.nf + self.np;
            for j in 0..self.np {
                tri.push(g, self.nf + j, self.gauge[j]);
                tri.push(self.nf + j, g, self.gauge[j]);
            }
        }
        tri.into_csr()
    }

    fn pack(&self, p: &FlowProblem, rv: &[f64], rp: &[f64], pvec: &[f64]) -> Vec<f64> {
        let mut rhs = vec![0.0; self.size()];
        for (i, &d) in p.free.iter().enumerate() {
            rhs[i] = -rv[d];
        }
        for j in 0..self.np {
            rhs[self.nf + j] = -rp[j];
        }
        if self.gauged {
            rhs[self.nf + self.np] = -dot(&self.gauge, pvec);
        }
        rhs
    }
}

/// Damped Newton on the mixed saddle system. Returns (v, p, report).
pub(crate) fn newton_saddle(
    p: &FlowProblem,
    v0: Vec<f64>,
    p0: Vec<f64>,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, Vec<f64>, SolverReport)> {
    let start = Instant::now();
    let layout = SaddleLayout::new(p);
    let mut v = v0;
    let mut pr = p0;
    let mut report = SolverReport::default();
    let combined_norm = |rv: &[f64], rp: &[f64]| -> Result<f64> {
        let rvf: Vec<f64> = p.free.iter().map(|&d| rv[d]).collect();
        Ok((norm2(&rvf).powi(2) + norm2(rp).powi(2)).sqrt())
    };
    let mut rv = p.momentum_residual(&v, &pr)?;
    let mut rp = p.b.matvec(&p.total(&v));
    for _ in 0..cfg.max_outer {
        let dual = p.dual_norm(&rv);
        let divn = p.div_norm(&v);
        report.iterations.push(IterRecord { div_norm: divn, residual: dual, p_increment: 0.0 });
        if dual <= cfg.tol_residual && divn <= cfg.tol_divergence {
            report.converged = true;
            break;
        }
        let tangent = p.n_tangent(&v)?;
        let mat = layout.matrix(p, &tangent);
        let rhs = layout.pack(p, &rv, &rp, &pr);
        let lu = LuFactor::new(&mat).map_err(|e| {
            Error::NonlinearSolve(format!("singular saddle tangent: {e}"))
        })?;
        let delta = lu.solve(&rhs);
        let base = combined_norm(&rv, &rp)?;
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let mut vt = v.clone();
            for (i, &d) in p.free.iter().enumerate() {
                vt[d] += step * delta[i];
            }
            let mut pt = pr.clone();
            for j in 0..layout.np {
                pt[j] += step * delta[layout.nf + j];
            }
            let rvt = p.momentum_residual(&vt, &pt)?;
            let rpt = p.b.matvec(&p.total(&vt));
            if combined_norm(&rvt, &rpt)? <= base * (1.0 - 0.25 * step) + 1e-300 {
                let pinc: Vec<f64> = pt.iter().zip(&pr).map(|(a, b)| a - b).collect();
                report.iterations.last_mut().unwrap().p_increment =
                    norm_l2(p.p_space, &pinc);
                v = vt;
                pr = pt;
                rv = rvt;
                rp = rpt;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            report.notes.push("line search stalled".into());
            break;
        }
    }
    if !report.converged {
        let dual = p.dual_norm(&rv);
        let divn = p.div_norm(&v);
        if dual <= cfg.tol_residual && divn <= cfg.tol_divergence {
            report.converged = true;
        }
        report
            .iterations
            .push(IterRecord { div_norm: divn, residual: dual, p_increment: 0.0 });
    }
    report.wall_time = start.elapsed().as_secs_f64();
    Ok((v, pr, report))
}

/// Solves the mixed system by damped Newton. The returned state carries the
/// total velocity ũ + v.
pub fn solve_mixed(
    p: &FlowProblem,
    cfg: &SolverConfig,
) -> Result<(FlowState, SolverReport)> {
    cfg.validate()?;
    let v0 = vec![0.0; p.v_space.n_dofs()];
    let p0 = vec![0.0; p.p_space.n_dofs()];
    let (v, pr, report) = newton_saddle(p, v0, p0, cfg)?;
    if !report.converged {
        return Ok((FlowState { v: p.total(&v), p: pr }, report));
    }
    Ok((FlowState { v: p.total(&v), p: pr }, report))
}

/// Builds a weakly divergence-free lifting of the wall boundary data `u_hat`
/// by solving an auxiliary constant-viscosity Stokes problem with `u_hat` as
/// Dirichlet data.
pub fn build_lifting(
    v_space: &FeSpace,
    p_space: &FeSpace,
    u_hat: &dyn Fn([f64; 2]) -> [f64; 2],
) -> Result<LiftingField> {
    // compatibility: in the pure-Dirichlet case the boundary data must carry
    // no net flux
    let mesh = &v_space.mesh;
    let traction_empty = !mesh.boundary_edges.iter().any(|e| !e.tag.is_wall());
    if traction_empty {
        let mut flux = 0.0;
        let mut scale: f64 = 0.0;
        for edge in &mesh.boundary_edges {
            let a = mesh.nodes[edge.nodes[0]];
            let b = mesh.nodes[edge.nodes[1]];
            let tangent = [b[0] - a[0], b[1] - a[1]];
            let nu = [tangent[1], -tangent[0]]; // length-weighted outward normal
            for &(s, w) in crate::quadrature::edge_rule() {
                let x = [a[0] + s * tangent[0], a[1] + s * tangent[1]];
                let u = u_hat(x);
                flux += w * (u[0] * nu[0] + u[1] * nu[1]);
                scale = scale.max(w * (u[0].abs() + u[1].abs()));
            }
        }
        if flux.abs() > 1e-8 * scale.max(1.0) {
            return Err(Error::InvalidConfig(format!(
                "boundary data carries net flux {flux:.3e}; a divergence-free \
                 lifting needs zero total flux on a walled domain"
            )));
        }
    }
    // nodal extension of the data, zero in the interior
    let interp = v_space.interpolate_vector(u_hat);
    let wall = v_space.boundary_scalar_dofs(&|t| t.is_wall());
    let ns = v_space.n_scalar();
    let mut lift0 = vec![0.0; v_space.n_dofs()];
    for &s in &wall {
        lift0[s] = interp[s];
        lift0[ns + s] = interp[ns + s];
    }
    let model = ViscosityModel::Regular(crate::viscosity::RegularModel::constant(1.0));
    let mu_fn = MuFunction::default();
    let problem = FlowProblem::new(
        &model,
        &mu_fn,
        EField::Zero,
        v_space,
        p_space,
        &lift0,
        &Loads::default(),
    )?;
    let cfg = SolverConfig { tol_residual: 1e-12, tol_divergence: 1e-10, ..Default::default() };
    let (state, report) = solve_mixed(&problem, &cfg)?;
    if !report.converged {
        return Err(Error::NonlinearSolve(
            "auxiliary Stokes solve for the lifting did not converge".into(),
        ));
    }
    let div = norm2(&assemble_divergence(v_space, p_space)?.matvec(&state.v));
    Ok(LiftingField { u: state.v, div_norm: div })
}

/// Solves the velocity-only augmented problem
/// `N(v) + r·(div(ũ+v), div h) = (f + Bᵀp, h)` by damped Newton.
fn solve_inner_augmented(
    p: &FlowProblem,
    r_aug: f64,
    pvec: &[f64],
    v0: Vec<f64>,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    let mut v = v0;
    let residual = |v: &[f64]| -> Result<Vec<f64>> {
        let mut r = p.n_residual(v)?;
        let aug = p.d_al.matvec(&p.total(v));
        let btp = p.b.matvec_transpose(pvec);
        for i in 0..r.len() {
            r[i] += r_aug * aug[i] - btp[i] - p.f[i];
        }
        Ok(r)
    };
    let mut rv = residual(&v)?;
    // the augmented system scales with r, so the attainable dual residual does
    // too
    let tol = cfg.tol_residual * (1.0 + r_aug);
    for _ in 0..cfg.max_inner {
        if p.dual_norm(&rv) <= tol {
            return Ok(v);
        }
        let mut tangent = p.n_tangent(&v)?;
        // add r times the projected grad-div
        let mut scaled = p.d_al.clone();
        for x in &mut scaled.values {
            *x *= r_aug;
        }
        tangent = add_sparse(&tangent, &scaled);
        let tf = tangent.restrict(&p.free);
        let rf: Vec<f64> = p.free.iter().map(|&d| -rv[d]).collect();
        let lu = LuFactor::new(&tf)?;
        let delta = lu.solve(&rf);
        let base = norm2(&rf);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let mut vt = v.clone();
            for (i, &d) in p.free.iter().enumerate() {
                vt[d] += step * delta[i];
            }
            let rvt = residual(&vt)?;
            let nf = norm2(&p.free.iter().map(|&d| rvt[d]).collect::<Vec<_>>());
            if nf <= base * (1.0 - 0.25 * step) + 1e-300 {
                v = vt;
                rv = rvt;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // stagnation at roundoff level; accept if close enough below
            break;
        }
    }
    if p.dual_norm(&rv) <= tol * 100.0 {
        Ok(v)
    } else {
        Err(Error::NonlinearSolve("inner augmented solve did not converge".into()))
    }
}

/// Augmented Lagrangian (Uzawa) iteration: inner velocity solves of the
/// augmented problem alternate with the pressure update
/// `p_{m+1} = p_m − ρ M_p⁻¹ B v_{m+1}`.
pub fn augmented_lagrangian_solve(
    p: &FlowProblem,
    cfg: &SolverConfig,
    p0: Option<Vec<f64>>,
) -> Result<(FlowState, SolverReport)> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = SolverReport::default();
    let mut pvec = p0.unwrap_or_else(|| vec![0.0; p.p_space.n_dofs()]);
    let mut v = vec![0.0; p.v_space.n_dofs()];
    let mut prev_v: Option<Vec<f64>> = None;
    for _ in 0..cfg.max_outer {
        v = solve_inner_augmented(p, cfg.r, &pvec, v, cfg)?;
        let divp = p.div_pressure(&v)?;
        let pinc: Vec<f64> = divp.iter().map(|d| -cfg.rho * d).collect();
        for (a, b) in pvec.iter_mut().zip(&pinc) {
            *a += b;
        }
        let divn = p.div_norm(&v);
        let rv = p.momentum_residual(&v, &pvec)?;
        report.iterations.push(IterRecord {
            div_norm: divn,
            residual: p.dual_norm(&rv),
            p_increment: norm_l2(p.p_space, &pinc),
        });
        report.p_history.push(pvec.clone());
        let vinc = prev_v
            .as_ref()
            .map(|pv| {
                let d: Vec<f64> = v.iter().zip(pv).map(|(a, b)| a - b).collect();
                norm_x(p.v_space, &d)
            })
            .unwrap_or(f64::INFINITY);
        prev_v = Some(v.clone());
        if divn <= cfg.tol_divergence && vinc <= cfg.tol_velocity {
            report.converged = true;
            break;
        }
    }
    report.wall_time = start.elapsed().as_secs_f64();
    Ok((FlowState { v: p.total(&v), p: pvec }, report))
}

/// One Birger–Kachanov step: freeze the viscosity coefficients at `u_m` and
/// solve the resulting linear augmented system for `u_{m+1}`.
pub fn birger_kachanov_step(
    p: &FlowProblem,
    r_aug: f64,
    pvec: &[f64],
    u_m: &[f64],
) -> Result<Vec<f64>> {
    let (e, psi1, dpsi1, lambda) = match p.model {
        ViscosityModel::GivenMu { e, psi1, dpsi1, lambda, .. } => (e, psi1, dpsi1, lambda),
        _ => {
            return Err(Error::InvalidConfig(
                "the Birger-Kachanov step needs the anisotropic (given-mu) model".into(),
            ))
        }
    };
    // monotonicity advisory
    if let Some(d) = dpsi1 {
        let probe = [0.0, 0.1, 1.0, 10.0];
        if probe.iter().any(|&i| d(i, 1.0, [0.5, 0.5]) > 1e-12) {
            // increasing smooth part: convergence is not covered by theory
        }
    }
    let rule = crate::quadrature::triangle_rule_degree6();
    let nq = rule.len();
    let total = p.total(u_m);
    let mut weights = Vec::with_capacity(p.v_space.mesh.triangles.len() * nq);
    for el in 0..p.v_space.mesh.triangles.len() {
        let basis = crate::space::element_basis(p.v_space, el, rule);
        let edofs = p.v_space.element_dofs(el);
        for (iq, qp) in basis.iter().enumerate() {
            let ef = match p.e_field {
                EField::Zero => [0.0, 0.0],
                EField::Fn(f) => f(qp.x),
                EField::Quad(vals) => vals[el * nq + iq],
            };
            let abs_e = (ef[0] * ef[0] + ef[1] * ef[1]).sqrt();
            let grad = crate::assemble::velocity_gradient(p.v_space, &edofs, qp, &total);
            let i = crate::assemble::invariant_i(crate::assemble::strain_rate(grad));
            weights.push(e(abs_e, qp.x) / (lambda + i).sqrt() + psi1(i, abs_e, qp.x));
        }
    }
    let frozen = assemble_weighted_strain(p.v_space, &weights);
    let mut scaled = p.d_al.clone();
    for x in &mut scaled.values {
        *x *= r_aug;
    }
    let a = add_sparse(&frozen, &scaled);
    // rhs: f + Bᵀp − (frozen + r·divdiv)·ũ
    let btp = p.b.matvec_transpose(pvec);
    let au = a.matvec(p.lifting);
    let rhs: Vec<f64> = p
        .free
        .iter()
        .map(|&d| p.f[d] + btp[d] - au[d])
        .collect();
    let af = a.restrict(&p.free);
    let lu = LuFactor::new(&af)?;
    let sol = lu.solve(&rhs);
    let mut u = vec![0.0; p.v_space.n_dofs()];
    for (i, &d) in p.free.iter().enumerate() {
        u[d] = sol[i];
    }
    Ok(u)
}

/// `2 ∫ w(x) ε(u):ε(h)` with a per-quadrature-point weight on the degree-6
/// rule.
pub fn assemble_weighted_strain(space: &FeSpace, weights: &[f64]) -> SparseMatrix {
    assert_eq!(space.components, 2);
    let rule = crate::quadrature::triangle_rule_degree6();
    let nq = rule.len();
    assert_eq!(weights.len(), space.mesh.triangles.len() * nq);
    let ns = space.n_scalar();
    let nloc = space.local_size();
    let n = space.n_dofs();
    let mut t = Triplets::new(n, n);
    for el in 0..space.mesh.triangles.len() {
        let basis = crate::space::element_basis(space, el, rule);
        let edofs = space.element_dofs(el);
        for (iq, qp) in basis.iter().enumerate() {
            let w = 2.0 * weights[el * nq + iq] * qp.w;
            for k in 0..nloc {
                let gk = qp.grads[k];
                for l in 0..nloc {
                    let gl = qp.grads[l];
                    // ε(φ_k e_x):ε(φ_l e_x) etc., componentwise blocks
                    let xx = gk[0] * gl[0] + 0.5 * gk[1] * gl[1];
                    let yy = gk[1] * gl[1] + 0.5 * gk[0] * gl[0];
                    let xy = 0.5 * gk[1] * gl[0];
                    let yx = 0.5 * gk[0] * gl[1];
                    t.push(edofs[k], edofs[l], w * xx);
                    t.push(ns + edofs[k], ns + edofs[l], w * yy);
                    t.push(edofs[k], ns + edofs[l], w * xy);
                    t.push(ns + edofs[k], edofs[l], w * yx);
                }
            }
        }
    }
    t.into_csr()
}

/// The energy functional of the augmented velocity problem (for monitoring
/// Birger–Kachanov descent): Φ(u) = Y_λ(ũ+u) + ∫Ψ₁ + r/2‖div(ũ+u)‖² − (f+Bᵀp, u),
/// with Ψ₁ the antiderivative of ψ₁ in I evaluated by quadrature in I-space.
pub fn bk_energy(p: &FlowProblem, r_aug: f64, pvec: &[f64], u: &[f64]) -> Result<f64> {
    let (e, psi1, lambda) = match p.model {
        ViscosityModel::GivenMu { e, psi1, lambda, .. } => (e, psi1, lambda),
        _ => return Err(Error::InvalidConfig("energy monitor needs the given-mu model".into())),
    };
    let rule = crate::quadrature::triangle_rule_degree6();
    let total = p.total(u);
    let mut val = 0.0;
    for el in 0..p.v_space.mesh.triangles.len() {
        let basis = crate::space::element_basis(p.v_space, el, rule);
        let edofs = p.v_space.element_dofs(el);
        for (iq, qp) in basis.iter().enumerate() {
            let ef = match p.e_field {
                EField::Zero => [0.0, 0.0],
                EField::Fn(f) => f(qp.x),
                EField::Quad(vals) => vals[el * rule.len() + iq],
            };
            let abs_e = (ef[0] * ef[0] + ef[1] * ef[1]).sqrt();
            let grad = crate::assemble::velocity_gradient(p.v_space, &edofs, qp, &total);
            let i = crate::assemble::invariant_i(crate::assemble::strain_rate(grad));
            // 2 e (λ+I)^{1/2} + ∫₀^I ψ₁(s) ds (11-point midpoint quadrature)
            val += qp.w * 2.0 * e(abs_e, qp.x) * (lambda + i).sqrt();
            let m = 11;
            let h = i / m as f64;
            let mut acc = 0.0;
            for j in 0..m {
                acc += psi1((j as f64 + 0.5) * h, abs_e, qp.x);
            }
            val += qp.w * acc * h;
        }
    }
    let bv = p.b.matvec(&total);
    let pen: f64 = bv.iter().zip(&p.mp_lumped).map(|(x, m)| x * x / m).sum();
    val += 0.5 * r_aug * pen;
    let btp = p.b.matvec_transpose(pvec);
    for &d in &p.free {
        val -= (p.f[d] + btp[d]) * u[d];
    }
    Ok(val)
}

/// Closed-form constants of the contraction iteration:
/// μ₁ = min(2a₁, 2a₃), μ₂ = 2a₂ + 4a₄, q₁ = μ₁/b₁,
/// q₂ = (μ₂ + 4a₅λ^{−1/2})/√b₂, q₃ = q₂ + r‖B*B‖, t₀ = q₁/q₃²,
/// k₀ = (1 − q₁²/q₃²)^{1/2}.
pub fn contraction_constants(
    a: [f64; 5],
    lambda: f64,
    b1: f64,
    b2: f64,
    r: f64,
    norm_btb: f64,
) -> Result<(f64, f64, f64, f64, f64)> {
    if lambda <= 0.0 {
        return Err(Error::InvalidConfig("contraction constants need lambda > 0".into()));
    }
    if a[..2].iter().any(|&x| x <= 0.0) || b1 <= 0.0 || b2 <= 0.0 {
        return Err(Error::InvalidConfig("operator bounds must be positive".into()));
    }
    let mu1 = f64::min(2.0 * a[0], 2.0 * a[2]);
    let mu2 = 2.0 * a[1] + 4.0 * a[3];
    let q1 = mu1 / b1;
    let q2 = (mu2 + 4.0 * a[4] * lambda.powf(-0.5)) / b2.sqrt();
    let q3 = q2 + r * norm_btb;
    let t0 = q1 / (q3 * q3);
    let k0 = (1.0 - q1 * q1 / (q3 * q3)).max(0.0).sqrt();
    Ok((q1, q2, q3, t0, k0))
}

/// Preconditioned Richardson (contraction) iteration on the fixed-pressure
/// augmented problem: `A u_{m+1} = A u_m − t (N(u_m) + r·div-div − f − Bᵀp)`.
pub fn contraction_solve(
    p: &FlowProblem,
    pvec: &[f64],
    precond: Preconditioner,
    t_step: Option<f64>,
    bounds: Option<([f64; 5], f64)>,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolverReport, Vec<Vec<f64>>)> {
    let start = Instant::now();
    let mut report = SolverReport::default();
    // preconditioner and its A-norm bounds w.r.t. the X-norm
    let (a_mat, b1, b2) = match precond {
        Preconditioner::StrainGram => (assemble_strain_gram(p.v_space), 1.0, 1.0),
        Preconditioner::VectorLaplacian => (
            crate::assemble::assemble_vector_laplacian(p.v_space, &|_| 1.0)?,
            1.0,
            2.0,
        ),
    };
    let af = a_mat.restrict(&p.free);
    let lu = LuFactor::new(&af)?;
    // ‖B*B‖ estimate (largest eigenvalue of A⁻¹ D on the free dofs)
    let df = p.d_al.restrict(&p.free);
    let mut op = |z: &[f64]| lu.solve(&df.matvec(z));
    let norm_btb = power_method(&mut op, p.free.len(), 50, 42);
    let constants = bounds
        .map(|(a, lambda)| contraction_constants(a, lambda, b1, b2, cfg.r, norm_btb))
        .transpose()?;
    let t = match t_step {
        Some(t) => {
            if let Some((q1, _, q3, _, _)) = constants {
                if !(t > 0.0 && t < 2.0 * q1 / (q3 * q3)) {
                    return Err(Error::InvalidConfig(format!(
                        "contraction step t = {t} outside the admissible interval (0, {})",
                        2.0 * q1 / (q3 * q3)
                    )));
                }
            }
            t
        }
        None => {
            let (_, _, _, t0, _) = constants.ok_or_else(|| {
                Error::InvalidConfig(
                    "automatic step selection needs the model bounds (a1..a5, lambda)".into(),
                )
            })?;
            t0
        }
    };
    report.constants = constants.map(|(q1, q2, q3, t0, k0)| (q1, q2, q3, t0, k0));
    report.notes.push(format!("norm_btb = {norm_btb:.6e}, t = {t:.6e}"));

    let residual = |v: &[f64]| -> Result<Vec<f64>> {
        let mut r = p.n_residual(v)?;
        let aug = p.d_al.matvec(&p.total(v));
        let btp = p.b.matvec_transpose(pvec);
        for i in 0..r.len() {
            r[i] += cfg.r * aug[i] - btp[i] - p.f[i];
        }
        Ok(r)
    };
    let mut u = vec![0.0; p.v_space.n_dofs()];
    let mut history = vec![u.clone()];
    for _ in 0..cfg.max_outer.max(cfg.max_inner) {
        let rv = residual(&u)?;
        let dual = p.dual_norm(&rv);
        report.iterations.push(IterRecord {
            div_norm: p.div_norm(&u),
            residual: dual,
            p_increment: 0.0,
        });
        if dual <= cfg.tol_residual {
            report.converged = true;
            break;
        }
        let rf: Vec<f64> = p.free.iter().map(|&d| rv[d]).collect();
        let step = lu.solve(&rf);
        for (i, &d) in p.free.iter().enumerate() {
            u[d] -= t * step[i];
        }
        history.push(u.clone());
    }
    report.wall_time = start.elapsed().as_secs_f64();
    Ok((u, report, history))
}

/// Least-squares gradient descent on Φ₂(v, p) = ‖R(v, p)‖², where R stacks
/// the momentum residual (free dofs) and the divergence residual.
pub fn gradient_solve(
    p: &FlowProblem,
    cfg: &SolverConfig,
) -> Result<(FlowState, SolverReport)> {
    let start = Instant::now();
    let mut report = SolverReport::default();
    let mut v = vec![0.0; p.v_space.n_dofs()];
    let mut pr = vec![0.0; p.p_space.n_dofs()];
    let phi = |v: &[f64], pr: &[f64]| -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let rv = p.momentum_residual(v, pr)?;
        let rp = p.b.matvec(&p.total(v));
        let rvf: Vec<f64> = p.free.iter().map(|&d| rv[d]).collect();
        Ok((norm2(&rvf).powi(2) + norm2(&rp).powi(2), rv, rp))
    };
    let (mut val, mut rv, mut rp) = phi(&v, &pr)?;
    let tol2 = cfg.tol_residual * cfg.tol_residual;
    for _ in 0..cfg.max_inner {
        report.iterations.push(IterRecord {
            div_norm: p.div_norm(&v),
            residual: val.sqrt(),
            p_increment: 0.0,
        });
        if val <= tol2 {
            report.converged = true;
            break;
        }
        let (gv, gp) = gradient_phi2(p, &v, &rv, &rp)?;
        let gnorm2 = {
            let gvf: Vec<f64> = p.free.iter().map(|&d| gv[d]).collect();
            norm2(&gvf).powi(2) + norm2(&gp).powi(2)
        };
        if gnorm2 <= 1e-300 {
            report.notes.push("vanishing gradient".into());
            break;
        }
        // backtracking line search on Φ₂
        let mut step = val / gnorm2; // Cauchy-like initial guess
        let mut accepted = false;
        for _ in 0..40 {
            let mut vt = v.clone();
            for &d in &p.free {
                vt[d] -= step * gv[d];
            }
            let pt: Vec<f64> = pr.iter().zip(&gp).map(|(a, g)| a - step * g).collect();
            let (vt_val, rvt, rpt) = phi(&vt, &pt)?;
            if vt_val < val - 1e-4 * step * gnorm2 {
                v = vt;
                pr = pt;
                val = vt_val;
                rv = rvt;
                rp = rpt;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            report.notes.push("line search stagnated".into());
            break;
        }
    }
    if val <= tol2 {
        report.converged = true;
    }
    report.wall_time = start.elapsed().as_secs_f64();
    Ok((FlowState { v: p.total(&v), p: pr }, report))
}

/// ∇Φ₂ = 2 Jᵀ R with J the (quasi-Newton) saddle Jacobian.
pub fn gradient_phi2(
    p: &FlowProblem,
    v: &[f64],
    rv: &[f64],
    rp: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let tangent = p.n_tangent(v)?;
    // mask the wall components of rv (they are not part of the residual)
    let mut rv_masked = vec![0.0; rv.len()];
    for &d in &p.free {
        rv_masked[d] = rv[d];
    }
    // velocity part: 2 (Tᵀ rv + Bᵀ rp)
    let mut gv = tangent.matvec_transpose(&rv_masked);
    let btrp = p.b.matvec_transpose(rp);
    for i in 0..gv.len() {
        gv[i] = 2.0 * (gv[i] + btrp[i]);
    }
    // pressure part: 2 (−B) rv
    let brv = p.b.matvec(&rv_masked);
    let gp: Vec<f64> = brv.iter().map(|x| -2.0 * x).collect();
    Ok((gv, gp))
}

/// Runs the solver across a decreasing λ schedule, warm-starting each stage,
/// and records pairwise velocity differences for Cauchy monitoring.
pub fn lambda_continuation(
    model: &ViscosityModel,
    mu_fn: &MuFunction,
    e_field: EField,
    v_space: &FeSpace,
    p_space: &FeSpace,
    lifting: &[f64],
    loads: &Loads,
    cfg: &SolverConfig,
) -> Result<(Vec<FlowState>, Vec<f64>, SolverReport)> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = SolverReport::default();
    let mut states: Vec<FlowState> = Vec::new();
    let mut diffs = Vec::new();
    let mut v0 = vec![0.0; v_space.n_dofs()];
    let mut p0 = vec![0.0; p_space.n_dofs()];
    for &lambda in &cfg.lambda_schedule {
        let staged = model.with_lambda(lambda);
        let problem =
            FlowProblem::new(&staged, mu_fn, e_field, v_space, p_space, lifting, loads)?;
        let (v, pr, stage_report) = newton_saddle(&problem, v0.clone(), p0.clone(), cfg)?;
        if !stage_report.converged {
            report
                .notes
                .push(format!("stage lambda = {lambda:.3e} did not converge; truncating"));
            break;
        }
        report.iterations.extend(stage_report.iterations);
        let total = problem.total(&v);
        if let Some(prev) = states.last() {
            let d: Vec<f64> = total.iter().zip(&prev.v).map(|(a, b)| a - b).collect();
            diffs.push(norm_l2(v_space, &d));
        }
        states.push(FlowState { v: total, p: pr.clone() });
        v0 = v;
        p0 = pr;
    }
    report.converged = states.len() == cfg.lambda_schedule.len();
    report.wall_time = start.elapsed().as_secs_f64();
    Ok((states, diffs, report))
}
