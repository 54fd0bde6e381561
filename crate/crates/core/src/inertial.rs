//! Convective-term assembly and Picard solvers for the inertial flow
//! problems.
//!
//! The trilinear convection form is q(a, v, w) = ∫ ρ a_k ∂v_i/∂x_k w_i and
//! its skew-symmetrization q₁(a, v, w) = ½q(a, v, w) − ½q(a, w, v).  The
//! pure-Dirichlet problem uses q₁ throughout (it is energy-neutral), the
//! mixed problem keeps the plain form q.  Both are solved by Picard
//! iteration: freeze the advecting field at the previous iterate and solve
//! the resulting Stokes-type saddle system.

use crate::assemble::{assemble_strain_gram, norm_x};
use crate::error::{Error, Result};
use crate::space::{element_basis, FeSpace};
use crate::sparse::{dot, LuFactor, SparseMatrix, Triplets};
use crate::stokes::{
    add_sparse, newton_saddle, FlowProblem, FlowState, IterRecord, Loads, SolverConfig,
    SolverReport,
};
use crate::operators::EField;
use crate::quadrature::triangle_rule_degree6;
use crate::viscosity::{MuFunction, ViscosityModel};

/// Which argument of q(·, ·, ·) holds the fixed field; the remaining two are
/// the matrix column (solution) and row (test) arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrilinearSlot {
    /// Fixed advecting field a: M[w, v] = q(a, v, w).
    Advect,
    /// Fixed transported field b: M[w, v] = q(v, b, w).
    Middle,
    /// Fixed test field c: M[w, v] = q(v, w, c).
    Test,
}

/// Convection matrix variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvectionForm {
    /// Plain q(a, ·, ·).
    Standard,
    /// Skew-symmetrized q₁(a, ·, ·) = ½(C − Cᵀ).
    Skew,
}

/// Assembles the convection matrix with one fixed argument of
/// q(u, v, w) = ∫ ρ u_k ∂v_i/∂x_k w_i.  `field` is a velocity dof vector.
pub fn assemble_trilinear(
    space: &FeSpace,
    rho: &dyn Fn([f64; 2]) -> f64,
    field: &[f64],
    slot: TrilinearSlot,
) -> SparseMatrix {
    assert_eq!(space.components, 2);
    assert_eq!(field.len(), space.n_dofs());
    let ns = space.n_scalar();
    let nloc = space.local_size();
    let n = space.n_dofs();
    let rule = triangle_rule_degree6();
    let mut t = Triplets::new(n, n);
    for el in 0..space.mesh.triangles.len() {
        let basis = element_basis(space, el, rule);
        let edofs = space.element_dofs(el);
        for qp in &basis {
            let w = rho(qp.x) * qp.w;
            // fixed field value and gradient at the quadrature point
            let mut fval = [0.0; 2];
            let mut fgrad = [[0.0; 2]; 2]; // fgrad[i][k] = ∂f_i/∂x_k
            for k in 0..nloc {
                for c in 0..2 {
                    let coeff = field[c * ns + edofs[k]];
                    fval[c] += coeff * qp.vals[k];
                    fgrad[c][0] += coeff * qp.grads[k][0];
                    fgrad[c][1] += coeff * qp.grads[k][1];
                }
            }
            match slot {
                TrilinearSlot::Advect => {
                    // q(a, v, w) = ρ a_k ∂v_i/∂x_k w_i: same-component blocks
                    for k in 0..nloc {
                        for l in 0..nloc {
                            let adv = fval[0] * qp.grads[l][0] + fval[1] * qp.grads[l][1];
                            let v = w * adv * qp.vals[k];
                            t.push(edofs[k], edofs[l], v);
                            t.push(ns + edofs[k], ns + edofs[l], v);
                        }
                    }
                }
                TrilinearSlot::Middle => {
                    // q(v, b, w) = ρ v_k ∂b_i/∂x_k w_i: couples the test
                    // component i to the solution component k
                    for k in 0..nloc {
                        for l in 0..nloc {
                            for i in 0..2 {
                                for kc in 0..2 {
                                    t.push(
                                        i * ns + edofs[k],
                                        kc * ns + edofs[l],
                                        w * qp.vals[l] * fgrad[i][kc] * qp.vals[k],
                                    );
                                }
                            }
                        }
                    }
                }
                TrilinearSlot::Test => {
                    // q(v, w, c) = ρ v_k ∂w_i/∂x_k c_i
                    for k in 0..nloc {
                        for l in 0..nloc {
                            for i in 0..2 {
                                for kc in 0..2 {
                                    t.push(
                                        i * ns + edofs[k],
                                        kc * ns + edofs[l],
                                        w * qp.vals[l] * qp.grads[k][kc] * fval[i],
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    t.into_csr()
}

/// Convection matrix C with wᵀCv = q(a, v, w), or the skew form q₁.
pub fn assemble_convection(
    space: &FeSpace,
    rho: &dyn Fn([f64; 2]) -> f64,
    a: &[f64],
    form: ConvectionForm,
) -> SparseMatrix {
    let c = assemble_trilinear(space, rho, a, TrilinearSlot::Advect);
    match form {
        ConvectionForm::Standard => c,
        ConvectionForm::Skew => skew_half(&c),
    }
}

/// ½(C − Cᵀ).
fn skew_half(c: &SparseMatrix) -> SparseMatrix {
    let ct = c.transpose();
    let mut t = Triplets::new(c.nrows, c.ncols);
    for r in 0..c.nrows {
        for k in c.indptr[r]..c.indptr[r + 1] {
            t.push(r, c.indices[k], 0.5 * c.values[k]);
        }
        for k in ct.indptr[r]..ct.indptr[r + 1] {
            t.push(r, ct.indices[k], -0.5 * ct.values[k]);
        }
    }
    t.into_csr()
}

/// The fixed lifting contribution to the linearized momentum operator:
/// q(ũ, v, ·) + q(v, ũ, ·), skew-symmetrized term by term when requested.
fn lifting_convection(
    space: &FeSpace,
    rho: &dyn Fn([f64; 2]) -> f64,
    lifting: &[f64],
    skew: bool,
) -> SparseMatrix {
    let adv = assemble_trilinear(space, rho, lifting, TrilinearSlot::Advect);
    let mid = assemble_trilinear(space, rho, lifting, TrilinearSlot::Middle);
    if skew {
        // q₁(ũ, v, w) = ½(A − Aᵀ); q₁(v, ũ, w) = ½(M − T) with T the
        // test-slot matrix
        let test = assemble_trilinear(space, rho, lifting, TrilinearSlot::Test);
        let mut m = add_sparse(&skew_half(&adv), &mid);
        // subtract ½(M + T) − M = ... assemble directly: ½M − ½T
        let mut half_mt = Triplets::new(m.nrows, m.ncols);
        for r in 0..mid.nrows {
            for k in mid.indptr[r]..mid.indptr[r + 1] {
                half_mt.push(r, mid.indices[k], -0.5 * mid.values[k]);
            }
            for k in test.indptr[r]..test.indptr[r + 1] {
                half_mt.push(r, test.indices[k], -0.5 * test.values[k]);
            }
        }
        m = add_sparse(&m, &half_mt.into_csr());
        m
    } else {
        add_sparse(&adv, &mid)
    }
}

/// Density description with admissible bounds.
pub struct Density<'a> {
    /// ρ(x), possibly via |E|(x).
    pub value: &'a dyn Fn([f64; 2]) -> f64,
    /// Lower and upper admissible bounds (ρ₁, ρ₂).
    pub bounds: (f64, f64),
}

impl<'a> Density<'a> {
    fn check(&self, space: &FeSpace) -> Result<()> {
        let (lo, hi) = self.bounds;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::InvalidConfig(format!(
                "density bounds ({lo}, {hi}) must satisfy 0 < rho1 <= rho2"
            )));
        }
        let rule = triangle_rule_degree6();
        for el in 0..space.mesh.triangles.len() {
            for qp in element_basis(space, el, rule) {
                let r = (self.value)(qp.x);
                if !(r >= lo - 1e-12 && r <= hi + 1e-12) {
                    return Err(Error::InvalidConfig(format!(
                        "density {r} at x = ({:.4}, {:.4}) violates bounds [{lo}, {hi}]",
                        qp.x[0], qp.x[1]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Shared Picard driver.  `skew` selects q₁ (Dirichlet) or q (mixed).
#[allow(clippy::too_many_arguments)]
fn picard_solve(
    model: &ViscosityModel,
    mu_fn: &MuFunction,
    e_field: EField,
    v_space: &FeSpace,
    p_space: &FeSpace,
    density: &Density,
    lifting: &[f64],
    loads: &Loads,
    cfg: &SolverConfig,
    skew: bool,
) -> Result<(FlowState, SolverReport)> {
    cfg.validate()?;
    density.check(v_space)?;
    let mut fp =
        FlowProblem::new(model, mu_fn, e_field, v_space, p_space, lifting, loads)?;
    // right-hand side carries −q(ũ, ũ, ·)
    let adv_lift = assemble_trilinear(v_space, density.value, lifting, TrilinearSlot::Advect);
    let q_lift = adv_lift.matvec(lifting);
    for (a, b) in fp.f.iter_mut().zip(&q_lift) {
        *a -= b;
    }
    let fixed = lifting_convection(v_space, density.value, lifting, skew);
    let mut report = SolverReport::default();
    let start = std::time::Instant::now();
    let mut v = vec![0.0; v_space.n_dofs()];
    let mut p = vec![0.0; p_space.n_dofs()];
    let mut prev_inc = f64::INFINITY;
    let mut growth = 0usize;
    for _ in 0..cfg.max_outer {
        let form = if skew { ConvectionForm::Skew } else { ConvectionForm::Standard };
        let conv = assemble_convection(v_space, density.value, &v, form);
        fp.extra_linear = Some(add_sparse(&fixed, &conv));
        let (v_new, p_new, inner) = newton_saddle(&fp, v.clone(), p.clone(), cfg)?;
        if !inner.converged {
            return Err(Error::NonlinearSolve(
                "Picard step: inner Stokes-type solve did not converge".into(),
            ));
        }
        let mut dv: Vec<f64> = v_new.iter().zip(&v).map(|(a, b)| a - b).collect();
        let mut inc = norm_x(v_space, &dv);
        // under-relax slow contractions
        if prev_inc.is_finite() && prev_inc > 0.0 && inc / prev_inc > 0.9 {
            for x in &mut dv {
                *x *= 0.7;
            }
            inc *= 0.7;
        }
        if prev_inc.is_finite() && inc > prev_inc {
            growth += 1;
            if growth >= 5 {
                report.notes.push(
                    "Picard iteration diverging; consider reducing the loads or density"
                        .into(),
                );
                report.wall_time = start.elapsed().as_secs_f64();
                return Ok((FlowState { v: fp.total(&v), p }, report));
            }
        } else {
            growth = 0;
        }
        for (a, b) in v.iter_mut().zip(&dv) {
            *a += b;
        }
        p = p_new;
        report.iterations.push(IterRecord {
            div_norm: fp.div_norm(&v),
            residual: inc,
            p_increment: 0.0,
        });
        if inc <= cfg.tol_velocity {
            report.converged = true;
            break;
        }
        prev_inc = inc;
    }
    report.wall_time = start.elapsed().as_secs_f64();
    Ok((FlowState { v: fp.total(&v), p }, report))
}

/// Pure-Dirichlet inertial problem: Picard with the skew forms q₁ and a
/// mean-zero pressure.
#[allow(clippy::too_many_arguments)]
pub fn solve_inertial_dirichlet(
    model: &ViscosityModel,
    mu_fn: &MuFunction,
    e_field: EField,
    v_space: &FeSpace,
    p_space: &FeSpace,
    density: &Density,
    lifting: &[f64],
    loads: &Loads,
    cfg: &SolverConfig,
) -> Result<(FlowState, SolverReport)> {
    if v_space.mesh.boundary_edges.iter().any(|e| !e.tag.is_wall()) {
        return Err(Error::InvalidConfig(
            "the Dirichlet inertial solver needs an empty traction set".into(),
        ));
    }
    picard_solve(
        model, mu_fn, e_field, v_space, p_space, density, lifting, loads, cfg, true,
    )
}

/// Mixed inertial problem (traction outlet present): Picard with the plain
/// convection form q.
#[allow(clippy::too_many_arguments)]
pub fn solve_inertial_mixed(
    model: &ViscosityModel,
    mu_fn: &MuFunction,
    e_field: EField,
    v_space: &FeSpace,
    p_space: &FeSpace,
    density: &Density,
    lifting: &[f64],
    loads: &Loads,
    cfg: &SolverConfig,
) -> Result<(FlowState, SolverReport)> {
    if !v_space.mesh.boundary_edges.iter().any(|e| !e.tag.is_wall()) {
        return Err(Error::InvalidConfig(
            "the mixed inertial solver needs a non-empty traction set".into(),
        ));
    }
    picard_solve(
        model, mu_fn, e_field, v_space, p_space, density, lifting, loads, cfg, false,
    )
}

/// Monte-Carlo estimates of the solvability constants and the resulting
/// verdict.
#[derive(Debug, Clone)]
pub struct SolvabilityReport {
    /// Lower bound for sup |q(w,w,w)| over unit div-free fields.
    pub eta1: f64,
    /// Upper bound for inf (M₂(w), w).
    pub eta2: f64,
    /// Lower bound for sup |(χ, w)|.
    pub eta3: f64,
    /// η₄ = a₁ + η₂/2.
    pub eta4: f64,
    /// PASS iff η₄ > 0 and η₄² > η₁η₃ on the sampled estimates; sampling
    /// gives one-sided bounds only.
    pub pass: bool,
    /// Number of admissible samples actually used.
    pub samples: usize,
}

/// Samples random unit-X-norm discretely divergence-free fields and
/// estimates the solvability constants η₁–η₄.
#[allow(clippy::too_many_arguments)]
pub fn solvability_diagnostics(
    v_space: &FeSpace,
    p_space: &FeSpace,
    density: &Density,
    lifting: &[f64],
    chi: &[f64],
    a1: f64,
    samples: usize,
    seed: u64,
) -> Result<SolvabilityReport> {
    use rand::{Rng, SeedableRng};
    let free = crate::infsup::free_velocity_dofs(v_space);
    let gram = assemble_strain_gram(v_space);
    let b = crate::assemble::assemble_divergence(v_space, p_space)?;
    // X-orthogonal projector onto the discrete divergence-free subspace via
    // one factored saddle system [K Bᵀ; B 0] (+ mean-pressure gauge on
    // walled domains)
    let np = p_space.n_dofs();
    let nf = free.len();
    let traction_empty = !v_space.mesh.boundary_edges.iter().any(|e| !e.tag.is_wall());
    let gauge: Vec<f64> = {
        let mp = crate::assemble::assemble_mass(p_space);
        mp.matvec(&vec![1.0; np])
    };
    let n = nf + np + usize::from(traction_empty);
    let mut vmap = vec![usize::MAX; v_space.n_dofs()];
    for (i, &d) in free.iter().enumerate() {
        vmap[d] = i;
    }
    let mut tri = Triplets::new(n, n);
    for r in 0..gram.nrows {
        let rr = vmap[r];
        if rr == usize::MAX {
            continue;
        }
        for k in gram.indptr[r]..gram.indptr[r + 1] {
            let cc = vmap[gram.indices[k]];
            if cc != usize::MAX {
                tri.push(rr, cc, gram.values[k]);
            }
        }
    }
    for r in 0..b.nrows {
        for k in b.indptr[r]..b.indptr[r + 1] {
            let cc = vmap[b.indices[k]];
            if cc != usize::MAX {
                tri.push(nf + r, cc, b.values[k]);
                tri.push(cc, nf + r, b.values[k]);
            }
        }
    }
    if traction_empty {
        for j in 0..np {
            tri.push(nf + np, nf + j, gauge[j]);
            tri.push(nf + j, nf + np, gauge[j]);
        }
    }
    let lu = LuFactor::new(&tri.into_csr())?;
    let m2 = lifting_convection(v_space, density.value, lifting, false);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut eta1: f64 = 0.0;
    let mut eta2 = f64::INFINITY;
    let mut eta3: f64 = 0.0;
    let mut used = 0usize;
    for _ in 0..samples {
        let mut w = vec![0.0; v_space.n_dofs()];
        for &d in &free {
            w[d] = rng.gen_range(-1.0..1.0);
        }
        // project: solve [K Bᵀ; B 0][z; μ] = [K w; 0]
        let kw = gram.matvec(&w);
        let mut rhs = vec![0.0; n];
        for (i, &d) in free.iter().enumerate() {
            rhs[i] = kw[d];
        }
        let sol = lu.solve(&rhs);
        let mut z = vec![0.0; v_space.n_dofs()];
        for (i, &d) in free.iter().enumerate() {
            z[d] = sol[i];
        }
        let nx = norm_x(v_space, &z);
        if nx < 1e-10 {
            continue;
        }
        for x in &mut z {
            *x /= nx;
        }
        used += 1;
        let conv_z =
            assemble_convection(v_space, density.value, &z, ConvectionForm::Standard);
        eta1 = eta1.max(dot(&z, &conv_z.matvec(&z)).abs());
        eta2 = eta2.min(dot(&z, &m2.matvec(&z)));
        eta3 = eta3.max(dot(chi, &z).abs());
    }
    if used == 0 {
        return Err(Error::InvalidConfig("no admissible samples drawn".into()));
    }
    if !eta2.is_finite() {
        eta2 = 0.0;
    }
    let eta4 = a1 + 0.5 * eta2;
    Ok(SolvabilityReport {
        eta1,
        eta2,
        eta3,
        eta4,
        pass: eta4 > 0.0 && eta4 * eta4 > eta1 * eta3,
        samples: used,
    })
}
