//! Assembly of the nonlinear viscous operators and the associated energy
//! functionals.
//!
//! Every operator here has residual entries of the form
//! `r_k = 2 ∫ c(I, |E|, μ, x) ε(ũ+v) : ε(φ_k) dx`
//! for a kind-specific coefficient `c`, where ũ is a boundary lifting and v
//! the unknown.  The tangent follows from the chain rule
//! `T_kl = ∫ [ 2c ε(φ_l):ε(φ_k) + 4 (∂c/∂I) (ε(ũ+v):ε(φ_l)) (ε(ũ+v):ε(φ_k)) ] dx`
//! with the direction factor μ frozen at the current state (exact for the
//! kinds whose coefficient does not depend on v through μ).

use crate::assemble::{contract, invariant_i, strain_rate, velocity_gradient, velocity_value};
use crate::error::{Error, Result};
use crate::quadrature::triangle_rule_degree6;
use crate::space::{element_basis, FeSpace, FieldSampler, QpBasis};
use crate::sparse::{SparseMatrix, Triplets};
use crate::viscosity::{MuFunction, ViscosityModel, DEFAULT_EPS_E};

/// Which nonlinear operator to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// Full viscosity with frozen direction fields:
    /// `2∫ φ(I(ũ+v), |E|, μ_frozen) ε(ũ+v):ε(h)`.
    Lv,
    /// Smooth part with self-consistent μ: `2∫ ψ(I(ũ+v), |E|, μ(ũ+v,E)) ε(ũ+v):ε(h)`.
    L,
    /// Plastic-viscosity part of the extended Bingham model:
    /// `2∫ b₁(|E|, μ(ũ+v,E)) ε(ũ+v):ε(h)`.
    L1,
    /// Anisotropic smooth part: `2∫ ψ₁(I(ũ+v), |E|, x) ε(ũ+v):ε(h)`.
    L2,
    /// Derivative of the regularized yield functional:
    /// `2∫ b(|E|, μ_frozen) (λ+I(ũ+v))^{−1/2} ε(ũ+v):ε(h)`.
    DJLambda,
    /// Derivative of the anisotropic regularized yield functional:
    /// `2∫ e(|E|, x) (λ+I(ũ+v))^{−1/2} ε(ũ+v):ε(h)`.
    DYLambda,
}

/// Electric field supplied to the assemblers.
#[derive(Clone, Copy)]
pub enum EField<'a> {
    /// No field (E ≡ 0): the constitutive law uses its field-free branch.
    Zero,
    /// Analytic field.
    Fn(&'a dyn Fn([f64; 2]) -> [f64; 2]),
    /// Per-quadrature-point values on the degree-6 rule, row-major
    /// `[elem * n_qp + iq]` (as produced by the electric solver).
    Quad(&'a [[f64; 2]]),
}

impl<'a> EField<'a> {
    fn eval(&self, elem: usize, iq: usize, n_qp: usize, x: [f64; 2]) -> [f64; 2] {
        match self {
            EField::Zero => [0.0, 0.0],
            EField::Fn(f) => f(x),
            EField::Quad(vals) => vals[elem * n_qp + iq],
        }
    }
}

/// Everything needed to assemble one nonlinear operator.
pub struct OperatorContext<'a> {
    /// Which operator.
    pub kind: OperatorKind,
    /// Constitutive model.
    pub model: &'a ViscosityModel,
    /// Direction-factor configuration.
    pub mu_fn: &'a MuFunction,
    /// Velocity space (vector P2).
    pub space: &'a FeSpace,
    /// Boundary lifting ũ (full dof vector; zero vector when none).
    pub lifting: &'a [f64],
    /// Electric field.
    pub e_field: EField<'a>,
    /// Velocity whose direction factor is frozen into the coefficients
    /// (`Lv`, `DJLambda`); defaults to the argument `v` itself.
    pub frozen: Option<&'a [f64]>,
}

struct QpCoef {
    /// Coefficient c at the point.
    c: f64,
    /// ∂c/∂I at the point (μ frozen).
    dc: f64,
}

impl<'a> OperatorContext<'a> {
    /// μ at a quadrature point for velocity value `u` and field `e`.
    fn mu_at(
        &self,
        u: [f64; 2],
        e: [f64; 2],
        sampler: Option<&FieldSampler>,
        x: [f64; 2],
    ) -> Result<f64> {
        let abs_e = (e[0] * e[0] + e[1] * e[1]).sqrt();
        if abs_e < DEFAULT_EPS_E {
            return Ok(0.0); // dummy; the model's E = 0 branch ignores it
        }
        if self.mu_fn.mollifier.is_some() {
            let sampler = sampler.expect("sampler prepared when mollifier configured");
            self.mu_fn.eval_mollified(&|p| sampler.eval(p), &|_| e, x)
        } else {
            self.mu_fn.eval(u, e)
        }
    }

    /// Coefficient and its I-derivative for the configured kind.
    fn coef(&self, i: f64, abs_e: f64, mu: f64, x: [f64; 2], elem: usize) -> Result<QpCoef> {
        let named = |r: Result<f64>| -> Result<f64> {
            r.map_err(|e| {
                Error::NonlinearSolve(format!("element {elem}: {e}"))
            })
        };
        let mu_eff = if abs_e < DEFAULT_EPS_E { 0.0 } else { mu };
        match self.kind {
            OperatorKind::Lv => Ok(QpCoef {
                c: named(self.model.eval_phi(i, abs_e, mu, x))?,
                dc: named(self.model.dphi_di(i, abs_e, mu, x))?,
            }),
            OperatorKind::L => match self.model {
                ViscosityModel::Regular(m) => Ok(QpCoef {
                    c: m.eval(i, abs_e, mu_eff),
                    dc: m.deriv(i, abs_e, mu_eff),
                }),
                ViscosityModel::RegularizedBingham { psi, .. }
                | ViscosityModel::SingularBingham { psi, .. } => Ok(QpCoef {
                    c: psi.eval(i, abs_e, mu_eff),
                    dc: psi.deriv(i, abs_e, mu_eff),
                }),
                _ => Err(Error::InvalidConfig(
                    "operator L needs a model with a smooth ψ part".into(),
                )),
            },
            OperatorKind::L1 => match self.model {
                ViscosityModel::ExtendedBingham { plastic, .. } => Ok(QpCoef {
                    c: plastic.eval(abs_e, mu_eff),
                    dc: 0.0,
                }),
                _ => Err(Error::InvalidConfig(
                    "operator L1 needs the extended Bingham model".into(),
                )),
            },
            OperatorKind::L2 => match self.model {
                ViscosityModel::GivenMu { psi1, dpsi1, .. } => {
                    let c = psi1(i, abs_e, x);
                    let dc = if let Some(d) = dpsi1 {
                        d(i, abs_e, x)
                    } else {
                        let h = (1e-6f64).max(1e-6 * i);
                        let lo = (i - h).max(0.0);
                        (psi1(i + h, abs_e, x) - psi1(lo, abs_e, x)) / (i + h - lo)
                    };
                    Ok(QpCoef { c, dc })
                }
                _ => Err(Error::InvalidConfig(
                    "operator L2 needs the anisotropic (given-μ) model".into(),
                )),
            },
            OperatorKind::DJLambda => {
                let (b, lambda) = match self.model {
                    ViscosityModel::RegularizedBingham { yield_coef, lambda, .. } => {
                        (yield_coef.eval(abs_e, mu_eff), *lambda)
                    }
                    ViscosityModel::ExtendedBingham { yield_coef, lambda, .. } => {
                        (yield_coef.eval(abs_e, mu_eff), *lambda)
                    }
                    ViscosityModel::SingularBingham { yield_coef, .. } => {
                        (yield_coef.eval(abs_e, mu_eff), 0.0)
                    }
                    _ => {
                        return Err(Error::InvalidConfig(
                            "operator dJ_λ needs a Bingham-type yield coefficient".into(),
                        ))
                    }
                };
                if lambda <= 0.0 && i <= 0.0 {
                    return Err(Error::NonlinearSolve(format!(
                        "element {elem}: yield term is singular at I = 0 with λ = 0"
                    )));
                }
                Ok(QpCoef {
                    c: b / (lambda + i).sqrt(),
                    dc: -0.5 * b * (lambda + i).powf(-1.5),
                })
            }
            OperatorKind::DYLambda => match self.model {
                ViscosityModel::GivenMu { e, lambda, .. } => {
                    if *lambda <= 0.0 && i <= 0.0 {
                        return Err(Error::NonlinearSolve(format!(
                            "element {elem}: yield term is singular at I = 0 with λ = 0"
                        )));
                    }
                    let b = e(abs_e, x);
                    Ok(QpCoef {
                        c: b / (lambda + i).sqrt(),
                        dc: -0.5 * b * (lambda + i).powf(-1.5),
                    })
                }
                _ => Err(Error::InvalidConfig(
                    "operator dY_λ needs the anisotropic (given-μ) model".into(),
                )),
            },
        }
    }

    fn total(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.space.n_dofs());
        assert_eq!(self.lifting.len(), v.len());
        v.iter().zip(self.lifting).map(|(a, b)| a + b).collect()
    }

    /// Field whose direction enters the coefficients.
    fn mu_source(&self, total: &[f64]) -> Vec<f64> {
        match self.frozen {
            Some(f) => f.iter().zip(self.lifting).map(|(a, b)| a + b).collect(),
            None => total.to_vec(),
        }
    }

    /// Strain rates of the basis functions of one element at one point,
    /// in dof order (component 0 shapes, then component 1 shapes).
    fn basis_strains(qp: &QpBasis, nloc: usize) -> Vec<[[f64; 2]; 2]> {
        let mut eps = Vec::with_capacity(2 * nloc);
        for k in 0..nloc {
            let g = qp.grads[k];
            eps.push([[g[0], 0.5 * g[1]], [0.5 * g[1], 0.0]]);
        }
        for k in 0..nloc {
            let g = qp.grads[k];
            eps.push([[0.0, 0.5 * g[0]], [0.5 * g[0], g[1]]]);
        }
        eps
    }

    /// Assembles the residual `r_k = 2 ∫ c ε(ũ+v) : ε(φ_k) dx`.
    pub fn residual(&self, v: &[f64]) -> Result<Vec<f64>> {
        let total = self.total(v);
        let mu_src = self.mu_source(&total);
        let sampler = self
            .mu_fn
            .mollifier
            .as_ref()
            .map(|_| FieldSampler::new(self.space, &mu_src));
        let rule = triangle_rule_degree6();
        let ns = self.space.n_scalar();
        let nloc = self.space.local_size();
        let mut r = vec![0.0; self.space.n_dofs()];
        for el in 0..self.space.mesh.triangles.len() {
            let basis = element_basis(self.space, el, rule);
            let edofs = self.space.element_dofs(el);
            for (iq, qp) in basis.iter().enumerate() {
                let e = self.e_field.eval(el, iq, rule.len(), qp.x);
                let abs_e = (e[0] * e[0] + e[1] * e[1]).sqrt();
                let u_mu = velocity_value(self.space, &edofs, qp, &mu_src);
                let mu = self.mu_at(u_mu, e, sampler.as_ref(), qp.x)?;
                let eps_u = strain_rate(velocity_gradient(self.space, &edofs, qp, &total));
                let i = invariant_i(eps_u);
                let coef = self.coef(i, abs_e, mu, qp.x, el)?;
                let w = 2.0 * coef.c * qp.w;
                if w == 0.0 {
                    continue;
                }
                let strains = Self::basis_strains(qp, nloc);
                for k in 0..nloc {
                    r[edofs[k]] += w * contract(eps_u, strains[k]);
                    r[ns + edofs[k]] += w * contract(eps_u, strains[nloc + k]);
                }
            }
        }
        Ok(r)
    }

    /// Assembles the tangent (Gâteaux derivative with μ frozen at the
    /// current state).
    pub fn tangent(&self, v: &[f64]) -> Result<SparseMatrix> {
        let total = self.total(v);
        let mu_src = self.mu_source(&total);
        let sampler = self
            .mu_fn
            .mollifier
            .as_ref()
            .map(|_| FieldSampler::new(self.space, &mu_src));
        let rule = triangle_rule_degree6();
        let ns = self.space.n_scalar();
        let nloc = self.space.local_size();
        let n = self.space.n_dofs();
        let mut t = Triplets::new(n, n);
        for el in 0..self.space.mesh.triangles.len() {
            let basis = element_basis(self.space, el, rule);
            let edofs = self.space.element_dofs(el);
            let gdofs: Vec<usize> = (0..nloc)
                .map(|k| edofs[k])
                .chain((0..nloc).map(|k| ns + edofs[k]))
                .collect();
            for (iq, qp) in basis.iter().enumerate() {
                let e = self.e_field.eval(el, iq, rule.len(), qp.x);
                let abs_e = (e[0] * e[0] + e[1] * e[1]).sqrt();
                let u_mu = velocity_value(self.space, &edofs, qp, &mu_src);
                let mu = self.mu_at(u_mu, e, sampler.as_ref(), qp.x)?;
                let eps_u = strain_rate(velocity_gradient(self.space, &edofs, qp, &total));
                let i = invariant_i(eps_u);
                let coef = self.coef(i, abs_e, mu, qp.x, el)?;
                let strains = Self::basis_strains(qp, nloc);
                let proj: Vec<f64> = strains.iter().map(|s| contract(eps_u, *s)).collect();
                for (kl, &gk) in gdofs.iter().enumerate() {
                    for (ll, &gl) in gdofs.iter().enumerate() {
                        let val = 2.0 * coef.c * qp.w * contract(strains[kl], strains[ll])
                            + 4.0 * coef.dc * qp.w * proj[kl] * proj[ll];
                        t.push(gk, gl, val);
                    }
                }
            }
        }
        Ok(t.into_csr())
    }
}

/// Energy functionals built from the yield coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionalKind {
    /// `J(v,h) = 2∫ b(|E|, μ(ũ+v,E)) I(ũ+h)^{1/2} dx`.
    J,
    /// `J_λ(v,h) = 2∫ b(|E|, μ(ũ+v,E)) (λ+I(ũ+h))^{1/2} dx`.
    JLambda,
    /// `Y(h) = 2∫ e(|E|, x) I(ũ+h)^{1/2} dx`.
    Y,
    /// `Y_λ(h) = 2∫ e(|E|, x) (λ+I(ũ+h))^{1/2} dx`.
    YLambda,
}

/// Evaluates one of the yield functionals; `v` fixes the direction factor in
/// the coefficient, `h` is the strain argument.
pub fn eval_functional(
    kind: FunctionalKind,
    model: &ViscosityModel,
    mu_fn: &MuFunction,
    space: &FeSpace,
    lifting: &[f64],
    e_field: EField,
    v: &[f64],
    h: &[f64],
) -> Result<f64> {
    let vt: Vec<f64> = v.iter().zip(lifting).map(|(a, b)| a + b).collect();
    let ht: Vec<f64> = h.iter().zip(lifting).map(|(a, b)| a + b).collect();
    let sampler = mu_fn.mollifier.as_ref().map(|_| FieldSampler::new(space, &vt));
    let rule = triangle_rule_degree6();
    let lambda = match kind {
        FunctionalKind::J | FunctionalKind::Y => 0.0,
        FunctionalKind::JLambda | FunctionalKind::YLambda => model.lambda(),
    };
    let mut out = 0.0;
    for el in 0..space.mesh.triangles.len() {
        let basis = element_basis(space, el, rule);
        let edofs = space.element_dofs(el);
        for (iq, qp) in basis.iter().enumerate() {
            let e = e_field.eval(el, iq, rule.len(), qp.x);
            let abs_e = (e[0] * e[0] + e[1] * e[1]).sqrt();
            let b = match kind {
                FunctionalKind::J | FunctionalKind::JLambda => {
                    let mu = if abs_e < DEFAULT_EPS_E {
                        0.0
                    } else if mu_fn.mollifier.is_some() {
                        let s = sampler.as_ref().unwrap();
                        mu_fn.eval_mollified(&|p| s.eval(p), &|_| e, qp.x)?
                    } else {
                        mu_fn.eval(velocity_value(space, &edofs, qp, &vt), e)?
                    };
                    match model {
                        ViscosityModel::RegularizedBingham { yield_coef, .. }
                        | ViscosityModel::SingularBingham { yield_coef, .. }
                        | ViscosityModel::ExtendedBingham { yield_coef, .. } => {
                            yield_coef.eval(abs_e, mu)
                        }
                        _ => {
                            return Err(Error::InvalidConfig(
                                "functional J needs a Bingham-type yield coefficient".into(),
                            ))
                        }
                    }
                }
                FunctionalKind::Y | FunctionalKind::YLambda => match model {
                    ViscosityModel::GivenMu { e: ef, .. } => ef(abs_e, qp.x),
                    _ => {
                        return Err(Error::InvalidConfig(
                            "functional Y needs the anisotropic (given-μ) model".into(),
                        ))
                    }
                },
            };
            let eps_h = strain_rate(velocity_gradient(space, &edofs, qp, &ht));
            out += 2.0 * qp.w * b * (lambda + invariant_i(eps_h)).sqrt();
        }
    }
    Ok(out)
}

/// The auxiliary functional `Ψ(h, u) = ∫ h(x) I(u)^{1/2} dx` for a scalar
/// weight `h` and a velocity dof vector `u`.
pub fn eval_psi(space: &FeSpace, h: &dyn Fn([f64; 2]) -> f64, u: &[f64]) -> f64 {
    let rule = triangle_rule_degree6();
    let mut out = 0.0;
    for el in 0..space.mesh.triangles.len() {
        let basis = element_basis(space, el, rule);
        let edofs = space.element_dofs(el);
        for qp in &basis {
            let eps = strain_rate(velocity_gradient(space, &edofs, qp, u));
            out += qp.w * h(qp.x) * invariant_i(eps).sqrt();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemble::{assemble_strain_gram, norm_x};
    use crate::mesh::{build_rectangle_mesh, BoundaryTag, SplitRule};
    use crate::sparse::{dot, LuFactor};
    use crate::viscosity::{CoefFn, RegularModel, ShearFn};
    use rand::{Rng, SeedableRng};
    use std::sync::Arc;

    fn unit_square(n: usize) -> std::sync::Arc<crate::mesh::Mesh2D> {
        std::sync::Arc::new(
            build_rectangle_mesh(1.0, 1.0, n, n, SplitRule::Crossed, &|_| BoundaryTag::Dirichlet)
                .unwrap(),
        )
    }

    /// ψ₁(I) = 1 + 1/(1+I): satisfies (C1) with
    /// a₁ = 1, a₂ = 2, a₃ = 7/8, a₄ = 1/4.
    fn test_regular() -> RegularModel {
        RegularModel {
            terms: vec![(
                CoefFn::Constant(1.0),
                ShearFn::Custom {
                    f: Arc::new(|i| 1.0 + 1.0 / (1.0 + i)),
                    df: Some(Arc::new(|i| -1.0 / ((1.0 + i) * (1.0 + i)))),
                },
            )],
            a1: 1.0,
            a2: 2.0,
            a3: 0.875,
            a4: 0.25,
        }
    }

    fn ctx<'a>(
        kind: OperatorKind,
        model: &'a ViscosityModel,
        mu_fn: &'a MuFunction,
        space: &'a FeSpace,
        lifting: &'a [f64],
        e_field: EField<'a>,
    ) -> OperatorContext<'a> {
        OperatorContext { kind, model, mu_fn, space, lifting, e_field, frozen: None }
    }

    #[test]
    fn residual_vanishes_at_zero_state() {
        let mesh = unit_square(2);
        let space = FeSpace::p2_vector(mesh);
        let zero = vec![0.0; space.n_dofs()];
        let mu_fn = MuFunction::default();
        let e = |_: [f64; 2]| [1.0, 0.5];
        let models: Vec<(OperatorKind, ViscosityModel)> = vec![
            (OperatorKind::Lv, ViscosityModel::Regular(test_regular())),
            (
                OperatorKind::L,
                ViscosityModel::RegularizedBingham {
                    yield_coef: CoefFn::Constant(0.5),
                    a5: 0.5,
                    psi: test_regular(),
                    lambda: 0.3,
                },
            ),
            (
                OperatorKind::DJLambda,
                ViscosityModel::RegularizedBingham {
                    yield_coef: CoefFn::Constant(0.5),
                    a5: 0.5,
                    psi: test_regular(),
                    lambda: 0.3,
                },
            ),
            (
                OperatorKind::L1,
                ViscosityModel::ExtendedBingham {
                    yield_coef: CoefFn::Constant(0.5),
                    a5: 0.5,
                    plastic: CoefFn::Constant(2.0),
                    a6: 1.0,
                    a7: 3.0,
                    lambda: 0.1,
                },
            ),
        ];
        for (kind, model) in &models {
            let c = ctx(*kind, model, &mu_fn, &space, &zero, EField::Fn(&e));
            let r = c.residual(&zero).unwrap();
            assert!(r.iter().all(|x| x.abs() < 1e-14), "{kind:?}");
        }
    }

    #[test]
    fn constant_viscosity_reduces_to_strain_gram() {
        let mesh = unit_square(2);
        let space = FeSpace::p2_vector(mesh);
        let cval = 1.7;
        let model = ViscosityModel::Regular(RegularModel::constant(cval));
        let mu_fn = MuFunction::default();
        let zero = vec![0.0; space.n_dofs()];
        let c = ctx(OperatorKind::Lv, &model, &mu_fn, &space, &zero, EField::Zero);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let v: Vec<f64> = (0..space.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = c.residual(&v).unwrap();
        let k = assemble_strain_gram(&space);
        let kr = k.matvec(&v);
        for (a, b) in r.iter().zip(&kr) {
            assert!((a - 2.0 * cval * b).abs() < 1e-11);
        }
    }

    #[test]
    fn tangent_matches_finite_differences() {
        let mesh = unit_square(1);
        let space = FeSpace::p2_vector(mesh);
        let mu_fn = MuFunction { alpha: 0.05, ..MuFunction::default() };
        let e = |x: [f64; 2]| [0.5 + x[0], 1.0 - 0.3 * x[1]];
        let lifting = space.interpolate_vector(&|x| [0.1 * x[1], 0.0]);
        let model_bingham = ViscosityModel::RegularizedBingham {
            yield_coef: CoefFn::Constant(0.5),
            a5: 0.5,
            psi: test_regular(),
            lambda: 0.3,
        };
        let model_given = ViscosityModel::GivenMu {
            e: Arc::new(|abs_e, x| 0.2 * abs_e.min(2.0) * (1.0 + 0.5 * x[0])),
            a5: 1.0,
            psi1: Arc::new(|i, abs_e, x| 1.0 + 1.0 / (1.0 + i) + 0.1 * abs_e.min(1.0) * x[1]),
            dpsi1: Some(Arc::new(|i, _, _| -1.0 / ((1.0 + i) * (1.0 + i)))),
            lambda: 0.2,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let frozen: Vec<f64> = (0..space.n_dofs()).map(|_| rng.gen_range(-0.3..0.3)).collect();
        // Exact tangents: kinds whose coefficients do not depend on v
        // through μ (frozen direction or x-dependent coefficients).
        let cases: Vec<(OperatorKind, &ViscosityModel)> = vec![
            (OperatorKind::Lv, &model_bingham),
            (OperatorKind::DJLambda, &model_bingham),
            (OperatorKind::L2, &model_given),
            (OperatorKind::DYLambda, &model_given),
        ];
        for (kind, model) in cases {
            let c = OperatorContext {
                kind,
                model,
                mu_fn: &mu_fn,
                space: &space,
                lifting: &lifting,
                e_field: EField::Fn(&e),
                frozen: Some(&frozen),
            };
            let v: Vec<f64> = (0..space.n_dofs()).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let t = c.tangent(&v).unwrap();
            let r0 = c.residual(&v).unwrap();
            for _ in 0..10 {
                let w: Vec<f64> =
                    (0..space.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let delta = 1e-6;
                let vp: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a + delta * b).collect();
                let rp = c.residual(&vp).unwrap();
                let tw = t.matvec(&w);
                let fd: Vec<f64> = rp.iter().zip(&r0).map(|(a, b)| (a - b) / delta).collect();
                let num = fd
                    .iter()
                    .zip(&tw)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let den = tw.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!(num <= 1e-5 * den.max(1e-8), "{kind:?}: {num} vs {den}");
            }
        }
    }

    #[test]
    fn strong_monotonicity_and_lipschitz_bounds() {
        // Lemma-level bounds for the frozen-direction operator L_v on a
        // coarse mesh: μ₁ = min(2a₁, 2a₃), μ₂ = 2a₂ + 4a₄.
        let mesh = unit_square(2);
        let space = FeSpace::p2_vector(mesh);
        let model = ViscosityModel::Regular(test_regular());
        let (a1, a2, a3, a4) = (1.0, 2.0, 0.875, 0.25);
        let mu1 = f64::min(2.0 * a1, 2.0 * a3);
        let mu2 = 2.0 * a2 + 4.0 * a4;
        let mu_fn = MuFunction { alpha: 0.05, ..MuFunction::default() };
        let e = |_: [f64; 2]| [1.0, 2.0];
        let zero = vec![0.0; space.n_dofs()];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let frozen: Vec<f64> = (0..space.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c = OperatorContext {
            kind: OperatorKind::Lv,
            model: &model,
            mu_fn: &mu_fn,
            space: &space,
            lifting: &zero,
            e_field: EField::Fn(&e),
            frozen: Some(&frozen),
        };
        // Dual X-norm via the strain Gram matrix restricted to interior dofs.
        let free: Vec<usize> = {
            let wall = space.boundary_scalar_dofs(&|t| t.is_wall());
            let ns = space.n_scalar();
            (0..2 * ns)
                .filter(|d| !wall.binary_search(&(d % ns)).is_ok())
                .collect()
        };
        let k = assemble_strain_gram(&space).restrict(&free);
        let klu = LuFactor::new(&k).unwrap();
        for _ in 0..50 {
            let u: Vec<f64> = (0..space.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..space.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let ru = c.residual(&u).unwrap();
            let rw = c.residual(&w).unwrap();
            let duv: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a - b).collect();
            let dr: Vec<f64> = ru.iter().zip(&rw).map(|(a, b)| a - b).collect();
            let nx = norm_x(&space, &duv);
            // strong monotonicity
            assert!(dot(&dr, &duv) >= mu1 * nx * nx - 1e-10);
            // Lipschitz in the dual norm, over the constrained subspace
            let dr_free: Vec<f64> = free.iter().map(|&d| dr[d]).collect();
            let kinv = klu.solve(&dr_free);
            let dual = dot(&dr_free, &kinv).max(0.0).sqrt();
            // duv is not constrained to the subspace, so compare against the
            // full-field X-norm (an upper bound for the projection).
            assert!(dual <= mu2 * nx + 1e-10);
        }
    }

    #[test]
    fn c2_monotonicity_in_integral_form() {
        // (L_v(u) − L_v(w), u−w) ≥ 2a₃ ∫ [I(u+ṽ)^{1/2} − I(w+ṽ)^{1/2}]² dx.
        let mesh = unit_square(2);
        let space = FeSpace::p2_vector(mesh.clone());
        let model = ViscosityModel::Regular(test_regular());
        let a3 = 0.875;
        let mu_fn = MuFunction { alpha: 0.1, ..MuFunction::default() };
        let e = |_: [f64; 2]| [0.7, -0.4];
        let lifting = space.interpolate_vector(&|x| [0.2 * x[1] * (1.0 - x[1]), 0.0]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
        let frozen: Vec<f64> = (0..space.n_dofs()).map(|_| rng.gen_range(-0.4..0.4)).collect();
        let c = OperatorContext {
            kind: OperatorKind::Lv,
            model: &model,
            mu_fn: &mu_fn,
            space: &space,
            lifting: &lifting,
            e_field: EField::Fn(&e),
            frozen: Some(&frozen),
        };
        let rule = triangle_rule_degree6();
        for _ in 0..10 {
            let u: Vec<f64> = (0..space.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..space.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let ru = c.residual(&u).unwrap();
            let rw = c.residual(&w).unwrap();
            let lhs: f64 = ru
                .iter()
                .zip(&rw)
                .zip(u.iter().zip(&w))
                .map(|((a, b), (x, y))| (a - b) * (x - y))
                .sum();
            let ut: Vec<f64> = u.iter().zip(&lifting).map(|(a, b)| a + b).collect();
            let wt: Vec<f64> = w.iter().zip(&lifting).map(|(a, b)| a + b).collect();
            let mut rhs = 0.0;
            for el in 0..mesh.triangles.len() {
                let basis = element_basis(&space, el, rule);
                let edofs = space.element_dofs(el);
                for qp in &basis {
                    let iu = invariant_i(strain_rate(velocity_gradient(&space, &edofs, qp, &ut)));
                    let iw = invariant_i(strain_rate(velocity_gradient(&space, &edofs, qp, &wt)));
                    let d = iu.sqrt() - iw.sqrt();
                    rhs += qp.w * d * d;
                }
            }
            assert!(lhs >= 2.0 * a3 * rhs - 1e-9, "{lhs} vs {}", 2.0 * a3 * rhs);
        }
    }

    #[test]
    fn regularized_yield_operator_bounds() {
        // Monotone; Lipschitz with α = 2a₅λ^{−1/2}; bounded by (∫b²)^{1/2}
        // in the dual norm (the paper's constants for the operator built
        // from the yield coefficient, which our dJ_λ doubles: r = 2 L_λ).
        let mesh = unit_square(2);
        let space = FeSpace::p2_vector(mesh);
        let lambda = 0.4;
        let b0 = 0.6;
        let model = ViscosityModel::RegularizedBingham {
            yield_coef: CoefFn::Constant(b0),
            a5: b0,
            psi: test_regular(),
            lambda,
        };
        let mu_fn = MuFunction::default();
        let zero = vec![0.0; space.n_dofs()];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(44);
        let frozen: Vec<f64> = (0..space.n_dofs()).map(|_| rng.gen_range(-0.2..0.2)).collect();
        let c = OperatorContext {
            kind: OperatorKind::DJLambda,
            model: &model,
            mu_fn: &mu_fn,
            space: &space,
            lifting: &zero,
            e_field: EField::Zero,
            frozen: Some(&frozen),
        };
        let free: Vec<usize> = {
            let wall = space.boundary_scalar_dofs(&|t| t.is_wall());
            let ns = space.n_scalar();
            (0..2 * ns)
                .filter(|d| !wall.binary_search(&(d % ns)).is_ok())
                .collect()
        };
        let k = assemble_strain_gram(&space).restrict(&free);
        let klu = LuFactor::new(&k).unwrap();
        let alpha = 2.0 * b0 * lambda.powf(-0.5);
        let bound = (b0 * b0 * 1.0f64).sqrt(); // (∫ b² dx)^{1/2} on the unit square
        for _ in 0..30 {
            let u: Vec<f64> = (0..space.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..space.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let ru = c.residual(&u).unwrap();
            let rw = c.residual(&w).unwrap();
            let duv: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a - b).collect();
            let dr: Vec<f64> = ru.iter().zip(&rw).map(|(a, b)| a - b).collect();
            // monotone
            assert!(dot(&dr, &duv) >= -1e-10);
            // Lipschitz (residual = 2·L_λ, so halve it)
            let dr_free: Vec<f64> = free.iter().map(|&d| 0.5 * dr[d]).collect();
            let dual = dot(&dr_free, &klu.solve(&dr_free)).max(0.0).sqrt();
            assert!(dual <= alpha * norm_x(&space, &duv) + 1e-10);
            // uniform bound
            let r_free: Vec<f64> = free.iter().map(|&d| 0.5 * ru[d]).collect();
            let nrm = dot(&r_free, &klu.solve(&r_free)).max(0.0).sqrt();
            assert!(nrm <= bound + 1e-10);
        }
    }

    #[test]
    fn yield_functional_values_and_convexity() {
        let mesh = unit_square(2);
        let space = FeSpace::p2_vector(mesh);
        let model = ViscosityModel::RegularizedBingham {
            yield_coef: CoefFn::Constant(1.0),
            a5: 1.0,
            psi: test_regular(),
            lambda: 0.25,
        };
        let mu_fn = MuFunction::default();
        let zero = vec![0.0; space.n_dofs()];
        // unit simple shear: I = ½ ⇒ J = 2·(1/2)^{1/2} = √2
        let shear = space.interpolate_vector(&|x| [x[1], 0.0]);
        let j = eval_functional(
            FunctionalKind::J,
            &model,
            &mu_fn,
            &space,
            &zero,
            EField::Zero,
            &zero,
            &shear,
        )
        .unwrap();
        assert!((j - 2.0f64.sqrt()).abs() < 1e-12);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(55);
        for _ in 0..20 {
            let v: Vec<f64> = (0..space.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let h1: Vec<f64> = (0..space.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let h2: Vec<f64> = (0..space.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            // λ = 0 gives J back
            let m0 = model.with_lambda(1e-300); // effectively zero
            let jj = |m: &ViscosityModel, kind, h: &Vec<f64>| {
                eval_functional(kind, m, &mu_fn, &space, &zero, EField::Zero, &v, h).unwrap()
            };
            let j_plain = jj(&model, FunctionalKind::J, &h1);
            let j_zero_lambda = jj(&m0, FunctionalKind::JLambda, &h1);
            assert!((j_plain - j_zero_lambda).abs() < 1e-10);
            // monotone in λ
            let j_l1 = jj(&model.with_lambda(0.5), FunctionalKind::JLambda, &h1);
            let j_l2 = jj(&model.with_lambda(0.1), FunctionalKind::JLambda, &h1);
            assert!(j_l1 >= j_l2);
            assert!(j_l2 >= j_plain);
            // convexity in h
            for theta in [0.25, 0.5, 0.75] {
                let hm: Vec<f64> = h1
                    .iter()
                    .zip(&h2)
                    .map(|(a, b)| theta * a + (1.0 - theta) * b)
                    .collect();
                let lhs = jj(&model, FunctionalKind::J, &hm);
                let rhs = theta * jj(&model, FunctionalKind::J, &h1)
                    + (1.0 - theta) * jj(&model, FunctionalKind::J, &h2);
                assert!(lhs <= rhs + 1e-12);
            }
        }
    }

    #[test]
    fn functional_gateaux_derivative_consistency() {
        // d/dt J_λ(v, v+tw)|₀ = (∂J_λ/∂h(v, v), w)
        let mesh = unit_square(1);
        let space = FeSpace::p2_vector(mesh);
        let model = ViscosityModel::RegularizedBingham {
            yield_coef: CoefFn::Constant(0.7),
            a5: 0.7,
            psi: test_regular(),
            lambda: 0.3,
        };
        let mu_fn = MuFunction { alpha: 0.05, ..MuFunction::default() };
        let e = |_: [f64; 2]| [1.0, 0.3];
        let lifting = space.interpolate_vector(&|x| [0.1 * x[1], 0.05 * x[0]]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(66);
        let v: Vec<f64> = (0..space.n_dofs()).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let c = OperatorContext {
            kind: OperatorKind::DJLambda,
            model: &model,
            mu_fn: &mu_fn,
            space: &space,
            lifting: &lifting,
            e_field: EField::Fn(&e),
            frozen: Some(&v),
        };
        let grad = c.residual(&v).unwrap();
        for _ in 0..5 {
            let w: Vec<f64> = (0..space.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let t = 1e-6;
            let eval_at = |s: f64| {
                let h: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a + s * b).collect();
                eval_functional(
                    FunctionalKind::JLambda,
                    &model,
                    &mu_fn,
                    &space,
                    &lifting,
                    EField::Fn(&e),
                    &v,
                    &h,
                )
                .unwrap()
            };
            let fd = (eval_at(t) - eval_at(-t)) / (2.0 * t);
            let pairing = dot(&grad, &w);
            assert!(
                (fd - pairing).abs() <= 1e-6 * pairing.abs().max(1e-6),
                "{fd} vs {pairing}"
            );
        }
    }

    #[test]
    fn psi_functional_simple_shear() {
        let mesh = unit_square(2);
        let space = FeSpace::p2_vector(mesh);
        let u = space.interpolate_vector(&|x| [x[1], 0.0]);
        // I = ½ ⇒ Ψ(1, u) = (1/2)^{1/2}
        let psi = eval_psi(&space, &|_| 1.0, &u);
        assert!((psi - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn singular_model_reports_element() {
        let mesh = unit_square(1);
        let space = FeSpace::p2_vector(mesh);
        let model = ViscosityModel::SingularBingham {
            yield_coef: CoefFn::Constant(1.0),
            a5: 1.0,
            psi: test_regular(),
        };
        let mu_fn = MuFunction::default();
        let zero = vec![0.0; space.n_dofs()];
        let c = ctx(OperatorKind::DJLambda, &model, &mu_fn, &space, &zero, EField::Zero);
        match c.residual(&zero) {
            Err(Error::NonlinearSolve(msg)) => assert!(msg.contains("element")),
            other => panic!("expected singularity error, got {other:?}"),
        }
    }
}
