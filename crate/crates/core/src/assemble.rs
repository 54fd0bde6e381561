//! Assembly of the linear(ized) bilinear forms: stiffness, mass, divergence,
//! strain-rate Gram matrix, and load vectors, plus the pointwise strain-rate
//! kinematics shared by all solvers.

use crate::error::{Error, Result};
use crate::mesh::BoundaryTag;
use crate::quadrature::{edge_rule, triangle_rule_degree4};
use crate::space::{element_basis, FeSpace, QpBasis};
use crate::sparse::{SparseMatrix, Triplets};

/// Strain-rate tensor ε(u) = ½(∇u + ∇uᵀ) from a velocity gradient
/// `grad[i][j] = ∂uᵢ/∂xⱼ`.
pub fn strain_rate(grad: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let off = 0.5 * (grad[0][1] + grad[1][0]);
    [[grad[0][0], off], [off, grad[1][1]]]
}

/// Second invariant I(u) = Σᵢⱼ εᵢⱼ²; the shear rate is `(I/2)^{1/2}`.
pub fn invariant_i(eps: [[f64; 2]; 2]) -> f64 {
    eps[0][0] * eps[0][0] + 2.0 * eps[0][1] * eps[0][1] + eps[1][1] * eps[1][1]
}

/// Frobenius contraction of two symmetric 2×2 tensors.
pub fn contract(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

/// Velocity gradient of a dof vector `u` at one quadrature point of element
/// with scalar dofs `edofs` (first `n_local` valid).
pub fn velocity_gradient(
    space: &FeSpace,
    edofs: &[usize; 6],
    qp: &QpBasis,
    u: &[f64],
) -> [[f64; 2]; 2] {
    let ns = space.n_scalar();
    let n = space.local_size();
    let mut g = [[0.0; 2]; 2];
    for k in 0..n {
        let ux = u[edofs[k]];
        let uy = u[ns + edofs[k]];
        g[0][0] += ux * qp.grads[k][0];
        g[0][1] += ux * qp.grads[k][1];
        g[1][0] += uy * qp.grads[k][0];
        g[1][1] += uy * qp.grads[k][1];
    }
    g
}

/// Value of a vector dof field at one quadrature point.
pub fn velocity_value(space: &FeSpace, edofs: &[usize; 6], qp: &QpBasis, u: &[f64]) -> [f64; 2] {
    let ns = space.n_scalar();
    let n = space.local_size();
    let mut v = [0.0; 2];
    for k in 0..n {
        v[0] += u[edofs[k]] * qp.vals[k];
        v[1] += u[ns + edofs[k]] * qp.vals[k];
    }
    v
}

/// Value of a scalar dof field at one quadrature point.
pub fn scalar_value(space: &FeSpace, edofs: &[usize; 6], qp: &QpBasis, z: &[f64]) -> f64 {
    (0..space.local_size()).map(|k| z[edofs[k]] * qp.vals[k]).sum()
}

/// Gradient of a scalar dof field at one quadrature point.
pub fn scalar_gradient(
    space: &FeSpace,
    edofs: &[usize; 6],
    qp: &QpBasis,
    z: &[f64],
) -> [f64; 2] {
    let n = space.local_size();
    let mut g = [0.0; 2];
    for k in 0..n {
        g[0] += z[edofs[k]] * qp.grads[k][0];
        g[1] += z[edofs[k]] * qp.grads[k][1];
    }
    g
}

fn check_shared_mesh(a: &FeSpace, b: &FeSpace) -> Result<()> {
    if std::sync::Arc::ptr_eq(&a.mesh, &b.mesh) || *a.mesh == *b.mesh {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(
            "spaces are built on different meshes".into(),
        ))
    }
}

/// Assembles the scalar stiffness matrix `∫ ε(x) ∇u·∇h dx`.
/// The coefficient must be strictly positive at every quadrature point.
pub fn assemble_scalar_stiffness(
    space: &FeSpace,
    coefficient: &dyn Fn([f64; 2]) -> f64,
) -> Result<SparseMatrix> {
    assert_eq!(space.components, 1, "scalar stiffness needs a scalar space");
    let n = space.n_dofs();
    let nloc = space.local_size();
    let mut t = Triplets::new(n, n);
    for el in 0..space.mesh.triangles.len() {
        let basis = element_basis(space, el, triangle_rule_degree4());
        let edofs = space.element_dofs(el);
        for qp in &basis {
            let c = coefficient(qp.x);
            if !(c > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "coefficient is non-positive ({c}) at quadrature point ({}, {})",
                    qp.x[0], qp.x[1]
                )));
            }
            for k in 0..nloc {
                for l in 0..nloc {
                    let v = c * qp.w
                        * (qp.grads[k][0] * qp.grads[l][0] + qp.grads[k][1] * qp.grads[l][1]);
                    t.push(edofs[k], edofs[l], v);
                }
            }
        }
    }
    Ok(t.into_csr())
}

/// Assembles the component-wise vector Laplacian
/// `(Au, h) = ∫ g(x) (∂uᵢ/∂xⱼ)(∂hᵢ/∂xⱼ) dx`; block-diagonal over components.
pub fn assemble_vector_laplacian(
    space: &FeSpace,
    coefficient: &dyn Fn([f64; 2]) -> f64,
) -> Result<SparseMatrix> {
    assert_eq!(space.components, 2, "vector laplacian needs a vector space");
    let scalar = FeSpace {
        mesh: space.mesh.clone(),
        edges: space.edges.clone(),
        degree: space.degree,
        components: 1,
    };
    let block = assemble_scalar_stiffness(&scalar, coefficient)?;
    let ns = space.n_scalar();
    let mut t = Triplets::new(2 * ns, 2 * ns);
    for comp in 0..2 {
        let off = comp * ns;
        for i in 0..ns {
            for k in block.indptr[i]..block.indptr[i + 1] {
                t.push(off + i, off + block.indices[k], block.values[k]);
            }
        }
    }
    Ok(t.into_csr())
}

/// Assembles the divergence matrix `(Bu, ψ) = ∫ ψ div u dx` with rows
/// indexed by pressure dofs and columns by velocity dofs.
pub fn assemble_divergence(
    velocity_space: &FeSpace,
    pressure_space: &FeSpace,
) -> Result<SparseMatrix> {
    check_shared_mesh(velocity_space, pressure_space)?;
    assert_eq!(velocity_space.components, 2);
    assert_eq!(pressure_space.components, 1);
    let ns = velocity_space.n_scalar();
    let mut t = Triplets::new(pressure_space.n_dofs(), velocity_space.n_dofs());
    let nv = velocity_space.local_size();
    let np = pressure_space.local_size();
    for el in 0..velocity_space.mesh.triangles.len() {
        let vb = element_basis(velocity_space, el, triangle_rule_degree4());
        let pb = element_basis(pressure_space, el, triangle_rule_degree4());
        let vdofs = velocity_space.element_dofs(el);
        let pdofs = pressure_space.element_dofs(el);
        for (qv, qq) in vb.iter().zip(&pb) {
            for q in 0..np {
                let psi = qq.vals[q] * qv.w;
                for k in 0..nv {
                    // div contribution of component 0 basis: ∂N_k/∂x
                    t.push(pdofs[q], vdofs[k], psi * qv.grads[k][0]);
                    // component 1 basis: ∂N_k/∂y
                    t.push(pdofs[q], ns + vdofs[k], psi * qv.grads[k][1]);
                }
            }
        }
    }
    Ok(t.into_csr())
}

/// Assembles the mass matrix `∫ u h dx` (scalar or component-blocked vector).
pub fn assemble_mass(space: &FeSpace) -> SparseMatrix {
    let ns = space.n_scalar();
    let nloc = space.local_size();
    let n = space.n_dofs();
    let mut t = Triplets::new(n, n);
    for el in 0..space.mesh.triangles.len() {
        let basis = element_basis(space, el, triangle_rule_degree4());
        let edofs = space.element_dofs(el);
        for qp in &basis {
            for k in 0..nloc {
                for l in 0..nloc {
                    let v = qp.w * qp.vals[k] * qp.vals[l];
                    for comp in 0..space.components {
                        t.push(comp * ns + edofs[k], comp * ns + edofs[l], v);
                    }
                }
            }
        }
    }
    t.into_csr()
}

/// Assembles the strain-rate Gram matrix `K` with `(Ku, h) = ∫ ε(u):ε(h) dx`,
/// so that `‖u‖_X = √(uᵀKu)`.
pub fn assemble_strain_gram(space: &FeSpace) -> SparseMatrix {
    assert_eq!(space.components, 2);
    let ns = space.n_scalar();
    let nloc = space.local_size();
    let mut t = Triplets::new(2 * ns, 2 * ns);
    for el in 0..space.mesh.triangles.len() {
        let basis = element_basis(space, el, triangle_rule_degree4());
        let edofs = space.element_dofs(el);
        for qp in &basis {
            // ε(basis of component c, shape k): symmetric part of the matrix
            // with row c equal to ∇N_k.
            for k in 0..nloc {
                let gk = qp.grads[k];
                for l in 0..nloc {
                    let gl = qp.grads[l];
                    // same-component blocks (c, c):
                    // ε_kc : ε_lc = ∂N_k/∂x_c ∂N_l/∂x_c + ½ Σ_{j≠c} ∂N_k/∂x_j ∂N_l/∂x_j
                    let xx = gk[0] * gl[0] + 0.5 * gk[1] * gl[1];
                    let yy = gk[1] * gl[1] + 0.5 * gk[0] * gl[0];
                    // cross blocks (0,1): ½ ∂N_k/∂y ∂N_l/∂x
                    let xy = 0.5 * gk[1] * gl[0];
                    let yx = 0.5 * gk[0] * gl[1];
                    t.push(edofs[k], edofs[l], qp.w * xx);
                    t.push(ns + edofs[k], ns + edofs[l], qp.w * yy);
                    t.push(edofs[k], ns + edofs[l], qp.w * xy);
                    t.push(ns + edofs[k], edofs[l], qp.w * yx);
                }
            }
        }
    }
    t.into_csr()
}

/// Assembles the grad-div matrix `∫ div u · div h dx` used by the augmented
/// Lagrangian solver.
pub fn assemble_divdiv(space: &FeSpace) -> SparseMatrix {
    assert_eq!(space.components, 2);
    let ns = space.n_scalar();
    let nloc = space.local_size();
    let mut t = Triplets::new(2 * ns, 2 * ns);
    for el in 0..space.mesh.triangles.len() {
        let basis = element_basis(space, el, triangle_rule_degree4());
        let edofs = space.element_dofs(el);
        for qp in &basis {
            for k in 0..nloc {
                for l in 0..nloc {
                    for ck in 0..2 {
                        for cl in 0..2 {
                            t.push(
                                ck * ns + edofs[k],
                                cl * ns + edofs[l],
                                qp.w * qp.grads[k][ck] * qp.grads[l][cl],
                            );
                        }
                    }
                }
            }
        }
    }
    t.into_csr()
}

/// Strain-energy seminorm `‖u‖_X = (∫ I(u) dx)^{1/2}`.
pub fn norm_x(space: &FeSpace, u: &[f64]) -> f64 {
    assert_eq!(space.components, 2);
    assert_eq!(u.len(), space.n_dofs());
    let mut total = 0.0;
    for el in 0..space.mesh.triangles.len() {
        let basis = element_basis(space, el, triangle_rule_degree4());
        let edofs = space.element_dofs(el);
        for qp in &basis {
            let eps = strain_rate(velocity_gradient(space, &edofs, qp, u));
            total += qp.w * invariant_i(eps);
        }
    }
    total.max(0.0).sqrt()
}

/// L² norm of a dof field.
pub fn norm_l2(space: &FeSpace, u: &[f64]) -> f64 {
    assert_eq!(u.len(), space.n_dofs());
    let mut total = 0.0;
    for el in 0..space.mesh.triangles.len() {
        let basis = element_basis(space, el, triangle_rule_degree4());
        let edofs = space.element_dofs(el);
        for qp in &basis {
            if space.components == 1 {
                let v = scalar_value(space, &edofs, qp, u);
                total += qp.w * v * v;
            } else {
                let v = velocity_value(space, &edofs, qp, u);
                total += qp.w * (v[0] * v[0] + v[1] * v[1]);
            }
        }
    }
    total.max(0.0).sqrt()
}

/// Mean value of a scalar dof field over the domain.
pub fn mean_value(space: &FeSpace, z: &[f64]) -> f64 {
    assert_eq!(space.components, 1);
    let mut total = 0.0;
    let mut area = 0.0;
    for el in 0..space.mesh.triangles.len() {
        let basis = element_basis(space, el, triangle_rule_degree4());
        let edofs = space.element_dofs(el);
        for qp in &basis {
            total += qp.w * scalar_value(space, &edofs, qp, z);
            area += qp.w;
        }
    }
    total / area
}

/// Assembles the volume load `∫ f · h dx` for a vector space.
pub fn assemble_volume_load(space: &FeSpace, f: &dyn Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
    assert_eq!(space.components, 2);
    let ns = space.n_scalar();
    let nloc = space.local_size();
    let mut b = vec![0.0; 2 * ns];
    for el in 0..space.mesh.triangles.len() {
        let basis = element_basis(space, el, triangle_rule_degree4());
        let edofs = space.element_dofs(el);
        for qp in &basis {
            let fv = f(qp.x);
            for k in 0..nloc {
                b[edofs[k]] += qp.w * qp.vals[k] * fv[0];
                b[ns + edofs[k]] += qp.w * qp.vals[k] * fv[1];
            }
        }
    }
    b
}

/// Assembles the scalar volume load `∫ f h dx`.
pub fn assemble_scalar_load(space: &FeSpace, f: &dyn Fn([f64; 2]) -> f64) -> Vec<f64> {
    assert_eq!(space.components, 1);
    let nloc = space.local_size();
    let mut b = vec![0.0; space.n_dofs()];
    for el in 0..space.mesh.triangles.len() {
        let basis = element_basis(space, el, triangle_rule_degree4());
        let edofs = space.element_dofs(el);
        for qp in &basis {
            let fv = f(qp.x);
            for k in 0..nloc {
                b[edofs[k]] += qp.w * qp.vals[k] * fv;
            }
        }
    }
    b
}

/// Values and weights of the P2 trace basis on a boundary edge at the edge
/// quadrature points: returns `(point, weight·length, [N_a, N_b, N_mid])`.
fn edge_trace(
    space: &FeSpace,
    a: usize,
    b: usize,
) -> Vec<([f64; 2], f64, [f64; 3])> {
    let p = space.mesh.nodes[a];
    let q = space.mesh.nodes[b];
    let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
    edge_rule()
        .iter()
        .map(|&(s, w)| {
            let x = [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])];
            let shapes = if space.degree == 1 {
                [1.0 - s, s, 0.0]
            } else {
                [(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)]
            };
            (x, w * len, shapes)
        })
        .collect()
}

/// Assembles the boundary traction load `∫_Γ F · h ds` over boundary edges
/// whose tag satisfies `pred`.
pub fn assemble_traction_load(
    space: &FeSpace,
    pred: &dyn Fn(BoundaryTag) -> bool,
    traction: &dyn Fn([f64; 2], BoundaryTag) -> [f64; 2],
) -> Vec<f64> {
    assert_eq!(space.components, 2);
    let ns = space.n_scalar();
    let nn = space.mesh.nodes.len();
    let mut b = vec![0.0; 2 * ns];
    for e in &space.mesh.boundary_edges {
        if !pred(e.tag) {
            continue;
        }
        let [na, nb] = e.nodes;
        let mid = if space.degree == 2 {
            Some(nn + space.edges.edge_id(na, nb).expect("boundary edge in edge table"))
        } else {
            None
        };
        for (x, w, shapes) in edge_trace(space, na, nb) {
            let f = traction(x, e.tag);
            let dofs = [Some(na), Some(nb), mid];
            for (k, d) in dofs.iter().enumerate() {
                if let Some(d) = d {
                    b[*d] += w * shapes[k] * f[0];
                    b[ns + *d] += w * shapes[k] * f[1];
                }
            }
        }
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rectangle_mesh, SplitRule};
    use crate::sparse::dot;
    use std::sync::Arc;

    fn unit_square(n: usize) -> Arc<crate::mesh::Mesh2D> {
        Arc::new(
            build_rectangle_mesh(1.0, 1.0, n, n, SplitRule::Crossed, &|_| BoundaryTag::Dirichlet)
                .unwrap(),
        )
    }

    #[test]
    fn stiffness_row_sums_vanish_and_scale_linearly() {
        let mesh = unit_square(2);
        let space = FeSpace::p1_scalar(mesh);
        let a1 = assemble_scalar_stiffness(&space, &|_| 1.0).unwrap();
        let ones = vec![1.0; space.n_dofs()];
        for v in a1.matvec(&ones) {
            assert!(v.abs() < 1e-13);
        }
        let a2 = assemble_scalar_stiffness(&space, &|_| 2.0).unwrap();
        for i in 0..a1.nrows {
            for k in a1.indptr[i]..a1.indptr[i + 1] {
                let j = a1.indices[k];
                assert!((a2.get(i, j) - 2.0 * a1.values[k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn local_stiffness_on_reference_triangle() {
        // Single right triangle (0,0), (1,0), (0,1); P1, unit coefficient.
        let mesh = Arc::new(
            crate::mesh::Mesh2D::new(
                vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
                vec![[0, 1, 2]],
                vec![
                    crate::mesh::BoundaryEdge { nodes: [0, 1], tag: BoundaryTag::Dirichlet },
                    crate::mesh::BoundaryEdge { nodes: [1, 2], tag: BoundaryTag::Dirichlet },
                    crate::mesh::BoundaryEdge { nodes: [2, 0], tag: BoundaryTag::Dirichlet },
                ],
            )
            .unwrap(),
        );
        let space = FeSpace::p1_scalar(mesh);
        let a = assemble_scalar_stiffness(&space, &|_| 1.0).unwrap();
        let expected = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((a.get(i, j) - expected[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn nonpositive_coefficient_is_rejected() {
        let space = FeSpace::p1_scalar(unit_square(1));
        assert!(assemble_scalar_stiffness(&space, &|x| x[0] - 0.5).is_err());
    }

    #[test]
    fn vector_laplacian_blocks() {
        let mesh = unit_square(2);
        let vspace = FeSpace::p2_vector(mesh.clone());
        let sspace = FeSpace::p2_scalar(mesh);
        let a = assemble_vector_laplacian(&vspace, &|_| 1.0).unwrap();
        let s = assemble_scalar_stiffness(&sspace, &|_| 1.0).unwrap();
        let ns = vspace.n_scalar();
        for i in 0..ns {
            for k in s.indptr[i]..s.indptr[i + 1] {
                let j = s.indices[k];
                assert!((a.get(i, j) - s.values[k]).abs() < 1e-14);
                assert!((a.get(ns + i, ns + j) - s.values[k]).abs() < 1e-14);
                assert_eq!(a.get(i, ns + j), 0.0);
                assert_eq!(a.get(ns + i, j), 0.0);
            }
        }
    }

    #[test]
    fn vector_laplacian_coercive_on_random_fields() {
        use rand::{Rng, SeedableRng};
        let mesh = unit_square(2);
        let vspace = FeSpace::p2_vector(mesh.clone());
        let sspace = FeSpace::p2_scalar(mesh);
        let c0 = 0.3;
        let a = assemble_vector_laplacian(&vspace, &|x| c0 + x[0] * x[1]).unwrap();
        let s = assemble_scalar_stiffness(&sspace, &|_| 1.0).unwrap();
        let ns = vspace.n_scalar();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let u: Vec<f64> = (0..vspace.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let quad = dot(&u, &a.matvec(&u));
            let semi = dot(&u[..ns], &s.matvec(&u[..ns])) + dot(&u[ns..], &s.matvec(&u[ns..]));
            assert!(quad >= c0 * semi - 1e-10);
        }
    }

    #[test]
    fn strain_rate_examples() {
        // simple shear u = (y, 0)
        let eps = strain_rate([[0.0, 1.0], [0.0, 0.0]]);
        assert_eq!(eps[0][1], 0.5);
        assert_eq!(eps[1][0], 0.5);
        let i = invariant_i(eps);
        assert!((i - 0.5).abs() < 1e-15);
        assert!(((i / 2.0).sqrt() - 0.5).abs() < 1e-15);
        // rigid rotation u = (−y, x)
        let eps = strain_rate([[0.0, -1.0], [1.0, 0.0]]);
        assert_eq!(invariant_i(eps), 0.0);
        // u = (x, −y)
        let eps = strain_rate([[1.0, 0.0], [0.0, -1.0]]);
        assert_eq!(eps[0][0], 1.0);
        assert_eq!(eps[1][1], -1.0);
        assert!((invariant_i(eps) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn divergence_annihilates_divergence_free_fields() {
        let mesh = unit_square(2);
        let v = FeSpace::p2_vector(mesh.clone());
        let p = FeSpace::p1_scalar(mesh);
        let b = assemble_divergence(&v, &p).unwrap();
        // u = (x, −y) is exactly divergence-free and representable in P2.
        let u = v.interpolate_vector(&|x| [x[0], -x[1]]);
        for r in b.matvec(&u) {
            assert!(r.abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_of_linear_field_gives_mass_row_sums() {
        // u = (x, 0): (Bu)_q = ∫ ψ_q dx = row sums of the P1 mass matrix.
        let mesh = unit_square(2);
        let v = FeSpace::p2_vector(mesh.clone());
        let p = FeSpace::p1_scalar(mesh);
        let b = assemble_divergence(&v, &p).unwrap();
        let u = v.interpolate_vector(&|x| [x[0], 0.0]);
        let bu = b.matvec(&u);
        let m = assemble_mass(&p);
        let ones = vec![1.0; p.n_dofs()];
        let rows = m.matvec(&ones);
        for (x, y) in bu.iter().zip(&rows) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn norm_x_matches_gram_matrix_and_hand_value() {
        use rand::{Rng, SeedableRng};
        let mesh = unit_square(2);
        let v = FeSpace::p2_vector(mesh);
        // u = (y, 0): I = ½ on the unit square ⇒ ‖u‖_X = (1/2)^{1/2}.
        let u = v.interpolate_vector(&|x| [x[1], 0.0]);
        assert!((norm_x(&v, &u) - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(norm_x(&v, &vec![0.0; v.n_dofs()]), 0.0);
        let k = assemble_strain_gram(&v);
        assert!(k.is_symmetric(1e-14));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let u: Vec<f64> = (0..v.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let via_gram = dot(&u, &k.matvec(&u)).max(0.0).sqrt();
            let via_quad = norm_x(&v, &u);
            assert!((via_gram - via_quad).abs() <= 1e-12 * via_quad.max(1.0));
            // homogeneity
            let u2: Vec<f64> = u.iter().map(|x| 2.0 * x).collect();
            assert!((norm_x(&v, &u2) - 2.0 * via_quad).abs() < 1e-12 * via_quad.max(1.0));
        }
    }

    #[test]
    fn traction_load_integrates_exactly() {
        // Constant traction (2, 0) on the right edge x = 1 of the unit
        // square: total load = (2, 0) and it is carried only by right-edge
        // dofs.  Σ_k N_k = 1 on the edge ⇒ Σ_k b_k = ∫ F ds = 2.
        let rule = |mid: [f64; 2]| {
            if mid[0] > 1.0 - 1e-12 {
                BoundaryTag::Traction
            } else {
                BoundaryTag::Dirichlet
            }
        };
        let mesh = Arc::new(
            build_rectangle_mesh(1.0, 1.0, 2, 2, SplitRule::Crossed, &rule).unwrap(),
        );
        let v = FeSpace::p2_vector(mesh);
        let b = assemble_traction_load(&v, &|t| t == BoundaryTag::Traction, &|_, _| [2.0, 0.0]);
        let ns = v.n_scalar();
        let sum_x: f64 = b[..ns].iter().sum();
        let sum_y: f64 = b[ns..].iter().sum();
        assert!((sum_x - 2.0).abs() < 1e-13);
        assert!(sum_y.abs() < 1e-13);
        for s in 0..ns {
            if b[s] != 0.0 {
                assert!(v.dof_point(s)[0] > 1.0 - 1e-12);
            }
        }
    }

    #[test]
    fn volume_load_of_constant_force_sums_to_force_times_area() {
        let mesh = unit_square(2);
        let v = FeSpace::p2_vector(mesh);
        let b = assemble_volume_load(&v, &|_| [3.0, -1.0]);
        let ns = v.n_scalar();
        let sx: f64 = b[..ns].iter().sum();
        let sy: f64 = b[ns..].iter().sum();
        assert!((sx - 3.0).abs() < 1e-13);
        assert!((sy + 1.0).abs() < 1e-13);
    }

    #[test]
    fn mean_value_of_linear_field() {
        let mesh = unit_square(2);
        let p = FeSpace::p1_scalar(mesh);
        let z = p.interpolate(&|x| 2.0 * x[0] + 1.0);
        assert!((mean_value(&p, &z) - 2.0).abs() < 1e-13);
    }
}
