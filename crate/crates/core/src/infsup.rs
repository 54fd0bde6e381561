//! Numerical estimation of the discrete inf-sup (LBB) constant of a
//! velocity/pressure pair.
//!
//! β² is the smallest (nonzero) eigenvalue of the generalized problem
//! `B A⁻¹ Bᵀ q = β² M_p q`, where A is the velocity-space Gram matrix of the
//! strain-rate inner product restricted to the homogeneous-Dirichlet
//! subspace, B the divergence matrix, and M_p the pressure mass matrix.
//! When the whole boundary is wall (no traction part) the constant pressure
//! is in the kernel of Bᵀ by construction, so the zero eigenvalue it creates
//! is dropped and β is read off the next one.

use nalgebra::DMatrix;

use crate::assemble::{assemble_divergence, assemble_mass, assemble_strain_gram};
use crate::error::{Error, Result};
use crate::space::FeSpace;
use crate::sparse::{LuFactor, SparseMatrix};

/// Result of one inf-sup estimation.
#[derive(Debug, Clone)]
pub struct InfSupEstimate {
    /// The estimated inf-sup constant β ≥ 0.
    pub beta: f64,
    /// All generalized eigenvalues β², ascending.
    pub eigenvalues: Vec<f64>,
    /// Whether the constant-pressure kernel mode was removed before reading
    /// off β (true exactly when the traction boundary is empty).
    pub dropped_constant_mode: bool,
    /// Number of pressure dofs.
    pub n_pressure: usize,
    /// Number of unconstrained velocity dofs.
    pub n_velocity_free: usize,
}

/// Keeps all rows of `m` but only the columns listed in `cols`.
fn restrict_cols(m: &SparseMatrix, cols: &[usize]) -> SparseMatrix {
    let mut col_of = vec![usize::MAX; m.ncols];
    for (new, &old) in cols.iter().enumerate() {
        col_of[old] = new;
    }
    let mut t = crate::sparse::Triplets::new(m.nrows, cols.len());
    for r in 0..m.nrows {
        for k in m.indptr[r]..m.indptr[r + 1] {
            let c = col_of[m.indices[k]];
            if c != usize::MAX {
                t.push(r, c, m.values[k]);
            }
        }
    }
    t.into_csr()
}

/// Unconstrained velocity dofs: everything off the wall part of the boundary.
pub fn free_velocity_dofs(space: &FeSpace) -> Vec<usize> {
    let wall = space.boundary_scalar_dofs(&|t| t.is_wall());
    let ns = space.n_scalar();
    (0..space.components * ns)
        .filter(|d| wall.binary_search(&(d % ns)).is_err())
        .collect()
}

/// Estimates the discrete inf-sup constant of the pair
/// (`v_space`, `p_space`) on their common mesh.
pub fn estimate_discrete_infsup(
    v_space: &FeSpace,
    p_space: &FeSpace,
) -> Result<InfSupEstimate> {
    let free = free_velocity_dofs(v_space);
    if free.is_empty() {
        return Err(Error::InvalidMesh(
            "no unconstrained velocity dofs; mesh too coarse for an inf-sup estimate".into(),
        ));
    }
    let a = assemble_strain_gram(v_space).restrict(&free);
    let b = restrict_cols(&assemble_divergence(v_space, p_space)?, &free);
    let m_p = assemble_mass(p_space);
    let np = p_space.n_dofs();

    // S = B A⁻¹ Bᵀ, built column by column (S is symmetric).
    let lu = LuFactor::new(&a)?;
    let bt = b.transpose();
    let mut s = DMatrix::<f64>::zeros(np, np);
    for j in 0..np {
        let mut ej = vec![0.0; np];
        ej[j] = 1.0;
        let btj = bt.matvec(&ej);
        let aj = lu.solve(&btj);
        let col = b.matvec(&aj);
        for i in 0..np {
            s[(i, j)] = col[i];
        }
    }
    // symmetrize away the solve round-off
    let s = 0.5 * (&s + s.transpose());

    // Generalized eigenvalues via the Cholesky factor of M_p:
    // S q = σ M_p q  ⇔  L⁻¹ S L⁻ᵀ y = σ y with M_p = L Lᵀ, y = Lᵀ q.
    let m_dense = DMatrix::<f64>::from_fn(np, np, |i, j| m_p.get(i, j));
    let chol = m_dense
        .cholesky()
        .ok_or_else(|| Error::LinearSolve("pressure mass matrix is not SPD".into()))?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(&s)
        .ok_or_else(|| Error::LinearSolve("singular Cholesky factor".into()))?;
    // L⁻¹ S L⁻ᵀ = (L⁻¹ (L⁻¹ S)ᵀ)ᵀ; symmetric, so the final transpose is free
    let c = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::LinearSolve("singular Cholesky factor".into()))?;
    let c = 0.5 * (&c + c.transpose());
    let mut eig: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let traction_empty = !v_space
        .mesh
        .boundary_edges
        .iter()
        .any(|e| !e.tag.is_wall());
    let idx = usize::from(traction_empty);
    if eig.len() <= idx {
        return Err(Error::InvalidMesh(
            "pressure space too small for an inf-sup estimate".into(),
        ));
    }
    let beta = eig[idx].max(0.0).sqrt();
    Ok(InfSupEstimate {
        beta,
        eigenvalues: eig,
        dropped_constant_mode: traction_empty,
        n_pressure: np,
        n_velocity_free: free.len(),
    })
}
