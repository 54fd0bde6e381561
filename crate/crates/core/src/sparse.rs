//! Compressed-row sparse matrices, triplet assembly, and linear solvers
//! (direct sparse LU and Jacobi-preconditioned conjugate gradients).

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Triplet accumulator used during finite-element assembly.
#[derive(Debug, Clone)]
pub struct Triplets {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    /// Creates an empty accumulator of the given shape.
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Triplets { nrows, ncols, entries: Vec::new() }
    }

    /// Adds `value` at `(row, col)`; duplicates are summed on conversion.
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if value != 0.0 {
            self.entries.push((row, col, value));
        }
    }

    /// Converts to compressed-row storage, summing duplicate entries.
    /// Deterministic regardless of insertion order (stable sort, left-to-
    /// right summation within each position).
    pub fn into_csr(mut self) -> SparseMatrix {
        self.entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut rows: Vec<usize> = Vec::new();
        let mut indices = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        for &(r, c, v) in &self.entries {
            if rows.last() == Some(&r) && indices.last() == Some(&c) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                indices.push(c);
                values.push(v);
            }
        }
        let mut indptr = vec![0usize; self.nrows + 1];
        for &r in &rows {
            indptr[r + 1] += 1;
        }
        for r in 0..self.nrows {
            indptr[r + 1] += indptr[r];
        }
        SparseMatrix { nrows: self.nrows, ncols: self.ncols, indptr, indices, values }
    }
}

/// A sparse matrix in compressed-row (CSR) layout.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    /// Number of rows.
    pub nrows: usize,
    /// Number of columns.
    pub ncols: usize,
    /// Row pointers (`len = nrows + 1`).
    pub indptr: Vec<usize>,
    /// Column indices per row, ascending.
    pub indices: Vec<usize>,
    /// Values parallel to `indices`.
    pub values: Vec<f64>,
}

impl SparseMatrix {
    /// Identity matrix of size `n`.
    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entry `(i, j)` (0 if not stored).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.indptr[i];
        let hi = self.indptr[i + 1];
        match self.indices[lo..hi].binary_search(&j) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        let mut y = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            let mut acc = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            y[i] = acc;
        }
        y
    }

    /// `y = Aᵀ x`.
    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "matvec_transpose dimension mismatch");
        let mut y = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                y[self.indices[k]] += self.values[k] * x[i];
            }
        }
        y
    }

    /// Explicit transpose.
    pub fn transpose(&self) -> SparseMatrix {
        let mut t = Triplets::new(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                t.push(self.indices[k], i, self.values[k]);
            }
        }
        t.into_csr()
    }

    /// Main diagonal.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// Checks entrywise symmetry within relative tolerance `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        let scale = self
            .values
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-300);
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[k];
                if (self.values[k] - self.get(j, i)).abs() > tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Restriction to the rows and columns listed in `keep` (in order).
    pub fn restrict(&self, keep: &[usize]) -> SparseMatrix {
        let mut col_of = vec![usize::MAX; self.ncols];
        for (new, &old) in keep.iter().enumerate() {
            col_of[old] = new;
        }
        let mut t = Triplets::new(keep.len(), keep.len());
        for (new_r, &old_r) in keep.iter().enumerate() {
            for k in self.indptr[old_r]..self.indptr[old_r + 1] {
                let new_c = col_of[self.indices[k]];
                if new_c != usize::MAX {
                    t.push(new_r, new_c, self.values[k]);
                }
            }
        }
        t.into_csr()
    }

    /// Serializes to MatrixMarket coordinate format (for debugging).
    pub fn to_matrix_market(&self) -> String {
        let mut out = String::new();
        writeln!(out, "%%MatrixMarket matrix coordinate real general").unwrap();
        writeln!(out, "{} {} {}", self.nrows, self.ncols, self.nnz()).unwrap();
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                writeln!(out, "{} {} {:.17e}", i + 1, self.indices[k] + 1, self.values[k]).unwrap();
            }
        }
        out
    }

    fn to_faer(&self) -> Result<faer::sparse::SparseColMat<usize, f64>> {
        let mut trips = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                trips.push(faer::sparse::Triplet::new(i, self.indices[k], self.values[k]));
            }
        }
        faer::sparse::SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trips)
            .map_err(|e| Error::LinearSolve(format!("sparse conversion failed: {e:?}")))
    }
}

/// Dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Linear solver selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearMethod {
    /// Sparse LU factorization.
    Direct,
    /// Conjugate gradients with Jacobi preconditioner (SPD matrices only).
    ConjugateGradient,
}

/// Solves `A x = b` to relative residual `tol`.
pub fn solve_linear(a: &SparseMatrix, b: &[f64], method: LinearMethod, tol: f64) -> Result<Vec<f64>> {
    if a.nrows != a.ncols {
        return Err(Error::DimensionMismatch(format!(
            "solve_linear requires a square matrix, got {}×{}",
            a.nrows, a.ncols
        )));
    }
    if b.len() != a.nrows {
        return Err(Error::DimensionMismatch(format!(
            "rhs length {} does not match matrix size {}",
            b.len(),
            a.nrows
        )));
    }
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(vec![0.0; a.nrows]);
    }
    let x = match method {
        LinearMethod::Direct => solve_direct(a, b)?,
        LinearMethod::ConjugateGradient => solve_cg(a, b, tol)?,
    };
    let r = a.matvec(&x);
    let res = b
        .iter()
        .zip(&r)
        .map(|(bi, ri)| (bi - ri) * (bi - ri))
        .sum::<f64>()
        .sqrt();
    if !(res <= tol.max(1e-10) * bnorm) {
        return Err(Error::LinearSolve(format!(
            "residual {res:.3e} exceeds tolerance {:.3e} (‖b‖ = {bnorm:.3e})",
            tol.max(1e-10) * bnorm
        )));
    }
    Ok(x)
}

/// Sparse LU solve with multiple right-hand sides, reusing one factorization.
pub struct LuFactor {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    n: usize,
}

impl LuFactor {
    /// Factorizes a square sparse matrix.
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::DimensionMismatch("LU requires a square matrix".into()));
        }
        let mat = a.to_faer()?;
        // The factorization panics on exactly singular input; translate that
        // into a solver error (and silence the default panic report).
        let hook = std::panic::take_hook();
        std::panic::set_hook(Box::new(|_| {}));
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| mat.sp_lu()));
        std::panic::set_hook(hook);
        let lu = result
            .map_err(|_| Error::LinearSolve("LU factorization failed: matrix is singular".into()))?
            .map_err(|e| Error::LinearSolve(format!("LU factorization failed: {e:?}")))?;
        Ok(LuFactor { lu, n: a.nrows })
    }

    /// Solves `A x = b` with the stored factorization.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        use faer::linalg::solvers::Solve;
        let rhs = faer::Mat::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

fn solve_direct(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let lu = LuFactor::new(a)?;
    let x = lu.solve(b);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinearSolve("factorization produced non-finite values (singular matrix?)".into()));
    }
    Ok(x)
}

fn solve_cg(a: &SparseMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = a.nrows;
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| {
            if d > 0.0 {
                1.0 / d
            } else {
                1.0 // fall back to the unpreconditioned direction
            }
        })
        .collect();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let max_iter = 20 * n + 100;
    for _ in 0..max_iter {
        if norm2(&r) <= 0.1 * tol * bnorm {
            return Ok(x);
        }
        let ap = a.matvec(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::LinearSolve(format!(
                "conjugate gradients found a non-positive curvature direction (pᵀAp = {pap:.3e}); matrix is not positive-definite"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if norm2(&r) <= tol * bnorm {
        return Ok(x);
    }
    Err(Error::LinearSolve(format!(
        "conjugate gradients stalled after {max_iter} iterations (residual {:.3e})",
        norm2(&r) / bnorm
    )))
}

/// Applies Dirichlet constraints `x[d] = value[d]` by symmetric row/column
/// elimination: constrained rows/columns are replaced by identity, and the
/// right-hand side receives the coupling correction
/// `b_free -= A[free, constrained] · values`.  Returns the modified matrix;
/// `b` is corrected in place.
pub fn eliminate_dirichlet(
    a: &SparseMatrix,
    b: &mut [f64],
    dofs: &[usize],
    values: &[f64],
) -> SparseMatrix {
    assert_eq!(dofs.len(), values.len());
    assert_eq!(a.nrows, a.ncols);
    assert_eq!(b.len(), a.nrows);
    let mut constrained = vec![f64::NAN; a.nrows];
    for (&d, &v) in dofs.iter().zip(values) {
        constrained[d] = v;
    }
    let mut t = Triplets::new(a.nrows, a.ncols);
    for i in 0..a.nrows {
        if constrained[i].is_nan() {
            for k in a.indptr[i]..a.indptr[i + 1] {
                let j = a.indices[k];
                if constrained[j].is_nan() {
                    t.push(i, j, a.values[k]);
                } else {
                    b[i] -= a.values[k] * constrained[j];
                }
            }
        } else {
            t.push(i, i, 1.0);
            b[i] = constrained[i];
        }
    }
    t.into_csr()
}

/// Power iteration estimating the largest eigenvalue of the symmetric
/// positive-semidefinite operator `op` on vectors of length `n`.
pub fn power_method(
    op: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    n: usize,
    iters: usize,
    seed: u64,
) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nv = norm2(&v).max(1e-300);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut lambda = 0.0;
    for _ in 0..iters {
        let w = op(&v);
        lambda = dot(&v, &w);
        let nw = norm2(&w);
        if nw < 1e-300 {
            return 0.0;
        }
        v = w.iter().map(|x| x / nw).collect();
    }
    lambda
}
