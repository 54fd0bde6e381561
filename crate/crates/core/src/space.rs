//! Finite-element spaces on triangular meshes: P1 and P2 Lagrange elements,
//! scalar or 2-component vector valued.
//!
//! Scalar dofs are numbered nodes-first, then (for P2) one dof per unique
//! mesh edge.  Vector dofs are blocked by component: global dof of component
//! `c` and scalar dof `s` is `c · n_scalar + s`.  The block layout lets the
//! solvers treat components independently where they need to.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh2D};
use crate::quadrature::QuadPoint;

/// Unique-edge numbering of a mesh, shared by all P2 spaces built on it.
#[derive(Debug)]
pub struct MeshEdges {
    /// Unique undirected edges as sorted node pairs.
    pub edges: Vec<[usize; 2]>,
    /// For each triangle, the edge ids of its local edges (0–1), (1–2), (2–0).
    pub tri_edges: Vec<[usize; 3]>,
    map: HashMap<(usize, usize), usize>,
}

impl MeshEdges {
    /// Enumerates the unique edges of `mesh` in first-appearance order.
    pub fn build(mesh: &Mesh2D) -> Self {
        let mut edges = Vec::new();
        let mut map = HashMap::new();
        let mut tri_edges = Vec::with_capacity(mesh.triangles.len());
        for tri in &mesh.triangles {
            let mut ids = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = if a < b { (a, b) } else { (b, a) };
                ids[k] = *map.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edges.len() - 1
                });
            }
            tri_edges.push(ids);
        }
        MeshEdges { edges, tri_edges, map }
    }

    /// Edge id of the undirected edge `(a, b)`, if it exists.
    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.map.get(&key).copied()
    }
}

/// A P1 or P2 Lagrange space, scalar or vector valued, on a shared mesh.
#[derive(Debug, Clone)]
pub struct FeSpace {
    /// Underlying mesh.
    pub mesh: Arc<Mesh2D>,
    /// Shared unique-edge numbering (used by P2 dofs and boundary handling).
    pub edges: Arc<MeshEdges>,
    /// Polynomial degree, 1 or 2.
    pub degree: u8,
    /// Number of vector components, 1 or 2.
    pub components: usize,
}

impl FeSpace {
    /// Builds a space of the given degree and component count.
    pub fn new(mesh: Arc<Mesh2D>, degree: u8, components: usize) -> Result<Self> {
        if !(degree == 1 || degree == 2) {
            return Err(Error::InvalidConfig(format!("unsupported degree {degree}")));
        }
        if !(components == 1 || components == 2) {
            return Err(Error::InvalidConfig(format!(
                "unsupported component count {components}"
            )));
        }
        let edges = Arc::new(MeshEdges::build(&mesh));
        Ok(FeSpace { mesh, edges, degree, components })
    }

    /// Scalar P1 space (pressure, projected fields).
    pub fn p1_scalar(mesh: Arc<Mesh2D>) -> Self {
        Self::new(mesh, 1, 1).expect("P1 scalar space is always valid")
    }

    /// Scalar P2 space (electric potential).
    pub fn p2_scalar(mesh: Arc<Mesh2D>) -> Self {
        Self::new(mesh, 2, 1).expect("P2 scalar space is always valid")
    }

    /// Vector P2 space (velocity).
    pub fn p2_vector(mesh: Arc<Mesh2D>) -> Self {
        Self::new(mesh, 2, 2).expect("P2 vector space is always valid")
    }

    /// Number of scalar dofs (per component).
    pub fn n_scalar(&self) -> usize {
        match self.degree {
            1 => self.mesh.nodes.len(),
            _ => self.mesh.nodes.len() + self.edges.edges.len(),
        }
    }

    /// Total dof count (components × scalar dofs).
    pub fn n_dofs(&self) -> usize {
        self.components * self.n_scalar()
    }

    /// Number of local scalar basis functions per element (3 or 6).
    pub fn local_size(&self) -> usize {
        if self.degree == 1 { 3 } else { 6 }
    }

    /// Global scalar dof indices of element `t` in local order
    /// (vertices, then edge midpoints for P2).
    pub fn element_dofs(&self, t: usize) -> [usize; 6] {
        let tri = self.mesh.triangles[t];
        let mut dofs = [usize::MAX; 6];
        dofs[..3].copy_from_slice(&tri);
        if self.degree == 2 {
            let nn = self.mesh.nodes.len();
            let eids = self.edges.tri_edges[t];
            for k in 0..3 {
                dofs[3 + k] = nn + eids[k];
            }
        }
        dofs
    }

    /// Global dof index of component `comp`, scalar dof `scalar`.
    pub fn global_dof(&self, comp: usize, scalar: usize) -> usize {
        comp * self.n_scalar() + scalar
    }

    /// Coordinates of a scalar dof (node position or edge midpoint).
    pub fn dof_point(&self, scalar: usize) -> [f64; 2] {
        let nn = self.mesh.nodes.len();
        if scalar < nn {
            self.mesh.nodes[scalar]
        } else {
            let [a, b] = self.edges.edges[scalar - nn];
            let p = self.mesh.nodes[a];
            let q = self.mesh.nodes[b];
            [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
        }
    }

    /// Sorted, deduplicated scalar dofs lying on boundary edges whose tag
    /// satisfies `pred` (for P2 this includes the edge-midpoint dofs).
    pub fn boundary_scalar_dofs(&self, pred: &dyn Fn(BoundaryTag) -> bool) -> Vec<usize> {
        let nn = self.mesh.nodes.len();
        let mut dofs = Vec::new();
        for e in &self.mesh.boundary_edges {
            if pred(e.tag) {
                dofs.push(e.nodes[0]);
                dofs.push(e.nodes[1]);
                if self.degree == 2 {
                    let id = self
                        .edges
                        .edge_id(e.nodes[0], e.nodes[1])
                        .expect("boundary edge exists in edge table");
                    dofs.push(nn + id);
                }
            }
        }
        dofs.sort_unstable();
        dofs.dedup();
        dofs
    }

    /// Nodal interpolation of a scalar function.
    pub fn interpolate(&self, f: &dyn Fn([f64; 2]) -> f64) -> Vec<f64> {
        assert_eq!(self.components, 1, "use interpolate_vector for vector spaces");
        (0..self.n_scalar()).map(|s| f(self.dof_point(s))).collect()
    }

    /// Nodal interpolation of a 2-component vector function.
    pub fn interpolate_vector(&self, f: &dyn Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        assert_eq!(self.components, 2, "use interpolate for scalar spaces");
        let ns = self.n_scalar();
        let mut out = vec![0.0; 2 * ns];
        for s in 0..ns {
            let v = f(self.dof_point(s));
            out[s] = v[0];
            out[ns + s] = v[1];
        }
        out
    }
}

/// Values of the reference basis functions at reference point `xi`.
/// Returns 3 (P1) or 6 (P2) values in local ordering.
pub fn shape_values(degree: u8, xi: [f64; 2]) -> ([f64; 6], usize) {
    let l1 = 1.0 - xi[0] - xi[1];
    let l2 = xi[0];
    let l3 = xi[1];
    if degree == 1 {
        ([l1, l2, l3, 0.0, 0.0, 0.0], 3)
    } else {
        (
            [
                l1 * (2.0 * l1 - 1.0),
                l2 * (2.0 * l2 - 1.0),
                l3 * (2.0 * l3 - 1.0),
                4.0 * l1 * l2,
                4.0 * l2 * l3,
                4.0 * l3 * l1,
            ],
            6,
        )
    }
}

/// Reference gradients of the basis functions at `xi`.
pub fn shape_gradients(degree: u8, xi: [f64; 2]) -> ([[f64; 2]; 6], usize) {
    let l1 = 1.0 - xi[0] - xi[1];
    let l2 = xi[0];
    let l3 = xi[1];
    // dL1 = (-1,-1), dL2 = (1,0), dL3 = (0,1)
    if degree == 1 {
        (
            [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0], [0.0; 2], [0.0; 2], [0.0; 2]],
            3,
        )
    } else {
        let d1 = 4.0 * l1 - 1.0;
        let d2 = 4.0 * l2 - 1.0;
        let d3 = 4.0 * l3 - 1.0;
        (
            [
                [-d1, -d1],
                [d2, 0.0],
                [0.0, d3],
                [4.0 * (l1 - l2), -4.0 * l2],
                [4.0 * l3, 4.0 * l2],
                [-4.0 * l3, 4.0 * (l1 - l3)],
            ],
            6,
        )
    }
}

/// Geometry of one straight triangle: the affine reference-to-physical map.
#[derive(Debug, Clone, Copy)]
pub struct ElemGeom {
    /// Vertex coordinates.
    pub verts: [[f64; 2]; 3],
    /// Element area.
    pub area: f64,
    /// Inverse transpose of the Jacobian (maps reference to physical grads).
    pub inv_jt: [[f64; 2]; 2],
}

impl ElemGeom {
    /// Computes the geometry of triangle `t` of `mesh`.
    pub fn new(mesh: &Mesh2D, t: usize) -> Self {
        let [a, b, c] = mesh.triangles[t];
        let p = mesh.nodes[a];
        let q = mesh.nodes[b];
        let r = mesh.nodes[c];
        let j = [[q[0] - p[0], r[0] - p[0]], [q[1] - p[1], r[1] - p[1]]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        // inv(J)^T = adj(J)^T / det
        let inv_jt = [
            [j[1][1] / det, -j[1][0] / det],
            [-j[0][1] / det, j[0][0] / det],
        ];
        ElemGeom {
            verts: [p, q, r],
            area: 0.5 * det,
            inv_jt,
        }
    }

    /// Physical coordinates of reference point `xi`.
    pub fn map(&self, xi: [f64; 2]) -> [f64; 2] {
        let [p, q, r] = self.verts;
        [
            p[0] + (q[0] - p[0]) * xi[0] + (r[0] - p[0]) * xi[1],
            p[1] + (q[1] - p[1]) * xi[0] + (r[1] - p[1]) * xi[1],
        ]
    }

    /// Physical gradient from a reference gradient.
    pub fn phys_grad(&self, g_ref: [f64; 2]) -> [f64; 2] {
        [
            self.inv_jt[0][0] * g_ref[0] + self.inv_jt[0][1] * g_ref[1],
            self.inv_jt[1][0] * g_ref[0] + self.inv_jt[1][1] * g_ref[1],
        ]
    }
}

/// Basis data of one element evaluated at one quadrature point.
#[derive(Debug, Clone)]
pub struct QpBasis {
    /// Physical coordinates of the point.
    pub x: [f64; 2],
    /// Quadrature weight already scaled by the element area.
    pub w: f64,
    /// Basis values (first `n_local` entries valid).
    pub vals: [f64; 6],
    /// Physical basis gradients.
    pub grads: [[f64; 2]; 6],
}

/// Evaluates basis values and physical gradients of element `t` at all points
/// of `rule`.
pub fn element_basis(space: &FeSpace, t: usize, rule: &[QuadPoint]) -> Vec<QpBasis> {
    let geom = ElemGeom::new(&space.mesh, t);
    rule.iter()
        .map(|qp| {
            let (vals, n) = shape_values(space.degree, qp.xi);
            let (grefs, _) = shape_gradients(space.degree, qp.xi);
            let mut grads = [[0.0; 2]; 6];
            for k in 0..n {
                grads[k] = geom.phys_grad(grefs[k]);
            }
            QpBasis {
                x: geom.map(qp.xi),
                w: qp.weight * geom.area,
                vals,
                grads,
            }
        })
        .collect()
}

/// Spatial index for point-in-triangle queries on a mesh, with clamping of
/// outside points to the nearest element (used to extend fields beyond Ω).
#[derive(Debug)]
pub struct Locator {
    nx: usize,
    ny: usize,
    min: [f64; 2],
    cell: [f64; 2],
    bins: Vec<Vec<usize>>,
}

impl Locator {
    /// Builds a uniform background grid binning triangles by bounding box.
    pub fn new(mesh: &Mesh2D) -> Self {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in &mesh.nodes {
            for d in 0..2 {
                min[d] = min[d].min(p[d]);
                max[d] = max[d].max(p[d]);
            }
        }
        let n = (mesh.triangles.len() as f64).sqrt().ceil() as usize;
        let (nx, ny) = (n.max(1), n.max(1));
        let cell = [
            ((max[0] - min[0]) / nx as f64).max(1e-300),
            ((max[1] - min[1]) / ny as f64).max(1e-300),
        ];
        let mut bins = vec![Vec::new(); nx * ny];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let mut bmin = [f64::INFINITY; 2];
            let mut bmax = [f64::NEG_INFINITY; 2];
            for &v in tri {
                for d in 0..2 {
                    bmin[d] = bmin[d].min(mesh.nodes[v][d]);
                    bmax[d] = bmax[d].max(mesh.nodes[v][d]);
                }
            }
            let i0 = (((bmin[0] - min[0]) / cell[0]).floor() as isize).clamp(0, nx as isize - 1);
            let i1 = (((bmax[0] - min[0]) / cell[0]).floor() as isize).clamp(0, nx as isize - 1);
            let j0 = (((bmin[1] - min[1]) / cell[1]).floor() as isize).clamp(0, ny as isize - 1);
            let j1 = (((bmax[1] - min[1]) / cell[1]).floor() as isize).clamp(0, ny as isize - 1);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    bins[j as usize * nx + i as usize].push(t);
                }
            }
        }
        Locator { nx, ny, min, cell, bins }
    }

    /// Finds the element containing `x` (or, for points outside the mesh,
    /// the best-matching element) and returns its index together with the
    /// reference coordinates clamped into the reference triangle.
    pub fn locate(&self, mesh: &Mesh2D, x: [f64; 2]) -> (usize, [f64; 2]) {
        // Nearest point of the (closed) triangle and squared distance to it.
        let project = |t: usize| -> ([f64; 2], f64) {
            let geom = ElemGeom::new(mesh, t);
            let p = geom.verts[0];
            let d = [x[0] - p[0], x[1] - p[1]];
            let xi = [
                geom.inv_jt[0][0] * d[0] + geom.inv_jt[1][0] * d[1],
                geom.inv_jt[0][1] * d[0] + geom.inv_jt[1][1] * d[1],
            ];
            let b = [1.0 - xi[0] - xi[1], xi[0], xi[1]];
            if b.iter().all(|&c| c >= -1e-13) {
                return (x, 0.0);
            }
            // outside: closest point lies on one of the three edges
            let mut best = ([0.0; 2], f64::INFINITY);
            for k in 0..3 {
                let a = geom.verts[k];
                let c = geom.verts[(k + 1) % 3];
                let ab = [c[0] - a[0], c[1] - a[1]];
                let ax = [x[0] - a[0], x[1] - a[1]];
                let s = ((ax[0] * ab[0] + ax[1] * ab[1])
                    / (ab[0] * ab[0] + ab[1] * ab[1]))
                    .clamp(0.0, 1.0);
                let q = [a[0] + s * ab[0], a[1] + s * ab[1]];
                let d2 = (x[0] - q[0]).powi(2) + (x[1] - q[1]).powi(2);
                if d2 < best.1 {
                    best = (q, d2);
                }
            }
            best
        };
        let mut best = (usize::MAX, [0.0; 2], f64::INFINITY);
        let consider = |t: usize, best: &mut (usize, [f64; 2], f64)| {
            let (q, d2) = project(t);
            if d2 < best.2 {
                *best = (t, q, d2);
            }
        };
        let i = (((x[0] - self.min[0]) / self.cell[0]).floor() as isize)
            .clamp(0, self.nx as isize - 1) as usize;
        let j = (((x[1] - self.min[1]) / self.cell[1]).floor() as isize)
            .clamp(0, self.ny as isize - 1) as usize;
        // search the cell and its ring of neighbors first
        for dj in -1isize..=1 {
            for di in -1isize..=1 {
                let (ii, jj) = (i as isize + di, j as isize + dj);
                if ii < 0 || jj < 0 || ii >= self.nx as isize || jj >= self.ny as isize {
                    continue;
                }
                for &t in &self.bins[jj as usize * self.nx + ii as usize] {
                    consider(t, &mut best);
                }
            }
        }
        if best.2 > 0.0 {
            // not strictly inside any nearby element: scan everything
            for t in 0..mesh.triangles.len() {
                consider(t, &mut best);
            }
        }
        let (t, q, _) = best;
        // reference coordinates of the projected point, tidied into [0,1]
        let geom = ElemGeom::new(mesh, t);
        let p = geom.verts[0];
        let d = [q[0] - p[0], q[1] - p[1]];
        let xi = [
            geom.inv_jt[0][0] * d[0] + geom.inv_jt[1][0] * d[1],
            geom.inv_jt[0][1] * d[0] + geom.inv_jt[1][1] * d[1],
        ];
        let mut b = [1.0 - xi[0] - xi[1], xi[0], xi[1]];
        for c in &mut b {
            *c = c.max(0.0);
        }
        let s = b[0] + b[1] + b[2];
        (t, [b[1] / s, b[2] / s])
    }
}

/// Point evaluation of a dof field anywhere in (or near) the mesh; points
/// outside are clamped to the nearest element boundary.
#[derive(Debug)]
pub struct FieldSampler<'a> {
    space: &'a FeSpace,
    values: &'a [f64],
    locator: Locator,
}

impl<'a> FieldSampler<'a> {
    /// Builds a sampler for `values` on `space`.
    pub fn new(space: &'a FeSpace, values: &'a [f64]) -> Self {
        assert_eq!(values.len(), space.n_dofs());
        FieldSampler { space, values, locator: Locator::new(&space.mesh) }
    }

    /// Evaluates all components of the field at `x`.
    pub fn eval(&self, x: [f64; 2]) -> [f64; 2] {
        let (t, xi) = self.locator.locate(&self.space.mesh, x);
        let (vals, n) = shape_values(self.space.degree, xi);
        let edofs = self.space.element_dofs(t);
        let ns = self.space.n_scalar();
        let mut out = [0.0; 2];
        for k in 0..n {
            for c in 0..self.space.components {
                out[c] += self.values[c * ns + edofs[k]] * vals[k];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rectangle_mesh, BoundaryTag, SplitRule};
    use crate::quadrature::triangle_rule_degree4;

    fn unit_square(n: usize) -> Arc<Mesh2D> {
        Arc::new(
            build_rectangle_mesh(1.0, 1.0, n, n, SplitRule::Crossed, &|_| BoundaryTag::Dirichlet)
                .unwrap(),
        )
    }

    #[test]
    fn dof_counts() {
        let mesh = unit_square(2);
        let nn = mesh.nodes.len();
        let p1 = FeSpace::p1_scalar(mesh.clone());
        assert_eq!(p1.n_dofs(), nn);
        let p2 = FeSpace::p2_scalar(mesh.clone());
        assert_eq!(p2.n_dofs(), nn + p2.edges.edges.len());
        let v = FeSpace::p2_vector(mesh);
        assert_eq!(v.n_dofs(), 2 * p2.n_dofs());
    }

    #[test]
    fn p2_partition_of_unity_and_gradient_consistency() {
        for xi in [[0.2, 0.3], [0.0, 0.0], [0.5, 0.5], [0.1, 0.7]] {
            let (vals, n) = shape_values(2, xi);
            let sum: f64 = vals[..n].iter().sum();
            assert!((sum - 1.0).abs() < 1e-14);
            let (grads, _) = shape_gradients(2, xi);
            // Finite-difference check of each gradient component.
            let h = 1e-6;
            for k in 0..n {
                for d in 0..2 {
                    let mut xp = xi;
                    xp[d] += h;
                    let mut xm = xi;
                    xm[d] -= h;
                    let fd = (shape_values(2, xp).0[k] - shape_values(2, xm).0[k]) / (2.0 * h);
                    assert!((fd - grads[k][d]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn p2_interpolation_reproduces_quadratics() {
        // A P2 space must represent any quadratic exactly: interpolate, then
        // compare values at quadrature points.
        let mesh = unit_square(2);
        let space = FeSpace::p2_scalar(mesh);
        let f = |p: [f64; 2]| 1.0 + 2.0 * p[0] - p[1] + 3.0 * p[0] * p[1] + p[0] * p[0];
        let dofs = space.interpolate(&f);
        for t in 0..space.mesh.triangles.len() {
            let basis = element_basis(&space, t, triangle_rule_degree4());
            let edofs = space.element_dofs(t);
            for qp in &basis {
                let val: f64 = (0..6).map(|k| qp.vals[k] * dofs[edofs[k]]).sum();
                assert!((val - f(qp.x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sampler_reproduces_p2_fields_and_clamps_outside() {
        let mesh = unit_square(3);
        let space = FeSpace::p2_vector(mesh);
        let f = |p: [f64; 2]| [p[0] * p[1] + 1.0, p[0] * p[0] - p[1]];
        let dofs = space.interpolate_vector(&f);
        let sampler = FieldSampler::new(&space, &dofs);
        for p in [[0.13, 0.77], [0.5, 0.5], [0.999, 0.001], [0.0, 1.0]] {
            let v = sampler.eval(p);
            let e = f(p);
            assert!((v[0] - e[0]).abs() < 1e-12 && (v[1] - e[1]).abs() < 1e-12);
        }
        // Outside points clamp to the boundary.
        let v = sampler.eval([1.5, 0.5]);
        let e = f([1.0, 0.5]);
        assert!((v[0] - e[0]).abs() < 1e-12 && (v[1] - e[1]).abs() < 1e-12);
    }

    #[test]
    fn boundary_dofs_lie_on_tagged_edges() {
        let rule = |mid: [f64; 2]| {
            if mid[0] < 1e-12 {
                BoundaryTag::Traction
            } else {
                BoundaryTag::Dirichlet
            }
        };
        let mesh = Arc::new(
            build_rectangle_mesh(1.0, 1.0, 3, 3, SplitRule::Crossed, &rule).unwrap(),
        );
        let space = FeSpace::p2_scalar(mesh);
        let dofs = space.boundary_scalar_dofs(&|t| t == BoundaryTag::Traction);
        // Left edge of a 3×3 grid: 4 nodes + 3 edge midpoints.
        assert_eq!(dofs.len(), 7);
        for &d in &dofs {
            assert!(space.dof_point(d)[0].abs() < 1e-12);
        }
    }
}
