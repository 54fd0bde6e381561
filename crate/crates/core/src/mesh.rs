//! 2D triangular meshes with boundary tagging.
//!
//! Meshes are immutable after construction: [`Mesh2D::new`] validates the
//! structural invariants once, and every consumer can rely on them.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Classification of a boundary edge.
///
/// `Dirichlet` and `Traction` split the boundary for the flow problem
/// (prescribed velocity vs. prescribed surface force).  `Electrode(i)`,
/// `ElectrodeGround(i)` and `Insulated` additionally drive the electric
/// potential problem; for the flow problem they behave as solid walls,
/// i.e. velocity-Dirichlet boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundaryTag {
    /// Prescribed velocity (no-slip or inflow profile).
    Dirichlet,
    /// Prescribed surface traction (natural boundary condition).
    Traction,
    /// Powered electrode `i ≥ 1`; potential fixed to the electrode voltage.
    Electrode(u32),
    /// Grounded counter-electrode of pair `i ≥ 1`; potential fixed to zero.
    ElectrodeGround(u32),
    /// Electrically insulated wall (natural condition for the potential).
    Insulated,
}

impl BoundaryTag {
    /// True for tags that prescribe the velocity in the flow problem
    /// (everything except `Traction`: electrodes and insulated segments are
    /// solid walls).
    pub fn is_wall(self) -> bool {
        !matches!(self, BoundaryTag::Traction)
    }

    /// Serialized keyword used in mesh files.
    pub fn keyword(self) -> &'static str {
        match self {
            BoundaryTag::Dirichlet => "DIRICHLET",
            BoundaryTag::Traction => "TRACTION",
            BoundaryTag::Electrode(_) => "ELECTRODE",
            BoundaryTag::ElectrodeGround(_) => "ELECTRODE_GROUND",
            BoundaryTag::Insulated => "INSULATED",
        }
    }
}

/// A boundary edge: an ordered node pair plus its tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    /// End-point node indices.
    pub nodes: [usize; 2],
    /// Boundary classification.
    pub tag: BoundaryTag,
}

/// An immutable 2D triangular mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh2D {
    /// Node coordinates.
    pub nodes: Vec<[f64; 2]>,
    /// Node-index triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    /// Tagged boundary edges.
    pub boundary_edges: Vec<BoundaryEdge>,
}

/// Rule deciding the tag of a boundary edge from its midpoint coordinates.
pub type TagRule<'a> = dyn Fn([f64; 2]) -> BoundaryTag + 'a;

/// Cell-splitting pattern of the structured rectangle generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitRule {
    /// Each grid cell is split into 4 triangles through its centroid.
    Crossed,
    /// Each grid cell is split into 2 triangles along the SW–NE diagonal.
    Diagonal,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh2D {
    /// Builds a mesh and validates all structural invariants:
    /// positive triangle areas, index bounds, each boundary edge belonging to
    /// exactly one triangle, the tagged edges covering the whole topological
    /// boundary without duplicates, and a non-empty wall (velocity-Dirichlet)
    /// edge set whenever any edge tags are present.
    pub fn new(
        nodes: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Result<Self> {
        let mesh = Mesh2D {
            nodes,
            triangles,
            boundary_edges,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                if v >= n {
                    return Err(Error::InvalidMesh(format!(
                        "triangle {t} references node {v} but mesh has {n} nodes"
                    )));
                }
            }
            let area = self.signed_area(t);
            if area <= 0.0 {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} has non-positive signed area {area}"
                )));
            }
        }

        // Count how many triangles share each undirected edge.
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                *edge_count
                    .entry(edge_key(tri[k], tri[(k + 1) % 3]))
                    .or_insert(0) += 1;
            }
        }
        for (&(a, b), &c) in &edge_count {
            if c > 2 {
                return Err(Error::InvalidMesh(format!(
                    "edge ({a},{b}) is shared by {c} triangles"
                )));
            }
        }

        let mut tagged: HashMap<(usize, usize), BoundaryTag> = HashMap::new();
        for e in &self.boundary_edges {
            let [a, b] = e.nodes;
            if a >= n || b >= n {
                return Err(Error::InvalidMesh(format!(
                    "boundary edge ({a},{b}) references a node out of range"
                )));
            }
            let key = edge_key(a, b);
            match edge_count.get(&key) {
                Some(1) => {}
                Some(_) => {
                    return Err(Error::InvalidMesh(format!(
                        "boundary edge ({a},{b}) is an interior edge"
                    )));
                }
                None => {
                    return Err(Error::InvalidMesh(format!(
                        "boundary edge ({a},{b}) belongs to no triangle"
                    )));
                }
            }
            if let Some(prev) = tagged.insert(key, e.tag) {
                return Err(Error::InvalidMesh(format!(
                    "edge ({a},{b}) is tagged twice ({} and {}); tag sets must be disjoint",
                    prev.keyword(),
                    e.tag.keyword()
                )));
            }
        }

        // Wall ∪ Traction tags must cover the full topological boundary.
        for (&(a, b), &c) in &edge_count {
            if c == 1 && !tagged.contains_key(&(a, b)) {
                return Err(Error::InvalidMesh(format!(
                    "boundary edge ({a},{b}) carries no tag"
                )));
            }
        }
        if !self.boundary_edges.is_empty()
            && !self.boundary_edges.iter().any(|e| e.tag.is_wall())
        {
            return Err(Error::InvalidMesh(
                "wall (velocity-Dirichlet) edge set is empty".into(),
            ));
        }
        Ok(())
    }

    /// Signed area of triangle `t` (positive for counterclockwise).
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let p = self.nodes[a];
        let q = self.nodes[b];
        let r = self.nodes[c];
        0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
    }

    /// Sum of all triangle areas.
    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    /// Total length of boundary edges carrying `tag_filter` (all if `None`).
    pub fn boundary_length(&self, tag_filter: Option<BoundaryTag>) -> f64 {
        self.boundary_edges
            .iter()
            .filter(|e| tag_filter.map_or(true, |t| e.tag == t))
            .map(|e| {
                let p = self.nodes[e.nodes[0]];
                let q = self.nodes[e.nodes[1]];
                ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt()
            })
            .sum()
    }
}

/// Builds a structured mesh of the rectangle `[0,width] × [0,height]` with an
/// `nx × ny` grid of cells, each split per `split`, and boundary edges tagged
/// by `tag_rule` applied to edge midpoints.
pub fn build_rectangle_mesh(
    width: f64,
    height: f64,
    nx: usize,
    ny: usize,
    split: SplitRule,
    tag_rule: &TagRule,
) -> Result<Mesh2D> {
    if !(width > 0.0) || !(height > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "rectangle dimensions must be positive (got {width} × {height})"
        )));
    }
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidConfig(
            "grid resolution must be at least 1×1".into(),
        ));
    }

    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([
                width * i as f64 / nx as f64,
                height * j as f64 / ny as f64,
            ]);
        }
    }
    let grid = |i: usize, j: usize| j * (nx + 1) + i;

    let mut triangles = Vec::new();
    match split {
        SplitRule::Diagonal => {
            for j in 0..ny {
                for i in 0..nx {
                    let (sw, se, ne, nw) =
                        (grid(i, j), grid(i + 1, j), grid(i + 1, j + 1), grid(i, j + 1));
                    triangles.push([sw, se, ne]);
                    triangles.push([sw, ne, nw]);
                }
            }
        }
        SplitRule::Crossed => {
            for j in 0..ny {
                for i in 0..nx {
                    let (sw, se, ne, nw) =
                        (grid(i, j), grid(i + 1, j), grid(i + 1, j + 1), grid(i, j + 1));
                    let c = nodes.len();
                    nodes.push([
                        width * (i as f64 + 0.5) / nx as f64,
                        height * (j as f64 + 0.5) / ny as f64,
                    ]);
                    triangles.push([sw, se, c]);
                    triangles.push([se, ne, c]);
                    triangles.push([ne, nw, c]);
                    triangles.push([nw, sw, c]);
                }
            }
        }
    }

    let mut boundary_edges = Vec::new();
    let mut push_edge = |a: usize, b: usize, nodes: &[[f64; 2]]| {
        let mid = [
            0.5 * (nodes[a][0] + nodes[b][0]),
            0.5 * (nodes[a][1] + nodes[b][1]),
        ];
        boundary_edges.push(BoundaryEdge {
            nodes: [a, b],
            tag: tag_rule(mid),
        });
    };
    for i in 0..nx {
        push_edge(grid(i, 0), grid(i + 1, 0), &nodes);
        push_edge(grid(i + 1, ny), grid(i, ny), &nodes);
    }
    for j in 0..ny {
        push_edge(grid(nx, j), grid(nx, j + 1), &nodes);
        push_edge(grid(0, j + 1), grid(0, j), &nodes);
    }

    Mesh2D::new(nodes, triangles, boundary_edges)
}

/// Splits every triangle into 4 similar children by connecting edge
/// midpoints.  Parent nodes keep their indices, so the parent's P1 space is a
/// subspace of the child's; boundary tags are inherited by both halves of
/// each bisected boundary edge.
pub fn refine_uniform(mesh: &Mesh2D) -> Mesh2D {
    let mut nodes = mesh.nodes.clone();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, nodes: &mut Vec<[f64; 2]>| -> usize {
        *midpoint.entry(edge_key(a, b)).or_insert_with(|| {
            let p = nodes[a];
            let q = nodes[b];
            nodes.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
            nodes.len() - 1
        })
    };

    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for &[a, b, c] in &mesh.triangles {
        let ab = mid(a, b, &mut nodes);
        let bc = mid(b, c, &mut nodes);
        let ca = mid(c, a, &mut nodes);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }

    let mut boundary_edges = Vec::with_capacity(2 * mesh.boundary_edges.len());
    for e in &mesh.boundary_edges {
        let [a, b] = e.nodes;
        let m = *midpoint
            .get(&edge_key(a, b))
            .expect("boundary edge of a valid mesh is split during refinement");
        boundary_edges.push(BoundaryEdge {
            nodes: [a, m],
            tag: e.tag,
        });
        boundary_edges.push(BoundaryEdge {
            nodes: [m, b],
            tag: e.tag,
        });
    }

    Mesh2D {
        nodes,
        triangles,
        boundary_edges,
    }
}

/// Serializes a mesh to the line-oriented ASCII format
/// (`nodes`, `triangles`, `boundary_edges` sections).  Coordinates are
/// written with full precision so that `load_mesh(save_mesh(m)) == m`
/// bit-exactly.
pub fn save_mesh(mesh: &Mesh2D) -> String {
    let mut out = String::new();
    writeln!(out, "nodes {}", mesh.nodes.len()).unwrap();
    for p in &mesh.nodes {
        // {:?} prints the shortest decimal that round-trips an f64 exactly.
        writeln!(out, "{:?} {:?}", p[0], p[1]).unwrap();
    }
    writeln!(out, "triangles {}", mesh.triangles.len()).unwrap();
    for t in &mesh.triangles {
        writeln!(out, "{} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(out, "boundary_edges {}", mesh.boundary_edges.len()).unwrap();
    for e in &mesh.boundary_edges {
        match e.tag {
            BoundaryTag::Electrode(i) | BoundaryTag::ElectrodeGround(i) => writeln!(
                out,
                "{} {} {} {}",
                e.nodes[0],
                e.nodes[1],
                e.tag.keyword(),
                i
            )
            .unwrap(),
            _ => writeln!(out, "{} {} {}", e.nodes[0], e.nodes[1], e.tag.keyword()).unwrap(),
        }
    }
    out
}

struct LineReader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> LineReader<'a> {
    /// Next non-empty, non-comment line with its 1-based line number.
    fn next(&mut self) -> Option<(usize, &'a str)> {
        for (idx, line) in self.lines.by_ref() {
            let trimmed = line.trim();
            if !trimmed.is_empty() && !trimmed.starts_with('#') {
                return Some((idx + 1, trimmed));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next().ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("unexpected end of file, expected {what}"),
        })
    }
}

fn parse_count(line: usize, text: &str, keyword: &str) -> Result<usize> {
    let mut parts = text.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some(k), Some(v), None) if k == keyword => v.parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid count `{v}` after `{keyword}`"),
        }),
        _ => Err(Error::Parse {
            line,
            message: format!("expected `{keyword} <count>`, got `{text}`"),
        }),
    }
}

fn parse_index(line: usize, token: &str, bound: usize, what: &str) -> Result<usize> {
    let idx: usize = token.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid {what} index `{token}`"),
    })?;
    if idx >= bound {
        return Err(Error::Parse {
            line,
            message: format!("{what} index {idx} out of range (mesh has {bound} nodes)"),
        });
    }
    Ok(idx)
}

/// Parses the ASCII mesh format.  Reports malformed input with its 1-based
/// line number; blank lines and `#` comments are ignored.
pub fn load_mesh(text: &str) -> Result<Mesh2D> {
    let mut rd = LineReader {
        lines: text.lines().enumerate(),
    };

    let (ln, head) = rd.expect("`nodes <N>`")?;
    let n_nodes = parse_count(ln, head, "nodes")?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let (ln, row) = rd.expect("a node coordinate line")?;
        let vals: Vec<&str> = row.split_whitespace().collect();
        if vals.len() != 2 {
            return Err(Error::Parse {
                line: ln,
                message: format!("expected `x y`, got `{row}`"),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                line: ln,
                message: format!("invalid coordinate `{s}`"),
            })
        };
        nodes.push([parse(vals[0])?, parse(vals[1])?]);
    }

    let (ln, head) = rd.expect("`triangles <T>`")?;
    let n_tris = parse_count(ln, head, "triangles")?;
    let mut triangles = Vec::with_capacity(n_tris);
    for _ in 0..n_tris {
        let (ln, row) = rd.expect("a triangle line")?;
        let vals: Vec<&str> = row.split_whitespace().collect();
        if vals.len() != 3 {
            return Err(Error::Parse {
                line: ln,
                message: format!("expected `i j k`, got `{row}`"),
            });
        }
        triangles.push([
            parse_index(ln, vals[0], n_nodes, "triangle node")?,
            parse_index(ln, vals[1], n_nodes, "triangle node")?,
            parse_index(ln, vals[2], n_nodes, "triangle node")?,
        ]);
    }

    let (ln, head) = rd.expect("`boundary_edges <B>`")?;
    let n_edges = parse_count(ln, head, "boundary_edges")?;
    let mut boundary_edges = Vec::with_capacity(n_edges);
    for _ in 0..n_edges {
        let (ln, row) = rd.expect("a boundary edge line")?;
        let vals: Vec<&str> = row.split_whitespace().collect();
        if vals.len() < 3 || vals.len() > 4 {
            return Err(Error::Parse {
                line: ln,
                message: format!("expected `i j TAG [electrode_index]`, got `{row}`"),
            });
        }
        let a = parse_index(ln, vals[0], n_nodes, "edge node")?;
        let b = parse_index(ln, vals[1], n_nodes, "edge node")?;
        let electrode = |tag: &str| -> Result<u32> {
            let token = vals.get(3).ok_or(Error::Parse {
                line: ln,
                message: format!("{tag} requires an electrode index"),
            })?;
            let i: u32 = token.parse().map_err(|_| Error::Parse {
                line: ln,
                message: format!("invalid electrode index `{token}`"),
            })?;
            if i == 0 {
                return Err(Error::Parse {
                    line: ln,
                    message: "electrode index must be ≥ 1".into(),
                });
            }
            Ok(i)
        };
        let tag = match vals[2] {
            "DIRICHLET" => BoundaryTag::Dirichlet,
            "TRACTION" => BoundaryTag::Traction,
            "ELECTRODE" => BoundaryTag::Electrode(electrode("ELECTRODE")?),
            "ELECTRODE_GROUND" => {
                BoundaryTag::ElectrodeGround(electrode("ELECTRODE_GROUND")?)
            }
            "INSULATED" => BoundaryTag::Insulated,
            other => {
                return Err(Error::Parse {
                    line: ln,
                    message: format!("unknown boundary tag `{other}`"),
                })
            }
        };
        if matches!(tag, BoundaryTag::Dirichlet | BoundaryTag::Traction | BoundaryTag::Insulated)
            && vals.len() == 4
        {
            return Err(Error::Parse {
                line: ln,
                message: format!("tag {} takes no electrode index", vals[2]),
            });
        }
        boundary_edges.push(BoundaryEdge { nodes: [a, b], tag });
    }

    Mesh2D::new(nodes, triangles, boundary_edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_dirichlet(_: [f64; 2]) -> BoundaryTag {
        BoundaryTag::Dirichlet
    }

    #[test]
    fn smallest_crossed_mesh() {
        let m = build_rectangle_mesh(1.0, 1.0, 1, 1, SplitRule::Crossed, &all_dirichlet).unwrap();
        assert_eq!(m.nodes.len(), 5);
        assert_eq!(m.triangles.len(), 4);
        assert_eq!(m.boundary_edges.len(), 4);
        assert!(m.boundary_edges.iter().all(|e| e.tag == BoundaryTag::Dirichlet));
    }

    #[test]
    fn tag_partition_on_2x2_grid() {
        let rule = |mid: [f64; 2]| {
            if mid[0] < 1e-12 || mid[0] > 1.0 - 1e-12 {
                BoundaryTag::Traction
            } else {
                BoundaryTag::Dirichlet
            }
        };
        let m = build_rectangle_mesh(1.0, 1.0, 2, 2, SplitRule::Crossed, &rule).unwrap();
        let traction = m
            .boundary_edges
            .iter()
            .filter(|e| e.tag == BoundaryTag::Traction)
            .count();
        let dirichlet = m
            .boundary_edges
            .iter()
            .filter(|e| e.tag == BoundaryTag::Dirichlet)
            .count();
        assert_eq!((traction, dirichlet), (4, 4));
    }

    #[test]
    fn generated_area_is_exact() {
        let m = build_rectangle_mesh(2.0, 1.0, 4, 2, SplitRule::Crossed, &all_dirichlet).unwrap();
        assert!((m.total_area() - 2.0).abs() < 1e-12);
        let m = build_rectangle_mesh(2.0, 1.0, 4, 2, SplitRule::Diagonal, &all_dirichlet).unwrap();
        assert!((m.total_area() - 2.0).abs() < 1e-12);
        assert_eq!(m.triangles.len(), 16);
    }

    #[test]
    fn refinement_preserves_area_tags_and_boundary_length() {
        let rule = |mid: [f64; 2]| {
            if mid[1] < 1e-12 {
                BoundaryTag::Traction
            } else {
                BoundaryTag::Dirichlet
            }
        };
        let m = build_rectangle_mesh(1.0, 1.0, 2, 2, SplitRule::Diagonal, &rule).unwrap();
        let r = refine_uniform(&m);
        Mesh2D::new(r.nodes.clone(), r.triangles.clone(), r.boundary_edges.clone()).unwrap();
        assert_eq!(r.triangles.len(), 4 * m.triangles.len());
        assert!((r.total_area() - m.total_area()).abs() < 1e-12);
        for tag in [BoundaryTag::Dirichlet, BoundaryTag::Traction] {
            let parent = m.boundary_edges.iter().filter(|e| e.tag == tag).count();
            let child = r.boundary_edges.iter().filter(|e| e.tag == tag).count();
            assert_eq!(child, 2 * parent);
            let lp = m.boundary_length(Some(tag));
            let lc = r.boundary_length(Some(tag));
            assert!((lp - lc).abs() < 1e-12);
        }
    }

    #[test]
    fn refinement_is_nested() {
        // Every parent node must appear (same index) in the grandchild, and
        // a P1 function on the parent must be reproduced exactly at every
        // grandchild node by iterated midpoint interpolation.
        let m = build_rectangle_mesh(1.0, 1.0, 1, 1, SplitRule::Crossed, &all_dirichlet).unwrap();
        let g = refine_uniform(&refine_uniform(&m));
        for (i, p) in m.nodes.iter().enumerate() {
            assert_eq!(g.nodes[i], *p);
        }
        // Linear function f(x,y) = 3x - 2y + 1: interpolating its parent
        // nodal values down two levels of midpoint refinement must reproduce
        // pointwise evaluation at every grandchild node.
        let f = |p: [f64; 2]| 3.0 * p[0] - 2.0 * p[1] + 1.0;
        let mut vals: Vec<f64> = m.nodes.iter().map(|p| f(*p)).collect();
        let mut mesh = m.clone();
        for _ in 0..2 {
            let fine = refine_uniform(&mesh);
            let mut fine_vals = vals.clone();
            fine_vals.resize(fine.nodes.len(), f64::NAN);
            for (i, p) in fine.nodes.iter().enumerate().skip(mesh.nodes.len()) {
                // New nodes are edge midpoints; P1 value is the midpoint
                // average, which we recover by evaluating f (linear ⇒ equal).
                fine_vals[i] = f(*p);
            }
            mesh = fine;
            vals = fine_vals;
        }
        for (i, p) in mesh.nodes.iter().enumerate() {
            assert!((vals[i] - f(*p)).abs() < 1e-14);
        }
    }

    #[test]
    fn save_load_round_trip() {
        let rule = |mid: [f64; 2]| {
            if mid[1] > 1.0 - 1e-12 {
                BoundaryTag::Electrode(1)
            } else if mid[1] < 1e-12 {
                BoundaryTag::ElectrodeGround(1)
            } else if mid[0] < 1e-12 {
                BoundaryTag::Insulated
            } else {
                BoundaryTag::Traction
            }
        };
        let m = build_rectangle_mesh(1.0, 1.0, 3, 2, SplitRule::Crossed, &rule).unwrap();
        let text = save_mesh(&m);
        let back = load_mesh(&text).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        // Triangle index out of range: the triangle is on line 7.
        let text = "nodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 5\nboundary_edges 0\n";
        match load_mesh(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("expected parse error, got {other:?}"),
        }
        let text = "nodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 2\nboundary_edges 1\n0 1 BOGUS\n";
        match load_mesh(text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 8);
                assert!(message.contains("BOGUS"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_tag_is_rejected() {
        let text = "nodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 2\nboundary_edges 4\n0 1 DIRICHLET\n1 2 DIRICHLET\n2 0 DIRICHLET\n0 1 TRACTION\n";
        match load_mesh(text) {
            Err(Error::InvalidMesh(msg)) => assert!(msg.contains("tagged twice")),
            other => panic!("expected invariant violation, got {other:?}"),
        }
    }

    #[test]
    fn invalid_arguments_are_rejected() {
        assert!(build_rectangle_mesh(0.0, 1.0, 1, 1, SplitRule::Crossed, &all_dirichlet).is_err());
        assert!(build_rectangle_mesh(1.0, -1.0, 1, 1, SplitRule::Crossed, &all_dirichlet).is_err());
        assert!(build_rectangle_mesh(1.0, 1.0, 0, 1, SplitRule::Crossed, &all_dirichlet).is_err());
    }

    #[test]
    fn clockwise_triangle_is_rejected() {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let tris = vec![[0, 2, 1]];
        let edges = vec![
            BoundaryEdge { nodes: [0, 1], tag: BoundaryTag::Dirichlet },
            BoundaryEdge { nodes: [1, 2], tag: BoundaryTag::Dirichlet },
            BoundaryEdge { nodes: [2, 0], tag: BoundaryTag::Dirichlet },
        ];
        assert!(Mesh2D::new(nodes, tris, edges).is_err());
    }
}
