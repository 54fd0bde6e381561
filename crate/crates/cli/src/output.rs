//! Field writers: CSV (one row per mesh node) and legacy ASCII VTK.
//!
//! All floating-point values are serialized with 17 significant digits so a
//! re-parse reproduces the in-memory values bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use erflow_core::mesh::Mesh2D;

/// One output record per mesh node.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FieldRow {
    pub x: f64,
    pub y: f64,
    pub u1: f64,
    pub u2: f64,
    pub p: f64,
    pub theta: f64,
    pub abs_e: f64,
    pub invariant: f64,
    pub mu: f64,
    pub phi: f64,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders the per-node field table as CSV text.
pub fn csv_text(rows: &[FieldRow]) -> String {
    let mut out = String::from("node,x,y,u1,u2,p,theta,absE,I,mu,phi\n");
    for (i, r) in rows.iter().enumerate() {
        writeln!(
            out,
            "{i},{},{},{},{},{},{},{},{},{},{}",
            num(r.x),
            num(r.y),
            num(r.u1),
            num(r.u2),
            num(r.p),
            num(r.theta),
            num(r.abs_e),
            num(r.invariant),
            num(r.mu),
            num(r.phi)
        )
        .unwrap();
    }
    out
}

/// Parses CSV text produced by `csv_text` (used by the round-trip test and
/// downstream tooling).
#[cfg_attr(not(test), allow(dead_code))]
pub fn parse_csv(text: &str) -> Result<Vec<FieldRow>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        anyhow::ensure!(f.len() == 11, "CSV line {}: expected 11 columns", i + 1);
        let p = |j: usize| -> Result<f64> {
            f[j].parse()
                .map_err(|_| anyhow::anyhow!("CSV line {}: bad number `{}`", i + 1, f[j]))
        };
        rows.push(FieldRow {
            x: p(1)?,
            y: p(2)?,
            u1: p(3)?,
            u2: p(4)?,
            p: p(5)?,
            theta: p(6)?,
            abs_e: p(7)?,
            invariant: p(8)?,
            mu: p(9)?,
            phi: p(10)?,
        });
    }
    Ok(rows)
}

/// Renders the mesh and per-node fields as a legacy ASCII VTK unstructured
/// grid (`POINTS`/`CELLS`/`POINT_DATA`).
pub fn vtk_text(mesh: &Mesh2D, rows: &[FieldRow]) -> String {
    assert_eq!(rows.len(), mesh.nodes.len());
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("erflow fields\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(out, "POINTS {} double", mesh.nodes.len()).unwrap();
    for p in &mesh.nodes {
        writeln!(out, "{} {} {}", num(p[0]), num(p[1]), num(0.0)).unwrap();
    }
    let nt = mesh.triangles.len();
    writeln!(out, "CELLS {nt} {}", 4 * nt).unwrap();
    for t in &mesh.triangles {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(out, "CELL_TYPES {nt}").unwrap();
    for _ in 0..nt {
        out.push_str("5\n");
    }
    writeln!(out, "POINT_DATA {}", rows.len()).unwrap();
    out.push_str("VECTORS velocity double\n");
    for r in rows {
        writeln!(out, "{} {} {}", num(r.u1), num(r.u2), num(0.0)).unwrap();
    }
    for (name, get) in [
        ("pressure", (|r: &FieldRow| r.p) as fn(&FieldRow) -> f64),
        ("theta", |r| r.theta),
        ("absE", |r| r.abs_e),
        ("invariant", |r| r.invariant),
        ("mu", |r| r.mu),
        ("phi", |r| r.phi),
    ] {
        writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
        for r in rows {
            writeln!(out, "{}", num(get(r))).unwrap();
        }
    }
    out
}

/// Writes `text` to `dir/name`, creating the directory if needed.
pub fn write_file(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
}
