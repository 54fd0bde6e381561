//! Assembly throughput on structured cavity meshes.

use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use erflow_core::assemble::{assemble_divergence, assemble_mass, assemble_strain_gram};
use erflow_core::mesh::{build_rectangle_mesh, BoundaryTag, SplitRule};
use erflow_core::FeSpace;

fn cavity(n: usize) -> Arc<erflow_core::Mesh2D> {
    Arc::new(
        build_rectangle_mesh(1.0, 1.0, n, n, SplitRule::Crossed, &|_| BoundaryTag::Dirichlet)
            .expect("valid mesh"),
    )
}

fn bench_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assembly");
    for &n in &[8usize, 16, 32] {
        let mesh = cavity(n);
        let v = FeSpace::p2_vector(mesh.clone());
        let p = FeSpace::p1_scalar(mesh);
        group.bench_with_input(BenchmarkId::new("strain_gram", n), &n, |b, _| {
            b.iter(|| assemble_strain_gram(&v))
        });
        group.bench_with_input(BenchmarkId::new("divergence", n), &n, |b, _| {
            b.iter(|| assemble_divergence(&v, &p).expect("compatible spaces"))
        });
        group.bench_with_input(BenchmarkId::new("pressure_mass", n), &n, |b, _| {
            b.iter(|| assemble_mass(&p))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_assembly);
criterion_main!(benches);
