//! End-to-end solver timings on a pressure-driven channel.

use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use erflow_core::mesh::{build_rectangle_mesh, BoundaryTag, SplitRule};
use erflow_core::operators::EField;
use erflow_core::stokes::{
    augmented_lagrangian_solve, build_lifting, solve_mixed, FlowProblem, Loads, SolverConfig,
};
use erflow_core::viscosity::{MuFunction, RegularModel, ViscosityModel};
use erflow_core::FeSpace;

const G: f64 = 8.0;

fn channel(nx: usize, ny: usize) -> Arc<erflow_core::Mesh2D> {
    Arc::new(
        build_rectangle_mesh(2.0, 1.0, nx, ny, SplitRule::Crossed, &|mid| {
            if mid[0] < 1e-12 || mid[0] > 2.0 - 1e-12 {
                BoundaryTag::Traction
            } else {
                BoundaryTag::Dirichlet
            }
        })
        .expect("valid mesh"),
    )
}

fn bench_solvers(c: &mut Criterion) {
    let mesh = channel(8, 4);
    let v_space = FeSpace::p2_vector(mesh.clone());
    let p_space = FeSpace::p1_scalar(mesh);
    let model = ViscosityModel::Regular(RegularModel::constant(1.0));
    let mu_fn = MuFunction::default();
    let lifting = build_lifting(&v_space, &p_space, &|_| [0.0, 0.0]).expect("lifting");
    let traction = |x: [f64; 2]| [0.0, G * (0.5 - x[1])];
    let loads = Loads { traction: Some(&traction), ..Default::default() };
    let problem = FlowProblem::new(
        &model,
        &mu_fn,
        EField::Zero,
        &v_space,
        &p_space,
        &lifting.u,
        &loads,
    )
    .expect("well-posed problem");

    let mut group = c.benchmark_group("solvers");
    group.sample_size(10);
    group.bench_function("mixed_newton_channel_8x4", |b| {
        b.iter(|| solve_mixed(&problem, &SolverConfig::default()).expect("converges"))
    });
    group.bench_function("augmented_lagrangian_channel_8x4", |b| {
        b.iter(|| {
            augmented_lagrangian_solve(&problem, &SolverConfig::default(), None)
                .expect("converges")
        })
    });
    group.finish();
}

criterion_group!(benches, bench_solvers);
criterion_main!(benches);
