//! Finite-element solvers for stationary flow of electrorheological fluids
//! in two dimensions.
//!
//! The crate provides:
//! - structured triangular meshes with boundary tagging ([`mesh`]);
//! - Taylor–Hood (P2/P1) finite-element spaces, quadrature, assembly and
//!   sparse linear algebra ([`space`], [`quadrature`], [`assemble`],
//!   [`sparse`], [`infsup`]);
//! - the constitutive layer: field-direction factor μ, viscosity models with
//!   yield stress, their admissibility conditions, nonlinear operators and
//!   energy functionals ([`viscosity`], [`operators`]);
//! - the electric subproblem: potential, field and electric forces
//!   ([`electric`]);
//! - stationary solvers for the nonlinear Stokes problem (damped Newton,
//!   augmented Lagrangian, frozen-coefficient iteration, contraction and
//!   gradient methods, regularization continuation) ([`stokes`]);
//! - solvers with inertial (convective) terms and their solvability
//!   diagnostics ([`inertial`]);
//! - validation suites exercising all of the above ([`validation`]).

pub mod assemble;
pub mod electric;
pub mod error;
pub mod inertial;
pub mod infsup;
pub mod mesh;
pub mod operators;
pub mod quadrature;
pub mod space;
pub mod sparse;
pub mod stokes;
pub mod validation;
pub mod viscosity;

pub use error::{Error, Result};
pub use mesh::{BoundaryEdge, BoundaryTag, Mesh2D, SplitRule};
pub use space::FeSpace;
pub use sparse::{LinearMethod, SparseMatrix};
pub use stokes::{
    FlowProblem, FlowState, InnerMethod, LiftingField, Loads, SolverConfig, SolverReport,
};
pub use validation::{run_suite, CheckResult};
pub use viscosity::{MuFunction, ViscosityModel};
