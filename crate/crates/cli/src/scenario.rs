//! Scenario assembly and the solve pipeline:
//! parse → mesh → electric solve → forces → flow solve → writers.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use erflow_core::assemble::{invariant_i, strain_rate, velocity_gradient};
use erflow_core::electric::{
    assemble_electric_load, compute_electric_forces, solve_potential, ElectricState,
};
use erflow_core::inertial::{solve_inertial_dirichlet, solve_inertial_mixed, Density};
use erflow_core::mesh::{build_rectangle_mesh, load_mesh, BoundaryTag, Mesh2D, SplitRule};
use erflow_core::operators::EField;
use erflow_core::quadrature::triangle_rule_degree6;
use erflow_core::space::element_basis;
use erflow_core::stokes::{
    augmented_lagrangian_solve, build_lifting, gradient_solve, lambda_continuation, solve_mixed,
    FlowProblem, FlowState, InnerMethod, Loads, SolverConfig, SolverReport,
};
use erflow_core::viscosity::parse_model;
use erflow_core::{FeSpace, MuFunction, ViscosityModel};

use crate::config::Config;
use crate::output::{csv_text, vtk_text, write_file, FieldRow};

/// Output format selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Vtk,
    Both,
}

impl std::str::FromStr for Format {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "vtk" => Ok(Format::Vtk),
            "both" => Ok(Format::Both),
            other => bail!("unknown format `{other}` (expected csv, vtk or both)"),
        }
    }
}

/// Flow regime selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Stokes,
    InertialDirichlet,
    InertialMixed,
}

/// Outer solve strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Mixed,
    AugmentedLagrangian,
    Continuation,
    Gradient,
}

/// A fully validated scenario, ready to run.
pub struct Scenario {
    pub mesh: Arc<Mesh2D>,
    pub model: Option<(ViscosityModel, MuFunction)>,
    pub electric: Option<ElectricSetup>,
    pub flow: Option<FlowSetup>,
    pub solver: SolverConfig,
    pub strategy: Strategy,
    pub output_prefix: String,
    pub write_report: bool,
}

pub struct ElectricSetup {
    pub voltages: BTreeMap<u32, f64>,
    pub eps: EpsSpec,
    pub si_units: bool,
}

#[derive(Debug, Clone)]
pub enum EpsSpec {
    Constant(f64),
    /// Two horizontal layers: value below / at-or-above the split height.
    TwoLayer { y_split: f64, below: f64, above: f64 },
}

impl EpsSpec {
    fn eval(&self, x: [f64; 2]) -> f64 {
        match self {
            EpsSpec::Constant(c) => *c,
            EpsSpec::TwoLayer { y_split, below, above } => {
                if x[1] < *y_split {
                    *below
                } else {
                    *above
                }
            }
        }
    }
}

pub struct FlowSetup {
    pub regime: Regime,
    pub body_force: [f64; 2],
    pub wall_velocity: [f64; 2],
    pub traction: Option<[f64; 2]>,
    pub density: f64,
    pub use_electric_volume_force: bool,
    pub use_electric_traction: bool,
}

pub fn mesh_from_config(cfg: &Config) -> Result<Arc<Mesh2D>> {
    if let Some(file) = cfg.get("mesh.file") {
        let text = std::fs::read_to_string(file)
            .with_context(|| format!("cannot read mesh file {file}"))?;
        return Ok(Arc::new(load_mesh(&text)?));
    }
    let width: f64 = cfg.get_or("mesh.width", 1.0)?;
    let height: f64 = cfg.get_or("mesh.height", 1.0)?;
    let nx: usize = cfg.get_or("mesh.nx", 8)?;
    let ny: usize = cfg.get_or("mesh.ny", 8)?;
    let split = match cfg.get("mesh.split").unwrap_or("crossed") {
        "crossed" => SplitRule::Crossed,
        "diagonal" => SplitRule::Diagonal,
        other => bail!("mesh.split: unknown split rule `{other}`"),
    };
    let layout = cfg.get("mesh.layout").unwrap_or("cavity");
    let tag = |mid: [f64; 2]| -> BoundaryTag {
        let left = mid[0] < 1e-12;
        let right = mid[0] > width - 1e-12;
        let bottom = mid[1] < 1e-12;
        let top = mid[1] > height - 1e-12;
        match layout {
            "channel" if left || right => BoundaryTag::Traction,
            "channel_outflow" if right => BoundaryTag::Traction,
            "er_channel" if left || right => BoundaryTag::Traction,
            "er_channel" if bottom => BoundaryTag::ElectrodeGround(1),
            "er_channel" if top => BoundaryTag::Electrode(1),
            "capacitor" if bottom => BoundaryTag::ElectrodeGround(1),
            "capacitor" if top => BoundaryTag::Electrode(1),
            "capacitor" => BoundaryTag::Insulated,
            _ => BoundaryTag::Dirichlet,
        }
    };
    match layout {
        "cavity" | "channel" | "channel_outflow" | "er_channel" | "capacitor" => {}
        other => bail!("mesh.layout: unknown layout `{other}`"),
    }
    Ok(Arc::new(build_rectangle_mesh(width, height, nx, ny, split, &tag)?))
}

fn pair(cfg: &Config, key: &str, default: [f64; 2]) -> Result<[f64; 2]> {
    match cfg.get_floats(key)? {
        None => Ok(default),
        Some(v) if v.len() == 2 => Ok([v[0], v[1]]),
        Some(v) => bail!("config key `{key}`: expected 2 numbers, got {}", v.len()),
    }
}

fn solver_from_config(cfg: &Config) -> Result<SolverConfig> {
    let mut s = SolverConfig::default();
    s.r = cfg.get_or("solver.r", s.r)?;
    s.rho = cfg.get_or("solver.rho", s.rho)?;
    s.t = cfg.get_parsed("solver.t")?;
    if let Some(sched) = cfg.get_floats("solver.lambda_schedule")? {
        s.lambda_schedule = sched;
    }
    s.tol_velocity = cfg.get_or("solver.tol_velocity", s.tol_velocity)?;
    s.tol_divergence = cfg.get_or("solver.tol_divergence", s.tol_divergence)?;
    s.tol_residual = cfg.get_or("solver.tol_residual", s.tol_residual)?;
    s.max_outer = cfg.get_or("solver.max_outer", s.max_outer)?;
    s.max_inner = cfg.get_or("solver.max_inner", s.max_inner)?;
    s.inner_method = match cfg.get("solver.inner_method").unwrap_or("newton") {
        "newton" => InnerMethod::Newton,
        "birger_kachanov" => InnerMethod::BirgerKachanov,
        "contraction" => InnerMethod::Contraction,
        "gradient" => InnerMethod::Gradient,
        other => bail!("solver.inner_method: unknown method `{other}`"),
    };
    s.validate()?;
    Ok(s)
}

impl Scenario {
    /// Parses and validates a configuration; every constraint violation is
    /// reported before any computation starts.
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let mesh = mesh_from_config(cfg).context("stage `mesh`")?;

        let model = if cfg.has_section("model.") {
            Some(parse_model(&cfg.section_text("model.")).context("stage `parse` (model)")?)
        } else {
            None
        };

        let electric = if cfg.has_section("electric.") {
            let mut voltages = BTreeMap::new();
            for (key, value) in cfg.with_prefix("electric.voltage.") {
                let idx: u32 = key
                    .parse()
                    .with_context(|| format!("electric.voltage.{key}: bad electrode index"))?;
                let v: f64 = value
                    .parse()
                    .with_context(|| format!("electric.voltage.{key}: bad voltage `{value}`"))?;
                voltages.insert(idx, v);
            }
            if voltages.is_empty() {
                bail!("electric section present but no electric.voltage.<i> keys");
            }
            // referenced electrode indices must exist in the mesh
            for &idx in voltages.keys() {
                let found = mesh.boundary_edges.iter().any(|e|

                    matches!(e.tag, BoundaryTag::Electrode(i) | BoundaryTag::ElectrodeGround(i) if i == idx));
                if !found {
                    bail!("electric.voltage.{idx}: the mesh has no electrode pair {idx}");
                }
            }
            let eps = if let Some(v) = cfg.get_floats("electric.eps_two_layer")? {
                if v.len() != 3 {
                    bail!("electric.eps_two_layer: expected `y_split eps_below eps_above`");
                }
                EpsSpec::TwoLayer { y_split: v[0], below: v[1], above: v[2] }
            } else {
                EpsSpec::Constant(cfg.get_or("electric.eps", 1.0)?)
            };
            match &eps {
                EpsSpec::Constant(c) if *c <= 0.0 => bail!("electric.eps must be positive"),
                EpsSpec::TwoLayer { below, above, .. } if *below <= 0.0 || *above <= 0.0 => {
                    bail!("electric.eps_two_layer values must be positive")
                }
                _ => {}
            }
            let si_units = match cfg.get("electric.units").unwrap_or("gaussian") {
                "gaussian" => false,
                "si" => true,
                other => bail!("electric.units: expected gaussian or si, got `{other}`"),
            };
            Some(ElectricSetup { voltages, eps, si_units })
        } else {
            None
        };

        let flow = if cfg.has_section("flow.") {
            let regime = match cfg.get("flow.regime").unwrap_or("stokes") {
                "stokes" => Regime::Stokes,
                "inertial_dirichlet" => Regime::InertialDirichlet,
                "inertial_mixed" => Regime::InertialMixed,
                other => bail!("flow.regime: unknown regime `{other}`"),
            };
            let has_traction_edges = mesh.boundary_edges.iter().any(|e| !e.tag.is_wall());
            if regime == Regime::InertialDirichlet && has_traction_edges {
                bail!("flow.regime = inertial_dirichlet requires a mesh without traction edges");
            }
            if regime == Regime::InertialMixed && !has_traction_edges {
                bail!("flow.regime = inertial_mixed requires traction edges in the mesh");
            }
            let density = cfg.get_or("flow.density", 1.0)?;
            if density <= 0.0 && regime != Regime::Stokes {
                bail!("flow.density must be positive for inertial regimes");
            }
            if model.is_none() {
                bail!("a flow section requires a model section");
            }
            Some(FlowSetup {
                regime,
                body_force: pair(cfg, "flow.body_force", [0.0, 0.0])?,
                wall_velocity: pair(cfg, "flow.wall_velocity", [0.0, 0.0])?,
                traction: match cfg.get_floats("flow.traction")? {
                    None => None,
                    Some(v) if v.len() == 2 => Some([v[0], v[1]]),
                    Some(_) => bail!("flow.traction: expected 2 numbers"),
                },
                density,
                use_electric_volume_force: cfg.get_bool("flow.use_electric_volume_force", false)?,
                use_electric_traction: cfg.get_bool("flow.use_electric_traction", false)?,
            })
        } else {
            None
        };

        if let Some(f) = &flow {
            if (f.use_electric_volume_force || f.use_electric_traction) && electric.is_none() {
                bail!("electric coupling requested but no electric section configured");
            }
        }
        if flow.is_none() && electric.is_none() {
            bail!("the scenario configures neither a flow nor an electric problem");
        }

        let strategy = match cfg.get("solver.strategy").unwrap_or("mixed") {
            "mixed" => Strategy::Mixed,
            "al" => Strategy::AugmentedLagrangian,
            "continuation" => Strategy::Continuation,
            "gradient" => Strategy::Gradient,
            other => bail!("solver.strategy: unknown strategy `{other}`"),
        };

        Ok(Scenario {
            mesh,
            model,
            electric,
            flow,
            solver: solver_from_config(cfg)?,
            strategy,
            output_prefix: cfg.get("output.prefix").unwrap_or("fields").to_string(),
            write_report: cfg.get_bool("output.report", true)?,
        })
    }

    /// Runs the pipeline and writes the requested outputs.
    pub fn run(&self, output_dir: &Path, format: Format, verbose: bool) -> Result<()> {
        // electric stage
        let electric_state = match &self.electric {
            Some(setup) => {
                let eps = |x: [f64; 2]| setup.eps.eval(x);
                let state = solve_potential(self.mesh.clone(), &eps, &setup.voltages)
                    .context("stage `electric`")?;
                if verbose {
                    eprintln!("electric: solved for {} electrode pair(s)", setup.voltages.len());
                }
                Some(state)
            }
            None => None,
        };

        // flow stage
        let flow_state = match &self.flow {
            Some(setup) => Some(self.solve_flow(setup, electric_state.as_ref(), verbose)?),
            None => None,
        };

        // writer stage
        let rows = self.node_fields(flow_state.as_ref().map(|(s, _)| s), electric_state.as_ref());
        if matches!(format, Format::Csv | Format::Both) {
            write_file(output_dir, &format!("{}.csv", self.output_prefix), &csv_text(&rows))
                .context("stage `write`")?;
        }
        if matches!(format, Format::Vtk | Format::Both) {
            write_file(output_dir, &format!("{}.vtk", self.output_prefix), &vtk_text(&self.mesh, &rows))
                .context("stage `write`")?;
        }
        if self.write_report {
            if let Some((_, report)) = &flow_state {
                write_file(
                    output_dir,
                    &format!("{}_report.csv", self.output_prefix),
                    &report_csv(report),
                )
                .context("stage `write`")?;
                if verbose {
                    eprintln!(
                        "flow: converged = {}, {} iterations, {:.3}s",
                        report.converged,
                        report.iterations.len(),
                        report.wall_time
                    );
                }
            }
        }
        Ok(())
    }

    fn solve_flow(
        &self,
        setup: &FlowSetup,
        electric: Option<&ElectricState>,
        verbose: bool,
    ) -> Result<(FlowState, SolverReport)> {
        let (model, mu_fn) = self.model.as_ref().expect("validated: flow requires a model");
        let v_space = FeSpace::p2_vector(self.mesh.clone());
        let p_space = FeSpace::p1_scalar(self.mesh.clone());
        let wall = setup.wall_velocity;
        let lifting =
            build_lifting(&v_space, &p_space, &move |_| wall).context("stage `flow` (lifting)")?;

        // forces stage: electric body force and traction
        let electric_load = match electric {
            Some(state) if setup.use_electric_volume_force || setup.use_electric_traction => {
                let setup_e = self.electric.as_ref().expect("validated");
                let mut forces = compute_electric_forces(state, None, setup_e.si_units)
                    .context("stage `forces`")?;
                if !setup.use_electric_volume_force {
                    forces.sigma.iter_mut().for_each(|s| *s = [[0.0; 2]; 2]);
                }
                if !setup.use_electric_traction {
                    forces.f_e.clear();
                }
                Some(assemble_electric_load(&forces, &v_space))
            }
            _ => None,
        };

        let body_vec = setup.body_force;
        let body = move |_: [f64; 2]| body_vec;
        let traction_vec = setup.traction.unwrap_or([0.0, 0.0]);
        let traction = move |_: [f64; 2]| traction_vec;
        let loads = Loads {
            body: Some(&body),
            traction: if setup.traction.is_some() { Some(&traction) } else { None },
            extra: electric_load.as_deref(),
        };
        let e_field = match electric {
            Some(state) => EField::Quad(&state.e),
            None => EField::Zero,
        };

        if verbose {
            eprintln!(
                "flow: {} velocity dofs, {} pressure dofs, regime {:?}, strategy {:?}",
                v_space.n_dofs(),
                p_space.n_dofs(),
                setup.regime,
                self.strategy
            );
        }
        let result = match setup.regime {
            Regime::InertialDirichlet | Regime::InertialMixed => {
                let rho = setup.density;
                let value = move |_: [f64; 2]| rho;
                let density = Density { value: &value, bounds: (0.5 * rho, 2.0 * rho) };
                if setup.regime == Regime::InertialDirichlet {
                    solve_inertial_dirichlet(
                        model, mu_fn, e_field, &v_space, &p_space, &density, &lifting.u, &loads,
                        &self.solver,
                    )
                } else {
                    solve_inertial_mixed(
                        model, mu_fn, e_field, &v_space, &p_space, &density, &lifting.u, &loads,
                        &self.solver,
                    )
                }
            }
            Regime::Stokes => match self.strategy {
                Strategy::Continuation => {
                    let (mut states, _, report) = lambda_continuation(
                        model, mu_fn, e_field, &v_space, &p_space, &lifting.u, &loads,
                        &self.solver,
                    )?;
                    let last = states
                        .pop()
                        .ok_or_else(|| erflow_core::Error::InvalidConfig(
                            "continuation produced no stages".into(),
                        ))?;
                    Ok((last, report))
                }
                _ => {
                    let problem = FlowProblem::new(
                        model, mu_fn, e_field, &v_space, &p_space, &lifting.u, &loads,
                    )?;
                    match self.strategy {
                        Strategy::Mixed => solve_mixed(&problem, &self.solver),
                        Strategy::AugmentedLagrangian => {
                            augmented_lagrangian_solve(&problem, &self.solver, None)
                        }
                        Strategy::Gradient => gradient_solve(&problem, &self.solver),
                        Strategy::Continuation => unreachable!(),
                    }
                }
            },
        };
        result.context("stage `flow`")
    }

    /// Per-node output records.  The velocity, pressure and potential are
    /// nodal dof values; gradient-based quantities (|E|, I, μ, φ) are sampled
    /// at the quadrature point nearest each vertex and averaged over the
    /// elements sharing it.
    fn node_fields(
        &self,
        flow: Option<&FlowState>,
        electric: Option<&ElectricState>,
    ) -> Vec<FieldRow> {
        let mesh = &self.mesh;
        let nn = mesh.nodes.len();
        let mut rows: Vec<FieldRow> = mesh
            .nodes
            .iter()
            .map(|p| FieldRow { x: p[0], y: p[1], ..Default::default() })
            .collect();

        let v_space = flow.map(|_| FeSpace::p2_vector(mesh.clone()));
        if let (Some(state), Some(vs)) = (flow, &v_space) {
            let ns = vs.n_scalar();
            for i in 0..nn {
                rows[i].u1 = state.v[i];
                rows[i].u2 = state.v[ns + i];
                rows[i].p = state.p[i];
            }
        }
        if let Some(state) = electric {
            for i in 0..nn {
                rows[i].theta = state.theta[i];
            }
        }

        // nearest-quadrature-point sampling for gradient quantities
        let rule = triangle_rule_degree6();
        let nq = rule.len();
        let nearest = |basis: &[erflow_core::space::QpBasis], p: [f64; 2]| -> usize {
            (0..nq)
                .min_by(|&a, &b| {
                    let da = (basis[a].x[0] - p[0]).powi(2) + (basis[a].x[1] - p[1]).powi(2);
                    let db = (basis[b].x[0] - p[0]).powi(2) + (basis[b].x[1] - p[1]).powi(2);
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap()
        };
        let mut count = vec![0usize; nn];
        let mut e_sum = vec![[0.0f64; 2]; nn];
        let mut i_sum = vec![0.0f64; nn];
        if let (Some(state), Some(vs)) = (flow, &v_space) {
            for el in 0..mesh.triangles.len() {
                let basis = element_basis(vs, el, rule);
                let edofs = vs.element_dofs(el);
                for &node in &mesh.triangles[el] {
                    let iq = nearest(&basis, mesh.nodes[node]);
                    let grad = velocity_gradient(vs, &edofs, &basis[iq], &state.v);
                    i_sum[node] += invariant_i(strain_rate(grad));
                    count[node] += 1;
                }
            }
        }
        if let Some(state) = electric {
            let mut e_count = vec![0usize; nn];
            for el in 0..mesh.triangles.len() {
                let basis = element_basis(&state.space, el, rule);
                for &node in &mesh.triangles[el] {
                    let iq = nearest(&basis, mesh.nodes[node]);
                    let e = state.e[el * nq + iq];
                    e_sum[node][0] += e[0];
                    e_sum[node][1] += e[1];
                    e_count[node] += 1;
                }
            }
            for i in 0..nn {
                let c = e_count[i].max(1) as f64;
                e_sum[i][0] /= c;
                e_sum[i][1] /= c;
            }
        }
        let eps_e = 1e-12;
        for i in 0..nn {
            let e = e_sum[i];
            let abs_e = (e[0] * e[0] + e[1] * e[1]).sqrt();
            rows[i].abs_e = abs_e;
            rows[i].invariant = i_sum[i] / count[i].max(1) as f64;
            if let Some((model, mu_fn)) = &self.model {
                // the direction factor is undefined without a field; report 0
                let mu = if abs_e < eps_e {
                    0.0
                } else {
                    mu_fn.eval([rows[i].u1, rows[i].u2], e).unwrap_or(0.0)
                };
                rows[i].mu = mu;
                rows[i].phi = model
                    .eval_phi(rows[i].invariant, abs_e, mu, [rows[i].x, rows[i].y])
                    .unwrap_or(f64::NAN);
            }
        }
        rows
    }
}

/// Iteration table plus a summary block, as CSV with comment lines.
pub fn report_csv(report: &SolverReport) -> String {
    let mut out = String::from("iteration,div_norm,residual,p_increment\n");
    for (i, it) in report.iterations.iter().enumerate() {
        out.push_str(&format!(
            "{i},{:.16e},{:.16e},{:.16e}\n",
            it.div_norm, it.residual, it.p_increment
        ));
    }
    out.push_str(&format!("# converged = {}\n", report.converged));
    out.push_str(&format!("# iterations = {}\n", report.iterations.len()));
    out.push_str(&format!("# wall_time_s = {:.6}\n", report.wall_time));
    if let Some((q1, q2, q3, t0, k0)) = report.constants {
        out.push_str(&format!(
            "# constants: q1 = {q1:.6e}, q2 = {q2:.6e}, q3 = {q3:.6e}, t0 = {t0:.6e}, k0 = {k0:.6e}\n"
        ));
    }
    for note in &report.notes {
        out.push_str(&format!("# note: {note}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conf(text: &str) -> Config {
        Config::from_str(text).unwrap()
    }

    const MODEL: &str = "model.variant = REGULAR\nmodel.a1 = 1\nmodel.a2 = 1\nmodel.a3 = 1\nmodel.a4 = 1e-308\nmodel.term.1.coef.constant = 1\nmodel.term.1.shear.constant = 1\n";

    #[test]
    fn missing_electrode_is_rejected_before_solving() {
        let cfg = conf(
            "mesh.nx = 2\nmesh.ny = 2\nmesh.layout = capacitor\nelectric.voltage.3 = 5\n",
        );
        let err = Scenario::from_config(&cfg).map(|_| ()).unwrap_err();
        assert!(format!("{err:#}").contains("electrode pair 3"), "{err:#}");
    }

    #[test]
    fn dirichlet_regime_needs_walls_only() {
        let text = format!(
            "mesh.nx = 2\nmesh.ny = 2\nmesh.layout = channel\nflow.regime = inertial_dirichlet\n{MODEL}"
        );
        let err = Scenario::from_config(&conf(&text)).map(|_| ()).unwrap_err();
        assert!(format!("{err:#}").contains("traction"), "{err:#}");
    }

    #[test]
    fn invalid_solver_step_is_rejected() {
        let text = format!(
            "mesh.nx = 2\nmesh.ny = 2\nsolver.r = 1\nsolver.rho = 2.5\nflow.body_force = 1 0\n{MODEL}"
        );
        assert!(Scenario::from_config(&conf(&text)).is_err());
    }

    #[test]
    fn electric_only_pipeline_writes_fields() {
        let cfg = conf(
            "mesh.nx = 4\nmesh.ny = 4\nmesh.layout = capacitor\nelectric.voltage.1 = 2\n",
        );
        let sc = Scenario::from_config(&cfg).unwrap();
        let dir = std::env::temp_dir().join("erflow-electric-test");
        sc.run(&dir, Format::Both, false).unwrap();
        let csv = std::fs::read_to_string(dir.join("fields.csv")).unwrap();
        assert!(csv.lines().count() > 1);
        assert!(dir.join("fields.vtk").exists());
    }

    #[test]
    fn flow_scenario_is_deterministic() {
        let text = format!(
            "mesh.nx = 4\nmesh.ny = 2\nmesh.width = 2\nmesh.layout = channel\nflow.body_force = 1 0\n{MODEL}"
        );
        let sc = Scenario::from_config(&conf(&text)).unwrap();
        let d1 = std::env::temp_dir().join("erflow-det-1");
        let d2 = std::env::temp_dir().join("erflow-det-2");
        sc.run(&d1, Format::Csv, false).unwrap();
        sc.run(&d2, Format::Csv, false).unwrap();
        let a = std::fs::read(d1.join("fields.csv")).unwrap();
        let b = std::fs::read(d2.join("fields.csv")).unwrap();
        assert_eq!(a, b);
    }
}
