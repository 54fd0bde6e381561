//! `erflow`: scenario runner and validation harness for the flow solver.

mod config;
mod output;
mod scenario;

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use erflow_core::infsup::estimate_discrete_infsup;
use erflow_core::mesh::{
    build_rectangle_mesh, load_mesh, refine_uniform, save_mesh, BoundaryTag, SplitRule,
};
use erflow_core::validation::run_suite;
use erflow_core::FeSpace;

use config::Config;
use scenario::{Format, Scenario};

#[derive(Parser)]
#[command(name = "erflow", version, about = "Electrorheological flow solver suite")]
struct Cli {
    /// Directory for generated files.
    #[arg(long, global = true, default_value = "out")]
    output_dir: PathBuf,
    /// Field output format.
    #[arg(long, global = true, default_value = "csv")]
    format: String,
    /// Seed for sampling-based diagnostics.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Print progress details.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario configuration end to end.
    Solve {
        /// Scenario configuration file.
        config: PathBuf,
    },
    /// Run a validation suite (or `all`).
    Validate {
        /// Suite name: operators, infsup, manufactured, bingham, al,
        /// contraction, inertial, or all.
        suite: String,
    },
    /// Estimate discrete inf-sup constants over uniform refinements.
    Infsup(InfsupArgs),
    /// Mesh utilities.
    Mesh {
        #[command(subcommand)]
        action: MeshAction,
    },
    /// Time the pipeline stages of a scenario.
    Bench {
        /// Scenario configuration file.
        config: PathBuf,
        /// Number of timed repetitions.
        #[arg(long, default_value_t = 3)]
        repeat: usize,
    },
}

#[derive(Args)]
struct InfsupArgs {
    /// Grid cells along x on the coarsest level.
    nx: usize,
    /// Grid cells along y on the coarsest level.
    ny: usize,
    /// Number of refinement levels.
    #[arg(long, default_value_t = 3)]
    levels: usize,
    /// Domain width.
    #[arg(long, default_value_t = 1.0)]
    width: f64,
    /// Domain height.
    #[arg(long, default_value_t = 1.0)]
    height: f64,
    /// Cell split rule: crossed or diagonal.
    #[arg(long, default_value = "crossed")]
    split: String,
}

#[derive(Subcommand)]
enum MeshAction {
    /// Generate a structured rectangle mesh.
    Gen {
        #[arg(long, default_value_t = 8)]
        nx: usize,
        #[arg(long, default_value_t = 8)]
        ny: usize,
        #[arg(long, default_value_t = 1.0)]
        width: f64,
        #[arg(long, default_value_t = 1.0)]
        height: f64,
        /// crossed or diagonal.
        #[arg(long, default_value = "crossed")]
        split: String,
        /// Boundary layout: cavity, channel, channel_outflow, er_channel,
        /// capacitor.
        #[arg(long, default_value = "cavity")]
        layout: String,
        /// Output file name (within --output-dir).
        #[arg(long, default_value = "mesh.txt")]
        out: String,
    },
    /// Uniformly refine a mesh file.
    Refine {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        times: usize,
        #[arg(long, default_value = "mesh_refined.txt")]
        out: String,
    },
    /// Validate a mesh file and print its statistics.
    Check { file: PathBuf },
}

fn parse_split(s: &str) -> Result<SplitRule> {
    match s {
        "crossed" => Ok(SplitRule::Crossed),
        "diagonal" => Ok(SplitRule::Diagonal),
        other => bail!("unknown split rule `{other}` (expected crossed or diagonal)"),
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let format: Format = cli.format.parse()?;
    match cli.command {
        Command::Solve { config } => {
            let cfg = Config::from_file(&config).context("stage `parse`")?;
            let sc = Scenario::from_config(&cfg).context("stage `parse`")?;
            sc.run(&cli.output_dir, format, cli.verbose)
        }
        Command::Validate { suite } => run_validation(&suite, cli.seed, &cli.output_dir),
        Command::Infsup(args) => run_infsup(&args),
        Command::Mesh { action } => run_mesh(action, &cli.output_dir),
        Command::Bench { config, repeat } => run_bench(&config, repeat, &cli.output_dir, format),
    }
}

fn run_validation(suite: &str, seed: u64, output_dir: &std::path::Path) -> Result<()> {
    let suites: Vec<&str> = if suite == "all" {
        erflow_core::validation::SUITES.to_vec()
    } else {
        vec![suite]
    };
    let mut all_passed = true;
    let mut csv = String::from("suite,check,passed,detail\n");
    for s in suites {
        let results = run_suite(s, seed)?;
        for r in &results {
            let verdict = if r.passed { "PASS" } else { "FAIL" };
            println!("[{verdict}] {s}/{}: {}", r.name, r.detail);
            csv.push_str(&format!(
                "{s},{},{},\"{}\"\n",
                r.name,
                r.passed,
                r.detail.replace('"', "'")
            ));
            all_passed &= r.passed;
        }
    }
    output::write_file(output_dir, "validation.csv", &csv)?;
    if !all_passed {
        bail!("one or more validation checks failed");
    }
    Ok(())
}

fn run_infsup(args: &InfsupArgs) -> Result<()> {
    let split = parse_split(&args.split)?;
    println!("level,nx,ny,n_velocity_free,n_pressure,beta");
    let mut min_beta = f64::INFINITY;
    for level in 0..args.levels {
        let f = 1usize << level;
        let mesh = std::sync::Arc::new(build_rectangle_mesh(
            args.width,
            args.height,
            args.nx * f,
            args.ny * f,
            split,
            &|_| BoundaryTag::Dirichlet,
        )?);
        let v = FeSpace::p2_vector(mesh.clone());
        let p = FeSpace::p1_scalar(mesh);
        let est = estimate_discrete_infsup(&v, &p)?;
        println!(
            "{level},{},{},{},{},{:.12}",
            args.nx * f,
            args.ny * f,
            est.n_velocity_free,
            est.n_pressure,
            est.beta
        );
        min_beta = min_beta.min(est.beta);
    }
    println!("# min beta = {min_beta:.12}");
    Ok(())
}

fn run_mesh(action: MeshAction, output_dir: &std::path::Path) -> Result<()> {
    match action {
        MeshAction::Gen { nx, ny, width, height, split, layout, out } => {
            let text = format!(
                "mesh.nx = {nx}\nmesh.ny = {ny}\nmesh.width = {width}\nmesh.height = {height}\nmesh.split = {split}\nmesh.layout = {layout}\n"
            );
            let cfg = Config::from_str(&text)?;
            let mesh = scenario::mesh_from_config(&cfg)?;
            output::write_file(output_dir, &out, &save_mesh(&mesh))?;
            println!(
                "wrote {} ({} nodes, {} triangles)",
                output_dir.join(&out).display(),
                mesh.nodes.len(),
                mesh.triangles.len()
            );
            Ok(())
        }
        MeshAction::Refine { file, times, out } => {
            let text = std::fs::read_to_string(&file)
                .with_context(|| format!("cannot read {}", file.display()))?;
            let mut mesh = load_mesh(&text)?;
            for _ in 0..times {
                mesh = refine_uniform(&mesh);
            }
            output::write_file(output_dir, &out, &save_mesh(&mesh))?;
            println!(
                "wrote {} ({} nodes, {} triangles)",
                output_dir.join(&out).display(),
                mesh.nodes.len(),
                mesh.triangles.len()
            );
            Ok(())
        }
        MeshAction::Check { file } => {
            let text = std::fs::read_to_string(&file)
                .with_context(|| format!("cannot read {}", file.display()))?;
            let mesh = load_mesh(&text)?;
            let mut tags = std::collections::BTreeMap::new();
            for e in &mesh.boundary_edges {
                *tags.entry(e.tag.keyword()).or_insert(0usize) += 1;
            }
            println!("nodes: {}", mesh.nodes.len());
            println!("triangles: {}", mesh.triangles.len());
            println!("area: {:.12}", mesh.total_area());
            println!("boundary edges: {}", mesh.boundary_edges.len());
            for (k, n) in tags {
                println!("  {k}: {n}");
            }
            println!("mesh OK");
            Ok(())
        }
    }
}


fn run_bench(
    config: &std::path::Path,
    repeat: usize,
    output_dir: &std::path::Path,
    format: Format,
) -> Result<()> {
    let cfg = Config::from_file(config).context("stage `parse`")?;
    println!("run,stage,seconds");
    let mut rows = String::from("run,stage,seconds\n");
    for run in 0..repeat.max(1) {
        let t0 = Instant::now();
        let sc = Scenario::from_config(&cfg)?;
        let t_parse = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        sc.run(&output_dir.join(format!("bench_run_{run}")), format, false)?;
        let t_solve = t1.elapsed().as_secs_f64();
        for (stage, secs) in [("parse+mesh", t_parse), ("solve+write", t_solve)] {
            println!("{run},{stage},{secs:.6}");
            rows.push_str(&format!("{run},{stage},{secs:.6}\n"));
        }
    }
    output::write_file(output_dir, "bench.csv", &rows)?;
    Ok(())
}
