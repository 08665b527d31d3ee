//! Experiment drivers behind the subcommands.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use tresca_core::adapt::{adaptive_loop, solve_level, write_history_csv, AdaptiveRecord, Level, LevelError, ProblemTemplate};
use tresca_core::contact::{write_multiplier_csv, ContactData, ContactProblem};
use tresca_core::elasticity::Material;
use tresca_core::mesh::{benchmark_tagging, build_unit_square_mesh, read_mesh, write_mesh, Mesh};

use crate::config::{MeshSource, RunConfig};
use crate::vtk::vtk_string;
use crate::CliError;

pub fn template(config: &RunConfig) -> ProblemTemplate {
    ProblemTemplate {
        material: Material::new(config.youngs_modulus, config.poisson_ratio).expect("validated material"),
        data: ContactData::constant([0.0, 0.0], config.gap, config.friction_bound, config.alpha),
        order: config.order,
    }
}

pub fn build_problem(config: &RunConfig, mesh: Arc<Mesh>) -> Result<ContactProblem, CliError> {
    template(config).build(mesh).map_err(CliError::Solver)
}

fn grid(n: usize) -> Result<Mesh, CliError> {
    build_unit_square_mesh(n, &benchmark_tagging()).map_err(|e| CliError::Config(e.to_string()))
}

pub fn load_mesh(config: &RunConfig) -> Result<Arc<Mesh>, CliError> {
    let mesh = match &config.mesh {
        MeshSource::Grid(n) => grid(*n)?,
        MeshSource::File(path) => {
            let file = fs::File::open(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            read_mesh(BufReader::new(file)).map_err(|source| CliError::Mesh { path: path.clone(), source })?
        }
    };
    Ok(Arc::new(mesh))
}

/// Mesh of uniform level `k`: the grid with `cells_per_side * 2^k` cells, or `k` rounds of
/// refining every triangle of a mesh file.
pub fn uniform_mesh(config: &RunConfig, k: usize) -> Result<Arc<Mesh>, CliError> {
    match &config.mesh {
        MeshSource::Grid(n) => Ok(Arc::new(grid(n << k)?)),
        MeshSource::File(_) => {
            let mut mesh = load_mesh(config)?;
            for _ in 0..k {
                let all: Vec<usize> = (0..mesh.num_triangles()).collect();
                mesh = Arc::new(mesh.refine(&all));
            }
            Ok(mesh)
        }
    }
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(path)
}

fn level_error(e: LevelError) -> CliError {
    match e {
        LevelError::Solver(e) => CliError::Solver(e),
        LevelError::Estimator(e) => CliError::Estimator(e),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformRow {
    pub h: f64,
    pub n: usize,
    pub norm: f64,
    pub eta: f64,
}

pub fn uniform_csv(rows: &[UniformRow]) -> String {
    let mut s = String::from("h,N,norm,eta\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{}\n", r.h, r.n, r.norm, r.eta));
    }
    s
}

/// Solves and estimates one mesh.
pub fn solve_mesh(config: &RunConfig, mesh: Arc<Mesh>) -> Result<Level, CliError> {
    solve_level(&template(config), mesh, &config.solver()).map_err(level_error)
}

fn row(level: &Level) -> UniformRow {
    let r = level.record(0);
    UniformRow { h: level.mesh.max_diameter(), n: r.n, norm: r.h1_norm, eta: r.eta }
}

/// Uniform levels `0..levels`. Rows computed before a failure are returned with the error.
pub fn uniform_rows(config: &RunConfig) -> (Vec<UniformRow>, Option<CliError>) {
    let mut rows = Vec::new();
    for k in 0..config.levels {
        match uniform_mesh(config, k).and_then(|m| solve_mesh(config, m)) {
            Ok(level) => rows.push(row(&level)),
            Err(e) => return (rows, Some(e)),
        }
    }
    (rows, None)
}

pub fn write_uniform(config: &RunConfig, rows: &[UniformRow]) -> Result<PathBuf, CliError> {
    write_file(&config.out, "uniform.csv", uniform_csv(rows).as_bytes())
}

/// Writes `uniform.csv` (partial on failure).
pub fn run_uniform(config: &RunConfig) -> Result<Vec<UniformRow>, CliError> {
    let (rows, err) = uniform_rows(config);
    write_uniform(config, &rows)?;
    match err {
        Some(e) => Err(e),
        None => Ok(rows),
    }
}

fn write_level(config: &RunConfig, level: &Level, prefix: &str) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write_multiplier_csv(&level.multipliers, &mut buf).expect("in-memory write");
    write_file(&config.out, &format!("{prefix}multipliers.csv"), &buf)?;
    let mut buf = Vec::new();
    level.indicators.write_csv(&mut buf).expect("in-memory write");
    write_file(&config.out, &format!("{prefix}indicators.csv"), &buf)?;
    let sol = &level.solution.solution;
    write_file(&config.out, &format!("{prefix}solution.vtk"), vtk_string(&level.mesh, sol, Some(&level.multipliers), false).as_bytes())?;
    write_file(&config.out, &format!("{prefix}deformed.vtk"), vtk_string(&level.mesh, sol, Some(&level.multipliers), true).as_bytes())?;
    Ok(())
}

/// One solve on the configured mesh: `summary.csv`, multiplier trace, indicators and VTK.
pub fn run_solve(config: &RunConfig) -> Result<UniformRow, CliError> {
    let level = solve_mesh(config, load_mesh(config)?)?;
    let r = row(&level);
    write_file(&config.out, "summary.csv", uniform_csv(&[r]).as_bytes())?;
    write_level(config, &level, "")?;
    Ok(r)
}

/// Adaptive loop: `adaptive.csv`, the final mesh and its multiplier trace and VTK files.
pub fn run_adaptive(config: &RunConfig) -> Result<Vec<AdaptiveRecord>, CliError> {
    let mesh = load_mesh(config)?;
    match adaptive_loop(&template(config), mesh, &config.solver(), config.theta, config.n_threshold) {
        Ok((history, last)) => {
            let mut buf = Vec::new();
            write_history_csv(&history, &mut buf).expect("in-memory write");
            write_file(&config.out, "adaptive.csv", &buf)?;
            let mut buf = Vec::new();
            write_mesh(&last.mesh, &mut buf).expect("in-memory write");
            write_file(&config.out, "final_mesh.txt", &buf)?;
            write_level(config, &last, "final_")?;
            Ok(history)
        }
        Err(e) => {
            let mut buf = Vec::new();
            write_history_csv(e.history(), &mut buf).expect("in-memory write");
            write_file(&config.out, "adaptive.csv", &buf)?;
            Err(CliError::Adapt(e))
        }
    }
}

/// Solves once and writes only the VTK files.
pub fn run_export(config: &RunConfig) -> Result<PathBuf, CliError> {
    let level = solve_mesh(config, load_mesh(config)?)?;
    let sol = &level.solution.solution;
    write_file(&config.out, "deformed.vtk", vtk_string(&level.mesh, sol, Some(&level.multipliers), true).as_bytes())?;
    write_file(&config.out, "solution.vtk", vtk_string(&level.mesh, sol, Some(&level.multipliers), false).as_bytes())
}
