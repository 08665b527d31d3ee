//! Built-in oracle suite behind the `verify` subcommand.

use std::sync::Arc;

use tresca_core::adapt::mark;
use tresca_core::contact::{classify, recover_multipliers, solve_fixed_point, system_matrix, ContactProblem};
use tresca_core::elasticity::{assemble_stiffness, solve_dirichlet_problem, Material};
use tresca_core::estimator::{contact_consistency, edge_jump, total};
use tresca_core::mesh::{build_unit_square_mesh, uniform_tagging, BoundaryTag, Mesh};
use tresca_core::space::{facet_quadrature, interior_quadrature, DiscreteSolution, FeSpace, MAX_DEGREE};

use crate::config::RunConfig;
use crate::run::{build_problem, load_mesh};
use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &'static str, value: f64, tolerance: f64) -> Self {
        Check { name, value, tolerance, passed: value <= tolerance }
    }

    fn holds(name: &'static str, ok: bool) -> Self {
        Check { name, value: if ok { 0.0 } else { 1.0 }, tolerance: 0.0, passed: ok }
    }

    /// `PASS name value=... tol=...`
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        format!("{status} {} value={:e} tol={:e}", self.name, self.value, self.tolerance)
    }
}

fn material() -> Material {
    Material::new(1.0, 0.3).expect("valid material")
}

fn affine(x: [f64; 2]) -> [f64; 2] {
    [0.1 + 0.2 * x[0] - 0.3 * x[1], -0.05 + 0.05 * x[0] + 0.4 * x[1]]
}

/// Refined all-Dirichlet square, so the patch is not a structured grid.
fn patch_mesh() -> Mesh {
    let m = build_unit_square_mesh(3, &uniform_tagging(BoundaryTag::Dirichlet)).expect("grid");
    let m = m.refine(&[0, 4, 9]);
    m.refine(&[1, 2])
}

pub fn patch_test(order: usize) -> f64 {
    let space = Arc::new(FeSpace::new(Arc::new(patch_mesh()), order).expect("space"));
    let u = solve_dirichlet_problem(space.clone(), &material(), |_| [0.0, 0.0], affine).expect("solve");
    let exact = space.interpolate(affine);
    u.coefficients.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

pub fn rigid_body_energy() -> f64 {
    let mesh = Arc::new(build_unit_square_mesh(4, &uniform_tagging(BoundaryTag::Neumann)).expect("grid"));
    let space = FeSpace::new(mesh, 2).expect("space");
    let k = assemble_stiffness(&space, &material());
    let modes: [fn([f64; 2]) -> [f64; 2]; 3] = [|_| [1.0, 0.0], |_| [0.0, 1.0], |x| [-x[1], x[0]]];
    modes.iter().map(|m| k.quadratic_form(&space.interpolate(m)).abs()).fold(0.0, f64::max)
}

/// Largest error of the tabulated rules on monomials up to their degree.
pub fn quadrature_error() -> f64 {
    let fact = |n: u32| (1..=n as u64).product::<u64>() as f64;
    let mut worst: f64 = 0.0;
    for d in 0..=MAX_DEGREE {
        let rule = interior_quadrature(d).expect("rule");
        for a in 0..=d as u32 {
            for b in 0..=(d as u32 - a) {
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                let q: f64 = rule.iter().map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32)).sum();
                worst = worst.max((q - exact).abs());
            }
        }
        let seg = facet_quadrature(d).expect("rule");
        for a in 0..=d as i32 {
            let q: f64 = seg.iter().map(|(s, w)| w * s.powi(a)).sum();
            worst = worst.max((q - 1.0 / (a as f64 + 1.0)).abs());
        }
    }
    worst
}

/// Relative difference of the interior jump indicators between a mesh and the same mesh with
/// every triangle's vertex list rotated.
pub fn orientation_defect() -> f64 {
    let mesh = build_unit_square_mesh(3, &uniform_tagging(BoundaryTag::Neumann)).expect("grid");
    let rotated = Mesh::new(
        mesh.vertices().to_vec(),
        mesh.triangles().iter().map(|&[a, b, c]| [b, c, a]).collect(),
        mesh.facets().to_vec(),
    )
    .expect("mesh");
    let field = |x: [f64; 2]| [(2.0 * x[0]).sin() * x[1], (x[0] * x[1]).exp()];
    let jumps = |m: Mesh| {
        let p = build_problem(&RunConfig::default(), Arc::new(m)).expect("problem");
        let u = DiscreteSolution::interpolate(p.space().clone(), field);
        let mesh = p.space().mesh().clone();
        let mut v: Vec<([usize; 2], f64)> = mesh
            .interior_edges()
            .iter()
            .map(|e| {
                let [a, b] = e.vertices;
                ([a.min(b), a.max(b)], edge_jump(&p, &u, e.edge))
            })
            .collect();
        v.sort_by(|x, y| x.0.cmp(&y.0));
        v
    };
    let (a, b) = (jumps(mesh), jumps(rotated));
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(&b)
        .map(|(x, y)| {
            assert_eq!(x.0, y.0);
            (x.1 - y.1).abs() / x.1.abs().max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

pub fn affine_dirichlet_eta() -> f64 {
    let mesh = Arc::new(patch_mesh());
    let p = build_problem(&RunConfig::default(), mesh).expect("problem");
    let u = DiscreteSolution::interpolate(p.space().clone(), affine);
    let m = recover_multipliers(&p, &u);
    total(&p, &u, &m).expect("estimate").eta()
}

pub fn consistency_at_gap(problem: &ContactProblem, gap: f64) -> f64 {
    let n = problem.normal();
    let u = DiscreteSolution::interpolate(problem.space().clone(), |_| [gap * n[0], gap * n[1]]);
    let m = recover_multipliers(problem, &u);
    contact_consistency(problem, &u, &m).map(|(_, s)| s).unwrap_or(f64::INFINITY)
}

/// Runs every check on the configured problem.
pub fn run_checks(config: &RunConfig) -> Result<Vec<Check>, CliError> {
    let mesh = load_mesh(config)?;
    let problem = build_problem(config, mesh)?;
    let solved = solve_fixed_point(&problem, &config.solver()).map_err(CliError::Solver)?;
    let k = system_matrix(&problem, &solved.active_set);
    let multipliers = recover_multipliers(&problem, &solved.solution);
    let kappa = config.friction_bound;
    let mut checks = vec![
        Check::at_most("stiffness_symmetry", k.symmetry_defect() / k.max_abs(), 1e-12),
        Check::at_most("rigid_body_kernel", rigid_body_energy(), 1e-12),
        Check::at_most("patch_test_p1", patch_test(1), 1e-10),
        Check::at_most("patch_test_p2", patch_test(2), 1e-10),
        Check::at_most("quadrature_exactness", quadrature_error(), 1e-14),
        Check::at_most("orientation_invariance", orientation_defect(), 1e-12),
        Check::holds(
            "fixed_point_idempotence",
            classify(&problem, &solved.solution, config.active_set_mode) == solved.active_set,
        ),
        Check::at_most("clamp_lambda_n", (-multipliers.min_normal()).max(0.0), 0.0),
        Check::at_most("clamp_lambda_t", (multipliers.max_abs_tangential() - kappa).max(0.0), 1e-12 * kappa.max(1.0)),
        Check::at_most("affine_dirichlet_eta", affine_dirichlet_eta(), 1e-10),
        Check::at_most("consistency_at_gap", consistency_at_gap(&problem, config.gap), 0.0),
    ];
    checks.push(Check::holds("dorfler_half", mark(&[1.0; 32], 0.5).len() == 16));
    Ok(checks)
}
