//! Planar linear elasticity: the Hooke law, volume assembly and norms.

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::mesh::Point;
use crate::sparse::{CholeskySolver, LinearSolveError, SparseSymmetricMatrix, SparsityPattern};
use crate::space::{interior_quadrature, DiscreteSolution, ElementBasis, FeSpace, MAX_LOCAL};

/// Symmetric 2x2 tensor stored as a full array.
pub type Tensor2 = [[f64; 2]; 2];

/// Maximum number of vector dofs on one triangle.
pub const MAX_ELEMENT_DOFS: usize = 2 * MAX_LOCAL;

#[derive(Debug, Error, PartialEq)]
pub enum MaterialError {
    #[error("Young's modulus must be positive and finite, got {0}")]
    YoungsModulus(f64),
    #[error("Poisson ratio must lie in (-1, 0.5), got {0}")]
    PoissonRatio(f64),
}

/// Isotropic material under the plane strain hypothesis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Material {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub mu: f64,
    pub lambda: f64,
}

impl Material {
    pub fn new(youngs_modulus: f64, poisson_ratio: f64) -> Result<Self, MaterialError> {
        if !(youngs_modulus > 0.0 && youngs_modulus.is_finite()) {
            return Err(MaterialError::YoungsModulus(youngs_modulus));
        }
        let (mu, lambda) = lame_from_engineering(youngs_modulus, poisson_ratio)?;
        Ok(Material { youngs_modulus, poisson_ratio, mu, lambda })
    }
}

/// Plane strain Lamé pair `(mu, lambda)`.
pub fn lame_from_engineering(e: f64, nu: f64) -> Result<(f64, f64), MaterialError> {
    if !(nu > -1.0 && nu < 0.5) {
        return Err(MaterialError::PoissonRatio(nu));
    }
    Ok((e / (2.0 * (1.0 + nu)), e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))))
}

pub fn symmetrize(g: Tensor2) -> Tensor2 {
    let off = 0.5 * (g[0][1] + g[1][0]);
    [[g[0][0], off], [off, g[1][1]]]
}

/// Small strain of a discrete field at a reference point of a triangle.
pub fn strain(solution: &DiscreteSolution, triangle: usize, reference: [f64; 2]) -> Tensor2 {
    let basis = solution.space.eval_basis(triangle, reference);
    symmetrize(solution.gradient(triangle, &basis))
}

pub fn stress(material: &Material, eps: &Tensor2) -> Tensor2 {
    let tr = eps[0][0] + eps[1][1];
    let (mu, la) = (material.mu, material.lambda);
    [
        [2.0 * mu * eps[0][0] + la * tr, 2.0 * mu * eps[0][1]],
        [2.0 * mu * eps[1][0], 2.0 * mu * eps[1][1] + la * tr],
    ]
}

pub fn contract(a: &Tensor2, b: &Tensor2) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

pub fn apply(a: &Tensor2, v: [f64; 2]) -> [f64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

/// Strain of the vector basis function `phi_a e_c` (local dof `2a + c`).
pub fn basis_strain(basis: &ElementBasis, dof: usize) -> Tensor2 {
    let (a, c) = (dof / 2, dof % 2);
    let mut g = [[0.0; 2]; 2];
    g[c] = basis.gradients[a];
    symmetrize(g)
}

/// Stress of the vector basis function `phi_a e_c`.
pub fn basis_stress(material: &Material, basis: &ElementBasis, dof: usize) -> Tensor2 {
    stress(material, &basis_strain(basis, dof))
}

/// Sparsity pattern coupling all dofs of each triangle.
pub fn element_pattern(space: &FeSpace) -> Arc<SparsityPattern> {
    let dofs: Vec<Vec<usize>> = (0..space.mesh().num_triangles()).map(|t| space.element_dofs(t)).collect();
    Arc::new(SparsityPattern::from_elements(space.total_dofs(), dofs.iter().map(Vec::as_slice)))
}

/// Assembles per-triangle dense blocks computed in parallel. Blocks are merged in triangle
/// order, so the result does not depend on the thread count.
pub fn assemble_blocks<F>(
    space: &FeSpace,
    pattern: Arc<SparsityPattern>,
    triangles: &[usize],
    local: F,
) -> SparseSymmetricMatrix
where
    F: Fn(usize) -> Vec<f64> + Sync,
{
    let blocks: Vec<Vec<f64>> = triangles.par_iter().map(|&t| local(t)).collect();
    let mut matrix = SparseSymmetricMatrix::zeros(pattern);
    for (&t, block) in triangles.iter().zip(&blocks) {
        matrix.add_block(&space.element_dofs(t), block);
    }
    matrix
}

fn local_stiffness(space: &FeSpace, material: &Material, triangle: usize) -> Vec<f64> {
    let n = 2 * space.local_len();
    let rule = interior_quadrature(space.interior_degree()).expect("interior rule exists");
    let geo = space.geometry(triangle);
    let mut k = vec![0.0; n * n];
    for (x, w) in rule.iter() {
        let basis = ElementBasis::evaluate(space.order(), &geo, x);
        let weight = w * geo.det;
        let eps: Vec<Tensor2> = (0..n).map(|p| basis_strain(&basis, p)).collect();
        let sig: Vec<Tensor2> = eps.iter().map(|e| stress(material, e)).collect();
        for p in 0..n {
            for q in 0..n {
                k[p * n + q] += weight * contract(&sig[q], &eps[p]);
            }
        }
    }
    k
}

/// `A[i][j] = (sigma(phi_j), eps(phi_i))` without boundary conditions.
pub fn assemble_stiffness(space: &FeSpace, material: &Material) -> SparseSymmetricMatrix {
    assemble_stiffness_with(space, material, element_pattern(space))
}

pub fn assemble_stiffness_with(
    space: &FeSpace,
    material: &Material,
    pattern: Arc<SparsityPattern>,
) -> SparseSymmetricMatrix {
    let triangles: Vec<usize> = (0..space.mesh().num_triangles()).collect();
    assemble_blocks(space, pattern, &triangles, |t| local_stiffness(space, material, t))
}

/// Load vector `(f, phi_i)`.
pub fn assemble_load(space: &FeSpace, f: impl Fn(Point) -> [f64; 2] + Sync) -> Vec<f64> {
    let rule = interior_quadrature(space.interior_degree()).expect("interior rule exists");
    let nt = space.mesh().num_triangles();
    let blocks: Vec<Vec<f64>> = (0..nt)
        .into_par_iter()
        .map(|t| {
            let geo = space.geometry(t);
            let mut b = vec![0.0; 2 * space.local_len()];
            for (x, w) in rule.iter() {
                let basis = ElementBasis::evaluate(space.order(), &geo, x);
                let fx = f(geo.map(x));
                for a in 0..basis.len {
                    b[2 * a] += w * geo.det * fx[0] * basis.values[a];
                    b[2 * a + 1] += w * geo.det * fx[1] * basis.values[a];
                }
            }
            b
        })
        .collect();
    let mut out = vec![0.0; space.total_dofs()];
    for (t, b) in blocks.iter().enumerate() {
        for (d, v) in space.element_dofs(t).into_iter().zip(b) {
            out[d] += v;
        }
    }
    out
}

/// Sums a per-triangle quadrature integrand over the mesh in a fixed order.
fn integrate(solution: &DiscreteSolution, integrand: impl Fn(usize, &ElementBasis) -> f64 + Sync) -> f64 {
    let space = &solution.space;
    let rule = interior_quadrature(space.interior_degree()).expect("interior rule exists");
    let parts: Vec<f64> = (0..space.mesh().num_triangles())
        .into_par_iter()
        .map(|t| {
            let geo = space.geometry(t);
            rule.iter()
                .map(|(x, w)| w * geo.det * integrand(t, &ElementBasis::evaluate(space.order(), &geo, x)))
                .sum()
        })
        .collect();
    parts.iter().sum()
}

/// `sqrt((sigma(u), eps(u)))` by quadrature.
pub fn energy_norm(solution: &DiscreteSolution, material: &Material) -> f64 {
    integrate(solution, |t, basis| {
        let eps = symmetrize(solution.gradient(t, basis));
        contract(&stress(material, &eps), &eps)
    })
    .max(0.0)
    .sqrt()
}

/// Vector H1 norm `sqrt(|u|_0^2 + |grad u|_0^2)`.
pub fn h1_norm(solution: &DiscreteSolution) -> f64 {
    integrate(solution, |t, basis| {
        let u = solution.value(t, basis);
        let g = solution.gradient(t, basis);
        u[0] * u[0] + u[1] * u[1] + contract(&g, &g)
    })
    .sqrt()
}

/// Solves the pure elasticity problem with displacement `boundary` imposed on the Dirichlet
/// dofs of the space and traction-free remaining boundary.
pub fn solve_dirichlet_problem(
    space: Arc<FeSpace>,
    material: &Material,
    f: impl Fn(Point) -> [f64; 2] + Sync,
    boundary: impl Fn(Point) -> [f64; 2],
) -> Result<DiscreteSolution, LinearSolveError> {
    let pattern = element_pattern(&space);
    let mut a = assemble_stiffness_with(&space, material, pattern.clone());
    let mut rhs = assemble_load(&space, f);
    let values = space.interpolate(boundary);
    let constrained: Vec<bool> = (0..space.total_dofs()).map(|d| space.is_dirichlet(d)).collect();
    a.apply_dirichlet(&mut rhs, &constrained, &values);
    let x = CholeskySolver::new(pattern)?.solve(&a, &rhs)?;
    Ok(DiscreteSolution::new(space, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{benchmark_tagging, build_unit_square_mesh, uniform_tagging, BoundaryTag};

    fn benchmark_space(n: usize, order: usize) -> Arc<FeSpace> {
        let mesh = Arc::new(build_unit_square_mesh(n, &benchmark_tagging()).unwrap());
        Arc::new(FeSpace::new(mesh, order).unwrap())
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn lame_pairs() {
        let (mu, la) = lame_from_engineering(1.0, 0.3).unwrap();
        assert!(close(mu, 0.3846153846, 1e-10) && close(la, 0.5769230769, 1e-10));
        assert_eq!(lame_from_engineering(1.0, 0.0).unwrap(), (0.5, 0.0));
        assert!(close(lame_from_engineering(2.6, 0.3).unwrap().0, 1.0, 1e-15));
        assert_eq!(lame_from_engineering(1.0, 0.5), Err(MaterialError::PoissonRatio(0.5)));
        assert_eq!(Material::new(0.0, 0.3), Err(MaterialError::YoungsModulus(0.0)));
        assert!(Material::new(1.0, -1.0).is_err());
    }

    #[test]
    fn strain_examples() {
        let space = benchmark_space(2, 2);
        let r = [0.2, 0.3];
        let u = DiscreteSolution::interpolate(space.clone(), |p| [p[0], 0.0]);
        assert_eq!(strain(&u, 1, r).map(|row| row.map(|v| (v * 1e12).round() / 1e12)), [[1.0, 0.0], [0.0, 0.0]]);
        let u = DiscreteSolution::interpolate(space.clone(), |p| [p[1], p[0]]);
        let e = strain(&u, 3, r);
        assert!(close(e[0][1], 1.0, 1e-12) && close(e[1][0], 1.0, 1e-12) && close(e[0][0], 0.0, 1e-12));
        let u = DiscreteSolution::interpolate(space, |p| [-p[1], p[0]]);
        assert!(strain(&u, 0, r).iter().flatten().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn stress_examples() {
        let m = Material::new(1.0, 0.3).unwrap();
        assert_eq!(stress(&m, &[[0.0; 2]; 2]), [[0.0; 2]; 2]);
        let s = stress(&m, &[[1.0, 0.0], [0.0, 1.0]]);
        assert!(close(s[0][0], 2.0 * m.mu + 2.0 * m.lambda, 1e-15) && close(s[1][1], 1.923076923, 1e-9));
        assert_eq!(s[0][1], 0.0);
        let s = stress(&m, &[[0.0, 1.0], [1.0, 0.0]]);
        assert_eq!(s, [[0.0, 2.0 * m.mu], [2.0 * m.mu, 0.0]]);
    }

    #[test]
    fn stiffness_energy_and_kernel() {
        let m = Material::new(1.0, 0.3).unwrap();
        let space = benchmark_space(4, 2);
        let a = assemble_stiffness(&space, &m);
        assert!(a.symmetry_defect() <= 1e-12 * a.max_abs());
        let stretch = space.interpolate(|p| [p[0], 0.0]);
        assert!(close(a.quadratic_form(&stretch), 2.0 * m.mu + m.lambda, 1e-12));
        assert!(close(2.0 * m.mu + m.lambda, 1.3462, 1e-4));
        let scale = a.max_abs();
        for mode in [space.interpolate(|_| [1.0, 0.0]), space.interpolate(|_| [0.0, 1.0])] {
            assert!(a.mul_vec(&mode).iter().all(|v| v.abs() <= 1e-12 * scale));
        }
        let rotation = space.interpolate(|p| [-p[1], p[0]]);
        assert!(a.quadratic_form(&rotation).abs() <= 1e-12 * scale);
    }

    #[test]
    fn load_examples() {
        let space = benchmark_space(4, 2);
        assert!(assemble_load(&space, |_| [0.0, 0.0]).iter().all(|&v| v == 0.0));
        let b = assemble_load(&space, |_| [1.0, 0.0]);
        let sx: f64 = b.iter().step_by(2).sum();
        let sy: f64 = b.iter().skip(1).step_by(2).sum();
        assert!(close(sx, 1.0, 1e-13) && sy == 0.0);
        let b = assemble_load(&space, |p| [p[0], 0.0]);
        assert!(b.iter().step_by(2).sum::<f64>().abs() < 1e-15);
    }

    #[test]
    fn norms_of_a_stretch() {
        let m = Material::new(1.0, 0.3).unwrap();
        let space = benchmark_space(4, 2);
        let u = DiscreteSolution::interpolate(space.clone(), |p| [p[0], 0.0]);
        let e = energy_norm(&u, &m);
        assert!(close(e * e, 2.0 * m.mu + m.lambda, 1e-12));
        assert!(close(h1_norm(&u), (13.0f64 / 12.0).sqrt(), 1e-13));
        let a = assemble_stiffness(&space, &m);
        assert!(close(a.quadratic_form(&u.coefficients), e * e, 1e-12 * e * e));
        let zero = DiscreteSolution::zero(space);
        assert_eq!((energy_norm(&zero, &m), h1_norm(&zero)), (0.0, 0.0));
    }

    #[test]
    fn patch_test() {
        let m = Material::new(1.0, 0.3).unwrap();
        let field = |p: Point| [0.1 + 0.3 * p[0] - 0.2 * p[1], -0.05 + 0.4 * p[0] + 0.25 * p[1]];
        for order in [1, 2] {
            let mesh = Arc::new(
                build_unit_square_mesh(3, &uniform_tagging(BoundaryTag::Dirichlet))
                    .unwrap()
                    .refine(&[0, 4, 9]),
            );
            let space = Arc::new(FeSpace::new(mesh, order).unwrap());
            let u = solve_dirichlet_problem(space.clone(), &m, |_| [0.0, 0.0], field).unwrap();
            let exact = space.interpolate(field);
            let diff: Vec<f64> = u.coefficients.iter().zip(&exact).map(|(a, b)| a - b).collect();
            let err = h1_norm(&DiscreteSolution::new(space, diff));
            assert!(err < 1e-10, "order {order}: {err}");
        }
    }
}
