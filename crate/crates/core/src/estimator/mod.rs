//! Residual a posteriori error indicators and the contact consistency term.
//!
//! All indicator values are stored squared.

use std::io::{self, Write};

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use rayon::prelude::*;
use thiserror::Error;

use crate::contact::{ContactProblem, MultiplierField};
use crate::elasticity::{apply, stress, symmetrize, Material, Tensor2};
use crate::mesh::{BoundaryTag, Mesh};
use crate::space::{facet_quadrature, interior_quadrature, DiscreteSolution, ElementBasis, FeSpace, TriangleGeometry};

/// Quadrature degree of facet integrals.
pub const FACET_DEGREE: usize = 4;

/// Roundoff allowance for the signed terms of `S`.
pub const CONSISTENCY_ROUNDOFF: f64 = 1e-14;

#[derive(Debug, Error, PartialEq)]
pub enum EstimatorError {
    #[error("contact consistency term {term} is negative ({value:e}); multipliers violate their bounds")]
    NegativeConsistency { term: usize, value: f64 },
    #[error("multiplier field does not match the contact facets of the problem")]
    MultiplierMismatch,
}

/// Element size used in the indicators.
pub fn element_size(mesh: &Mesh, triangle: usize) -> f64 {
    mesh.triangle_diameter(triangle)
}

fn cauchy(material: &Material, solution: &DiscreteSolution, triangle: usize, basis: &ElementBasis) -> Tensor2 {
    stress(material, &symmetrize(solution.gradient(triangle, basis)))
}

/// `div sigma(u)` from the second derivatives of the basis.
pub fn stress_divergence(material: &Material, hessian: &[[[f64; 2]; 2]; 2]) -> [f64; 2] {
    let (mu, la) = (material.mu, material.lambda);
    let grad_div = |i: usize| hessian[0][0][i] + hessian[1][1][i];
    let laplace = |i: usize| hessian[i][0][0] + hessian[i][1][1];
    [0, 1].map(|i| mu * laplace(i) + (mu + la) * grad_div(i))
}

/// `eta_K^2 = h_K^2 |div sigma(u) + f|^2_{0,K}`.
pub fn element_residual(problem: &ContactProblem, solution: &DiscreteSolution, triangle: usize) -> f64 {
    let space = problem.space();
    let rule = interior_quadrature(space.interior_degree()).expect("interior rule exists");
    let geo = space.geometry(triangle);
    let f = &problem.data().body_force;
    let mut sum = 0.0;
    for (x, w) in rule.iter() {
        let basis = ElementBasis::evaluate(space.order(), &geo, x);
        let div = stress_divergence(problem.material(), &solution.hessian(triangle, &basis));
        let fx = f(geo.map(x));
        let r = [div[0] + fx[0], div[1] + fx[1]];
        sum += w * geo.det * (r[0] * r[0] + r[1] * r[1]);
    }
    let h = element_size(space.mesh(), triangle);
    h * h * sum
}

/// Reference point in `triangle` of the point at parameter `s` along the mesh edge `[a, b]`.
fn edge_point(mesh: &Mesh, triangle: usize, [a, b]: [usize; 2], s: f64) -> [f64; 2] {
    let tri = mesh.triangles()[triangle];
    for k in 0..3 {
        let (p, q) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
        if (p, q) == (a, b) {
            return FeSpace::edge_reference_point(k, s);
        }
        if (p, q) == (b, a) {
            return FeSpace::edge_reference_point(k, 1.0 - s);
        }
    }
    panic!("edge ({a}, {b}) is not an edge of triangle {triangle}");
}

fn traction_at(
    problem: &ContactProblem,
    solution: &DiscreteSolution,
    triangle: usize,
    geo: &TriangleGeometry,
    reference: [f64; 2],
    normal: [f64; 2],
) -> [f64; 2] {
    let basis = ElementBasis::evaluate(problem.space().order(), geo, reference);
    apply(&cauchy(problem.material(), solution, triangle, &basis), normal)
}

/// `h_E |[[sigma(u) n]]|^2_{0,E}` for an interior mesh edge.
///
/// # Panics
///
/// Panics if `edge` is a boundary edge.
pub fn edge_jump(problem: &ContactProblem, solution: &DiscreteSolution, edge: usize) -> f64 {
    let mesh = problem.space().mesh();
    let [Some(t0), Some(t1)] = mesh.edge_triangles(edge) else {
        panic!("edge {edge} is not an interior edge");
    };
    let verts = mesh.edges()[edge];
    let (p, q) = (mesh.vertices()[verts[0]], mesh.vertices()[verts[1]]);
    let len = mesh.edge_length(edge);
    let normal = [(q[1] - p[1]) / len, -(q[0] - p[0]) / len];
    let (g0, g1) = (problem.space().geometry(t0), problem.space().geometry(t1));
    let rule = facet_quadrature(FACET_DEGREE).expect("facet rule exists");
    let mut sum = 0.0;
    for (s, w) in rule.iter() {
        let a = traction_at(problem, solution, t0, &g0, edge_point(mesh, t0, verts, s), normal);
        let b = traction_at(problem, solution, t1, &g1, edge_point(mesh, t1, verts, s), normal);
        let j = [a[0] - b[0], a[1] - b[1]];
        sum += w * len * (j[0] * j[0] + j[1] * j[1]);
    }
    len * sum
}

/// `h_E |sigma(u) n|^2_{0,E}` for a boundary facet.
pub fn neumann_residual(problem: &ContactProblem, solution: &DiscreteSolution, facet: usize) -> f64 {
    let mesh = problem.space().mesh();
    let (t, k) = mesh.facet_owner(facet);
    let geo = problem.space().geometry(t);
    let normal = mesh.facet_normal(facet);
    let len = mesh.facet_length(facet);
    let rule = facet_quadrature(FACET_DEGREE).expect("facet rule exists");
    let mut sum = 0.0;
    for (s, w) in rule.iter() {
        let tr = traction_at(problem, solution, t, &geo, FeSpace::edge_reference_point(k, s), normal);
        sum += w * len * (tr[0] * tr[0] + tr[1] * tr[1]);
    }
    len * sum
}

/// `h_E |lambda + sigma(u) n|^2_{0,E}` for the contact facet at position `index` of
/// `problem.contact_facets()`.
pub fn contact_residual(
    problem: &ContactProblem,
    solution: &DiscreteSolution,
    multipliers: &MultiplierField,
    index: usize,
) -> f64 {
    let c = &problem.contact_facets()[index];
    let geo = problem.space().geometry(c.triangle);
    let (n, t) = (problem.normal(), problem.tangent());
    let mut sum = 0.0;
    for (p, m) in c.points.iter().zip(&multipliers.facets[index].samples) {
        let tr = traction_at(problem, solution, c.triangle, &geo, p.reference, n);
        let r = [
            m.lambda_n * n[0] + m.lambda_t * t[0] + tr[0],
            m.lambda_n * n[1] + m.lambda_t * t[1] + tr[1],
        ];
        sum += p.weight * (r[0] * r[0] + r[1] * r[1]);
    }
    c.length * sum
}

fn clamp_term(term: usize, value: f64) -> Result<f64, EstimatorError> {
    if value >= -CONSISTENCY_ROUNDOFF {
        Ok(value.max(0.0))
    } else {
        Err(EstimatorError::NegativeConsistency { term, value })
    }
}

/// The three terms of `S^2`: penetration `|(g - u_n)_-|^2`, complementarity
/// `((g - u_n)_+, lambda_n)` and friction `int kappa |u_t| - u_t lambda_t`.
pub fn contact_consistency(
    problem: &ContactProblem,
    solution: &DiscreteSolution,
    multipliers: &MultiplierField,
) -> Result<([f64; 3], f64), EstimatorError> {
    if multipliers.facets.len() != problem.contact_facets().len() {
        return Err(EstimatorError::MultiplierMismatch);
    }
    let (n, t) = (problem.normal(), problem.tangent());
    let gap = &problem.data().gap;
    let mut terms = [0.0; 3];
    for (c, m) in problem.contact_facets().iter().zip(&multipliers.facets) {
        let geo = problem.space().geometry(c.triangle);
        for (p, l) in c.points.iter().zip(&m.samples) {
            let basis = ElementBasis::evaluate(problem.space().order(), &geo, p.reference);
            let u = solution.value(c.triangle, &basis);
            let un = u[0] * n[0] + u[1] * n[1];
            let ut = u[0] * t[0] + u[1] * t[1];
            let d = gap(p.x) - un;
            terms[0] += p.weight * (-d).max(0.0).powi(2);
            terms[1] += p.weight * d.max(0.0) * l.lambda_n;
            terms[2] += p.weight * (p.kappa * ut.abs() - ut * l.lambda_t);
        }
    }
    let mut out = [0.0; 3];
    for (i, v) in terms.into_iter().enumerate() {
        out[i] = clamp_term(i + 1, v)?;
    }
    Ok((out, out.iter().sum::<f64>().sqrt()))
}

/// `osc_K^2 = h_K^2 |f - f_h|^2_{0,K}` with `f_h` the L2 projection onto vector polynomials of
/// the element order on `K`.
pub fn oscillation(problem: &ContactProblem, triangle: usize) -> f64 {
    let space = problem.space();
    let rule = interior_quadrature(crate::space::MAX_DEGREE).expect("interior rule exists");
    let geo = space.geometry(triangle);
    let f = &problem.data().body_force;
    let n = space.local_len();
    let mut gram = Mat::<f64>::zeros(n, n);
    let mut rhs = Mat::<f64>::zeros(n, 2);
    let samples: Vec<(ElementBasis, [f64; 2], f64)> = rule
        .iter()
        .map(|(x, w)| (ElementBasis::evaluate(space.order(), &geo, x), f(geo.map(x)), w * geo.det))
        .collect();
    for (b, fx, w) in &samples {
        for i in 0..n {
            for j in 0..n {
                gram[(i, j)] += w * b.values[i] * b.values[j];
            }
            rhs[(i, 0)] += w * b.values[i] * fx[0];
            rhs[(i, 1)] += w * b.values[i] * fx[1];
        }
    }
    let coeffs = gram.llt(Side::Lower).expect("element mass matrix is positive definite").solve(&rhs);
    let mut sum = 0.0;
    for (b, fx, w) in &samples {
        let mut r = *fx;
        for i in 0..n {
            r[0] -= coeffs[(i, 0)] * b.values[i];
            r[1] -= coeffs[(i, 1)] * b.values[i];
        }
        sum += w * (r[0] * r[0] + r[1] * r[1]);
    }
    let h = element_size(space.mesh(), triangle);
    h * h * sum
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorSet {
    /// `eta_K^2` per triangle.
    pub element: Vec<f64>,
    /// `(edge, eta_E^2)` per interior edge.
    pub interior: Vec<(usize, f64)>,
    /// `(facet, eta_E^2)` per Neumann facet.
    pub neumann: Vec<(usize, f64)>,
    /// `(facet, eta_E^2)` per contact facet.
    pub contact: Vec<(usize, f64)>,
    pub consistency: [f64; 3],
    pub s_total: f64,
    /// `osc_K^2` per triangle.
    pub oscillation: Vec<f64>,
    pub eta_squared: f64,
}

impl IndicatorSet {
    pub fn eta(&self) -> f64 {
        self.eta_squared.sqrt()
    }

    /// Squared indicators attributed to triangles: interior edges split evenly between their
    /// neighbours, boundary facets given to their owner.
    pub fn per_triangle(&self, mesh: &Mesh) -> Vec<f64> {
        let mut out = self.element.clone();
        for &(e, v) in &self.interior {
            for t in mesh.edge_triangles(e).into_iter().flatten() {
                out[t] += 0.5 * v;
            }
        }
        for &(f, v) in self.neumann.iter().chain(&self.contact) {
            out[mesh.facet_owner(f).0] += v;
        }
        out
    }

    /// CSV `kind,id,value2`.
    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        let mut s = String::from("kind,id,value2\n");
        for (t, v) in self.element.iter().enumerate() {
            s.push_str(&format!("K,{t},{v}\n"));
        }
        for (kind, list) in [("E_int", &self.interior), ("E_neu", &self.neumann), ("E_con", &self.contact)] {
            for (id, v) in list {
                s.push_str(&format!("{kind},{id},{v}\n"));
            }
        }
        out.write_all(s.as_bytes())
    }
}

/// All indicators of a discrete solution.
pub fn total(
    problem: &ContactProblem,
    solution: &DiscreteSolution,
    multipliers: &MultiplierField,
) -> Result<IndicatorSet, EstimatorError> {
    let mesh = problem.space().mesh();
    let (consistency, s_total) = contact_consistency(problem, solution, multipliers)?;
    let element: Vec<f64> =
        (0..mesh.num_triangles()).into_par_iter().map(|t| element_residual(problem, solution, t)).collect();
    let oscillation: Vec<f64> = (0..mesh.num_triangles()).into_par_iter().map(|t| oscillation(problem, t)).collect();
    let interior: Vec<(usize, f64)> = mesh
        .interior_edges()
        .par_iter()
        .map(|e| (e.edge, edge_jump(problem, solution, e.edge)))
        .collect();
    let neumann: Vec<(usize, f64)> = mesh
        .facets_with_tag(BoundaryTag::Neumann)
        .par_iter()
        .map(|&f| (f, neumann_residual(problem, solution, f)))
        .collect();
    let contact: Vec<(usize, f64)> = (0..problem.contact_facets().len())
        .into_par_iter()
        .map(|i| (problem.contact_facets()[i].facet, contact_residual(problem, solution, multipliers, i)))
        .collect();
    let eta_squared = element.iter().sum::<f64>()
        + [&interior, &neumann, &contact].iter().flat_map(|l| l.iter()).map(|(_, v)| v).sum::<f64>();
    Ok(IndicatorSet { element, interior, neumann, contact, consistency, s_total, oscillation, eta_squared })
}
