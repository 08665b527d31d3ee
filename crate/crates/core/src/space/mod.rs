//! Vector Lagrange spaces on triangles.
//!
//! Scalar nodes are numbered vertices first, then (for quadratic elements) one node per mesh
//! edge at `num_vertices + edge`. Vector dofs interleave the two components: node `i` owns dofs
//! `2i` (x) and `2i + 1` (y).

mod quadrature;
mod trace;

use std::sync::Arc;

use thiserror::Error;

use crate::mesh::{local_edge, BoundaryTag, Mesh, Point};

pub use quadrature::{
    facet_quadrature, interior_quadrature, QuadratureRule, SegmentRule, TriangleRule, MAX_DEGREE,
};
pub use trace::{TracePolynomial, TraceSpace};

/// Maximum number of scalar basis functions on one triangle.
pub const MAX_LOCAL: usize = 6;

#[derive(Debug, Error, PartialEq)]
pub enum SpaceError {
    #[error("unsupported element order {0} (expected 1 or 2)")]
    UnsupportedOrder(usize),
    #[error("no quadrature rule of degree {0}")]
    UnsupportedDegree(usize),
    #[error("facet {0} is degenerate; its mass matrix is singular")]
    DegenerateFacet(usize),
    #[error("facet {0} is not a contact facet")]
    NotAContactFacet(usize),
}

/// Affine map from the reference triangle.
#[derive(Clone, Copy, Debug)]
pub struct TriangleGeometry {
    pub points: [Point; 3],
    /// Twice the area.
    pub det: f64,
    /// Physical gradients of the barycentric coordinates.
    pub grad_bary: [[f64; 2]; 3],
}

impl TriangleGeometry {
    pub fn new(points: [Point; 3]) -> Self {
        let [p0, p1, p2] = points;
        let j = [[p1[0] - p0[0], p2[0] - p0[0]], [p1[1] - p0[1], p2[1] - p0[1]]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        // Rows of J^{-1} are the gradients of the reference coordinates.
        let g1 = [j[1][1] / det, -j[0][1] / det];
        let g2 = [-j[1][0] / det, j[0][0] / det];
        let g0 = [-g1[0] - g2[0], -g1[1] - g2[1]];
        TriangleGeometry { points, det, grad_bary: [g0, g1, g2] }
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det
    }

    pub fn map(&self, reference: [f64; 2]) -> Point {
        let [p0, p1, p2] = self.points;
        let [s, t] = reference;
        [
            p0[0] + s * (p1[0] - p0[0]) + t * (p2[0] - p0[0]),
            p0[1] + s * (p1[1] - p0[1]) + t * (p2[1] - p0[1]),
        ]
    }
}

/// Scalar basis functions of one triangle evaluated at one point, in physical coordinates.
#[derive(Clone, Copy, Debug)]
pub struct ElementBasis {
    pub len: usize,
    pub values: [f64; MAX_LOCAL],
    pub gradients: [[f64; 2]; MAX_LOCAL],
    pub hessians: [[[f64; 2]; 2]; MAX_LOCAL],
}

impl ElementBasis {
    pub fn evaluate(order: usize, geometry: &TriangleGeometry, reference: [f64; 2]) -> Self {
        let bary = [1.0 - reference[0] - reference[1], reference[0], reference[1]];
        let g = &geometry.grad_bary;
        let outer = |a: [f64; 2], b: [f64; 2]| [[a[0] * b[0], a[0] * b[1]], [a[1] * b[0], a[1] * b[1]]];
        let mut out = ElementBasis {
            len: if order == 1 { 3 } else { 6 },
            values: [0.0; MAX_LOCAL],
            gradients: [[0.0; 2]; MAX_LOCAL],
            hessians: [[[0.0; 2]; 2]; MAX_LOCAL],
        };
        if order == 1 {
            for i in 0..3 {
                out.values[i] = bary[i];
                out.gradients[i] = g[i];
            }
            return out;
        }
        for i in 0..3 {
            let l = bary[i];
            out.values[i] = l * (2.0 * l - 1.0);
            out.gradients[i] = [(4.0 * l - 1.0) * g[i][0], (4.0 * l - 1.0) * g[i][1]];
            let h = outer(g[i], g[i]);
            out.hessians[i] = [[4.0 * h[0][0], 4.0 * h[0][1]], [4.0 * h[1][0], 4.0 * h[1][1]]];
        }
        for k in 0..3 {
            let (a, b) = ((k + 1) % 3, (k + 2) % 3);
            out.values[3 + k] = 4.0 * bary[a] * bary[b];
            out.gradients[3 + k] = [
                4.0 * (bary[b] * g[a][0] + bary[a] * g[b][0]),
                4.0 * (bary[b] * g[a][1] + bary[a] * g[b][1]),
            ];
            let (hab, hba) = (outer(g[a], g[b]), outer(g[b], g[a]));
            out.hessians[3 + k] = [
                [4.0 * (hab[0][0] + hba[0][0]), 4.0 * (hab[0][1] + hba[0][1])],
                [4.0 * (hab[1][0] + hba[1][0]), 4.0 * (hab[1][1] + hba[1][1])],
            ];
        }
        out
    }
}

/// Continuous vector Lagrange space of order 1 or 2 over a mesh.
#[derive(Debug)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    order: usize,
    num_nodes: usize,
    element_nodes: Vec<[usize; MAX_LOCAL]>,
    dirichlet: Vec<bool>,
    dirichlet_dofs: Vec<usize>,
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, order: usize) -> Result<Self, SpaceError> {
        if !(1..=2).contains(&order) {
            return Err(SpaceError::UnsupportedOrder(order));
        }
        let nv = mesh.num_vertices();
        let num_nodes = if order == 1 { nv } else { nv + mesh.num_edges() };
        let element_nodes = (0..mesh.num_triangles())
            .map(|t| {
                let tri = mesh.triangles()[t];
                let edges = mesh.triangle_edges(t);
                let mut nodes = [usize::MAX; MAX_LOCAL];
                nodes[..3].copy_from_slice(&tri);
                if order == 2 {
                    for k in 0..3 {
                        nodes[3 + k] = nv + edges[k];
                    }
                }
                nodes
            })
            .collect();
        let mut dirichlet = vec![false; 2 * num_nodes];
        for f in mesh.facets_with_tag(BoundaryTag::Dirichlet) {
            let mut nodes = mesh.facets()[f].vertices.to_vec();
            if order == 2 {
                nodes.push(nv + mesh.facet_edge(f));
            }
            for n in nodes {
                dirichlet[2 * n] = true;
                dirichlet[2 * n + 1] = true;
            }
        }
        let dirichlet_dofs = (0..dirichlet.len()).filter(|&d| dirichlet[d]).collect();
        Ok(FeSpace { mesh, order, num_nodes, element_nodes, dirichlet, dirichlet_dofs })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of vector dofs, constrained ones included.
    pub fn total_dofs(&self) -> usize {
        2 * self.num_nodes
    }

    pub fn local_len(&self) -> usize {
        if self.order == 1 {
            3
        } else {
            6
        }
    }

    /// Scalar node indices of a triangle in local basis order.
    pub fn element_nodes(&self, triangle: usize) -> &[usize] {
        &self.element_nodes[triangle][..self.local_len()]
    }

    /// Vector dofs of a triangle: local dof `2a + c` is component `c` of basis function `a`.
    pub fn element_dofs(&self, triangle: usize) -> Vec<usize> {
        self.element_nodes(triangle)
            .iter()
            .flat_map(|&n| [2 * n, 2 * n + 1])
            .collect()
    }

    pub fn dirichlet_dofs(&self) -> &[usize] {
        &self.dirichlet_dofs
    }

    pub fn is_dirichlet(&self, dof: usize) -> bool {
        self.dirichlet[dof]
    }

    pub fn geometry(&self, triangle: usize) -> TriangleGeometry {
        TriangleGeometry::new(self.mesh.triangle_points(triangle))
    }

    pub fn eval_basis(&self, triangle: usize, reference: [f64; 2]) -> ElementBasis {
        ElementBasis::evaluate(self.order, &self.geometry(triangle), reference)
    }

    /// Physical location of a scalar node.
    pub fn node_point(&self, node: usize) -> Point {
        let nv = self.mesh.num_vertices();
        if node < nv {
            self.mesh.vertices()[node]
        } else {
            let [a, b] = self.mesh.edges()[node - nv];
            let (p, q) = (self.mesh.vertices()[a], self.mesh.vertices()[b]);
            [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
        }
    }

    /// Nodal interpolant of a vector field. Exact for fields in the space.
    pub fn interpolate(&self, field: impl Fn(Point) -> [f64; 2]) -> Vec<f64> {
        let mut out = vec![0.0; self.total_dofs()];
        for node in 0..self.num_nodes {
            let v = field(self.node_point(node));
            out[2 * node] = v[0];
            out[2 * node + 1] = v[1];
        }
        out
    }

    /// Reference coordinates inside the owning triangle of the point at parameter `s` along
    /// local edge `k` (running with the triangle's counterclockwise orientation).
    pub fn edge_reference_point(k: usize, s: f64) -> [f64; 2] {
        let mut bary = [0.0; 3];
        bary[(k + 1) % 3] = 1.0 - s;
        bary[(k + 2) % 3] = s;
        [bary[1], bary[2]]
    }

    /// Endpoints of local edge `k` of a triangle, in counterclockwise order.
    pub fn local_edge_vertices(&self, triangle: usize, k: usize) -> (usize, usize) {
        local_edge(&self.mesh.triangles()[triangle], k)
    }

    /// Default interior quadrature degree (stiffness exact).
    pub fn interior_degree(&self) -> usize {
        2 * self.order
    }
}

/// Displacement field in a space, given by its coefficient vector.
#[derive(Clone, Debug)]
pub struct DiscreteSolution {
    pub space: Arc<FeSpace>,
    pub coefficients: Vec<f64>,
}

impl DiscreteSolution {
    pub fn new(space: Arc<FeSpace>, coefficients: Vec<f64>) -> Self {
        assert_eq!(coefficients.len(), space.total_dofs(), "coefficient length mismatch");
        DiscreteSolution { space, coefficients }
    }

    pub fn zero(space: Arc<FeSpace>) -> Self {
        let n = space.total_dofs();
        DiscreteSolution { space, coefficients: vec![0.0; n] }
    }

    pub fn interpolate(space: Arc<FeSpace>, field: impl Fn(Point) -> [f64; 2]) -> Self {
        let coefficients = space.interpolate(field);
        DiscreteSolution { space, coefficients }
    }

    /// Local coefficients of a triangle in `element_dofs` order.
    pub fn local(&self, triangle: usize) -> [f64; 2 * MAX_LOCAL] {
        let mut out = [0.0; 2 * MAX_LOCAL];
        for (a, &n) in self.space.element_nodes(triangle).iter().enumerate() {
            out[2 * a] = self.coefficients[2 * n];
            out[2 * a + 1] = self.coefficients[2 * n + 1];
        }
        out
    }

    pub fn value(&self, triangle: usize, basis: &ElementBasis) -> [f64; 2] {
        let c = self.local(triangle);
        let mut u = [0.0; 2];
        for a in 0..basis.len {
            u[0] += c[2 * a] * basis.values[a];
            u[1] += c[2 * a + 1] * basis.values[a];
        }
        u
    }

    /// Displacement gradient `G[i][j] = d u_i / d x_j`.
    pub fn gradient(&self, triangle: usize, basis: &ElementBasis) -> [[f64; 2]; 2] {
        let c = self.local(triangle);
        let mut g = [[0.0; 2]; 2];
        for a in 0..basis.len {
            for i in 0..2 {
                for j in 0..2 {
                    g[i][j] += c[2 * a + i] * basis.gradients[a][j];
                }
            }
        }
        g
    }

    /// Second derivatives `H[i][j][k] = d^2 u_i / dx_j dx_k`.
    pub fn hessian(&self, triangle: usize, basis: &ElementBasis) -> [[[f64; 2]; 2]; 2] {
        let c = self.local(triangle);
        let mut h = [[[0.0; 2]; 2]; 2];
        for a in 0..basis.len {
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        h[i][j][k] += c[2 * a + i] * basis.hessians[a][j][k];
                    }
                }
            }
        }
        h
    }
}
