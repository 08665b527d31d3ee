//! Conforming triangular meshes of polygonal domains.
//!
//! Triangles are stored counterclockwise with a fixed rotation: the edge between the first two
//! vertices is the refinement edge used by newest-vertex bisection, and the third vertex is the
//! newest vertex. This ordering is the only refinement bookkeeping the mesh carries, so a mesh
//! written to disk and read back refines identically.
//!
//! Boundary facets carry a [`BoundaryTag`]. Facet endpoints are normalized on construction so
//! that they follow the counterclockwise traversal of the adjacent triangle, which makes
//! [`Mesh::facet_normal`] the outward normal.

mod io;
mod refine;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use io::{read_mesh, write_mesh, MeshParseError};

/// A point in the plane.
pub type Point = [f64; 2];

/// Part of the boundary a facet belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    /// Homogeneous displacement condition.
    Dirichlet,
    /// Traction-free boundary.
    Neumann,
    /// Frictional contact with a rigid foundation.
    Contact,
}

impl BoundaryTag {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryTag::Dirichlet => "Dirichlet",
            BoundaryTag::Neumann => "Neumann",
            BoundaryTag::Contact => "Contact",
        }
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundaryTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(BoundaryTag::Dirichlet),
            "neumann" => Ok(BoundaryTag::Neumann),
            "contact" => Ok(BoundaryTag::Contact),
            _ => Err(format!("unknown boundary tag `{s}`")),
        }
    }
}

/// Sides of the square `(-0.5, 0.5)^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    /// `x = -0.5`
    Left,
    /// `x = 0.5`
    Right,
    /// `y = -0.5`
    Bottom,
    /// `y = 0.5`
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];
}

/// Tagging of the contact benchmark: clamped on the left, contact on the right, free on top
/// and bottom.
pub fn benchmark_tagging() -> BTreeMap<Side, BoundaryTag> {
    BTreeMap::from([
        (Side::Left, BoundaryTag::Dirichlet),
        (Side::Right, BoundaryTag::Contact),
        (Side::Bottom, BoundaryTag::Neumann),
        (Side::Top, BoundaryTag::Neumann),
    ])
}

/// Same tag on all four sides.
pub fn uniform_tagging(tag: BoundaryTag) -> BTreeMap<Side, BoundaryTag> {
    Side::ALL.iter().map(|&s| (s, tag)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryFacet {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

/// An edge shared by two triangles.
///
/// `left` is the triangle whose counterclockwise traversal runs `vertices[0] -> vertices[1]`,
/// and `normal` points from `left` into `right`.
#[derive(Clone, Debug, PartialEq)]
pub struct InteriorEdge {
    pub edge: usize,
    pub vertices: [usize; 2],
    pub left: usize,
    pub right: usize,
    pub normal: Point,
}

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("cells_per_side must be at least 1")]
    EmptyGrid,
    #[error("side {0:?} has no boundary tag")]
    MissingSideTag(Side),
    #[error("triangle {triangle} references vertex {vertex}, but the mesh has {count} vertices")]
    VertexOutOfRange {
        triangle: usize,
        vertex: usize,
        count: usize,
    },
    #[error("facet {facet} references vertex {vertex}, but the mesh has {count} vertices")]
    FacetVertexOutOfRange {
        facet: usize,
        vertex: usize,
        count: usize,
    },
    #[error("triangle {0} has non-positive signed area")]
    NonPositiveArea(usize),
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonManifoldEdge(usize, usize),
    #[error("edge ({0}, {1}) is traversed in the same direction by both neighbours")]
    InconsistentOrientation(usize, usize),
    #[error("vertex {0} is not used by any triangle")]
    IsolatedVertex(usize),
    #[error("facet {0} is not a boundary edge of the triangulation")]
    FacetNotOnBoundary(usize),
    #[error("boundary edge ({0}, {1}) carries more than one tag")]
    DuplicateFacet(usize, usize),
    #[error("boundary edge ({0}, {1}) has no tag")]
    UntaggedBoundaryEdge(usize, usize),
    #[error("vertex {vertex} hangs on boundary edge ({a}, {b})")]
    HangingVertex { vertex: usize, a: usize, b: usize },
    #[error("vertex {0} touches both a Dirichlet and a contact facet")]
    DirichletTouchesContact(usize),
    #[error("contact facet {0} is not collinear with the rest of the contact boundary")]
    ContactNotStraight(usize),
}

/// Conforming triangulation with tagged boundary facets.
#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    facets: Vec<BoundaryFacet>,
    edges: Vec<[usize; 2]>,
    triangle_edges: Vec<[usize; 3]>,
    edge_triangles: Vec<[Option<usize>; 2]>,
    facet_edges: Vec<usize>,
    facet_owners: Vec<(usize, usize)>,
}

impl PartialEq for Mesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
            && self.triangles == other.triangles
            && self.facets == other.facets
    }
}

const COLLINEAR_TOL: f64 = 1e-12;

fn sorted(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

fn signed_area(p: Point, q: Point, r: Point) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

fn dist(p: Point, q: Point) -> f64 {
    (q[0] - p[0]).hypot(q[1] - p[1])
}

/// Local edge `k` of a triangle is the edge opposite its local vertex `k`.
pub(crate) fn local_edge(tri: &[usize; 3], k: usize) -> (usize, usize) {
    (tri[(k + 1) % 3], tri[(k + 2) % 3])
}

impl Mesh {
    /// Builds and validates a mesh.
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        facets: Vec<BoundaryFacet>,
    ) -> Result<Self, MeshError> {
        let nv = vertices.len();
        let mut used = vec![false; nv];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(MeshError::VertexOutOfRange {
                        triangle: t,
                        vertex: v,
                        count: nv,
                    });
                }
                used[v] = true;
            }
            let [a, b, c] = *tri;
            if !(signed_area(vertices[a], vertices[b], vertices[c]) > 0.0) {
                return Err(MeshError::NonPositiveArea(t));
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(MeshError::IsolatedVertex(v));
        }

        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_triangles: Vec<[Option<usize>; 2]> = Vec::new();
        let mut edge_dirs: Vec<[usize; 2]> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut local = [0; 3];
            for (k, slot) in local.iter_mut().enumerate() {
                let (a, b) = local_edge(tri, k);
                let key = sorted(a, b);
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_triangles.push([None, None]);
                    edge_dirs.push([a, b]);
                    edges.len() - 1
                });
                match edge_triangles[e] {
                    [None, _] => edge_triangles[e][0] = Some(t),
                    [Some(_), None] => {
                        if edge_dirs[e] == [a, b] {
                            return Err(MeshError::InconsistentOrientation(key[0], key[1]));
                        }
                        edge_triangles[e][1] = Some(t);
                    }
                    _ => return Err(MeshError::NonManifoldEdge(key[0], key[1])),
                }
                *slot = e;
            }
            triangle_edges.push(local);
        }

        let mut facet_of_edge: Vec<Option<usize>> = vec![None; edges.len()];
        let mut facet_edges = Vec::with_capacity(facets.len());
        let mut facet_owners = Vec::with_capacity(facets.len());
        let mut normalized = Vec::with_capacity(facets.len());
        for (f, facet) in facets.iter().enumerate() {
            let [a, b] = facet.vertices;
            for v in [a, b] {
                if v >= nv {
                    return Err(MeshError::FacetVertexOutOfRange {
                        facet: f,
                        vertex: v,
                        count: nv,
                    });
                }
            }
            let key = sorted(a, b);
            let e = match edge_index.get(&key) {
                Some(&e) if edge_triangles[e][1].is_none() => e,
                _ => return Err(MeshError::FacetNotOnBoundary(f)),
            };
            if facet_of_edge[e].replace(f).is_some() {
                return Err(MeshError::DuplicateFacet(key[0], key[1]));
            }
            let owner = edge_triangles[e][0].expect("boundary edge has one triangle");
            let k = triangle_edges[owner].iter().position(|&x| x == e).unwrap();
            let (p, q) = local_edge(&triangles[owner], k);
            normalized.push(BoundaryFacet {
                vertices: [p, q],
                tag: facet.tag,
            });
            facet_edges.push(e);
            facet_owners.push((owner, k));
        }
        for (e, tris) in edge_triangles.iter().enumerate() {
            if tris[1].is_none() && facet_of_edge[e].is_none() {
                return Err(MeshError::UntaggedBoundaryEdge(edges[e][0], edges[e][1]));
            }
        }

        let mesh = Mesh {
            vertices,
            triangles,
            facets: normalized,
            edges,
            triangle_edges,
            edge_triangles,
            facet_edges,
            facet_owners,
        };
        mesh.check_hanging_vertices()?;
        mesh.check_boundary_parts()?;
        Ok(mesh)
    }

    fn check_hanging_vertices(&self) -> Result<(), MeshError> {
        let mut boundary: Vec<usize> = self.facets.iter().flat_map(|f| f.vertices).collect();
        boundary.sort_unstable();
        boundary.dedup();
        boundary.sort_by(|&a, &b| self.vertices[a][0].total_cmp(&self.vertices[b][0]));
        let xs: Vec<f64> = boundary.iter().map(|&v| self.vertices[v][0]).collect();
        for facet in &self.facets {
            let [a, b] = facet.vertices;
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            let d = [pb[0] - pa[0], pb[1] - pa[1]];
            let len2 = d[0] * d[0] + d[1] * d[1];
            let slack = COLLINEAR_TOL * len2.sqrt();
            let (lo, hi) = (pa[0].min(pb[0]) - slack, pa[0].max(pb[0]) + slack);
            let start = xs.partition_point(|&x| x < lo);
            for &v in boundary[start..].iter().take_while(|&&v| self.vertices[v][0] <= hi) {
                if v == a || v == b {
                    continue;
                }
                let p = self.vertices[v];
                let r = [p[0] - pa[0], p[1] - pa[1]];
                let cross = d[0] * r[1] - d[1] * r[0];
                let along = d[0] * r[0] + d[1] * r[1];
                if cross.abs() <= COLLINEAR_TOL * len2 && along > 0.0 && along < len2 {
                    return Err(MeshError::HangingVertex { vertex: v, a, b });
                }
            }
        }
        Ok(())
    }

    fn check_boundary_parts(&self) -> Result<(), MeshError> {
        let mut dirichlet = vec![false; self.vertices.len()];
        for f in self.facets.iter().filter(|f| f.tag == BoundaryTag::Dirichlet) {
            for v in f.vertices {
                dirichlet[v] = true;
            }
        }
        let contact: Vec<usize> = (0..self.facets.len())
            .filter(|&f| self.facets[f].tag == BoundaryTag::Contact)
            .collect();
        for &f in &contact {
            if let Some(&v) = self.facets[f].vertices.iter().find(|&&v| dirichlet[v]) {
                return Err(MeshError::DirichletTouchesContact(v));
            }
        }
        let Some(&first) = contact.first() else {
            return Ok(());
        };
        let n0 = self.facet_normal(first);
        let origin = self.vertices[self.facets[first].vertices[0]];
        for &f in &contact[1..] {
            let n = self.facet_normal(f);
            let sin = n0[0] * n[1] - n0[1] * n[0];
            let cos = n0[0] * n[0] + n0[1] * n[1];
            let offset = self.facets[f].vertices.iter().map(|&v| {
                let p = self.vertices[v];
                ((p[0] - origin[0]) * n0[0] + (p[1] - origin[1]) * n0[1]).abs()
            });
            let scale = self.facet_length(f).max(self.facet_length(first));
            if sin.abs() > COLLINEAR_TOL || cos <= 0.0 || offset.fold(0.0, f64::max) > COLLINEAR_TOL * scale.max(1.0) {
                return Err(MeshError::ContactNotStraight(f));
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn facets(&self) -> &[BoundaryFacet] {
        &self.facets
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Endpoints of every edge, sorted ascending.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Global edge indices of a triangle's local edges; local edge `k` is opposite vertex `k`.
    pub fn triangle_edges(&self, triangle: usize) -> [usize; 3] {
        self.triangle_edges[triangle]
    }

    /// The one or two triangles incident to an edge.
    pub fn edge_triangles(&self, edge: usize) -> [Option<usize>; 2] {
        self.edge_triangles[edge]
    }

    pub fn facet_edge(&self, facet: usize) -> usize {
        self.facet_edges[facet]
    }

    /// Triangle owning a boundary facet and the facet's local edge index in it.
    pub fn facet_owner(&self, facet: usize) -> (usize, usize) {
        self.facet_owners[facet]
    }

    pub fn triangle_points(&self, triangle: usize) -> [Point; 3] {
        self.triangles[triangle].map(|v| self.vertices[v])
    }

    pub fn triangle_area(&self, triangle: usize) -> f64 {
        let [a, b, c] = self.triangle_points(triangle);
        signed_area(a, b, c)
    }

    /// Longest edge length.
    pub fn triangle_diameter(&self, triangle: usize) -> f64 {
        let [a, b, c] = self.triangle_points(triangle);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    /// Largest triangle diameter.
    pub fn max_diameter(&self) -> f64 {
        (0..self.num_triangles())
            .map(|t| self.triangle_diameter(t))
            .fold(0.0, f64::max)
    }

    /// Smallest interior angle of a triangle, in radians.
    pub fn min_angle(&self, triangle: usize) -> f64 {
        let p = self.triangle_points(triangle);
        (0..3)
            .map(|k| {
                let (o, u, v) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
                let a = [u[0] - o[0], u[1] - o[1]];
                let b = [v[0] - o[0], v[1] - o[1]];
                let cross = a[0] * b[1] - a[1] * b[0];
                let dot = a[0] * b[0] + a[1] * b[1];
                cross.atan2(dot).abs()
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn facet_length(&self, facet: usize) -> f64 {
        let [a, b] = self.facets[facet].vertices;
        dist(self.vertices[a], self.vertices[b])
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let [a, b] = self.edges[edge];
        dist(self.vertices[a], self.vertices[b])
    }

    /// Outward unit normal of a boundary facet.
    pub fn facet_normal(&self, facet: usize) -> Point {
        let [a, b] = self.facets[facet].vertices;
        let (p, q) = (self.vertices[a], self.vertices[b]);
        let len = dist(p, q);
        [(q[1] - p[1]) / len, -(q[0] - p[0]) / len]
    }

    /// Indices of facets with the given tag, in storage order.
    pub fn facets_with_tag(&self, tag: BoundaryTag) -> Vec<usize> {
        (0..self.facets.len()).filter(|&f| self.facets[f].tag == tag).collect()
    }

    /// Common outward normal of the contact boundary, if there is one.
    pub fn contact_normal(&self) -> Option<Point> {
        self.facets_with_tag(BoundaryTag::Contact)
            .first()
            .map(|&f| self.facet_normal(f))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    /// Interior edges in edge-index order.
    pub fn interior_edges(&self) -> Vec<InteriorEdge> {
        let mut out = Vec::new();
        for (e, tris) in self.edge_triangles.iter().enumerate() {
            let [Some(t0), Some(t1)] = *tris else {
                continue;
            };
            let [a, b] = self.edges[e];
            let runs_forward = |t: usize| {
                let k = self.triangle_edges[t].iter().position(|&x| x == e).unwrap();
                local_edge(&self.triangles[t], k) == (a, b)
            };
            let (left, right) = if runs_forward(t0) { (t0, t1) } else { (t1, t0) };
            let (p, q) = (self.vertices[a], self.vertices[b]);
            let len = dist(p, q);
            out.push(InteriorEdge {
                edge: e,
                vertices: [a, b],
                left,
                right,
                normal: [(q[1] - p[1]) / len, -(q[0] - p[0]) / len],
            });
        }
        out
    }

    /// Bisects every marked triangle (twice, so all three of its edges are split), then closes
    /// the marking so the result is conforming.
    ///
    /// # Panics
    ///
    /// Panics if a marked index is not a triangle of this mesh.
    pub fn refine(&self, marked: &[usize]) -> Mesh {
        refine::refine(self, marked)
    }
}

/// Structured triangulation of `(-0.5, 0.5)^2` with `cells_per_side` squares per side, each
/// split along its bottom-left to top-right diagonal.
pub fn build_unit_square_mesh(
    cells_per_side: usize,
    tagging: &BTreeMap<Side, BoundaryTag>,
) -> Result<Mesh, MeshError> {
    if cells_per_side == 0 {
        return Err(MeshError::EmptyGrid);
    }
    let tag = |s: Side| tagging.get(&s).copied().ok_or(MeshError::MissingSideTag(s));
    let (left, right, bottom, top) = (
        tag(Side::Left)?,
        tag(Side::Right)?,
        tag(Side::Bottom)?,
        tag(Side::Top)?,
    );
    let n = cells_per_side;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let coord = |i: usize| -0.5 + i as f64 / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([coord(i), coord(j)]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (bl, br, tr, tl) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            // The diagonal is the refinement edge of both halves.
            triangles.push([tr, bl, br]);
            triangles.push([bl, tr, tl]);
        }
    }
    let mut facets = Vec::with_capacity(4 * n);
    for i in 0..n {
        facets.push(BoundaryFacet {
            vertices: [idx(i, 0), idx(i + 1, 0)],
            tag: bottom,
        });
    }
    for j in 0..n {
        facets.push(BoundaryFacet {
            vertices: [idx(n, j), idx(n, j + 1)],
            tag: right,
        });
    }
    for i in (0..n).rev() {
        facets.push(BoundaryFacet {
            vertices: [idx(i + 1, n), idx(i, n)],
            tag: top,
        });
    }
    for j in (0..n).rev() {
        facets.push(BoundaryFacet {
            vertices: [idx(0, j + 1), idx(0, j)],
            tag: left,
        });
    }
    Mesh::new(vertices, triangles, facets)
}
