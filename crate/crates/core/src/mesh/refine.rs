//! Newest-vertex bisection with edge-marking closure.

use std::collections::{HashMap, VecDeque};

use super::{sorted, BoundaryFacet, Mesh};

pub(super) fn refine(mesh: &Mesh, marked: &[usize]) -> Mesh {
    if marked.is_empty() {
        return mesh.clone();
    }
    let nt = mesh.num_triangles();
    let mut edge_marked = vec![false; mesh.num_edges()];
    let mut queue = VecDeque::new();
    for &t in marked {
        assert!(t < nt, "marked triangle {t} out of range (mesh has {nt})");
        for e in mesh.triangle_edges(t) {
            if !edge_marked[e] {
                edge_marked[e] = true;
                queue.push_back(e);
            }
        }
    }

    // Closure: a triangle with any split edge must also split its refinement edge (local
    // edge 2, between its first two vertices).
    while let Some(e) = queue.pop_front() {
        for t in mesh.edge_triangles(e).into_iter().flatten() {
            let reference = mesh.triangle_edges(t)[2];
            if !edge_marked[reference] {
                edge_marked[reference] = true;
                queue.push_back(reference);
            }
        }
    }

    let mut vertices = mesh.vertices().to_vec();
    let mut midpoint: HashMap<[usize; 2], usize> = HashMap::new();
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        if edge_marked[e] {
            let (p, q) = (vertices[a], vertices[b]);
            midpoint.insert([a, b], vertices.len());
            vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
        }
    }

    let mut triangles = Vec::with_capacity(2 * nt);
    for tri in mesh.triangles() {
        bisect(*tri, &midpoint, &mut triangles);
    }

    let mut facets = Vec::with_capacity(mesh.facets().len());
    for facet in mesh.facets() {
        let [a, b] = facet.vertices;
        match midpoint.get(&sorted(a, b)) {
            Some(&m) => {
                facets.push(BoundaryFacet { vertices: [a, m], tag: facet.tag });
                facets.push(BoundaryFacet { vertices: [m, b], tag: facet.tag });
            }
            None => facets.push(*facet),
        }
    }

    Mesh::new(vertices, triangles, facets).expect("bisection preserves mesh validity")
}

/// Splits `[a, b, c]` at the midpoint of its refinement edge `(a, b)` if that edge is marked.
/// The children `[c, a, m]` and `[b, c, m]` take `m` as their newest vertex, so their
/// refinement edges are the parent's two remaining edges.
fn bisect(tri: [usize; 3], midpoint: &HashMap<[usize; 2], usize>, out: &mut Vec<[usize; 3]>) {
    let [a, b, c] = tri;
    match midpoint.get(&sorted(a, b)) {
        Some(&m) => {
            bisect([c, a, m], midpoint, out);
            bisect([b, c, m], midpoint, out);
        }
        None => out.push(tri),
    }
}

#[cfg(test)]
mod tests {
    use crate::mesh::{benchmark_tagging, build_unit_square_mesh};

    #[test]
    fn empty_marking_is_identity() {
        let m = build_unit_square_mesh(3, &benchmark_tagging()).unwrap();
        assert_eq!(m.refine(&[]), m);
    }

    #[test]
    fn single_mark_closes_over_the_diagonal() {
        let m = build_unit_square_mesh(1, &benchmark_tagging()).unwrap();
        let r = m.refine(&[0]);
        // Triangle 0 splits all three edges (4 children); the diagonal is triangle 1's
        // refinement edge, so it is bisected once (2 children).
        assert_eq!(r.num_triangles(), 6);
        assert_eq!(r.num_vertices(), 4 + 3);
        assert!((r.total_area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn marking_everything_is_uniform() {
        let m = build_unit_square_mesh(4, &benchmark_tagging()).unwrap();
        let all: Vec<usize> = (0..m.num_triangles()).collect();
        let r = m.refine(&all);
        assert_eq!(r.num_triangles(), 128);
        assert_eq!(r.num_vertices(), 81);
        assert!((r.max_diameter() - 0.1767766952966369).abs() < 1e-15);
    }

    #[test]
    fn refine_then_enumerate_interior_edges() {
        let m = build_unit_square_mesh(1, &benchmark_tagging()).unwrap();
        let r = m.refine(&[0, 1]);
        let brute = {
            let mut count = std::collections::HashMap::new();
            for t in r.triangles() {
                for k in 0..3 {
                    let (a, b) = crate::mesh::local_edge(t, k);
                    *count.entry(crate::mesh::sorted(a, b)).or_insert(0) += 1;
                }
            }
            count.values().filter(|&&c| c == 2).count()
        };
        assert_eq!(r.interior_edges().len(), brute);
        assert_eq!(brute, 8);
    }
}
