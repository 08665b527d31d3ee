//! Legacy ASCII VTK output.

use std::fmt::Write as _;

use tresca_core::contact::MultiplierField;
use tresca_core::mesh::Mesh;
use tresca_core::space::DiscreteSolution;

/// Displacement at every mesh vertex. Vertex nodes come first in the node numbering.
pub fn vertex_displacements(solution: &DiscreteSolution) -> Vec<[f64; 2]> {
    let nv = solution.space.mesh().num_vertices();
    (0..nv).map(|v| [solution.coefficients[2 * v], solution.coefficients[2 * v + 1]]).collect()
}

/// Unstructured grid with triangles (and with the contact facets as line cells when
/// multipliers are given). Points are moved by the displacement when `deformed` is set.
pub fn vtk_string(mesh: &Mesh, solution: &DiscreteSolution, multipliers: Option<&MultiplierField>, deformed: bool) -> String {
    let disp = vertex_displacements(solution);
    let lines: Vec<(usize, f64, f64)> = multipliers
        .map(|m| {
            (0..m.facets.len())
                .map(|i| {
                    let (ln, lt) = m.facet_mean(i);
                    (m.facets[i].facet, ln, lt)
                })
                .collect()
        })
        .unwrap_or_default();
    let nt = mesh.num_triangles();
    let ncells = nt + lines.len();
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\ntresca contact solution\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(s, "POINTS {} double", mesh.num_vertices()).unwrap();
    for (p, u) in mesh.vertices().iter().zip(&disp) {
        let (x, y) = if deformed { (p[0] + u[0], p[1] + u[1]) } else { (p[0], p[1]) };
        writeln!(s, "{x} {y} 0").unwrap();
    }
    writeln!(s, "CELLS {} {}", ncells, 4 * nt + 3 * lines.len()).unwrap();
    for [a, b, c] in mesh.triangles() {
        writeln!(s, "3 {a} {b} {c}").unwrap();
    }
    for (f, _, _) in &lines {
        let [a, b] = mesh.facets()[*f].vertices;
        writeln!(s, "2 {a} {b}").unwrap();
    }
    writeln!(s, "CELL_TYPES {ncells}").unwrap();
    for _ in 0..nt {
        s.push_str("5\n");
    }
    for _ in &lines {
        s.push_str("3\n");
    }
    writeln!(s, "POINT_DATA {}", mesh.num_vertices()).unwrap();
    s.push_str("VECTORS displacement double\n");
    for u in &disp {
        writeln!(s, "{} {} 0", u[0], u[1]).unwrap();
    }
    if multipliers.is_some() {
        writeln!(s, "CELL_DATA {ncells}").unwrap();
        for (name, pick) in [("lambda_n", 0), ("lambda_t", 1)] {
            writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
            for _ in 0..nt {
                s.push_str("0\n");
            }
            for &(_, ln, lt) in &lines {
                writeln!(s, "{}", if pick == 0 { ln } else { lt }).unwrap();
            }
        }
    }
    s
}
