//! Plain-text mesh format.
//!
//! ```text
//! tresca-mesh v1
//! vertices <n>
//! x y            (n lines)
//! triangles <m>
//! i j k          (m lines, refinement edge first)
//! facets <b>
//! i j TAG        (b lines, TAG one of Dirichlet/Neumann/Contact)
//! ```
//!
//! Coordinates are written with 17 significant digits, so a write/read cycle is exact.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::{BoundaryFacet, BoundaryTag, Mesh, MeshError};

const HEADER: &str = "tresca-mesh v1";

#[derive(Debug, Error)]
pub enum MeshParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unexpected end of file, expected {0}")]
    UnexpectedEof(&'static str),
    #[error(transparent)]
    Invalid(#[from] MeshError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_mesh(mesh: &Mesh, mut out: impl Write) -> io::Result<()> {
    let mut s = String::new();
    writeln!(s, "{HEADER}").unwrap();
    writeln!(s, "vertices {}", mesh.num_vertices()).unwrap();
    for p in mesh.vertices() {
        writeln!(s, "{:.16e} {:.16e}", p[0], p[1]).unwrap();
    }
    writeln!(s, "triangles {}", mesh.num_triangles()).unwrap();
    for [i, j, k] in mesh.triangles() {
        writeln!(s, "{i} {j} {k}").unwrap();
    }
    writeln!(s, "facets {}", mesh.facets().len()).unwrap();
    for f in mesh.facets() {
        writeln!(s, "{} {} {}", f.vertices[0], f.vertices[1], f.tag).unwrap();
    }
    out.write_all(s.as_bytes())
}

struct Lines<R> {
    inner: io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self, what: &'static str) -> Result<String, MeshParseError> {
        loop {
            let line = self.inner.next().ok_or(MeshParseError::UnexpectedEof(what))??;
            self.number += 1;
            let trimmed = line.trim();
            if !trimmed.is_empty() {
                return Ok(trimmed.to_string());
            }
        }
    }

    fn error(&self, message: impl Into<String>) -> MeshParseError {
        MeshParseError::Syntax {
            line: self.number,
            message: message.into(),
        }
    }

    fn count(&mut self, keyword: &'static str) -> Result<usize, MeshParseError> {
        let line = self.next(keyword)?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(keyword) {
            return Err(self.error(format!("expected `{keyword} <count>`")));
        }
        let n = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.error(format!("invalid {keyword} count")))?;
        if parts.next().is_some() {
            return Err(self.error("trailing tokens"));
        }
        Ok(n)
    }

    fn fields<const N: usize>(&mut self, what: &'static str) -> Result<[String; N], MeshParseError> {
        let line = self.next(what)?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != N {
            return Err(self.error(format!("expected {N} fields for {what}, found {}", parts.len())));
        }
        Ok(std::array::from_fn(|i| parts[i].to_string()))
    }
}

pub fn read_mesh(input: impl BufRead) -> Result<Mesh, MeshParseError> {
    let mut lines = Lines {
        inner: input.lines(),
        number: 0,
    };
    if lines.next("header")? != HEADER {
        return Err(lines.error(format!("expected header `{HEADER}`")));
    }

    let nv = lines.count("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let [x, y] = lines.fields::<2>("vertex")?;
        let parse = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite());
        match (parse(&x), parse(&y)) {
            (Some(x), Some(y)) => vertices.push([x, y]),
            _ => return Err(lines.error("invalid vertex coordinates")),
        }
    }

    let nt = lines.count("triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let f = lines.fields::<3>("triangle")?;
        let ids: Option<Vec<usize>> = f.iter().map(|s| s.parse().ok()).collect();
        match ids {
            Some(ids) => triangles.push([ids[0], ids[1], ids[2]]),
            None => return Err(lines.error("invalid triangle indices")),
        }
    }

    let nf = lines.count("facets")?;
    let mut facets = Vec::with_capacity(nf);
    for _ in 0..nf {
        let [a, b, tag] = lines.fields::<3>("facet")?;
        let (Ok(a), Ok(b)) = (a.parse(), b.parse()) else {
            return Err(lines.error("invalid facet indices"));
        };
        let tag: BoundaryTag = tag.parse().map_err(|e: String| lines.error(e))?;
        facets.push(BoundaryFacet { vertices: [a, b], tag });
    }

    Ok(Mesh::new(vertices, triangles, facets)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{benchmark_tagging, build_unit_square_mesh};

    #[test]
    fn round_trip_is_exact() {
        let m = build_unit_square_mesh(3, &benchmark_tagging()).unwrap().refine(&[0, 5, 7]);
        let mut buf = Vec::new();
        write_mesh(&m, &mut buf).unwrap();
        let back = read_mesh(buf.as_slice()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.refine(&[1]), m.refine(&[1]));
    }

    #[test]
    fn corrupted_file_names_the_line() {
        let text = "tresca-mesh v1\nvertices 3\n0 0\n1 zero\n0 1\n";
        match read_mesh(text.as_bytes()) {
            Err(MeshParseError::Syntax { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let text = "tresca-mesh v1\nvertices 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 2\nfacets 3\n0 1 Neumann\n1 2 Sticky\n2 0 Neumann\n";
        match read_mesh(text.as_bytes()) {
            Err(MeshParseError::Syntax { line, .. }) => assert_eq!(line, 10),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            read_mesh("tresca-mesh v2\n".as_bytes()),
            Err(MeshParseError::Syntax { line: 1, .. })
        ));
    }
}
