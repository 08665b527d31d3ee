use std::sync::Arc;

use super::{facet_quadrature, SegmentRule, SpaceError};
use crate::mesh::{BoundaryTag, Mesh, Point};

/// Order of the discontinuous multiplier space on the contact boundary.
pub const TRACE_ORDER: usize = 2;

/// Polynomial of degree two on one facet, in the facet parameter `s in [0, 1]` running from
/// `facet.vertices[0]` to `facet.vertices[1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePolynomial {
    pub coefficients: [f64; TRACE_ORDER + 1],
}

impl TracePolynomial {
    pub fn constant(c: f64) -> Self {
        TracePolynomial { coefficients: [c, 0.0, 0.0] }
    }

    pub fn eval(&self, s: f64) -> f64 {
        let [a, b, c] = self.coefficients;
        a + s * (b + s * c)
    }
}

/// Discontinuous piecewise-quadratic functions on the contact facets.
#[derive(Debug)]
pub struct TraceSpace {
    mesh: Arc<Mesh>,
    facets: Vec<usize>,
    rule: SegmentRule,
}

impl TraceSpace {
    pub fn new(mesh: Arc<Mesh>) -> Self {
        let facets = mesh.facets_with_tag(BoundaryTag::Contact);
        let rule = facet_quadrature(2 * TRACE_ORDER + 2).expect("degree 6 segment rule exists");
        TraceSpace { mesh, facets, rule }
    }

    pub fn order(&self) -> usize {
        TRACE_ORDER
    }

    pub fn facets(&self) -> &[usize] {
        &self.facets
    }

    pub fn point_on(&self, facet: usize, s: f64) -> Point {
        let [a, b] = self.mesh.facets()[facet].vertices;
        let (p, q) = (self.mesh.vertices()[a], self.mesh.vertices()[b]);
        [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]
    }

    /// L2 projection of `f` onto quadratics on `facet`.
    pub fn project_trace(
        &self,
        facet: usize,
        f: impl Fn(Point) -> f64,
    ) -> Result<TracePolynomial, SpaceError> {
        if !self.facets.contains(&facet) {
            return Err(SpaceError::NotAContactFacet(facet));
        }
        let len = self.mesh.facet_length(facet);
        let mut gram = [[0.0; 3]; 3];
        let mut rhs = [0.0; 3];
        for (s, w) in self.rule.iter() {
            let phi = [1.0, s, s * s];
            let value = f(self.point_on(facet, s));
            for i in 0..3 {
                rhs[i] += len * w * value * phi[i];
                for j in 0..3 {
                    gram[i][j] += len * w * phi[i] * phi[j];
                }
            }
        }
        let coefficients = solve3(gram, rhs).ok_or(SpaceError::DegenerateFacet(facet))?;
        Ok(TracePolynomial { coefficients })
    }
}

/// Cholesky solve of a 3x3 symmetric system; `None` if it is not numerically positive definite.
fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = a[0][0].abs().max(a[1][1].abs()).max(a[2][2].abs());
    if !(scale > 1e-300) {
        return None;
    }
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d <= 1e-14 * scale {
                    return None;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut y = [0.0; 3];
    for i in 0..3 {
        y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        x[i] = (y[i] - (i + 1..3).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{BoundaryFacet, BoundaryTag as Tag, Mesh};

    /// Unit right triangle whose hypotenuse-free leg (0,0)-(0,1) is the contact facet of
    /// length 1.
    fn one_facet_mesh() -> Arc<Mesh> {
        Arc::new(
            Mesh::new(
                vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
                vec![[0, 1, 2]],
                vec![
                    BoundaryFacet { vertices: [0, 1], tag: Tag::Neumann },
                    BoundaryFacet { vertices: [1, 2], tag: Tag::Neumann },
                    BoundaryFacet { vertices: [2, 0], tag: Tag::Contact },
                ],
            )
            .unwrap(),
        )
    }

    #[test]
    fn constants_are_reproduced() {
        let trace = TraceSpace::new(one_facet_mesh());
        let p = trace.project_trace(2, |_| -0.1).unwrap();
        for (c, e) in p.coefficients.iter().zip([-0.1, 0.0, 0.0]) {
            assert!((c - e).abs() < 1e-14);
        }
    }

    #[test]
    fn quadratics_are_reproduced() {
        let trace = TraceSpace::new(one_facet_mesh());
        // Facet 2 runs from (0,1) to (0,0), so s = 1 - y.
        let p = trace.project_trace(2, |x| 3.0 * x[1] * x[1] - x[1] + 2.0).unwrap();
        for s in [0.0, 0.2, 0.7, 1.0] {
            let y: f64 = 1.0 - s;
            assert!((p.eval(s) - (3.0 * y * y - y + 2.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn cubic_residual_is_orthogonal() {
        let trace = TraceSpace::new(one_facet_mesh());
        let cubic = |x: Point| {
            let s = 1.0 - x[1];
            s * s * s
        };
        let p = trace.project_trace(2, cubic).unwrap();
        // Hand solution of the normal equations for s^3 on [0,1]:
        // best quadratic is 1/20 - 3/5 s + 3/2 s^2.
        let expected = [0.05, -0.6, 1.5];
        for (c, e) in p.coefficients.iter().zip(expected) {
            assert!((c - e).abs() < 1e-12, "{:?}", p.coefficients);
        }
        let rule = facet_quadrature(6).unwrap();
        for k in 0..3 {
            let r: f64 = rule.iter().map(|(s, w)| w * (s.powi(3) - p.eval(s)) * s.powi(k)).sum();
            assert!(r.abs() < 1e-12);
        }
    }

    #[test]
    fn non_contact_facet_is_rejected() {
        let trace = TraceSpace::new(one_facet_mesh());
        assert_eq!(trace.project_trace(0, |_| 1.0), Err(SpaceError::NotAContactFacet(0)));
    }

    #[test]
    fn degenerate_gram_is_detected() {
        assert!(solve3([[0.0; 3]; 3], [1.0, 0.0, 0.0]).is_none());
        let singular = [[1.0, 1.0, 1.0], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0]];
        assert!(solve3(singular, [1.0, 1.0, 1.0]).is_none());
    }
}
