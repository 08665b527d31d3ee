use std::io::{self, Write};

use super::{ContactProblem, TraceValues};
use crate::space::{DiscreteSolution, TracePolynomial, TraceSpace};

/// Multiplier values at one contact quadrature point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiplierSample {
    pub s: f64,
    pub x: [f64; 2],
    pub lambda_n: f64,
    pub lambda_t: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FacetMultipliers {
    pub facet: usize,
    /// Projections onto quadratics on the facet.
    pub lambda_n: TracePolynomial,
    pub lambda_t: TracePolynomial,
    pub samples: Vec<MultiplierSample>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiplierField {
    pub facets: Vec<FacetMultipliers>,
}

impl MultiplierField {
    pub fn samples(&self) -> impl Iterator<Item = &MultiplierSample> {
        self.facets.iter().flat_map(|f| f.samples.iter())
    }

    pub fn min_normal(&self) -> f64 {
        self.samples().map(|s| s.lambda_n).fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_tangential(&self) -> f64 {
        self.samples().map(|s| s.lambda_t.abs()).fold(0.0, f64::max)
    }

    /// Facet mean of `(lambda_n, lambda_t)` from the quadratic projections.
    pub fn facet_mean(&self, index: usize) -> (f64, f64) {
        let mean = |p: &TracePolynomial| {
            let [a, b, c] = p.coefficients;
            a + b / 2.0 + c / 3.0
        };
        let f = &self.facets[index];
        (mean(&f.lambda_n), mean(&f.lambda_t))
    }
}

/// `lambda_n = max(gamma_n, 0)`; `lambda_t = gamma_t` if `|gamma_t| < kappa`, otherwise
/// `kappa * sign(gamma_t)`.
pub fn eliminate(gamma_n: f64, gamma_t: f64, kappa: f64) -> (f64, f64) {
    let lambda_n = gamma_n.max(0.0);
    let lambda_t = if gamma_t.abs() < kappa {
        gamma_t
    } else {
        kappa * super::direction(gamma_t)
    };
    (lambda_n, lambda_t)
}

impl ContactProblem {
    /// Multipliers `(lambda_n, lambda_t)` of a displacement field at parameter `s` of a contact
    /// facet.
    pub fn multipliers_at(&self, solution: &DiscreteSolution, facet: usize, s: f64) -> (f64, f64) {
        let c = self.contact_facet(facet);
        let TraceValues { u_n, u_t, sigma_n, sigma_t } = self.trace_values(solution, facet, s);
        let ah = self.alpha() * c.length;
        let x = self.point_on(facet, s);
        eliminate((u_n - c.gap.eval(s)) / ah - sigma_n, u_t / ah - sigma_t, (self.data().friction_bound)(x))
    }

    pub(crate) fn point_on(&self, facet: usize, s: f64) -> [f64; 2] {
        let mesh = self.space().mesh();
        let [a, b] = mesh.facets()[facet].vertices;
        let (p, q) = (mesh.vertices()[a], mesh.vertices()[b]);
        [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]
    }

    fn parameter_of(&self, facet: usize, x: [f64; 2]) -> f64 {
        let mesh = self.space().mesh();
        let [a, b] = mesh.facets()[facet].vertices;
        let (p, q) = (mesh.vertices()[a], mesh.vertices()[b]);
        let d = [q[0] - p[0], q[1] - p[1]];
        ((x[0] - p[0]) * d[0] + (x[1] - p[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1])
    }
}

/// Evaluates the eliminated multipliers at the contact quadrature points and projects them
/// onto quadratics per facet.
pub fn recover_multipliers(problem: &ContactProblem, solution: &DiscreteSolution) -> MultiplierField {
    let trace = TraceSpace::new(problem.space().mesh().clone());
    let facets = problem
        .contact_facets()
        .iter()
        .map(|c| {
            let samples: Vec<MultiplierSample> = c
                .points
                .iter()
                .map(|p| {
                    let (lambda_n, lambda_t) = problem.multipliers_at(solution, c.facet, p.s);
                    debug_assert!(lambda_n >= 0.0 && lambda_t.abs() <= p.kappa + 1e-12);
                    MultiplierSample { s: p.s, x: p.x, lambda_n, lambda_t }
                })
                .collect();
            let at = |x: [f64; 2]| problem.multipliers_at(solution, c.facet, problem.parameter_of(c.facet, x));
            let lambda_n = trace.project_trace(c.facet, |x| at(x).0).expect("contact facet is valid");
            let lambda_t = trace.project_trace(c.facet, |x| at(x).1).expect("contact facet is valid");
            FacetMultipliers { facet: c.facet, lambda_n, lambda_t, samples }
        })
        .collect();
    MultiplierField { facets }
}

/// CSV `y,lambda_n,lambda_t` with one row per contact quadrature point, sorted by `y`.
pub fn write_multiplier_csv(field: &MultiplierField, mut out: impl Write) -> io::Result<()> {
    let mut rows: Vec<&MultiplierSample> = field.samples().collect();
    rows.sort_by(|a, b| a.x[1].total_cmp(&b.x[1]).then(a.x[0].total_cmp(&b.x[0])));
    let mut s = String::from("y,lambda_n,lambda_t\n");
    for r in rows {
        s.push_str(&format!("{},{},{}\n", r.x[1], r.lambda_n, r.lambda_t));
    }
    out.write_all(s.as_bytes())
}
