//! Nitsche treatment of unilateral contact with Tresca friction on a straight boundary part,
//! the fixed-point contact iteration and the recovery of the contact multipliers.

mod multipliers;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::elasticity::{
    apply, assemble_load, assemble_stiffness_with, basis_stress, element_pattern, Material,
    MAX_ELEMENT_DOFS,
};
use crate::mesh::Point;
use crate::sparse::{CholeskySolver, LinearSolveError, SparseSymmetricMatrix};
use crate::space::{facet_quadrature, DiscreteSolution, ElementBasis, FeSpace, SpaceError, TracePolynomial, TraceSpace};

pub use multipliers::{recover_multipliers, write_multiplier_csv, MultiplierField, MultiplierSample};

pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

/// Quadrature degree on contact facets.
pub const CONTACT_DEGREE: usize = 4;

#[derive(Debug, Error)]
pub enum ContactError {
    #[error("stabilization parameter must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("friction bound is negative ({value}) at ({x}, {y})")]
    NegativeFriction { value: f64, x: f64, y: f64 },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("max_iterations must be at least 1")]
    InvalidMaxIterations,
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("linear system of contact iteration {iteration} is singular or indefinite: {source}")]
    SingularSystem {
        iteration: usize,
        #[source]
        source: LinearSolveError,
    },
    #[error("contact iteration did not converge in {} iterations (last increment {:e})", .history.len(), .history.last().copied().unwrap_or(f64::NAN))]
    NotConverged { history: Vec<f64> },
}

/// Mesh-independent data of a contact problem.
#[derive(Clone)]
pub struct ContactData {
    pub body_force: VectorField,
    pub gap: ScalarField,
    pub friction_bound: ScalarField,
    pub alpha: f64,
}

impl ContactData {
    pub fn constant(body_force: [f64; 2], gap: f64, friction_bound: f64, alpha: f64) -> Self {
        ContactData {
            body_force: Arc::new(move |_| body_force),
            gap: Arc::new(move |_| gap),
            friction_bound: Arc::new(move |_| friction_bound),
            alpha,
        }
    }
}

impl fmt::Debug for ContactData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContactData").field("alpha", &self.alpha).finish_non_exhaustive()
    }
}

/// Face quantities of one contact quadrature point, precomputed for the owner triangle's
/// local dofs.
#[derive(Clone, Debug)]
pub struct ContactPoint {
    /// Facet parameter in `[0, 1]`.
    pub s: f64,
    pub x: Point,
    /// Quadrature weight times facet length.
    pub weight: f64,
    pub gap: f64,
    pub kappa: f64,
    pub reference: [f64; 2],
    pub u_n: [f64; MAX_ELEMENT_DOFS],
    pub u_t: [f64; MAX_ELEMENT_DOFS],
    pub sigma_n: [f64; MAX_ELEMENT_DOFS],
    pub sigma_t: [f64; MAX_ELEMENT_DOFS],
}

#[derive(Clone, Debug)]
pub struct ContactFacet {
    /// Mesh facet index.
    pub facet: usize,
    pub triangle: usize,
    pub local_edge: usize,
    pub length: f64,
    /// L2 projection of the gap onto quadratics on the facet.
    pub gap: TracePolynomial,
    pub points: Vec<ContactPoint>,
}

/// A contact problem discretized on one mesh.
#[derive(Clone, Debug)]
pub struct ContactProblem {
    space: Arc<FeSpace>,
    material: Material,
    data: ContactData,
    normal: [f64; 2],
    tangent: [f64; 2],
    facets: Vec<ContactFacet>,
}

/// Displacement and stress components on the contact boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceValues {
    pub u_n: f64,
    pub u_t: f64,
    pub sigma_n: f64,
    pub sigma_t: f64,
}

impl ContactProblem {
    pub fn new(space: Arc<FeSpace>, material: Material, data: ContactData) -> Result<Self, ContactError> {
        if !(data.alpha > 0.0 && data.alpha.is_finite()) {
            return Err(ContactError::InvalidAlpha(data.alpha));
        }
        let mesh = space.mesh().clone();
        let normal = mesh.contact_normal().unwrap_or([1.0, 0.0]);
        let tangent = [-normal[1], normal[0]];
        let trace = TraceSpace::new(mesh.clone());
        let rule = facet_quadrature(CONTACT_DEGREE)?;
        let n_local = 2 * space.local_len();
        let mut facets = Vec::new();
        for &f in trace.facets() {
            let (triangle, local_edge) = mesh.facet_owner(f);
            let length = mesh.facet_length(f);
            let gap = trace.project_trace(f, |x| (data.gap)(x))?;
            let geo = space.geometry(triangle);
            let mut points = Vec::with_capacity(rule.len());
            for (s, w) in rule.iter() {
                let reference = FeSpace::edge_reference_point(local_edge, s);
                let x = trace.point_on(f, s);
                let kappa = (data.friction_bound)(x);
                if !(kappa >= 0.0) {
                    return Err(ContactError::NegativeFriction { value: kappa, x: x[0], y: x[1] });
                }
                let basis = ElementBasis::evaluate(space.order(), &geo, reference);
                let mut p = ContactPoint {
                    s,
                    x,
                    weight: w * length,
                    gap: gap.eval(s),
                    kappa,
                    reference,
                    u_n: [0.0; MAX_ELEMENT_DOFS],
                    u_t: [0.0; MAX_ELEMENT_DOFS],
                    sigma_n: [0.0; MAX_ELEMENT_DOFS],
                    sigma_t: [0.0; MAX_ELEMENT_DOFS],
                };
                for d in 0..n_local {
                    let (a, c) = (d / 2, d % 2);
                    p.u_n[d] = basis.values[a] * normal[c];
                    p.u_t[d] = basis.values[a] * tangent[c];
                    let traction = apply(&basis_stress(&material, &basis, d), normal);
                    p.sigma_n[d] = dot(traction, normal);
                    p.sigma_t[d] = dot(traction, tangent);
                }
                points.push(p);
            }
            facets.push(ContactFacet { facet: f, triangle, local_edge, length, gap, points });
        }
        Ok(ContactProblem { space, material, data, normal, tangent, facets })
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn material(&self) -> &Material {
        &self.material
    }

    pub fn data(&self) -> &ContactData {
        &self.data
    }

    pub fn alpha(&self) -> f64 {
        self.data.alpha
    }

    /// Outward unit normal of the contact boundary.
    pub fn normal(&self) -> [f64; 2] {
        self.normal
    }

    /// The normal rotated by +90 degrees.
    pub fn tangent(&self) -> [f64; 2] {
        self.tangent
    }

    pub fn contact_facets(&self) -> &[ContactFacet] {
        &self.facets
    }

    fn contact_facet(&self, facet: usize) -> &ContactFacet {
        self.facets
            .iter()
            .find(|c| c.facet == facet)
            .unwrap_or_else(|| panic!("facet {facet} is not a contact facet"))
    }

    /// Trace quantities at parameter `s` of a contact facet (mesh facet index).
    ///
    /// # Panics
    ///
    /// Panics if `facet` is not a contact facet.
    pub fn trace_values(&self, solution: &DiscreteSolution, facet: usize, s: f64) -> TraceValues {
        let c = self.contact_facet(facet);
        let reference = FeSpace::edge_reference_point(c.local_edge, s);
        let basis = self.space.eval_basis(c.triangle, reference);
        let u = solution.value(c.triangle, &basis);
        let sigma = crate::elasticity::stress(
            &self.material,
            &crate::elasticity::symmetrize(solution.gradient(c.triangle, &basis)),
        );
        let traction = apply(&sigma, self.normal);
        TraceValues {
            u_n: dot(u, self.normal),
            u_t: dot(u, self.tangent),
            sigma_n: dot(traction, self.normal),
            sigma_t: dot(traction, self.tangent),
        }
    }

    /// `(u_n - pi_h g) / (alpha h_E) - sigma_n(u)`.
    pub fn gamma_n(&self, solution: &DiscreteSolution, facet: usize, s: f64) -> f64 {
        let c = self.contact_facet(facet);
        let v = self.trace_values(solution, facet, s);
        (v.u_n - c.gap.eval(s)) / (self.data.alpha * c.length) - v.sigma_n
    }

    /// `u_t / (alpha h_E) - sigma_t(u)`.
    pub fn gamma_t(&self, solution: &DiscreteSolution, facet: usize, s: f64) -> f64 {
        let c = self.contact_facet(facet);
        let v = self.trace_values(solution, facet, s);
        v.u_t / (self.data.alpha * c.length) - v.sigma_t
    }

    /// `(gamma_n, gamma_t)` at every precomputed quadrature point.
    fn gammas(&self, solution: &DiscreteSolution) -> Vec<Vec<(f64, f64)>> {
        let n_local = 2 * self.space.local_len();
        self.facets
            .iter()
            .map(|c| {
                let local = solution.local(c.triangle);
                let ah = self.data.alpha * c.length;
                c.points
                    .iter()
                    .map(|p| {
                        let mut v = [0.0; 4];
                        for d in 0..n_local {
                            v[0] += p.u_n[d] * local[d];
                            v[1] += p.u_t[d] * local[d];
                            v[2] += p.sigma_n[d] * local[d];
                            v[3] += p.sigma_t[d] * local[d];
                        }
                        ((v[0] - p.gap) / ah - v[2], v[1] / ah - v[3])
                    })
                    .collect()
            })
            .collect()
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ActiveSetMode {
    /// Every contact quadrature point is classified on its own.
    #[default]
    PerQuadraturePoint,
    /// One decision per facet from the facet means of the gamma values.
    FacetMean,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointState {
    pub in_contact: bool,
    pub sticking: bool,
    /// `gamma_t` of the classified field.
    pub gamma_t: f64,
    /// Frozen slip direction `gamma_t / |gamma_t|` (0 if `gamma_t = 0`); unused at sticking
    /// points.
    pub slip_direction: f64,
}

/// Contact and stick status at every contact quadrature point, indexed like
/// `ContactProblem::contact_facets`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActiveSet {
    pub facets: Vec<Vec<PointState>>,
}

impl ActiveSet {
    pub fn points(&self) -> impl Iterator<Item = &PointState> {
        self.facets.iter().flatten()
    }

    pub fn contact_count(&self) -> usize {
        self.points().filter(|p| p.in_contact).count()
    }

    pub fn stick_count(&self) -> usize {
        self.points().filter(|p| p.sticking).count()
    }
}

fn direction(gamma_t: f64) -> f64 {
    if gamma_t > 0.0 {
        1.0
    } else if gamma_t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn classify(problem: &ContactProblem, solution: &DiscreteSolution, mode: ActiveSetMode) -> ActiveSet {
    let gammas = problem.gammas(solution);
    let facets = problem
        .facets
        .iter()
        .zip(&gammas)
        .map(|(c, g)| match mode {
            ActiveSetMode::PerQuadraturePoint => c
                .points
                .iter()
                .zip(g)
                .map(|(p, &(gn, gt))| PointState {
                    in_contact: gn > 0.0,
                    sticking: gt.abs() < p.kappa,
                    gamma_t: gt,
                    slip_direction: direction(gt),
                })
                .collect(),
            ActiveSetMode::FacetMean => {
                let total: f64 = c.points.iter().map(|p| p.weight).sum();
                let mean = |f: &dyn Fn(usize) -> f64| {
                    c.points.iter().enumerate().map(|(i, p)| p.weight * f(i)).sum::<f64>() / total
                };
                let gn = mean(&|i| g[i].0);
                let gt = mean(&|i| g[i].1);
                let kappa = mean(&|i| c.points[i].kappa);
                let state = PointState {
                    in_contact: gn > 0.0,
                    sticking: gt.abs() < kappa,
                    gamma_t: gt,
                    slip_direction: direction(gt),
                };
                vec![state; c.points.len()]
            }
        })
        .collect();
    ActiveSet { facets }
}

/// Nitsche boundary contributions for fixed active sets: a symmetric matrix increment over the
/// volume pattern and a right-hand side increment.
pub fn assemble_nitsche(
    problem: &ContactProblem,
    active: &ActiveSet,
    pattern: Arc<crate::sparse::SparsityPattern>,
) -> (SparseSymmetricMatrix, Vec<f64>) {
    let space = &problem.space;
    let n = 2 * space.local_len();
    let alpha = problem.data.alpha;
    let blocks: Vec<(Vec<f64>, Vec<f64>)> = problem
        .facets
        .par_iter()
        .zip(&active.facets)
        .map(|(c, states)| {
            let ah = alpha * c.length;
            let mut k = vec![0.0; n * n];
            let mut b = vec![0.0; n];
            for (p, st) in c.points.iter().zip(states) {
                let w = p.weight;
                for i in 0..n {
                    for j in 0..n {
                        let normal = if st.in_contact {
                            p.u_n[i] * p.u_n[j] / ah - p.sigma_n[j] * p.u_n[i] - p.u_n[j] * p.sigma_n[i]
                        } else {
                            -ah * p.sigma_n[i] * p.sigma_n[j]
                        };
                        let tangential = if st.sticking {
                            p.u_t[i] * p.u_t[j] / ah - p.sigma_t[j] * p.u_t[i] - p.u_t[j] * p.sigma_t[i]
                        } else {
                            -ah * p.sigma_t[i] * p.sigma_t[j]
                        };
                        k[i * n + j] += w * (normal + tangential);
                    }
                    if st.in_contact {
                        b[i] += w * p.gap * (p.u_n[i] / ah - p.sigma_n[i]);
                    }
                    if !st.sticking {
                        b[i] -= w * p.kappa * st.slip_direction * (p.u_t[i] - ah * p.sigma_t[i]);
                    }
                }
            }
            (k, b)
        })
        .collect();
    let mut matrix = SparseSymmetricMatrix::zeros(pattern);
    let mut rhs = vec![0.0; space.total_dofs()];
    for (c, (k, b)) in problem.facets.iter().zip(&blocks) {
        let dofs = space.element_dofs(c.triangle);
        matrix.add_block(&dofs, k);
        for (&d, v) in dofs.iter().zip(b) {
            rhs[d] += v;
        }
    }
    (matrix, rhs)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub mode: ActiveSetMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tolerance: 1e-8, max_iterations: 100, mode: ActiveSetMode::PerQuadraturePoint }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), ContactError> {
        if !(self.tolerance > 0.0) {
            return Err(ContactError::InvalidTolerance(self.tolerance));
        }
        if self.max_iterations == 0 {
            return Err(ContactError::InvalidMaxIterations);
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct FixedPointSolution {
    pub solution: DiscreteSolution,
    pub iterations: usize,
    /// Energy norm of `u - w` for every iteration.
    pub history: Vec<f64>,
    /// Active set used in the final linear solve.
    pub active_set: ActiveSet,
}

/// Volume operators shared by every contact iteration on one mesh.
struct Operators {
    pattern: Arc<crate::sparse::SparsityPattern>,
    stiffness: SparseSymmetricMatrix,
    load: Vec<f64>,
    solver: CholeskySolver,
    constrained: Vec<bool>,
}

impl Operators {
    fn new(problem: &ContactProblem) -> Result<Self, ContactError> {
        let space = &problem.space;
        let pattern = element_pattern(space);
        let stiffness = assemble_stiffness_with(space, &problem.material, pattern.clone());
        let f = problem.data.body_force.clone();
        let load = assemble_load(space, move |x| f(x));
        let solver = CholeskySolver::new(pattern.clone())
            .map_err(|source| ContactError::SingularSystem { iteration: 0, source })?;
        let constrained = (0..space.total_dofs()).map(|d| space.is_dirichlet(d)).collect();
        Ok(Operators { pattern, stiffness, load, solver, constrained })
    }

    /// Full system matrix and right-hand side for the given active sets, before elimination
    /// of the Dirichlet dofs.
    fn system(&self, problem: &ContactProblem, active: &ActiveSet) -> (SparseSymmetricMatrix, Vec<f64>) {
        let (dk, db) = assemble_nitsche(problem, active, self.pattern.clone());
        let mut a = self.stiffness.clone();
        a.add_assign(&dk);
        let rhs = self.load.iter().zip(&db).map(|(x, y)| x + y).collect();
        (a, rhs)
    }
}

/// Full system matrix (stiffness plus Nitsche terms) for given active sets, without boundary
/// conditions.
pub fn system_matrix(problem: &ContactProblem, active: &ActiveSet) -> SparseSymmetricMatrix {
    let pattern = element_pattern(&problem.space);
    let mut a = assemble_stiffness_with(&problem.space, &problem.material, pattern.clone());
    a.add_assign(&assemble_nitsche(problem, active, pattern).0);
    a
}

/// The contact iteration: starting from `w = 0`, solve the linear Nitsche problem with active
/// sets and slip directions taken from `w`, until the energy norm of the update drops below
/// the tolerance.
pub fn solve_fixed_point(problem: &ContactProblem, config: &SolverConfig) -> Result<FixedPointSolution, ContactError> {
    config.validate()?;
    let ops = Operators::new(problem)?;
    let space = problem.space.clone();
    let zeros = vec![0.0; space.total_dofs()];
    let mut w = DiscreteSolution::zero(space.clone());
    let mut history = Vec::new();
    for iteration in 1..=config.max_iterations {
        let active = classify(problem, &w, config.mode);
        let (mut a, mut rhs) = ops.system(problem, &active);
        a.apply_dirichlet(&mut rhs, &ops.constrained, &zeros);
        let u = ops
            .solver
            .solve(&a, &rhs)
            .map_err(|source| ContactError::SingularSystem { iteration, source })?;
        let diff: Vec<f64> = u.iter().zip(&w.coefficients).map(|(a, b)| a - b).collect();
        let increment = ops.stiffness.quadratic_form(&diff).max(0.0).sqrt();
        history.push(increment);
        let u = DiscreteSolution::new(space.clone(), u);
        if increment < config.tolerance {
            return Ok(FixedPointSolution { solution: u, iterations: iteration, history, active_set: active });
        }
        w = u;
    }
    Err(ContactError::NotConverged { history })
}

#[cfg(test)]
mod tests;
