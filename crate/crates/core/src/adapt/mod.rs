//! Dörfler marking and the adaptive solve, estimate, mark, refine loop.

use std::io::{self, Write};
use std::sync::Arc;

use thiserror::Error;

use crate::contact::{recover_multipliers, solve_fixed_point, ContactData, ContactError, ContactProblem, SolverConfig};
use crate::elasticity::{h1_norm, Material};
use crate::estimator::{total, EstimatorError, IndicatorSet};
use crate::mesh::Mesh;
use crate::space::{FeSpace, SpaceError};

/// Relative slack on the bulk threshold so that exact shares are not lost to roundoff.
const BULK_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptiveRecord {
    pub level: usize,
    pub n: usize,
    pub h1_norm: f64,
    pub eta: f64,
    pub s: f64,
    pub iterations: usize,
}

#[derive(Debug, Error)]
pub enum AdaptError {
    #[error("marking parameter theta must lie in (0, 1], got {0}")]
    InvalidTheta(f64),
    #[error("dof threshold {threshold} does not exceed the initial dof count {initial}")]
    InvalidThreshold { threshold: usize, initial: usize },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("level {level}: {source}")]
    Solver {
        level: usize,
        #[source]
        source: ContactError,
        history: Vec<AdaptiveRecord>,
    },
    #[error("level {level}: {source}")]
    Estimator {
        level: usize,
        #[source]
        source: EstimatorError,
        history: Vec<AdaptiveRecord>,
    },
}

impl AdaptError {
    /// Levels completed before the failure.
    pub fn history(&self) -> &[AdaptiveRecord] {
        match self {
            AdaptError::Solver { history, .. } | AdaptError::Estimator { history, .. } => history,
            _ => &[],
        }
    }
}

/// Smallest set of triangles, taken by descending squared indicator with ties broken by index,
/// whose indicators sum to at least `theta` times the total. Zero indicators are never marked.
///
/// # Panics
///
/// Panics if `theta` is outside `(0, 1]`.
pub fn mark(indicators: &[f64], theta: f64) -> Vec<usize> {
    assert!(theta > 0.0 && theta <= 1.0, "theta must lie in (0, 1]");
    let total: f64 = indicators.iter().sum();
    let mut order: Vec<usize> = (0..indicators.len()).filter(|&t| indicators[t] > 0.0).collect();
    order.sort_by(|&a, &b| indicators[b].total_cmp(&indicators[a]).then(a.cmp(&b)));
    let goal = theta * total * (1.0 - BULK_SLACK);
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for t in order {
        if acc >= goal {
            break;
        }
        acc += indicators[t];
        marked.push(t);
    }
    marked.sort_unstable();
    marked
}

/// Marks triangles of `mesh` from a full indicator set.
pub fn mark_indicators(indicators: &IndicatorSet, mesh: &Mesh, theta: f64) -> Vec<usize> {
    mark(&indicators.per_triangle(mesh), theta)
}

/// Everything needed to rebuild the discrete problem on a new mesh.
#[derive(Clone, Debug)]
pub struct ProblemTemplate {
    pub material: Material,
    pub data: ContactData,
    pub order: usize,
}

impl ProblemTemplate {
    pub fn build(&self, mesh: Arc<Mesh>) -> Result<ContactProblem, ContactError> {
        let space = Arc::new(FeSpace::new(mesh, self.order)?);
        ContactProblem::new(space, self.material, self.data.clone())
    }
}

/// Result of one level of the loop.
#[derive(Debug)]
pub struct Level {
    pub mesh: Arc<Mesh>,
    pub problem: ContactProblem,
    pub solution: crate::contact::FixedPointSolution,
    pub multipliers: crate::contact::MultiplierField,
    pub indicators: IndicatorSet,
}

/// Solves and estimates on one mesh.
pub fn solve_level(
    template: &ProblemTemplate,
    mesh: Arc<Mesh>,
    config: &SolverConfig,
) -> Result<Level, LevelError> {
    let problem = template.build(mesh.clone()).map_err(LevelError::Solver)?;
    let solution = solve_fixed_point(&problem, config).map_err(LevelError::Solver)?;
    let multipliers = recover_multipliers(&problem, &solution.solution);
    let indicators = total(&problem, &solution.solution, &multipliers).map_err(LevelError::Estimator)?;
    Ok(Level { mesh, problem, solution, multipliers, indicators })
}

#[derive(Debug, Error)]
pub enum LevelError {
    #[error(transparent)]
    Solver(ContactError),
    #[error(transparent)]
    Estimator(EstimatorError),
}

impl Level {
    pub fn record(&self, level: usize) -> AdaptiveRecord {
        AdaptiveRecord {
            level,
            n: self.problem.space().total_dofs(),
            h1_norm: h1_norm(&self.solution.solution),
            eta: self.indicators.eta(),
            s: self.indicators.s_total,
            iterations: self.solution.iterations,
        }
    }
}

/// Runs levels until the dof count reaches `n_threshold`. Returns the history and the last level.
pub fn adaptive_loop(
    template: &ProblemTemplate,
    initial: Arc<Mesh>,
    config: &SolverConfig,
    theta: f64,
    n_threshold: usize,
) -> Result<(Vec<AdaptiveRecord>, Level), AdaptError> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(AdaptError::InvalidTheta(theta));
    }
    let initial_n = FeSpace::new(initial.clone(), template.order)?.total_dofs();
    if n_threshold <= initial_n {
        return Err(AdaptError::InvalidThreshold { threshold: n_threshold, initial: initial_n });
    }
    let mut history = Vec::new();
    let mut mesh = initial;
    loop {
        let level = history.len();
        let current = match solve_level(template, mesh, config) {
            Ok(l) => l,
            Err(LevelError::Solver(source)) => return Err(AdaptError::Solver { level, source, history }),
            Err(LevelError::Estimator(source)) => return Err(AdaptError::Estimator { level, source, history }),
        };
        let record = current.record(level);
        history.push(record);
        if record.n >= n_threshold {
            return Ok((history, current));
        }
        let marked = mark_indicators(&current.indicators, &current.mesh, theta);
        if marked.is_empty() {
            return Ok((history, current));
        }
        mesh = Arc::new(current.mesh.refine(&marked));
    }
}

/// CSV `level,N,norm,eta,S,iterations`.
pub fn write_history_csv(history: &[AdaptiveRecord], mut out: impl Write) -> io::Result<()> {
    let mut s = String::from("level,N,norm,eta,S,iterations\n");
    for r in history {
        s.push_str(&format!("{},{},{},{},{},{}\n", r.level, r.n, r.h1_norm, r.eta, r.s, r.iterations));
    }
    out.write_all(s.as_bytes())
}

/// Least-squares slope of `log eta` against `log N`.
pub fn fitted_slope(points: &[(usize, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
