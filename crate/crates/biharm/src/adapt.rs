//! Bulk marking and the solve - estimate - mark - refine loop.

use crate::estimator::{estimate, EstimatorError};
use crate::fespace::{build_space, FeSpace};
use crate::mesh::{refine, topology_check, unit_square_initial, MeshError, TriMesh};
use crate::problems::{
    example1, example2_source, exact_errors, manufactured_sine, Effectivity, ErrorMeasures,
    ExactSolution, ScalarFn,
};
use crate::scalar::Real;
use crate::solver::{solve_clamped, solve_navier, BcKind, MixedSolution, SolverError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdaptError {
    #[error("marking parameter theta must lie in (0, 1], got {0}")]
    BadTheta(f64),
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("max_iters must be at least 1")]
    NoIterations,
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error("iteration {iter}: {source}")]
    Solver { iter: usize, source: SolverError },
}

/// Which indicator drives marking and the stopping test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndicatorMode {
    /// Mark on the psi indicator; stop on its global value.
    PsiOnly,
    /// Mark on the elementwise sum of both squared indicators; stop on the
    /// combined global value.
    PsiPlusU,
}

impl std::fmt::Display for IndicatorMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IndicatorMode::PsiOnly => write!(f, "psi"),
            IndicatorMode::PsiPlusU => write!(f, "psi_u"),
        }
    }
}

/// Benchmark selection for a run.
pub enum Problem<T> {
    /// Clamped plate with the layered closed-form solution.
    Example1,
    /// Simply supported plate with the trigonometric source (no exact
    /// solution).
    Example2,
    /// Smooth manufactured sine solution with Navier conditions.
    ManufacturedSine,
    /// Custom source, boundary condition and optional reference solution.
    Custom { f: ScalarFn<T>, bc_kind: BcKind, exact: Option<ExactSolution<T>> },
}

impl<T: Real> Problem<T> {
    pub fn bc_kind(&self) -> BcKind {
        match self {
            Problem::Example1 => BcKind::Clamped,
            Problem::Example2 => BcKind::Navier,
            Problem::ManufacturedSine => BcKind::Navier,
            Problem::Custom { bc_kind, .. } => *bc_kind,
        }
    }

    /// Source term and optional exact solution at the given epsilon.
    pub fn realize(&self, eps: T) -> (ScalarFn<T>, Option<ExactSolution<T>>) {
        match self {
            Problem::Example1 => {
                let exact = example1(eps);
                let f = example1(eps).f;
                (f, Some(exact))
            }
            Problem::Example2 => (example2_source(), None),
            Problem::ManufacturedSine => {
                let exact = manufactured_sine(eps);
                let f = manufactured_sine(eps).f;
                (f, Some(exact))
            }
            Problem::Custom { .. } => unreachable!("realized by adaptive_solve directly"),
        }
    }
}

/// Full configuration of one adaptive run.
pub struct RunConfig<T> {
    pub problem: Problem<T>,
    pub epsilon: T,
    pub theta: T,
    pub indicator_mode: IndicatorMode,
    pub max_iters: usize,
    /// Optional stopping tolerance on the tracked global estimate.
    pub tol: Option<T>,
    pub solver_tol: T,
    pub degree: usize,
    /// Start mesh; the unit-square initial mesh when absent.
    pub initial_mesh: Option<TriMesh<T>>,
}

impl<T: Real> RunConfig<T> {
    pub fn new(problem: Problem<T>, epsilon: T, theta: T) -> Self {
        RunConfig {
            problem,
            epsilon,
            theta,
            indicator_mode: IndicatorMode::PsiOnly,
            max_iters: 16,
            tol: None,
            solver_tol: T::from_f64(1e-10).unwrap(),
            degree: 1,
            initial_mesh: None,
        }
    }
}

/// Everything recorded about one iteration of the loop.
#[derive(Debug, Clone)]
pub struct IterationRecord<T> {
    pub iter: usize,
    pub n_triangles: usize,
    pub n_dofs: usize,
    pub eta_psi: T,
    pub eta_u: T,
    pub eta_total: T,
    pub errors: Option<ErrorMeasures<T>>,
    pub effectivity: Option<Effectivity<T>>,
    /// Smallest edge length of the iteration's mesh.
    pub h_min: T,
}

/// Outcome of an adaptive run: the per-iteration log plus the final mesh
/// and solution.
pub struct AdaptiveRun<T> {
    pub records: Vec<IterationRecord<T>>,
    pub final_mesh: TriMesh<T>,
    pub final_solution: MixedSolution<T>,
    /// True when the tolerance stopped the loop before `max_iters`.
    pub reached_tol: bool,
}

impl<T: Real> AdaptiveRun<T> {
    /// Effectivity indices of every iteration that carries exact errors.
    pub fn effectivities(&self) -> Vec<(usize, Effectivity<T>)> {
        self.records
            .iter()
            .filter_map(|r| r.effectivity.map(|e| (r.iter, e)))
            .collect()
    }

    /// Least-squares slope of log(eta_total) against log(n_triangles) over
    /// the last `window` iterations.
    pub fn estimator_slope(&self, window: usize) -> Option<T> {
        let n = self.records.len();
        if n < window.max(2) {
            return None;
        }
        let pts: Vec<(T, T)> = self.records[n - window..]
            .iter()
            .map(|r| (T::from_usize(r.n_triangles).unwrap().ln(), r.eta_total.ln()))
            .collect();
        least_squares_slope(&pts)
    }
}

pub(crate) fn least_squares_slope<T: Real>(pts: &[(T, T)]) -> Option<T> {
    let n = T::from_usize(pts.len()).unwrap();
    if pts.len() < 2 {
        return None;
    }
    let sx: T = pts.iter().map(|p| p.0).sum();
    let sy: T = pts.iter().map(|p| p.1).sum();
    let sxx: T = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: T = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == T::zero() {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Minimal-cardinality bulk marking: greedily selects elements by
/// descending squared indicator (ties by lower index) until the selection
/// carries at least `theta` of the total squared indicator.
pub fn dorfler_mark<T: Real>(eta_sq: &[T], theta: T) -> Result<Vec<usize>, AdaptError> {
    let th = theta.to_f64().unwrap_or(f64::NAN);
    if !(th > 0.0 && th <= 1.0) {
        return Err(AdaptError::BadTheta(th));
    }
    let total: T = eta_sq.iter().copied().sum();
    if total <= T::zero() {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..eta_sq.len()).collect();
    order.sort_by(|&i, &j| {
        eta_sq[j].partial_cmp(&eta_sq[i]).expect("indicators are finite").then(i.cmp(&j))
    });
    let target = theta * total;
    let mut acc = T::zero();
    let mut marked = Vec::new();
    for i in order {
        if acc >= target {
            break;
        }
        if eta_sq[i] <= T::zero() {
            break;
        }
        acc += eta_sq[i];
        marked.push(i);
    }
    Ok(marked)
}

fn solve_for<T: Real>(
    space: &FeSpace<T>,
    bc: BcKind,
    f: &ScalarFn<T>,
    eps: T,
    tol: T,
) -> Result<MixedSolution<T>, SolverError> {
    match bc {
        BcKind::Navier => solve_navier(space, |x, y| f(x, y), eps, tol),
        BcKind::Clamped => solve_clamped(space, |x, y| f(x, y), eps, tol),
    }
}

/// Source and reference-solution views for one run, owning what the
/// non-custom problems construct on the fly.
struct Realized<'a, T> {
    owned_f: Option<ScalarFn<T>>,
    owned_exact: Option<ExactSolution<T>>,
    custom: Option<(&'a ScalarFn<T>, Option<&'a ExactSolution<T>>)>,
}

impl<'a, T: Real> Realized<'a, T> {
    fn new(problem: &'a Problem<T>, eps: T) -> Self {
        match problem {
            Problem::Custom { f, exact, .. } => {
                Realized { owned_f: None, owned_exact: None, custom: Some((f, exact.as_ref())) }
            }
            other => {
                let (f, exact) = other.realize(eps);
                Realized { owned_f: Some(f), owned_exact: exact, custom: None }
            }
        }
    }

    fn source(&self) -> &ScalarFn<T> {
        match &self.custom {
            Some((f, _)) => f,
            None => self.owned_f.as_ref().expect("owned source present"),
        }
    }

    fn exact(&self) -> Option<&ExactSolution<T>> {
        match &self.custom {
            Some((_, e)) => *e,
            None => self.owned_exact.as_ref(),
        }
    }
}

/// Runs the adaptive loop until the tracked estimate drops below `tol` or
/// `max_iters` iterations are done. Solver failures abort the run and carry
/// the completed records along in the error.
pub fn adaptive_solve<T: Real>(config: &RunConfig<T>) -> Result<AdaptiveRun<T>, AdaptError> {
    let eps = config.epsilon;
    if eps <= T::zero() {
        return Err(AdaptError::BadEpsilon(eps.to_f64().unwrap_or(f64::NAN)));
    }
    let th = config.theta.to_f64().unwrap_or(f64::NAN);
    if !(th > 0.0 && th <= 1.0) {
        return Err(AdaptError::BadTheta(th));
    }
    if config.max_iters == 0 {
        return Err(AdaptError::NoIterations);
    }

    let realized = Realized::new(&config.problem, eps);
    let f = realized.source();
    let exact = realized.exact();
    let bc = config.problem.bc_kind();

    let mut mesh = match &config.initial_mesh {
        Some(m) => m.clone(),
        None => unit_square_initial(),
    };
    let mut records = Vec::with_capacity(config.max_iters);
    let mut reached_tol = false;

    loop {
        let iter = records.len() + 1;
        let space = build_space(mesh.clone(), config.degree)
            .expect("degree validated by construction");
        let sol = solve_for(&space, bc, f, eps, config.solver_tol)
            .map_err(|source| AdaptError::Solver { iter, source })?;
        let ind = estimate(&space, &sol, |x, y| f(x, y))?;

        let errors = exact.map(|ex| exact_errors(&space, &sol, ex).expect("space matches solution"));
        let effectivity = errors
            .as_ref()
            .and_then(|e| crate::problems::effectivity(ind.eta_psi_global, ind.eta_u_global, e).ok());

        records.push(IterationRecord {
            iter,
            n_triangles: mesh.n_triangles(),
            n_dofs: space.n_dofs(),
            eta_psi: ind.eta_psi_global,
            eta_u: ind.eta_u_global,
            eta_total: ind.eta_total_global,
            errors,
            effectivity,
            h_min: mesh.min_edge_length(),
        });

        let tracked = match config.indicator_mode {
            IndicatorMode::PsiOnly => ind.eta_psi_global,
            IndicatorMode::PsiPlusU => ind.eta_total_global,
        };
        if let Some(tol) = config.tol {
            if tracked <= tol {
                reached_tol = true;
                return Ok(AdaptiveRun { records, final_mesh: mesh, final_solution: sol, reached_tol });
            }
        }
        if records.len() >= config.max_iters {
            return Ok(AdaptiveRun { records, final_mesh: mesh, final_solution: sol, reached_tol });
        }

        let eta_sq = ind.squared(config.indicator_mode == IndicatorMode::PsiPlusU);
        let marked = dorfler_mark(&eta_sq, config.theta)?;
        if marked.is_empty() {
            // nothing left to refine (all indicators zero)
            return Ok(AdaptiveRun { records, final_mesh: mesh, final_solution: sol, reached_tol });
        }
        let next = refine(&mesh, &marked)?;
        debug_assert!(topology_check(&next).conforming);
        mesh = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::lit;

    #[test]
    fn dorfler_greedy_is_forced() {
        let marked = dorfler_mark(&[9.0, 4.0, 1.0, 1.0, 1.0], 0.5).unwrap();
        assert_eq!(marked, vec![0]);
    }

    #[test]
    fn dorfler_theta_one_marks_all_positive() {
        let marked = dorfler_mark(&[1.0, 0.0, 2.0, 3.0], 1.0).unwrap();
        assert_eq!(marked.len(), 3);
        assert!(!marked.contains(&1));
    }

    #[test]
    fn dorfler_equal_shares() {
        let eta = vec![2.0; 10];
        let marked = dorfler_mark(&eta, 0.3).unwrap();
        assert_eq!(marked.len(), 3); // ceil(0.3 * 10)
        assert_eq!(marked, vec![0, 1, 2]); // ties broken by index
    }

    #[test]
    fn dorfler_zero_field_marks_nothing() {
        assert!(dorfler_mark(&[0.0, 0.0], 0.7).unwrap().is_empty());
    }

    #[test]
    fn dorfler_rejects_bad_theta() {
        assert!(dorfler_mark(&[1.0], 0.0).is_err());
        assert!(dorfler_mark(&[1.0], 1.5).is_err());
    }

    #[test]
    fn marking_satisfies_theta_inequality_and_minimality() {
        let eta = vec![0.3, 2.5, 0.01, 1.7, 0.9, 0.9, 4.2, 0.05];
        let theta = 0.6;
        let marked = dorfler_mark(&eta, theta).unwrap();
        let total: f64 = eta.iter().sum();
        let acc: f64 = marked.iter().map(|&i| eta[i]).sum();
        assert!(acc >= theta * total);
        // removing the smallest marked element must break the inequality
        let min_marked = marked.iter().copied().min_by(|&i, &j| eta[i].partial_cmp(&eta[j]).unwrap()).unwrap();
        assert!(acc - eta[min_marked] < theta * total);
    }

    #[test]
    fn run_config_validation() {
        let mut cfg = RunConfig::new(Problem::<f64>::ManufacturedSine, 1.0, 0.0);
        assert!(matches!(adaptive_solve(&cfg), Err(AdaptError::BadTheta(_))));
        cfg.theta = 0.5;
        cfg.epsilon = -1.0;
        assert!(matches!(adaptive_solve(&cfg), Err(AdaptError::BadEpsilon(_))));
        cfg.epsilon = lit(1.0);
        cfg.max_iters = 0;
        assert!(matches!(adaptive_solve(&cfg), Err(AdaptError::NoIterations)));
    }

    #[test]
    fn slope_helper_fits_exact_line() {
        let pts: Vec<(f64, f64)> = (1..6).map(|i| (i as f64, 3.0 - 0.5 * i as f64)).collect();
        let s = least_squares_slope(&pts).unwrap();
        assert!((s + 0.5).abs() < 1e-12);
    }
}
