//! Discrete mixed solvers for the two boundary conditions.
//!
//! The auxiliary field `psi = -laplace(u)` turns the fourth-order equation
//! `eps^2 laplace^2 u - laplace u = f` into two second-order equations. With
//! simply-supported (Navier) conditions both fields vanish on the boundary
//! and the discrete systems decouple into two SPD solves. With clamped
//! conditions `psi` carries no boundary condition and is determined jointly
//! with `u` through one non-symmetric block system; the zero normal
//! derivative of `u` holds weakly.

use crate::assembly::{assemble_clamped_block, assemble_load, assemble_operator, AssemblyError, OperatorKind};
use crate::fespace::FeSpace;
use crate::krylov::{solve_general, solve_spd, SolveError, SolveReport};
use crate::scalar::Real;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    /// u = laplace(u) = 0 on the boundary.
    Navier,
    /// u = du/dn = 0 on the boundary.
    Clamped,
}

impl std::fmt::Display for BcKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BcKind::Navier => write!(f, "navier"),
            BcKind::Clamped => write!(f, "clamped"),
        }
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Linear(#[from] SolveError),
}

/// Nodal coefficient vectors of the mixed solution.
///
/// Both fields are stored over all DOFs; boundary entries of `u` are zero in
/// both modes, boundary entries of `psi` are zero for Navier and carry the
/// recovered trace for clamped.
#[derive(Debug, Clone)]
pub struct MixedSolution<T> {
    pub psi: Vec<T>,
    pub u: Vec<T>,
    pub epsilon: T,
    pub bc_kind: BcKind,
    /// Reports of the underlying linear solves, in solve order.
    pub reports: Vec<SolveReport<T>>,
}

fn check_eps<T: Real>(eps: T) -> Result<(), SolverError> {
    if eps <= T::zero() {
        return Err(SolverError::NonPositiveEpsilon(eps.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

fn require_converged<T: Real>(report: &SolveReport<T>) -> Result<(), SolverError> {
    if !report.converged {
        return Err(SolverError::NotConverged {
            iterations: report.iterations,
            residual: report.relative_residual.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

/// Solves the Navier problem: interior-restricted
/// `(eps^2 K + M) psi = b`, then `K u = M psi`, both by preconditioned CG.
pub fn solve_navier<T: Real, F>(
    space: &FeSpace<T>,
    f: F,
    eps: T,
    tol: T,
) -> Result<MixedSolution<T>, SolverError>
where
    F: Fn(T, T) -> T,
{
    check_eps(eps)?;
    let interior = &space.interior_dofs;
    let stiffness = assemble_operator(space, OperatorKind::Stiffness);
    let mass = assemble_operator(space, OperatorKind::Mass);
    let load = assemble_load(space, f);

    let kii = stiffness.restrict(interior, interior).expect("interior dofs valid");
    let mii = mass.restrict(interior, interior).expect("interior dofs valid");
    let eps2 = eps * eps;
    let mut ai = kii.clone();
    for v in ai.values.iter_mut() {
        *v *= eps2;
    }
    // same sparsity pattern: K and M assemble from identical element stencils
    debug_assert_eq!(ai.col_idx, mii.col_idx);
    for (v, &mv) in ai.values.iter_mut().zip(&mii.values) {
        *v += mv;
    }

    let bi: Vec<T> = interior.iter().map(|&d| load[d]).collect();
    let (psi_int, rep1) = solve_spd(&ai, &bi, tol)?;
    require_converged(&rep1)?;

    let rhs_u = mii.matvec(&psi_int).expect("dimensions match");
    let (u_int, rep2) = solve_spd(&kii, &rhs_u, tol)?;
    require_converged(&rep2)?;

    let n = space.n_dofs();
    let mut psi = vec![T::zero(); n];
    let mut u = vec![T::zero(); n];
    for (j, &d) in interior.iter().enumerate() {
        psi[d] = psi_int[j];
        u[d] = u_int[j];
    }
    Ok(MixedSolution { psi, u, epsilon: eps, bc_kind: BcKind::Navier, reports: vec![rep1, rep2] })
}

/// Solves the clamped problem through the monolithic block system.
///
/// The assembled block layout stacks the interior-tested equation above the
/// all-DOF-tested one; before handing the matrix to GMRES the rows are
/// permuted so every unknown finds a structurally nonzero diagonal entry
/// (interior psi rows take the first equation, boundary psi rows the second
/// equation tested at that node, interior u rows the second equation at
/// their node), which ILU(0) requires.
pub fn solve_clamped<T: Real, F>(
    space: &FeSpace<T>,
    f: F,
    eps: T,
    tol: T,
) -> Result<MixedSolution<T>, SolverError>
where
    F: Fn(T, T) -> T,
{
    check_eps(eps)?;
    let (block, rhs) = assemble_clamped_block(space, eps, f)?;
    let n = space.n_dofs();
    let n_int = space.interior_dofs.len();

    let mut perm = vec![usize::MAX; n + n_int];
    for (j, &d) in space.interior_dofs.iter().enumerate() {
        perm[d] = j; // equation 1 tested at interior node d
        perm[n + j] = n_int + d; // equation 2 tested at interior node d
    }
    for &d in &space.boundary_dofs {
        perm[d] = n_int + d; // equation 2 tested at boundary node d
    }
    let a = block.permute_rows(&perm);
    let b: Vec<T> = perm.iter().map(|&src| rhs[src]).collect();

    let (x, report) = solve_general(&a, &b, tol)?;
    require_converged(&report)?;

    let mut psi = vec![T::zero(); n];
    psi.copy_from_slice(&x[..n]);
    let mut u = vec![T::zero(); n];
    for (j, &d) in space.interior_dofs.iter().enumerate() {
        u[d] = x[n + j];
    }
    Ok(MixedSolution { psi, u, epsilon: eps, bc_kind: BcKind::Clamped, reports: vec![report] })
}
