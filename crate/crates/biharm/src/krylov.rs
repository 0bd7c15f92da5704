//! Iterative solvers: Jacobi-preconditioned conjugate gradients for SPD
//! systems and ILU(0)-preconditioned restarted GMRES for the coupled
//! block system.

use crate::csr::CsrMatrix;
use crate::scalar::{lit, Real};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("dimension mismatch: matrix is {n}x{n}, rhs has {len}")]
    DimensionMismatch { n: usize, len: usize },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("solver tolerance must lie in (0, 1), got {0}")]
    BadTolerance(f64),
}

/// Outcome of an iterative solve. `converged` implies the recomputed
/// relative residual is at or below the requested tolerance.
#[derive(Debug, Clone, Copy)]
pub struct SolveReport<T> {
    pub iterations: usize,
    pub relative_residual: T,
    pub converged: bool,
}

pub const GMRES_RESTART: usize = 50;

fn check_inputs<T: Real>(a: &CsrMatrix<T>, b: &[T], tol: T) -> Result<(), SolveError> {
    if a.n_rows != a.n_cols {
        return Err(SolveError::NotSquare { rows: a.n_rows, cols: a.n_cols });
    }
    if b.len() != a.n_rows {
        return Err(SolveError::DimensionMismatch { n: a.n_rows, len: b.len() });
    }
    let t = tol.to_f64().unwrap_or(f64::NAN);
    if !(t > 0.0 && t < 1.0) {
        return Err(SolveError::BadTolerance(t));
    }
    Ok(())
}

fn dot<T: Real>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).map(|(&a, &b)| a * b).sum()
}

fn norm<T: Real>(x: &[T]) -> T {
    dot(x, x).sqrt()
}

fn true_relative_residual<T: Real>(a: &CsrMatrix<T>, b: &[T], x: &[T], bnorm: T) -> T {
    let ax = a.matvec(x).expect("dimensions checked");
    let mut r2 = T::zero();
    for i in 0..b.len() {
        r2 += (b[i] - ax[i]) * (b[i] - ax[i]);
    }
    r2.sqrt() / bnorm
}

/// Conjugate gradients with Jacobi preconditioning; `a` must be symmetric
/// positive definite. Stops when the recomputed residual satisfies
/// `||b - Ax|| <= tol * ||b||`, or after `10 n` iterations.
pub fn solve_spd<T: Real>(
    a: &CsrMatrix<T>,
    b: &[T],
    tol: T,
) -> Result<(Vec<T>, SolveReport<T>), SolveError> {
    check_inputs(a, b, tol)?;
    let n = a.n_rows;
    let bnorm = norm(b);
    if bnorm == T::zero() {
        return Ok((vec![T::zero(); n], SolveReport {
            iterations: 0,
            relative_residual: T::zero(),
            converged: true,
        }));
    }
    let inv_diag: Vec<T> = a
        .diagonal()
        .into_iter()
        .map(|d| if d != T::zero() { T::one() / d } else { T::one() })
        .collect();

    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    let mut z: Vec<T> = r.iter().zip(&inv_diag).map(|(&ri, &di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let max_iters = 10 * n.max(1);
    let mut iters = 0usize;

    while iters < max_iters {
        iters += 1;
        let ap = a.matvec(&p).expect("dimensions checked");
        let pap = dot(&p, &ap);
        if pap <= T::zero() {
            break; // not SPD (or breakdown); report whatever we have
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) / bnorm <= tol {
            let true_res = true_relative_residual(a, b, &x, bnorm);
            if true_res <= tol {
                return Ok((x, SolveReport {
                    iterations: iters,
                    relative_residual: true_res,
                    converged: true,
                }));
            }
            // recurrence drifted; refresh the residual and continue
            let ax = a.matvec(&x).expect("dimensions checked");
            for i in 0..n {
                r[i] = b[i] - ax[i];
            }
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let true_res = true_relative_residual(a, b, &x, bnorm);
    Ok((x, SolveReport { iterations: iters, relative_residual: true_res, converged: true_res <= tol }))
}

/// ILU(0) factors stored on the sparsity pattern of the input matrix.
struct Ilu0<T> {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    lu: Vec<T>,
    diag: Vec<usize>,
}

impl<T: Real> Ilu0<T> {
    /// Returns `None` on a missing or numerically zero pivot.
    fn factor(a: &CsrMatrix<T>) -> Option<Self> {
        let n = a.n_rows;
        let mut lu = a.values.clone();
        let mut diag = vec![usize::MAX; n];
        for r in 0..n {
            for k in a.row_ptr[r]..a.row_ptr[r + 1] {
                if a.col_idx[k] == r {
                    diag[r] = k;
                }
            }
            if diag[r] == usize::MAX {
                return None;
            }
        }
        let tiny = lit::<T>(1e-300);
        for i in 0..n {
            for kk in a.row_ptr[i]..a.row_ptr[i + 1] {
                let k = a.col_idx[kk];
                if k >= i {
                    break;
                }
                let pivot = lu[diag[k]];
                if pivot.abs() <= tiny {
                    return None;
                }
                let factor = lu[kk] / pivot;
                lu[kk] = factor;
                // subtract factor * U(k, j) from row i where the pattern allows
                let mut jj = kk + 1;
                for uk in diag[k] + 1..a.row_ptr[k + 1] {
                    let col = a.col_idx[uk];
                    while jj < a.row_ptr[i + 1] && a.col_idx[jj] < col {
                        jj += 1;
                    }
                    if jj < a.row_ptr[i + 1] && a.col_idx[jj] == col {
                        let update = factor * lu[uk];
                        lu[jj] -= update;
                    }
                }
            }
            if lu[diag[i]].abs() <= tiny {
                return None;
            }
        }
        Some(Ilu0 { row_ptr: a.row_ptr.clone(), col_idx: a.col_idx.clone(), lu, diag })
    }

    /// y = (LU)^{-1} x
    fn apply(&self, x: &[T], y: &mut [T]) {
        let n = self.diag.len();
        y.copy_from_slice(x);
        for i in 0..n {
            let mut acc = y[i];
            for k in self.row_ptr[i]..self.diag[i] {
                acc -= self.lu[k] * y[self.col_idx[k]];
            }
            y[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for k in self.diag[i] + 1..self.row_ptr[i + 1] {
                acc -= self.lu[k] * y[self.col_idx[k]];
            }
            y[i] = acc / self.lu[self.diag[i]];
        }
    }
}

/// Restarted GMRES(50) with right ILU(0) preconditioning for general square
/// nonsingular systems. Falls back to unpreconditioned GMRES when the
/// factorization hits a zero pivot.
pub fn solve_general<T: Real>(
    a: &CsrMatrix<T>,
    b: &[T],
    tol: T,
) -> Result<(Vec<T>, SolveReport<T>), SolveError> {
    check_inputs(a, b, tol)?;
    let n = a.n_rows;
    let bnorm = norm(b);
    if bnorm == T::zero() {
        return Ok((vec![T::zero(); n], SolveReport {
            iterations: 0,
            relative_residual: T::zero(),
            converged: true,
        }));
    }
    let precond = Ilu0::factor(a);
    let mut x = vec![T::zero(); n];
    let max_iters = 10 * n.max(1);
    let mut total_iters = 0usize;
    let mut scratch = vec![T::zero(); n];

    'outer: while total_iters < max_iters {
        // Arnoldi basis of the preconditioned operator A M^{-1}
        let ax = a.matvec(&x).expect("dimensions checked");
        let mut r: Vec<T> = (0..n).map(|i| b[i] - ax[i]).collect();
        let beta = norm(&r);
        if beta / bnorm <= tol {
            break;
        }
        let m = GMRES_RESTART.min(max_iters - total_iters);
        let mut basis: Vec<Vec<T>> = Vec::with_capacity(m + 1);
        for v in r.iter_mut() {
            *v = *v / beta;
        }
        basis.push(r);
        let mut h = vec![vec![T::zero(); m]; m + 1];
        let mut cs = vec![T::zero(); m];
        let mut sn = vec![T::zero(); m];
        let mut g = vec![T::zero(); m + 1];
        g[0] = beta;
        let mut k_used = 0usize;

        for k in 0..m {
            total_iters += 1;
            k_used = k + 1;
            // w = A M^{-1} v_k
            let w = match &precond {
                Some(p) => {
                    p.apply(&basis[k], &mut scratch);
                    a.matvec(&scratch).expect("dimensions checked")
                }
                None => a.matvec(&basis[k]).expect("dimensions checked"),
            };
            let mut w = w;
            for (j, vj) in basis.iter().enumerate().take(k + 1) {
                let hjk = dot(&w, vj);
                h[j][k] = hjk;
                for i in 0..n {
                    w[i] -= hjk * vj[i];
                }
            }
            let hk1 = norm(&w);
            h[k + 1][k] = hk1;
            // apply the accumulated Givens rotations to the new column
            for j in 0..k {
                let t1 = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                let t2 = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t1;
                h[j + 1][k] = t2;
            }
            let denom = (h[k][k] * h[k][k] + hk1 * hk1).sqrt();
            if denom == T::zero() {
                break; // exact breakdown: solution lies in the current space
            }
            cs[k] = h[k][k] / denom;
            sn[k] = hk1 / denom;
            h[k][k] = denom;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];

            let approx_res = g[k + 1].abs() / bnorm;
            if approx_res <= tol || hk1 == T::zero() {
                break;
            }
            for i in 0..n {
                w[i] = w[i] / hk1;
            }
            basis.push(w);
        }

        // back-substitute y from the triangularized Hessenberg system
        let mut y = vec![T::zero(); k_used];
        for j in (0..k_used).rev() {
            let mut acc = g[j];
            for l in j + 1..k_used {
                acc -= h[j][l] * y[l];
            }
            y[j] = acc / h[j][j];
        }
        let mut update = vec![T::zero(); n];
        for (j, yj) in y.iter().enumerate() {
            for i in 0..n {
                update[i] += *yj * basis[j][i];
            }
        }
        match &precond {
            Some(p) => {
                p.apply(&update, &mut scratch);
                for i in 0..n {
                    x[i] += scratch[i];
                }
            }
            None => {
                for i in 0..n {
                    x[i] += update[i];
                }
            }
        }
        if true_relative_residual(a, b, &x, bnorm) <= tol {
            break 'outer;
        }
    }
    let true_res = true_relative_residual(a, b, &x, bnorm);
    Ok((x, SolveReport {
        iterations: total_iters,
        relative_residual: true_res,
        converged: true_res <= tol,
    }))
}
