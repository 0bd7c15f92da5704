//! P1 stiffness/mass assembly, load vectors and the coupled block system
//! for the clamped boundary condition.

use crate::csr::{CsrError, CsrMatrix};
use crate::fespace::FeSpace;
use crate::quadrature::{integrate_triangle, triangle_rule, QuadRule, DEFAULT_TRIANGLE_DEGREE};
use crate::scalar::{lit, Real};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error(transparent)]
    Csr(#[from] CsrError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// sum over elements of grad(phi_i) . grad(phi_j)
    Stiffness,
    /// sum over elements of phi_i phi_j
    Mass,
}

/// Assembles the stiffness or mass matrix over all DOFs of the space.
pub fn assemble_operator<T: Real>(space: &FeSpace<T>, kind: OperatorKind) -> CsrMatrix<T> {
    let n = space.n_dofs();
    let mut triplets = Vec::with_capacity(9 * space.mesh.n_triangles());
    let twelfth = lit::<T>(1.0 / 12.0);
    for t in 0..space.mesh.n_triangles() {
        let basis = space.eval_basis(t);
        let tri = space.mesh.triangles[t];
        for i in 0..3 {
            for j in 0..3 {
                let v = match kind {
                    OperatorKind::Stiffness => {
                        (basis.grad[i][0] * basis.grad[j][0] + basis.grad[i][1] * basis.grad[j][1])
                            * basis.area
                    }
                    OperatorKind::Mass => {
                        // exact P1 mass: |T|/6 on the diagonal, |T|/12 off it
                        let w = if i == j { twelfth + twelfth } else { twelfth };
                        w * basis.area
                    }
                };
                triplets.push((tri[i], tri[j], v));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, triplets)
}

/// Assembles the load vector b_i = integral of f * phi_i with the default
/// triangle rule.
pub fn assemble_load<T: Real, F>(space: &FeSpace<T>, f: F) -> Vec<T>
where
    F: Fn(T, T) -> T,
{
    let rule: QuadRule<T> = triangle_rule(DEFAULT_TRIANGLE_DEGREE).expect("default rule");
    let mut b = vec![T::zero(); space.n_dofs()];
    for t in 0..space.mesh.n_triangles() {
        let basis = space.eval_basis(t);
        let tri = space.mesh.triangles[t];
        for i in 0..3 {
            let v = integrate_triangle(&rule, basis.coords, |x, y| {
                f(x, y) * basis.barycentric(x, y)[i]
            });
            b[tri[i]] += v;
        }
    }
    b
}

/// Extracts the (reindexed) submatrix on the given row/column DOF subsets.
pub fn restrict<T: Real>(
    matrix: &CsrMatrix<T>,
    rows: &[usize],
    cols: &[usize],
) -> Result<CsrMatrix<T>, CsrError> {
    matrix.restrict(rows, cols)
}

/// Coupled system for the clamped problem, unknowns `[psi_all; u_int]`:
///
/// * block row 1 (one per interior DOF): `(eps^2 K + M)[int, :] psi = b[int]`
/// * block row 2 (one per DOF): `K[:, int] u - M psi = 0`
pub fn assemble_clamped_block<T: Real, F>(
    space: &FeSpace<T>,
    eps: T,
    f: F,
) -> Result<(CsrMatrix<T>, Vec<T>), AssemblyError>
where
    F: Fn(T, T) -> T,
{
    if eps <= T::zero() {
        return Err(AssemblyError::NonPositiveEpsilon(eps.to_f64().unwrap_or(f64::NAN)));
    }
    let n = space.n_dofs();
    let n_int = space.interior_dofs.len();
    let stiffness = assemble_operator(space, OperatorKind::Stiffness);
    let mass = assemble_operator(space, OperatorKind::Mass);
    let load = assemble_load(space, f);

    let mut col_of_u = vec![usize::MAX; n];
    for (j, &d) in space.interior_dofs.iter().enumerate() {
        col_of_u[d] = n + j;
    }

    let eps2 = eps * eps;
    let size = n_int + n;
    let mut triplets = Vec::with_capacity(stiffness.nnz() + 2 * mass.nnz());
    // block row 1: interior test functions against psi (all columns)
    for (row, &d) in space.interior_dofs.iter().enumerate() {
        for k in stiffness.row_ptr[d]..stiffness.row_ptr[d + 1] {
            triplets.push((row, stiffness.col_idx[k], eps2 * stiffness.values[k]));
        }
        for k in mass.row_ptr[d]..mass.row_ptr[d + 1] {
            triplets.push((row, mass.col_idx[k], mass.values[k]));
        }
    }
    // block row 2: all test functions; -M against psi, K against interior u
    for d in 0..n {
        let row = n_int + d;
        for k in mass.row_ptr[d]..mass.row_ptr[d + 1] {
            triplets.push((row, mass.col_idx[k], -mass.values[k]));
        }
        for k in stiffness.row_ptr[d]..stiffness.row_ptr[d + 1] {
            let uc = col_of_u[stiffness.col_idx[k]];
            if uc != usize::MAX {
                triplets.push((row, uc, stiffness.values[k]));
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(size, size, triplets);

    let mut rhs = vec![T::zero(); size];
    for (row, &d) in space.interior_dofs.iter().enumerate() {
        rhs[row] = load[d];
    }
    Ok((matrix, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::build_space;
    use crate::mesh::{unit_square_initial, TriMesh};

    fn unit_right_triangle_space() -> FeSpace<f64> {
        let mesh = TriMesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        build_space(mesh, 1).unwrap()
    }

    #[test]
    fn reference_stiffness_matrix() {
        let space = unit_right_triangle_space();
        let k = assemble_operator(&space, OperatorKind::Stiffness);
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k.get(i, j) - expect[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn reference_mass_matrix() {
        let space = unit_right_triangle_space();
        let m = assemble_operator(&space, OperatorKind::Mass);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 2.0 } else { 1.0 } / 24.0;
                assert!((m.get(i, j) - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn stiffness_rows_sum_to_zero() {
        let space = build_space(unit_square_initial::<f64>(), 1).unwrap();
        let k = assemble_operator(&space, OperatorKind::Stiffness);
        let ones = vec![1.0; space.n_dofs()];
        for v in k.matvec(&ones).unwrap() {
            assert!(v.abs() < 1e-13);
        }
    }

    #[test]
    fn constant_load_is_third_of_area() {
        let space = unit_right_triangle_space();
        let b = assemble_load(&space, |_, _| 1.0);
        for v in b {
            assert!((v - 0.5 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn load_entries_sum_to_integral() {
        let space = build_space(unit_square_initial::<f64>(), 1).unwrap();
        let b = assemble_load(&space, |x, y| 1.0 + x + y * y);
        let total: f64 = b.iter().sum();
        // integral over the unit square of 1 + x + y^2 = 1 + 1/2 + 1/3
        assert!((total - (1.0 + 0.5 + 1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn center_restriction_is_four() {
        let space = build_space(unit_square_initial::<f64>(), 1).unwrap();
        let k = assemble_operator(&space, OperatorKind::Stiffness);
        let kii = restrict(&k, &space.interior_dofs, &space.interior_dofs).unwrap();
        assert_eq!(kii.n_rows, 1);
        assert!((kii.get(0, 0) - 4.0).abs() < 1e-13);
    }

    #[test]
    fn clamped_block_dimensions_and_zero_rhs() {
        let space = build_space(unit_square_initial::<f64>(), 1).unwrap();
        let (a, b) = assemble_clamped_block(&space, 1e-2, |_, _| 0.0).unwrap();
        assert_eq!(a.n_rows, 10);
        assert_eq!(a.n_cols, 10);
        assert!(b.iter().all(|&v| v == 0.0));
        assert!(a.is_well_formed());
    }

    #[test]
    fn clamped_block_rejects_nonpositive_epsilon() {
        let space = build_space(unit_square_initial::<f64>(), 1).unwrap();
        assert!(assemble_clamped_block(&space, 0.0, |_, _| 0.0).is_err());
        assert!(assemble_clamped_block(&space, -1.0, |_, _| 0.0).is_err());
    }
}
