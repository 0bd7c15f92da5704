//! Continuous P1 Lagrange space on a triangle mesh.
//!
//! Degrees of freedom are the mesh vertices; the interior/boundary DOF
//! partition realizes the zero-trace subspace used for Dirichlet
//! elimination.

use crate::mesh::TriMesh;
use crate::scalar::{lit, Real};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpaceError {
    #[error("polynomial degree {0} not supported (only k = 1)")]
    UnsupportedDegree(usize),
}

/// P1 Lagrange space over a [`TriMesh`].
#[derive(Debug, Clone)]
pub struct FeSpace<T> {
    pub mesh: TriMesh<T>,
    pub degree: usize,
    /// DOF coordinates; identical to the vertex list for k = 1.
    pub dof_coords: Vec<[T; 2]>,
    /// DOFs strictly inside the domain, ascending.
    pub interior_dofs: Vec<usize>,
    /// DOFs on the boundary, ascending.
    pub boundary_dofs: Vec<usize>,
}

/// Values and constant gradients of the three hat functions on one triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementBasis<T> {
    /// Vertex coordinates of the element.
    pub coords: [[T; 2]; 3],
    /// Gradient of each barycentric coordinate.
    pub grad: [[T; 2]; 3],
    pub area: T,
}

impl<T: Real> ElementBasis<T> {
    /// Barycentric coordinates of a point (extrapolated outside the element).
    pub fn barycentric(&self, x: T, y: T) -> [T; 3] {
        let p = self.coords;
        let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
        let l1 = ((x - p[0][0]) * (p[2][1] - p[0][1]) - (y - p[0][1]) * (p[2][0] - p[0][0])) / det;
        let l2 = ((p[1][0] - p[0][0]) * (y - p[0][1]) - (p[1][1] - p[0][1]) * (x - p[0][0])) / det;
        [T::one() - l1 - l2, l1, l2]
    }

    /// Evaluates a P1 field with the given nodal values at `(x, y)`.
    pub fn eval(&self, nodal: [T; 3], x: T, y: T) -> T {
        let l = self.barycentric(x, y);
        nodal[0] * l[0] + nodal[1] * l[1] + nodal[2] * l[2]
    }

    /// Constant gradient of a P1 field with the given nodal values.
    pub fn gradient(&self, nodal: [T; 3]) -> [T; 2] {
        [
            nodal[0] * self.grad[0][0] + nodal[1] * self.grad[1][0] + nodal[2] * self.grad[2][0],
            nodal[0] * self.grad[0][1] + nodal[1] * self.grad[1][1] + nodal[2] * self.grad[2][1],
        ]
    }
}

/// Builds the P1 space; only `k = 1` is supported.
pub fn build_space<T: Real>(mesh: TriMesh<T>, k: usize) -> Result<FeSpace<T>, SpaceError> {
    if k != 1 {
        return Err(SpaceError::UnsupportedDegree(k));
    }
    let dof_coords = mesh.vertices.clone();
    let mut interior_dofs = Vec::new();
    let mut boundary_dofs = Vec::new();
    for (i, &b) in mesh.boundary_vertex.iter().enumerate() {
        if b {
            boundary_dofs.push(i);
        } else {
            interior_dofs.push(i);
        }
    }
    Ok(FeSpace { mesh, degree: k, dof_coords, interior_dofs, boundary_dofs })
}

impl<T: Real> FeSpace<T> {
    pub fn n_dofs(&self) -> usize {
        self.dof_coords.len()
    }

    /// Hat-function data on one element.
    pub fn eval_basis(&self, t: usize) -> ElementBasis<T> {
        let coords = self.mesh.triangle_coords(t);
        let det = (coords[1][0] - coords[0][0]) * (coords[2][1] - coords[0][1])
            - (coords[1][1] - coords[0][1]) * (coords[2][0] - coords[0][0]);
        let grad = [
            [(coords[1][1] - coords[2][1]) / det, (coords[2][0] - coords[1][0]) / det],
            [(coords[2][1] - coords[0][1]) / det, (coords[0][0] - coords[2][0]) / det],
            [(coords[0][1] - coords[1][1]) / det, (coords[1][0] - coords[0][0]) / det],
        ];
        ElementBasis { coords, grad, area: det * lit(0.5) }
    }

    /// Nodal interpolant of a scalar field.
    pub fn interpolate<F: Fn(T, T) -> T>(&self, f: F) -> Vec<T> {
        self.dof_coords.iter().map(|p| f(p[0], p[1])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{unit_square_initial, uniform_refine};

    #[test]
    fn initial_space_has_one_interior_dof() {
        let space = build_space(unit_square_initial::<f64>(), 1).unwrap();
        assert_eq!(space.n_dofs(), 9);
        assert_eq!(space.interior_dofs, vec![4]);
        assert_eq!(space.boundary_dofs.len(), 8);
    }

    #[test]
    fn uniformly_refined_space_is_five_by_five() {
        let mesh = uniform_refine(&unit_square_initial::<f64>()).unwrap();
        let space = build_space(mesh, 1).unwrap();
        assert_eq!(space.n_dofs(), 25);
        assert_eq!(space.interior_dofs.len(), 9);
    }

    #[test]
    fn degree_two_is_rejected() {
        let err = build_space(unit_square_initial::<f64>(), 2).unwrap_err();
        assert_eq!(err, SpaceError::UnsupportedDegree(2));
    }

    #[test]
    fn unit_right_triangle_gradients() {
        let mesh = crate::mesh::TriMesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let space = build_space(mesh, 1).unwrap();
        let b = space.eval_basis(0);
        assert_eq!(b.grad[0], [-1.0, -1.0]);
        assert_eq!(b.grad[1], [1.0, 0.0]);
        assert_eq!(b.grad[2], [0.0, 1.0]);
    }

    #[test]
    fn gradients_sum_to_zero_and_delta_property() {
        let mesh = crate::mesh::refine(&unit_square_initial::<f64>(), &[0, 4]).unwrap();
        let space = build_space(mesh, 1).unwrap();
        for t in 0..space.mesh.n_triangles() {
            let b = space.eval_basis(t);
            let sx: f64 = (0..3).map(|i| b.grad[i][0]).sum();
            let sy: f64 = (0..3).map(|i| b.grad[i][1]).sum();
            assert!(sx.abs() < 1e-12 && sy.abs() < 1e-12);
            for (i, p) in b.coords.iter().enumerate() {
                let l = b.barycentric(p[0], p[1]);
                for (j, &lj) in l.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((lj - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn affine_reproduction() {
        let g = |x: f64, y: f64| 3.0 + 2.0 * x - 5.0 * y;
        let mesh = uniform_refine(&unit_square_initial::<f64>()).unwrap();
        let space = build_space(mesh, 1).unwrap();
        let nodal = space.interpolate(g);
        for t in 0..space.mesh.n_triangles() {
            let b = space.eval_basis(t);
            let tri = space.mesh.triangles[t];
            let local = [nodal[tri[0]], nodal[tri[1]], nodal[tri[2]]];
            let (cx, cy) = (
                (b.coords[0][0] + b.coords[1][0] + b.coords[2][0]) / 3.0,
                (b.coords[0][1] + b.coords[1][1] + b.coords[2][1]) / 3.0,
            );
            assert!((b.eval(local, cx, cy) - g(cx, cy)).abs() < 1e-12);
            let gr = b.gradient(local);
            assert!((gr[0] - 2.0).abs() < 1e-12 && (gr[1] + 5.0).abs() < 1e-12);
        }
    }
}
