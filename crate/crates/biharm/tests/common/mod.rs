//! Shared oracles for the integration tests: brute-force dense assembly,
//! dense Gaussian elimination and exact monomial integrals. Everything here
//! is deliberately independent of the crate's assembly and solver paths.

#![allow(dead_code)]

use biharm::fespace::FeSpace;
use biharm::mesh::TriMesh;

/// Exact integral of x^a y^b over the reference triangle:
/// a! b! / (a + b + 2)!.
pub fn monomial_integral_triangle(a: u32, b: u32) -> f64 {
    fn fact(n: u32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }
    fact(a) * fact(b) / fact(a + b + 2)
}

/// Dense matrix as nested vectors.
pub type Dense = Vec<Vec<f64>>;

pub fn dense_from_csr(m: &biharm::csr::CsrMatrix<f64>) -> Dense {
    let mut out = vec![vec![0.0; m.n_cols]; m.n_rows];
    for r in 0..m.n_rows {
        for k in m.row_ptr[r]..m.row_ptr[r + 1] {
            out[r][m.col_idx[k]] = m.values[k];
        }
    }
    out
}

/// Brute-force dense P1 stiffness assembly from raw coordinates, using the
/// cotangent-free edge-vector formula rather than the crate's basis data.
pub fn dense_stiffness(mesh: &TriMesh<f64>) -> Dense {
    let n = mesh.n_vertices();
    let mut a = vec![vec![0.0; n]; n];
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangles[t];
        let p: Vec<[f64; 2]> = tri.iter().map(|&v| mesh.vertices[v]).collect();
        let area = 0.5
            * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]));
        // opposite edge vectors rotated by 90 degrees give the gradients
        let e = [
            [p[2][0] - p[1][0], p[2][1] - p[1][1]],
            [p[0][0] - p[2][0], p[0][1] - p[2][1]],
            [p[1][0] - p[0][0], p[1][1] - p[0][1]],
        ];
        for i in 0..3 {
            for j in 0..3 {
                let v = (e[i][0] * e[j][0] + e[i][1] * e[j][1]) / (4.0 * area);
                a[tri[i]][tri[j]] += v;
            }
        }
    }
    a
}

/// Brute-force dense P1 mass assembly.
pub fn dense_mass(mesh: &TriMesh<f64>) -> Dense {
    let n = mesh.n_vertices();
    let mut a = vec![vec![0.0; n]; n];
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangles[t];
        let area = mesh.area(t);
        for i in 0..3 {
            for j in 0..3 {
                a[tri[i]][tri[j]] += area * if i == j { 1.0 / 6.0 } else { 1.0 / 12.0 };
            }
        }
    }
    a
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Dense, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let d = a[col][col];
        assert!(d.abs() > 1e-300, "singular matrix in dense oracle");
        for row in col + 1..n {
            let f = a[row][col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}

pub fn matvec_dense(a: &Dense, x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum()).collect()
}

/// Interior DOF list straight from the boundary flags.
pub fn interior_dofs(space: &FeSpace<f64>) -> Vec<usize> {
    space.interior_dofs.clone()
}

/// Relative l2 distance between two vectors.
pub fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let mut diff = 0.0;
    let mut scale = 0.0;
    for (x, y) in a.iter().zip(b) {
        diff += (x - y) * (x - y);
        scale += y * y;
    }
    (diff / scale.max(1e-300)).sqrt()
}
