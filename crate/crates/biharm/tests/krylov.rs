//! Iterative solvers against the dense elimination oracle.

mod common;

use biharm::assembly::assemble_clamped_block;
use biharm::csr::CsrMatrix;
use biharm::fespace::build_space;
use biharm::krylov::{solve_general, solve_spd};
use biharm::mesh::unit_square_initial;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> (CsrMatrix<f64>, Dense) {
    // A = B^T B + I is symmetric positive definite
    let b: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let mut dense = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for (k, row) in b.iter().enumerate() {
                acc += row[i] * b[k][j];
            }
            dense[i][j] = acc + if i == j { 1.0 } else { 0.0 };
        }
    }
    let mut triplets = Vec::new();
    for (i, row) in dense.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            triplets.push((i, j, v));
        }
    }
    (CsrMatrix::from_triplets(n, n, triplets), dense)
}

#[test]
fn cg_matches_dense_oracle_on_random_spd() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (a, dense) = random_spd(50, &mut rng);
    let b: Vec<f64> = (0..50).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let (x, report) = solve_spd(&a, &b, 1e-12).unwrap();
    assert!(report.converged);
    assert!(report.relative_residual <= 1e-12);
    let oracle = dense_solve(dense, b);
    assert!(rel_l2(&x, &oracle) < 1e-9);
}

#[test]
fn reported_residual_is_recomputed_from_scratch() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (a, _) = random_spd(40, &mut rng);
    let b: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (x, report) = solve_spd(&a, &b, 1e-11).unwrap();
    let ax = a.matvec(&x).unwrap();
    let num: f64 = b.iter().zip(&ax).map(|(bi, ai)| (bi - ai) * (bi - ai)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!((report.relative_residual - num / den).abs() < 1e-10);
}

#[test]
fn gmres_solves_clamped_block_to_dense_accuracy() {
    let space = build_space(unit_square_initial::<f64>(), 1).unwrap();
    let (block, rhs) = assemble_clamped_block(&space, 1.0, |_, _| 1.0).unwrap();
    assert_eq!(block.n_rows, 10);
    let (x, report) = solve_general(&block, &rhs, 1e-12).unwrap();
    assert!(report.converged);
    assert!(report.relative_residual <= 1e-10);
    let oracle = dense_solve(dense_from_csr(&block), rhs.clone());
    assert!(rel_l2(&x, &oracle) < 1e-8);
}

#[test]
fn gmres_handles_eps_far_below_mesh_size() {
    let space = build_space(unit_square_initial::<f64>(), 1).unwrap();
    let (block, rhs) = assemble_clamped_block(&space, 1e-2, |_, _| 1.0).unwrap();
    let (x, report) = solve_general(&block, &rhs, 1e-10).unwrap();
    assert!(report.converged, "residual {}", report.relative_residual);
    let oracle = dense_solve(dense_from_csr(&block), rhs.clone());
    assert!(rel_l2(&x, &oracle) < 1e-8);
}

#[test]
fn solutions_invariant_under_symmetric_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (a, dense) = random_spd(20, &mut rng);
    let b: Vec<f64> = (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (x, _) = solve_spd(&a, &b, 1e-12).unwrap();

    // permute rows and columns with the same permutation
    let n = 20usize;
    let perm: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
    let mut pd = vec![vec![0.0; n]; n];
    let mut pb = vec![0.0; n];
    for i in 0..n {
        pb[i] = b[perm[i]];
        for j in 0..n {
            pd[i][j] = dense[perm[i]][perm[j]];
        }
    }
    let mut triplets = Vec::new();
    for (i, row) in pd.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            triplets.push((i, j, v));
        }
    }
    let pa = CsrMatrix::from_triplets(n, n, triplets);
    let (px, _) = solve_spd(&pa, &pb, 1e-12).unwrap();
    for i in 0..n {
        assert!((px[i] - x[perm[i]]).abs() < 1e-9);
    }
}

#[test]
fn gmres_reports_nonconvergence_instead_of_wrong_answers() {
    // singular matrix: GMRES must flag failure, not fabricate a solution
    let a = CsrMatrix::<f64>::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
    let (_, report) = solve_general(&a, &[1.0, 0.0], 1e-10).unwrap();
    assert!(!report.converged);
}
