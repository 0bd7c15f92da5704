//! Refinement robustness: conformity, angle bounds and size monotonicity
//! under arbitrary marking sequences.

mod common;

use biharm::mesh::{refine, topology_check, uniform_refine, unit_square_initial, TriMesh};
use proptest::prelude::*;

fn area_sum(m: &TriMesh<f64>) -> f64 {
    (0..m.n_triangles()).map(|t| m.area(t)).sum()
}

#[test]
fn twenty_random_rounds_keep_quality() {
    // deterministic pseudo-random marking; the guarantee is for any sequence
    let mut state = 0x243f6a8885a308d3u64;
    let mut next = move |n: usize| {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state % n as u64) as usize
    };
    let mut mesh = unit_square_initial::<f64>();
    for round in 0..20 {
        let nt = mesh.n_triangles();
        let count = 1 + next(nt.min(12));
        let marked: Vec<usize> = (0..count).map(|_| next(nt)).collect();
        let refined = refine(&mesh, &marked).unwrap();
        let report = topology_check(&refined);
        assert!(report.conforming, "round {round}");
        assert!(report.min_angle_deg >= 22.5 - 1e-9, "round {round}: {}", report.min_angle_deg);
        assert!((area_sum(&refined) - 1.0).abs() < 1e-12);
        assert!(refined.n_triangles() > nt);
        assert!(refined.min_edge_length() <= mesh.min_edge_length() + 1e-15);
        mesh = refined;
    }
}

#[test]
fn generation_counter_tracks_depth() {
    let m0 = unit_square_initial::<f64>();
    assert!(m0.generation.iter().all(|&g| g == 0));
    let m2 = uniform_refine(&m0).unwrap();
    assert!(m2.generation.iter().all(|&g| g == 2));
}

#[test]
fn refine_rejects_nonconforming_input() {
    let vertices = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
    let triangles = vec![[0, 4, 3], [4, 2, 3], [0, 1, 2]];
    let mesh = TriMesh::from_parts(vertices, triangles).unwrap();
    assert!(refine(&mesh, &[0]).is_err());
}

#[test]
fn refine_rejects_out_of_range_marks() {
    let mesh = unit_square_initial::<f64>();
    assert!(refine(&mesh, &[8]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Any marking sequence keeps the mesh conforming with bounded angles,
    /// partitioned parent areas and monotone element counts.
    #[test]
    fn refinement_invariants_hold(seed in any::<u64>(), rounds in 1usize..6) {
        let mut state = seed | 1;
        let mut next = move |n: usize| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state % n as u64) as usize
        };
        let mut mesh = unit_square_initial::<f64>();
        for _ in 0..rounds {
            let nt = mesh.n_triangles();
            let marked: Vec<usize> = (0..1 + next(5)).map(|_| next(nt)).collect();
            let refined = refine(&mesh, &marked).unwrap();
            let report = topology_check(&refined);
            prop_assert!(report.conforming);
            prop_assert!(report.min_angle_deg >= 22.5 - 1e-9);
            prop_assert!((area_sum(&refined) - 1.0).abs() < 1e-12);
            prop_assert!(refined.n_triangles() > mesh.n_triangles());
            // vertex prefix preservation
            for (a, b) in mesh.vertices.iter().zip(&refined.vertices) {
                prop_assert_eq!(a, b);
            }
            mesh = refined;
        }
    }
}
