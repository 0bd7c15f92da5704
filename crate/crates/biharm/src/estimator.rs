//! Residual error indicators with layer-robust weights.
//!
//! Each element carries two indicators: one for the auxiliary field, with
//! the cut-off weights `alpha_T = min(h_T/eps, 1)` on the interior residual
//! and `alpha_E = eps^(-1/2) min(h_T/eps, 1)` on the scaled normal-derivative
//! jumps, and one for the displacement, with the classical `h_T`/`h_E`
//! weights. For piecewise-linear fields the elementwise Laplacians vanish,
//! so the interior residuals reduce to `f - psi_h` and `psi_h`.

use crate::fespace::FeSpace;
use crate::quadrature::{integrate_triangle, triangle_rule, QuadRule, DEFAULT_TRIANGLE_DEGREE};
use crate::scalar::{lit, Real};
use crate::solver::MixedSolution;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("weight arguments must be positive (h_T = {h}, eps = {eps})")]
    NonPositiveWeightArgs { h: f64, eps: f64 },
    #[error("solution has {len} coefficients but the space has {dofs} DOFs")]
    SpaceMismatch { dofs: usize, len: usize },
}

/// Per-element indicators and their global aggregates.
#[derive(Debug, Clone)]
pub struct IndicatorField<T> {
    pub eta_psi: Vec<T>,
    pub eta_u: Vec<T>,
    pub eta_psi_global: T,
    pub eta_u_global: T,
    pub eta_total_global: T,
}

impl<T: Real> IndicatorField<T> {
    /// Squared per-element values used for marking: the psi part alone or
    /// the sum of both parts.
    pub fn squared(&self, include_u: bool) -> Vec<T> {
        self.eta_psi
            .iter()
            .zip(&self.eta_u)
            .map(|(&p, &u)| if include_u { p * p + u * u } else { p * p })
            .collect()
    }
}

/// Interior-residual weight `min(h_T / eps, 1)`.
pub fn weight_alpha_t<T: Real>(h_t: T, eps: T) -> Result<T, EstimatorError> {
    if h_t <= T::zero() || eps <= T::zero() {
        return Err(EstimatorError::NonPositiveWeightArgs {
            h: h_t.to_f64().unwrap_or(f64::NAN),
            eps: eps.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok((h_t / eps).min(T::one()))
}

/// Edge-jump weight `eps^(-1/2) min(h_T / eps, 1)`, taken with the h_T of
/// the element whose indicator the edge term enters.
pub fn weight_alpha_e<T: Real>(h_t: T, eps: T) -> Result<T, EstimatorError> {
    Ok(weight_alpha_t(h_t, eps)? / eps.sqrt())
}

/// Computes both indicator families for a mixed solution.
pub fn estimate<T: Real, F>(
    space: &FeSpace<T>,
    sol: &MixedSolution<T>,
    f: F,
) -> Result<IndicatorField<T>, EstimatorError>
where
    F: Fn(T, T) -> T,
{
    let n = space.n_dofs();
    if sol.psi.len() != n || sol.u.len() != n {
        return Err(EstimatorError::SpaceMismatch { dofs: n, len: sol.psi.len() });
    }
    let eps = sol.epsilon;
    let eps2 = eps * eps;
    let nt = space.mesh.n_triangles();
    let rule: QuadRule<T> = triangle_rule(DEFAULT_TRIANGLE_DEGREE).expect("default rule");

    // constant per-element gradients of both fields
    let mut grad_psi = vec![[T::zero(); 2]; nt];
    let mut grad_u = vec![[T::zero(); 2]; nt];
    for t in 0..nt {
        let basis = space.eval_basis(t);
        let tri = space.mesh.triangles[t];
        grad_psi[t] = basis.gradient([sol.psi[tri[0]], sol.psi[tri[1]], sol.psi[tri[2]]]);
        grad_u[t] = basis.gradient([sol.u[tri[0]], sol.u[tri[1]], sol.u[tri[2]]]);
    }

    // squared jump norms per interior edge: ||[g . n]||_E^2 = jump^2 |E|,
    // orientation-independent
    let n_edges = space.mesh.edges.len();
    let mut jump_psi2 = vec![T::zero(); n_edges];
    let mut jump_u2 = vec![T::zero(); n_edges];
    for (e, edge) in space.mesh.edges.iter().enumerate() {
        if edge.tris.len() != 2 {
            continue;
        }
        let [a, b] = edge.vertices;
        let (pa, pb) = (space.mesh.vertices[a], space.mesh.vertices[b]);
        let ex = pb[0] - pa[0];
        let ey = pb[1] - pa[1];
        let len = (ex * ex + ey * ey).sqrt();
        let normal = [ey / len, -ex / len];
        let (t0, t1) = (edge.tris[0], edge.tris[1]);
        let jp = eps2
            * ((grad_psi[t0][0] - grad_psi[t1][0]) * normal[0]
                + (grad_psi[t0][1] - grad_psi[t1][1]) * normal[1]);
        let ju = (grad_u[t0][0] - grad_u[t1][0]) * normal[0]
            + (grad_u[t0][1] - grad_u[t1][1]) * normal[1];
        jump_psi2[e] = jp * jp * len;
        jump_u2[e] = ju * ju * len;
    }

    let half = lit::<T>(0.5);
    let mut eta_psi = vec![T::zero(); nt];
    let mut eta_u = vec![T::zero(); nt];
    let mut sum_psi2 = T::zero();
    let mut sum_u2 = T::zero();
    for t in 0..nt {
        let basis = space.eval_basis(t);
        let tri = space.mesh.triangles[t];
        let psi_local = [sol.psi[tri[0]], sol.psi[tri[1]], sol.psi[tri[2]]];
        let h_t = space.mesh.h_t(t);
        let alpha_t = weight_alpha_t(h_t, eps).expect("mesh sizes positive");
        let alpha_e = weight_alpha_e(h_t, eps).expect("mesh sizes positive");

        let vol_psi = integrate_triangle(&rule, basis.coords, |x, y| {
            let r = f(x, y) - basis.eval(psi_local, x, y);
            r * r
        });
        let vol_u = integrate_triangle(&rule, basis.coords, |x, y| {
            let p = basis.eval(psi_local, x, y);
            p * p
        });

        let mut e_psi2 = alpha_t * alpha_t * vol_psi;
        let mut e_u2 = h_t * h_t * vol_u;
        for &e in &space.mesh.tri_edges[t] {
            if space.mesh.edges[e].tris.len() != 2 {
                continue;
            }
            let h_e = space.mesh.edge_length(e);
            e_psi2 += half * alpha_e * alpha_e * jump_psi2[e];
            e_u2 += half * h_e * jump_u2[e];
        }
        eta_psi[t] = e_psi2.sqrt();
        eta_u[t] = e_u2.sqrt();
        sum_psi2 += e_psi2;
        sum_u2 += e_u2;
    }

    Ok(IndicatorField {
        eta_psi,
        eta_u,
        eta_psi_global: sum_psi2.sqrt(),
        eta_u_global: sum_u2.sqrt(),
        eta_total_global: (sum_psi2 + sum_u2).sqrt(),
    })
}
