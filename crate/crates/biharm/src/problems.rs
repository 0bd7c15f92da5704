//! Benchmark problems, exact solutions, error norms and effectivity.
//!
//! The first benchmark (clamped plate) has the closed-form solution
//! `u = 256 (x^2 + eps^2 (1 - exp(-x/eps))^2) (x-1)^2 y^2 (y-1)^2`, whose
//! auxiliary field `psi = -laplace(u)` develops a boundary layer of width
//! `eps` along `x = 0`. Its derivative fields and source term are
//! hard-coded from an offline symbolic derivation and guarded by a
//! finite-difference consistency check. The second benchmark (simply
//! supported) has the smooth source `2 pi^2 (1 - cos 2 pi x cos 2 pi y)`
//! and no known exact solution.

use crate::fespace::FeSpace;
use crate::quadrature::{integrate_triangle_composite, triangle_rule, QuadRule, DEFAULT_TRIANGLE_DEGREE};
use crate::scalar::{lit, Real};
use crate::solver::{BcKind, MixedSolution};
use thiserror::Error;

pub type ScalarFn<T> = Box<dyn Fn(T, T) -> T + Send + Sync>;
pub type VectorFn<T> = Box<dyn Fn(T, T) -> [T; 2] + Send + Sync>;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("exact error is zero; effectivity undefined")]
    ZeroExactError,
    #[error("solution and space sizes differ: {dofs} DOFs vs {len} coefficients")]
    SizeMismatch { dofs: usize, len: usize },
}

/// Closed-form reference solution of one benchmark configuration.
pub struct ExactSolution<T> {
    pub u: ScalarFn<T>,
    pub grad_u: VectorFn<T>,
    /// psi = -laplace(u)
    pub psi: ScalarFn<T>,
    pub grad_psi: VectorFn<T>,
    /// f = eps^2 laplace^2(u) - laplace(u)
    pub f: ScalarFn<T>,
    pub epsilon: T,
    pub bc_kind: BcKind,
}

/// Energy-type error measures of a mixed solution against an exact one.
#[derive(Debug, Clone, Copy)]
pub struct ErrorMeasures<T> {
    /// (eps^2 |psi - psi_h|_1^2 + ||psi - psi_h||^2)^(1/2)
    pub energy_psi: T,
    /// |u - u_h|_1
    pub h1_u: T,
    /// (energy_psi^2 + h1_u^2)^(1/2)
    pub combined: T,
}

/// One-dimensional profile pieces of the clamped benchmark: the factor
/// `P(x) = x^2 + eps^2 (1 - E)^2` with `E = exp(-x/eps)`, the product
/// `G = P (x-1)^2`, and their derivatives. The fourth derivative is kept
/// pre-multiplied by eps^2 so nothing blows up as eps -> 0.
#[derive(Clone, Copy)]
struct LayerProfile<T> {
    g0: T,
    g1: T,
    g2: T,
    g3: T,
    /// eps^2 * G''''
    e2g4: T,
}

fn layer_profile<T: Real>(x: T, eps: T) -> LayerProfile<T> {
    let one = T::one();
    let two = lit::<T>(2.0);
    let e = (-x / eps).exp();
    let e2 = e * e;
    let xm1 = x - one;
    let xm1sq = xm1 * xm1;

    let p0 = x * x + eps * eps * (one - e) * (one - e);
    let p1 = two * x + two * eps * (e - e2);
    let p2 = two - two * e + lit::<T>(4.0) * e2;
    let p3 = (two * e - lit::<T>(8.0) * e2) / eps;
    let e2p4 = lit::<T>(16.0) * e2 - two * e; // eps^2 * P''''

    LayerProfile {
        g0: p0 * xm1sq,
        g1: p1 * xm1sq + two * p0 * xm1,
        g2: p2 * xm1sq + lit::<T>(4.0) * p1 * xm1 + two * p0,
        g3: p3 * xm1sq + lit::<T>(6.0) * p2 * xm1 + lit::<T>(6.0) * p1,
        e2g4: e2p4 * xm1sq + lit::<T>(8.0) * (eps * eps * p3) * xm1 + lit::<T>(12.0) * (eps * eps) * p2,
    }
}

#[derive(Clone, Copy)]
struct PolyProfile<T> {
    q0: T,
    q1: T,
    q2: T,
    q3: T,
    q4: T,
}

fn poly_profile<T: Real>(y: T) -> PolyProfile<T> {
    let one = T::one();
    let ym1 = y - one;
    PolyProfile {
        q0: y * y * ym1 * ym1,
        q1: lit::<T>(2.0) * y * ym1 * (lit::<T>(2.0) * y - one),
        q2: lit::<T>(12.0) * y * y - lit::<T>(12.0) * y + lit::<T>(2.0),
        q3: lit::<T>(24.0) * y - lit::<T>(12.0),
        q4: lit::<T>(24.0),
    }
}

/// Clamped-plate benchmark with a boundary layer along `x = 0`.
pub fn example1<T: Real>(eps: T) -> ExactSolution<T> {
    let scale = lit::<T>(256.0);
    let u = {
        move |x: T, y: T| scale * layer_profile(x, eps).g0 * poly_profile(y).q0
    };
    let grad_u = {
        move |x: T, y: T| {
            let g = layer_profile(x, eps);
            let q = poly_profile(y);
            [scale * g.g1 * q.q0, scale * g.g0 * q.q1]
        }
    };
    let psi = {
        move |x: T, y: T| {
            let g = layer_profile(x, eps);
            let q = poly_profile(y);
            -scale * (g.g2 * q.q0 + g.g0 * q.q2)
        }
    };
    let grad_psi = {
        move |x: T, y: T| {
            let g = layer_profile(x, eps);
            let q = poly_profile(y);
            [
                -scale * (g.g3 * q.q0 + g.g1 * q.q2),
                -scale * (g.g2 * q.q1 + g.g0 * q.q3),
            ]
        }
    };
    let f = {
        move |x: T, y: T| {
            let g = layer_profile(x, eps);
            let q = poly_profile(y);
            let eps2 = eps * eps;
            scale
                * (g.e2g4 * q.q0 + lit::<T>(2.0) * eps2 * g.g2 * q.q2 + eps2 * g.g0 * q.q4
                    - (g.g2 * q.q0 + g.g0 * q.q2))
        }
    };
    ExactSolution {
        u: Box::new(u),
        grad_u: Box::new(grad_u),
        psi: Box::new(psi),
        grad_psi: Box::new(grad_psi),
        f: Box::new(f),
        epsilon: eps,
        bc_kind: BcKind::Clamped,
    }
}

/// Source term of the simply-supported benchmark; its exact solution is
/// unknown but `psi` develops four boundary layers.
pub fn example2_source<T: Real>() -> ScalarFn<T> {
    Box::new(|x: T, y: T| {
        let two_pi = lit::<T>(2.0 * std::f64::consts::PI);
        lit::<T>(2.0 * std::f64::consts::PI * std::f64::consts::PI)
            * (T::one() - (two_pi * x).cos() * (two_pi * y).cos())
    })
}

/// Smooth manufactured solution `u = sin(pi x) sin(pi y)` satisfying the
/// Navier conditions; handy for convergence studies at eps = 1.
pub fn manufactured_sine<T: Real>(eps: T) -> ExactSolution<T> {
    let pi = lit::<T>(std::f64::consts::PI);
    let pi2 = pi * pi;
    let two = lit::<T>(2.0);
    let s = move |x: T, y: T| (pi * x).sin() * (pi * y).sin();
    let u = move |x: T, y: T| s(x, y);
    let grad_u = move |x: T, y: T| [pi * (pi * x).cos() * (pi * y).sin(), pi * (pi * x).sin() * (pi * y).cos()];
    let psi = move |x: T, y: T| two * pi2 * s(x, y);
    let grad_psi = move |x: T, y: T| {
        [
            two * pi2 * pi * (pi * x).cos() * (pi * y).sin(),
            two * pi2 * pi * (pi * x).sin() * (pi * y).cos(),
        ]
    };
    let f = move |x: T, y: T| (lit::<T>(4.0) * pi2 * pi2 * eps * eps + two * pi2) * s(x, y);
    ExactSolution {
        u: Box::new(u),
        grad_u: Box::new(grad_u),
        psi: Box::new(psi),
        grad_psi: Box::new(grad_psi),
        f: Box::new(f),
        epsilon: eps,
        bc_kind: BcKind::Navier,
    }
}

/// Polynomial solution `4096 x^3 (1-x)^3 y^3 (1-y)^3` satisfying the Navier
/// and the clamped conditions simultaneously, so both solvers must agree.
pub fn both_bc_polynomial<T: Real>(eps: T) -> ExactSolution<T> {
    // g(t) = t^3 - 3 t^4 + 3 t^5 - t^6 and derivatives
    fn g0<T: Real>(t: T) -> T {
        t.powi(3) - lit::<T>(3.0) * t.powi(4) + lit::<T>(3.0) * t.powi(5) - t.powi(6)
    }
    fn g1<T: Real>(t: T) -> T {
        lit::<T>(3.0) * t.powi(2) - lit::<T>(12.0) * t.powi(3) + lit::<T>(15.0) * t.powi(4)
            - lit::<T>(6.0) * t.powi(5)
    }
    fn g2<T: Real>(t: T) -> T {
        lit::<T>(6.0) * t - lit::<T>(36.0) * t.powi(2) + lit::<T>(60.0) * t.powi(3)
            - lit::<T>(30.0) * t.powi(4)
    }
    fn g3<T: Real>(t: T) -> T {
        lit::<T>(6.0) - lit::<T>(72.0) * t + lit::<T>(180.0) * t.powi(2) - lit::<T>(120.0) * t.powi(3)
    }
    fn g4<T: Real>(t: T) -> T {
        -lit::<T>(72.0) + lit::<T>(360.0) * t - lit::<T>(360.0) * t.powi(2)
    }
    let c = lit::<T>(4096.0);
    let u = move |x: T, y: T| c * g0(x) * g0(y);
    let grad_u = move |x: T, y: T| [c * g1(x) * g0(y), c * g0(x) * g1(y)];
    let psi = move |x: T, y: T| -c * (g2(x) * g0(y) + g0(x) * g2(y));
    let grad_psi = move |x: T, y: T| {
        [
            -c * (g3(x) * g0(y) + g1(x) * g2(y)),
            -c * (g2(x) * g1(y) + g0(x) * g3(y)),
        ]
    };
    let f = move |x: T, y: T| {
        c * (eps * eps * (g4(x) * g0(y) + lit::<T>(2.0) * g2(x) * g2(y) + g0(x) * g4(y))
            - (g2(x) * g0(y) + g0(x) * g2(y)))
    };
    ExactSolution {
        u: Box::new(u),
        grad_u: Box::new(grad_u),
        psi: Box::new(psi),
        grad_psi: Box::new(grad_psi),
        f: Box::new(f),
        epsilon: eps,
        bc_kind: BcKind::Navier,
    }
}

/// Exact error norms of a discrete solution, integrated with the composite
/// layer-aware rule.
pub fn exact_errors<T: Real>(
    space: &FeSpace<T>,
    sol: &MixedSolution<T>,
    exact: &ExactSolution<T>,
) -> Result<ErrorMeasures<T>, ProblemError> {
    if sol.psi.len() != space.n_dofs() || sol.u.len() != space.n_dofs() {
        return Err(ProblemError::SizeMismatch { dofs: space.n_dofs(), len: sol.psi.len() });
    }
    let rule: QuadRule<T> = triangle_rule(DEFAULT_TRIANGLE_DEGREE).expect("default rule");
    let eps = exact.epsilon;
    let eps2 = eps * eps;
    let mut err_psi2 = T::zero();
    let mut err_u2 = T::zero();
    for t in 0..space.mesh.n_triangles() {
        let basis = space.eval_basis(t);
        let tri = space.mesh.triangles[t];
        let psi_local = [sol.psi[tri[0]], sol.psi[tri[1]], sol.psi[tri[2]]];
        let u_local = [sol.u[tri[0]], sol.u[tri[1]], sol.u[tri[2]]];
        let gpsi_h = basis.gradient(psi_local);
        let gu_h = basis.gradient(u_local);
        err_psi2 += integrate_triangle_composite(&rule, basis.coords, eps, &mut |x, y| {
            let d = (exact.psi)(x, y) - basis.eval(psi_local, x, y);
            let g = (exact.grad_psi)(x, y);
            let dx = g[0] - gpsi_h[0];
            let dy = g[1] - gpsi_h[1];
            eps2 * (dx * dx + dy * dy) + d * d
        });
        err_u2 += integrate_triangle_composite(&rule, basis.coords, eps, &mut |x, y| {
            let g = (exact.grad_u)(x, y);
            let dx = g[0] - gu_h[0];
            let dy = g[1] - gu_h[1];
            dx * dx + dy * dy
        });
    }
    let energy_psi = err_psi2.sqrt();
    let h1_u = err_u2.sqrt();
    Ok(ErrorMeasures { energy_psi, h1_u, combined: (err_psi2 + err_u2).sqrt() })
}

/// Worst relative finite-difference mismatch of each hard-coded field
/// against `u`, sampled at `n` interior points. Returned in the order
/// `grad_u`, `psi`, `grad_psi`, `f`.
///
/// Steps are layer-aware: points near the layer use a step proportional to
/// eps, the bulk uses 1e-3. Second derivatives come from 5-point Laplacian
/// stencils; `f` is checked through `-eps^2 laplace(psi) + psi`.
pub fn finite_difference_consistency<T: Real>(exact: &ExactSolution<T>, n: usize) -> [T; 4] {
    let eps = exact.epsilon;
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut next_unit = move || {
        // splitmix64
        state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64
    };

    let mut points = Vec::with_capacity(n);
    let bulk = (n * 4) / 5;
    for i in 0..n {
        let (rx, ry) = (next_unit(), next_unit());
        let y = lit::<T>(0.05 + 0.9 * ry);
        let x = if i < bulk {
            lit::<T>(0.05 + 0.9 * rx)
        } else {
            // inside the layer, a few eps away from the wall
            eps * lit::<T>(5.0 + 25.0 * rx)
        };
        points.push([x, y]);
    }

    let mut worst = [T::zero(); 4];
    let mut scale = [T::zero(); 4];
    let mut records: Vec<[T; 8]> = Vec::with_capacity(points.len());
    for &[x, y] in &points {
        let h = if x <= eps * lit::<T>(40.0) { eps * lit::<T>(0.002) } else { lit::<T>(1e-3) };
        let two_h = h + h;
        let h2 = h * h;
        let u = |a: T, b: T| (exact.u)(a, b);
        let p = |a: T, b: T| (exact.psi)(a, b);

        let du_dx = (u(x + h, y) - u(x - h, y)) / two_h;
        let du_dy = (u(x, y + h) - u(x, y - h)) / two_h;
        let lap_u = (u(x + h, y) + u(x - h, y) + u(x, y + h) + u(x, y - h)
            - lit::<T>(4.0) * u(x, y))
            / h2;
        let dp_dx = (p(x + h, y) - p(x - h, y)) / two_h;
        let dp_dy = (p(x, y + h) - p(x, y - h)) / two_h;
        let lap_psi = (p(x + h, y) + p(x - h, y) + p(x, y + h) + p(x, y - h)
            - lit::<T>(4.0) * p(x, y))
            / h2;

        let gu = (exact.grad_u)(x, y);
        let gp = (exact.grad_psi)(x, y);
        let psi_v = p(x, y);
        let f_v = (exact.f)(x, y);
        let f_fd = -eps * eps * lap_psi + psi_v;
        records.push([du_dx - gu[0], du_dy - gu[1], -lap_u - psi_v, dp_dx - gp[0], dp_dy - gp[1], f_fd - f_v, T::zero(), T::zero()]);
        scale[0] = scale[0].max(gu[0].abs()).max(gu[1].abs());
        scale[1] = scale[1].max(psi_v.abs());
        scale[2] = scale[2].max(gp[0].abs()).max(gp[1].abs());
        scale[3] = scale[3].max(f_v.abs());
    }
    let floor = lit::<T>(1e-8);
    for r in &records {
        worst[0] = worst[0].max(r[0].abs() / (scale[0] + floor)).max(r[1].abs() / (scale[0] + floor));
        worst[1] = worst[1].max(r[2].abs() / (scale[1] + floor));
        worst[2] = worst[2].max(r[3].abs() / (scale[2] + floor)).max(r[4].abs() / (scale[2] + floor));
        worst[3] = worst[3].max(r[5].abs() / (scale[3] + floor));
    }
    worst
}

/// Per-iteration effectivity ratios.
#[derive(Debug, Clone, Copy)]
pub struct Effectivity<T> {
    /// eta_psi / energy_psi
    pub eff_psi: T,
    /// (eta_psi + eta_u) / combined error; the numerator is the plain sum
    pub eff_combined: T,
}

/// Ratio of global estimates to exact errors.
pub fn effectivity<T: Real>(
    eta_psi: T,
    eta_u: T,
    errors: &ErrorMeasures<T>,
) -> Result<Effectivity<T>, ProblemError> {
    if errors.energy_psi == T::zero() || errors.combined == T::zero() {
        return Err(ProblemError::ZeroExactError);
    }
    Ok(Effectivity {
        eff_psi: eta_psi / errors.energy_psi,
        eff_combined: (eta_psi + eta_u) / errors.combined,
    })
}
