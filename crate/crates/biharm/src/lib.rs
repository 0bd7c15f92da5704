//! Adaptive mixed finite elements for the singularly perturbed fourth-order
//! problem `eps^2 laplace^2 u - laplace u = f` on 2-D polygons.
//!
//! The fourth-order equation is split through the auxiliary field
//! `psi = -laplace(u)` into two coupled second-order equations and
//! discretized with continuous P1 elements. The crate provides
//!
//! * conforming triangle meshes with longest-edge bisection ([`mesh`]),
//! * P1 spaces, assembly and sparse Krylov solvers ([`fespace`],
//!   [`assembly`], [`csr`], [`krylov`]),
//! * mixed solvers for simply supported and clamped plates ([`solver`]),
//! * layer-robust residual indicators ([`estimator`]),
//! * the adaptive refinement loop with bulk marking ([`adapt`]),
//! * benchmark problems with exact errors and effectivity ([`problems`]),
//! * deterministic CSV/JSON/VTK/SVG exports ([`report`]).
//!
//! The numerical core is generic over the scalar type through [`Real`];
//! the aliases below fix `f64` for ordinary use.

pub mod adapt;
pub mod assembly;
pub mod csr;
pub mod estimator;
pub mod fespace;
pub mod krylov;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod report;
mod scalar;
pub mod solver;

pub use scalar::Real;

/// `f64` mesh.
pub type Mesh = mesh::TriMesh<f64>;
/// `f64` P1 space.
pub type Space = fespace::FeSpace<f64>;
/// `f64` sparse matrix.
pub type Matrix = csr::CsrMatrix<f64>;
/// `f64` mixed solution.
pub type Solution = solver::MixedSolution<f64>;
/// `f64` indicator field.
pub type Indicators = estimator::IndicatorField<f64>;
/// `f64` run configuration.
pub type Config = adapt::RunConfig<f64>;
/// `f64` adaptive run.
pub type Run = adapt::AdaptiveRun<f64>;
