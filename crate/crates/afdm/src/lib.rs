//! Numerical engine for exact solutions of nonholonomic Einstein and
//! Ricci-soliton equations on shell-structured manifolds of dimension
//! `4 + 2s`, built by anholonomic frame deformations.
//!
//! The crate is organized around five layers:
//!
//! * [`fields`] - scalar fields with exact first/second derivatives,
//!   fiber quadrature and a 2-d Poisson solver;
//! * [`geometry`] - shell charts, d-metrics, N-connections and N-adapted
//!   frames;
//! * [`connection`] - the canonical d-connection and its torsion /
//!   curvature / Ricci / Einstein stack, the Levi-Civita oracle, distortion
//!   and residual evaluators;
//! * [`solgen`] - the solution generators: shell-recursive quadrature
//!   builds, vacuum branches, Levi-Civita extraction and vertical conformal
//!   deformations;
//! * [`kerr`] - the Kerr metric in N-adapted form and its off-diagonal and
//!   shell prolongation deformation pipelines.
//!
//! Everything is immutable after construction and evaluated pointwise, so
//! grid sweeps parallelize trivially.

pub mod connection;
pub mod fields;
pub mod geometry;
pub mod kerr;
pub mod num;
pub mod sampling;
pub mod solgen;
pub mod tol;
