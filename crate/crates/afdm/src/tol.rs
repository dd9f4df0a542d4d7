//! Pinned tolerances for the verification stack.
//!
//! Exact-derivative evaluation leaves only accumulated f64 roundoff, so the
//! algebraic checks sit close to machine precision; quadrature-backed and
//! grid-backed quantities carry the refinement tolerances of their rules.

/// Frame/coframe duality and congruence checks (triangular inverses).
pub const FRAME_DUALITY: f64 = 1e-12;
/// Metric compatibility of the canonical d-connection, componentwise.
pub const METRIC_COMPAT: f64 = 1e-10;
/// Canonical vs coordinate (Levi-Civita) Ricci on holonomic products.
pub const ORACLE_RICCI: f64 = 1e-9;
/// Closed-form ansatz Ricci vs the generic contraction.
pub const ANSATZ_RICCI: f64 = 1e-8;
/// Field-equation residual contract of generated solutions.
pub const FIELD_RESIDUAL: f64 = 1e-6;
/// Torsion of Levi-Civita extracted solutions.
pub const LC_TORSION: f64 = 1e-8;
/// Decoupling witness: lower-shell rows under upper-shell perturbations.
pub const DECOUPLING: f64 = 1e-10;
/// Conformal v-factor invariance of the Ricci components.
pub const OMEGA_INVARIANCE: f64 = 1e-8;
/// Fiber-independence of declared integration functions.
pub const FIBER_INDEPENDENCE: f64 = 1e-12;
/// Commuting mixed partials of smooth fields (relative).
pub const MIXED_PARTIALS: f64 = 1e-10;
/// Interior stencil residual of the 2-d Poisson solve.
pub const POISSON_RESIDUAL: f64 = 1e-8;
