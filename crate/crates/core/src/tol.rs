//! Numerical thresholds shared across modules.

/// Eigenvalues at or below this count as zero for rank decisions.
pub const EPS_RANK: f64 = 1e-12;

/// Hermiticity, trace and PSD tolerances for density-matrix constructors.
pub const HERMITIAN: f64 = 1e-10;
pub const TRACE: f64 = 1e-10;
pub const PSD: f64 = 1e-10;

/// Looser symmetry check applied before eigendecomposition.
pub const HERMITIAN_INPUT: f64 = 1e-8;

/// Rank/norm tolerance for pure-state preconditions (FS distance, geodesics).
pub const PURE: f64 = 1e-9;

/// Bloch vectors may exceed the unit sphere by this much.
pub const BLOCH_RADIUS: f64 = 1e-12;

/// Default trace-preservation tolerance for Kraus channels.
pub const TPCP: f64 = 1e-8;

/// Gaps smaller than this carry no sign information.
pub const GAP_FLOOR: f64 = 1e-10;
