//! Numerical tolerances shared across the crate.
//!
//! Every threshold used for validation or reporting lives here so that
//! tests, reports and the CLI agree on the same numbers.

/// Hermiticity residual accepted for density matrices and Hamiltonians.
pub const HERMITIAN: f64 = 1e-10;
/// Hermiticity residual accepted as eigensolver input.
pub const EIG_INPUT_HERMITIAN: f64 = 1e-8;
/// Unit-trace tolerance for density matrices.
pub const UNIT_TRACE: f64 = 1e-10;
/// Most negative eigenvalue tolerated in a density matrix.
pub const MIN_EIGENVALUE: f64 = -1e-9;

/// Relative off-diagonal Frobenius mass at which Jacobi sweeps stop.
pub const JACOBI_CONVERGENCE: f64 = 1e-12;
/// Upper bound on cyclic Jacobi sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Kick unitarity / involution tolerance.
pub const KICK_UNITARY: f64 = 1e-12;
/// Identity-product tolerance for decoupling schedules.
pub const SCHEDULE_PRODUCT: f64 = 1e-10;

/// Largest step allowed is `STEP_SCALE / omega_max`.
pub const STEP_SCALE: f64 = 0.02;
/// Trace drift accepted over a propagated segment.
pub const SEGMENT_TRACE_DRIFT: f64 = 1e-8;
/// Trace tolerance for stored trajectory states.
pub const TRAJECTORY_TRACE: f64 = 1e-8;
/// Most negative eigenvalue tolerated in stored trajectory states.
pub const TRAJECTORY_MIN_EIGENVALUE: f64 = -1e-7;

/// Choi matrices: Hermiticity.
pub const CHOI_HERMITIAN: f64 = 1e-9;
/// Choi matrices: most negative eigenvalue.
pub const CHOI_MIN_EIGENVALUE: f64 = -1e-8;
/// Choi matrices: unit trace and trace preservation (partial trace = I/2).
pub const CHOI_TRACE: f64 = 1e-8;

/// Slack on the bound inequalities before a point is flagged.
pub const BOUND_SLACK: f64 = 1e-7;
/// Commutation residual below which the bound hypothesis counts as satisfied.
pub const COMMUTATION: f64 = 1e-8;
/// Controlled/uncontrolled erased compositions must coincide to this.
pub const ERASED_COINCIDENCE: f64 = 1e-9;

/// Convergence audit pass threshold on any reported distance.
pub const AUDIT: f64 = 1e-5;
/// Thermal tail mass allowed beyond the Fock cutoff.
pub const THERMAL_TAIL: f64 = 1e-6;
