//! Tolerance policy. Every threshold the library and its verifiers use lives here.

/// Default relative tolerance for Loewner comparisons (relative to `max(1, ||A||, ||B||)`).
pub const LOEWNER: f64 = 1e-10;

/// Default slack tolerance for property predicates P1..P10.
pub const PROPERTY: f64 = 1e-9;

/// Default Thompson-metric stopping threshold for iterative means.
pub const SOLVER: f64 = 1e-12;

pub const SOLVER_MAX_ITER: usize = 10_000;

/// A symmetrization recursion whose spread stops shrinking is accepted once the
/// spread is below `ROUNDOFF_ULPS * eps * cond` of the current tuple.
pub const ROUNDOFF_ULPS: f64 = 256.0;

/// Nested `(n-1)`-means inside ALM and BMP are solved at `tol` times this.
pub const NESTED_TOL_FACTOR: f64 = 1.0 / 16.0;

/// Step halvings allowed per Karcher iteration before giving up.
pub const KARCHER_MAX_HALVINGS: usize = 30;

/// QR sweeps per dimension allowed in the symmetric eigensolver.
pub const EIG_MAX_SWEEPS: usize = 1_000;

/// `f(1)` must equal 1 within this for user-supplied representing functions.
pub const REPR_UNIT: f64 = 1e-12;

/// Central-difference step for derivative checks at 1.
pub const FD_STEP: f64 = 1e-6;

/// Allowed disagreement between a stored derivative and its finite difference.
pub const FD_AGREEMENT: f64 = 1e-6;

/// Below this distance from 1 the logarithmic representing function uses its series.
pub const LOG_MEAN_SERIES: f64 = 1e-4;

/// Number of log-spaced points in `[1e-6, 1e6]` for scalar screens.
pub const SCALAR_GRID_POINTS: usize = 1_000;

/// Sandwich slack floor for the two-sided harmonic/arithmetic bound.
pub const SANDWICH: f64 = 1e-12;

/// Simplex rule coefficients sum to 1 within this.
pub const RULE_SUM: f64 = 1e-12;

/// Monte Carlo nodes with a coordinate below this are redrawn.
pub const INTERIOR: f64 = 1e-12;

/// Mean-inequality slack floor in the two-variable equivalence checks.
pub const MEAN_INEQUALITY: f64 = 1e-10;

/// Hypothesis tolerance when recovering `(1-w)A <= wB` from the mean inequality.
pub const HYPOTHESIS_RECOVERY: f64 = 1e-6;

/// `Phi <= 1 + FUNCTIONAL` in the extension-theorem checks.
pub const FUNCTIONAL: f64 = 1e-10;

/// Slack floor when `sum w_i T_i` sits on the boundary of the negative cone.
pub const BOUNDARY: f64 = 1e-9;

/// Converse derivative probes only fire when `|Phi'(1) - w|` exceeds this.
pub const CONVERSE_GAP: f64 = 1e-3;

/// Limit formulas must reach this error at the finest grid point.
pub const LIMIT_FINAL: f64 = 1e-5;

/// Measured first-order rates must lie within this factor of the predicted one.
pub const RATE_FACTOR: f64 = 2.0;

/// Loewner tolerance for the M-logarithmic inequality chain.
pub const LOGMEAN_CHAIN: f64 = 1e-7;
