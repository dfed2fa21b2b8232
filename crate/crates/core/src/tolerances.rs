//! Numerical tolerances and default grid sizes shared by the solvers.

/// Absolute residual allowed when inverting `s -> a(u, s)`, in flow units.
pub const TOL_G: f64 = 1e-12;

/// A level is totally degenerate on sampled fluxes when `max_s |a(u, s)|` is below this.
pub const TOL_TD: f64 = 1e-10;

/// Symmetry check: `|a(u,s) + a(u,-s)| <= TOL_ODD * (1 + |a(u,s)|)`.
pub const TOL_ODD: f64 = 1e-12;

/// Minimum grid resolution per axis accepted by the flux classifier.
pub const MIN_CLASSIFY_GRID: usize = 64;

/// Relative tolerance of the embedded Runge-Kutta pair.
pub const RTOL: f64 = 1e-10;
/// Absolute tolerance of the embedded Runge-Kutta pair.
pub const ATOL: f64 = 1e-14;
/// Smallest step the controller may take before giving up.
pub const STEP_FLOOR: f64 = 1e-13;
/// Offset from `u = 1` at which the series start is applied.
pub const SERIES_DELTA0: f64 = 1e-6;
/// Event localisation tolerance in `u`.
pub const EVENT_TOL: f64 = 1e-12;

/// Level used by the `V(0) ~ 0` predicate: `V0 <= c_sep * U_MIN`.
pub const U_MIN: f64 = 1e-6;
/// Default bisection tolerance on speeds.
pub const TOL_SIGMA: f64 = 1e-6;
/// Speed cap after which a bracket search is abandoned.
pub const SIGMA_CAP: f64 = 1e4;

/// Profile window is `[U_LO, 1 - U_LO]`.
pub const U_LO: f64 = 1e-6;
/// `H` below this counts as zero for plateau detection.
pub const PLATEAU_H: f64 = 1e-14;
/// Consecutive quadrature cells with `H < PLATEAU_H` needed to call a plateau.
pub const PLATEAU_CELLS: usize = 3;
/// Default anchor level placed at `xi = 0`.
pub const DEFAULT_ANCHOR: f64 = 0.5;

/// Step for the one-sided finite differences of custom reactions.
pub const REACTION_FD_STEP: f64 = 1e-4;
