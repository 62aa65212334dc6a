//! Pinned numerical tolerances.
//!
//! Collected in one place so the values used by the closures, the event
//! machinery, and the implicit steppers are auditable and stay consistent
//! between the library, the tests, and the acceptance suite.

/// Degeneracy threshold for the rank-one free-flow denominator 1 - dlambda.L+.
pub const CLOSURE_SINGULAR: f64 = 1e-12;

/// Degeneracy threshold for the sliding denominator dh.L+.
pub const CLOSURE_GRAZING: f64 = 1e-12;

/// Time tolerance for bisection event location.
pub const EVENT_T: f64 = 1e-10;

/// Switching-surface residual kept by the post-step Newton projection.
pub const SURFACE_RESIDUAL: f64 = 1e-9;

/// Re-arm distance for the surface monitor after an exit: twice the residual
/// band, so roundoff near the surface cannot retrigger the same event.
pub const REARM_FACTOR: f64 = 2.0;

/// Fixed-point iteration: per-step relative tolerance and iteration cap.
pub const FIXED_POINT_TOL: f64 = 1e-10;
pub const FIXED_POINT_MAX_ITER: usize = 20;

/// Central finite-difference step and acceptance threshold used by the
/// gradient self-check.
pub const FD_STEP: f64 = 1e-6;
pub const FD_REL: f64 = 1e-5;

/// Kernel mass allowed outside the memory horizon, relative to the t=0 value.
pub const HORIZON_MASS_REL: f64 = 1e-6;

/// Relative wave-speed drift that forces a refresh of cached kernel weights.
pub const CBAR_REFRESH_REL: f64 = 1e-3;

/// Vanishing-coefficient threshold for the affine sliding-lambda solve.
pub const AFFINE_COEFF: f64 = 1e-12;

/// Degeneracy threshold for fast-subsystem classification margins.
pub const CLASSIFY_MARGIN: f64 = 1e-12;

/// Relative amplitude spread over trailing periods treated as steady state.
pub const SWEEP_STEADY_REL: f64 = 5e-3;

/// Up/down amplitude disagreement flagged as bistability.
pub const SWEEP_BISTABLE_REL: f64 = 5e-2;
