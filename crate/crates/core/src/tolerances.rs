//! Numerical tolerances shared across modules.

/// Default tolerance for Markov-image and partition checks.
pub const MARKOV_TOL: f64 = 1e-9;

/// Branch domains must tile the ambient interval to this accuracy.
pub const COVER_TOL: f64 = 1e-12;

/// Absolute accuracy of bisection-based inverse branches.
pub const INVERSE_TOL: f64 = 1e-14;

/// Bisection accuracy for cycle points inside a cylinder.
pub const CYCLE_TOL: f64 = 1e-12;

/// Cycle points closer than this are the same point.
pub const DEDUPE_TOL: f64 = 1e-9;

/// Probability vectors must sum to one within this.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Measures must carry unit mass within this.
pub const MASS_TOL: f64 = 1e-12;

/// Densities must integrate to one within this.
pub const DENSITY_MASS_TOL: f64 = 1e-10;

/// Refuse enumerations estimated above this many candidate words.
pub const ENUMERATION_GUARD: f64 = 1e8;

/// Ulam power iteration defaults.
pub const ULAM_TOL: f64 = 1e-12;
pub const ULAM_MAX_ITER: usize = 100_000;

/// Depth bound for the greedy orbit of 1.
pub const BETA_DEPTH_BOUND: usize = 64;
