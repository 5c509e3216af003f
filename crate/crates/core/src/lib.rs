//! Random cycles of i.i.d. random Markov interval maps.
//!
//! A [`RandomSystem`] draws one of finitely many piecewise monotone Markov
//! maps at every step. For a sample word `ω` of length `n`, the random cycles
//! are the points with `T_ω^n(x) = x`; weighted by `|(T_ω^n)'x|^{-1}` they
//! approximate the stationary and equilibrium measures of the system.

pub mod beta;
pub mod cycles;
pub mod error;
pub mod lsv;
pub mod maps;
pub mod measures;
pub mod roots;
pub mod symbolic;
pub mod tolerances;

pub use cycles::{
    cycle_measure_xi, cycle_point_measure, enumerate_cycles, enumerate_preimages, enumerate_skew_fixed_points,
    find_cycle_in_cylinder, pressure_from_cycles, sample_averaged_measure, weighted_functional_average, Cycle,
    CycleSet, EnumerationOptions,
};
pub use error::{Error, Result};
pub use maps::{doubling_map, Branch, BranchKind, Interval, MarkovMap};
pub use measures::{kolmogorov_distance, pelikan_index, ulam_stationary, Cdf, PiecewiseConstantDensity, WeightedPointMeasure};
pub use symbolic::{RandomSystem, SampleWord, SymbolicSystem, TransitionMatrix};
