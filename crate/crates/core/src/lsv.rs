//! Liverani-Saussol-Vaienti maps `L_α` and the intermittency diagnostics
//! built on them.

use crate::cycles::{cycle_measure_xi, enumerate_cycles, EnumerationOptions};
use crate::error::{Error, Result};
use crate::maps::{Branch, BranchKind, Interval, MarkovMap};
use crate::measures::Cdf;
use crate::symbolic::{RandomSystem, SampleWord, SymbolicSystem};

#[derive(Debug, Clone, PartialEq)]
pub struct LsvSpec {
    alphas: Vec<f64>,
    probs: Vec<f64>,
}

impl LsvSpec {
    pub fn new(alphas: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::Parameter("at least one alpha is required".into()));
        }
        if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::Parameter(format!("alpha must be > 0, got {a}")));
        }
        if alphas.len() != probs.len() {
            return Err(Error::InvalidSystem(format!(
                "{} alphas but {} probabilities",
                alphas.len(),
                probs.len()
            )));
        }
        Ok(LsvSpec { alphas, probs })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// `L_α(x) = x(1 + (2x)^α)` on `[0, 1/2)`, `2x - 1` on `[1/2, 1]`.
pub fn lsv_map(alpha: f64) -> Result<MarkovMap> {
    let left = Branch::new(Interval::new(0.0, 0.5)?, BranchKind::LsvLeft { alpha }, 1)?;
    let right = Branch::new(
        Interval::new(0.5, 1.0)?,
        BranchKind::Affine {
            slope: 2.0,
            intercept: -1.0,
        },
        2,
    )?;
    MarkovMap::new(Interval::new(0.0, 1.0)?, vec![left, right], vec![0.0])
}

pub fn build_lsv_system(spec: &LsvSpec) -> Result<RandomSystem> {
    let maps = spec.alphas.iter().map(|&a| lsv_map(a)).collect::<Result<Vec<_>>>()?;
    RandomSystem::new(maps, spec.probs.clone())
}

/// `Leb{x ∈ J : t(x) > n}` for `n = 0..=n_max` and the fitted power.
#[derive(Debug, Clone, PartialEq)]
pub struct TailProfile {
    /// `tail[n]`
    pub tail: Vec<f64>,
    /// Least-squares slope of `log tail` against `log n` on `[n_max/10, n_max]`.
    pub exponent: f64,
}

/// First-return tail of the neutral branch. `x_0` is the right end of the
/// branch and `x_n` its preimage of `x_{n-1}`; points of `[lo, x_n)` stay in
/// the branch for more than `n` steps.
pub fn return_time_tail(map: &MarkovMap, branch_index: usize, n_max: usize) -> Result<TailProfile> {
    let branch = map
        .branches()
        .get(branch_index)
        .ok_or_else(|| Error::Parameter(format!("no branch {branch_index}")))?;
    if !branch.is_increasing() {
        return Err(Error::Parameter("the neutral branch must be increasing".into()));
    }
    if n_max < 10 {
        return Err(Error::Parameter("n_max must be at least 10".into()));
    }
    let lo = branch.domain().lo();
    let mut x = branch.domain().hi();
    let mut tail = Vec::with_capacity(n_max + 1);
    tail.push(x - lo);
    for n in 1..=n_max {
        let next = branch.inverse(x);
        if !(next < x && next > lo) {
            return Err(Error::Numerical(format!(
                "preimage sequence stopped decreasing at n = {n} ({next} after {x})"
            )));
        }
        x = next;
        tail.push(x - lo);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = (n_max / 10..=n_max)
        .map(|n| ((n as f64).ln(), tail[n].ln()))
        .unzip();
    Ok(TailProfile {
        exponent: least_squares_slope(&xs, &ys),
        tail,
    })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    /// every α ≥ 1: `δ_0` is the unique equilibrium state
    B,
    /// every α < 1: acims are normalizable and a second equilibrium state exists
    C,
    Unresolved,
}

impl Case {
    pub fn label(self) -> &'static str {
        match self {
            Case::B => "b",
            Case::C => "c",
            Case::Unresolved => "unresolved",
        }
    }
}

pub fn classify_case(spec: &LsvSpec) -> Case {
    let max = spec.alphas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = spec.alphas.iter().copied().fold(f64::INFINITY, f64::min);
    if max < 1.0 {
        Case::C
    } else if min >= 1.0 {
        Case::B
    } else {
        Case::Unresolved
    }
}

pub const PROFILE_EPS: [f64; 3] = [0.01, 0.05, 0.1];

#[derive(Debug, Clone, PartialEq)]
pub struct NeutralProfile {
    pub n: usize,
    /// `(ε, ξ_n^ω[0, ε))`
    pub masses: Vec<(f64, f64)>,
    /// `w(0) / Z_{ω,n}` for the all-left cycle at 0; zero if absent.
    pub neutral_weight: f64,
}

pub fn neutral_mass_profile(sym: &SymbolicSystem, omega: &SampleWord, opts: &EnumerationOptions) -> Result<NeutralProfile> {
    let cs = enumerate_cycles(sym, omega, opts)?;
    let xi = cycle_measure_xi(&cs)?;
    let lo = sym.system().ambient().lo();
    let masses = PROFILE_EPS.iter().map(|&e| (e, xi.cdf_left(lo + e))).collect();
    let neutral_weight = cs
        .cycles
        .iter()
        .find(|c| c.point == lo)
        .map_or(0.0, |c| cs.normalized_weight(c));
    Ok(NeutralProfile {
        n: omega.len(),
        masses,
        neutral_weight,
    })
}
