//! Markov interval maps with exactly differentiable branches.
//!
//! A [`MarkovMap`] is an ordered list of strictly monotone branches whose
//! domains tile the ambient interval `X`. Domains are left-closed and
//! right-open, except the last branch which also contains the right end of
//! `X`, so every point of `X` is dispatched to exactly one branch.

use crate::error::{Error, Result};
use crate::roots::invert_monotone;
use crate::tolerances::{COVER_TOL, INVERSE_TOL};

/// A nondegenerate closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// True when `other` lies inside `self` up to `tol` at each end.
    pub fn covers(&self, other: &Interval, tol: f64) -> bool {
        self.lo <= other.lo + tol && self.hi >= other.hi - tol
    }

    /// Length of the overlap with `other`, zero when disjoint.
    pub fn overlap(&self, other: &Interval) -> f64 {
        (self.hi.min(other.hi) - self.lo.max(other.lo)).max(0.0)
    }
}

/// The closed family of branch formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchKind {
    /// `slope * x + intercept`
    Affine { slope: f64, intercept: f64 },
    /// `x (1 + (2x)^alpha)`, the neutral left branch of an L-S-V map.
    LsvLeft { alpha: f64 },
    /// `beta * x - offset`
    BetaPiece { beta: f64, offset: i64 },
}

impl BranchKind {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            BranchKind::Affine { slope, intercept } => slope * x + intercept,
            BranchKind::LsvLeft { alpha } => x * (1.0 + (2.0 * x).powf(alpha)),
            BranchKind::BetaPiece { beta, offset } => beta * x - offset as f64,
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            BranchKind::Affine { slope, .. } => slope,
            BranchKind::LsvLeft { alpha } => 1.0 + (alpha + 1.0) * (2.0 * x).powf(alpha),
            BranchKind::BetaPiece { beta, .. } => beta,
        }
    }

    fn is_increasing(&self) -> bool {
        match *self {
            BranchKind::Affine { slope, .. } => slope > 0.0,
            BranchKind::LsvLeft { .. } | BranchKind::BetaPiece { .. } => true,
        }
    }
}

/// One monotone branch `f_a = T|_{J(a)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    domain: Interval,
    kind: BranchKind,
    label: usize,
}

impl Branch {
    pub fn new(domain: Interval, kind: BranchKind, label: usize) -> Result<Self> {
        match kind {
            BranchKind::Affine { slope, intercept } => {
                if slope == 0.0 || !slope.is_finite() || !intercept.is_finite() {
                    return Err(Error::MalformedMap(format!(
                        "affine branch {label} needs a finite nonzero slope"
                    )));
                }
            }
            BranchKind::LsvLeft { alpha } => {
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(Error::Parameter(format!("L-S-V alpha must be > 0, got {alpha}")));
                }
                if domain.lo < 0.0 {
                    return Err(Error::MalformedMap(
                        "L-S-V left branch needs a nonnegative domain".into(),
                    ));
                }
            }
            BranchKind::BetaPiece { beta, .. } => {
                if !(beta > 1.0 && beta.is_finite()) {
                    return Err(Error::Parameter(format!("beta must be > 1, got {beta}")));
                }
            }
        }
        Ok(Branch { domain, kind, label })
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn kind(&self) -> BranchKind {
        self.kind
    }

    pub fn label(&self) -> usize {
        self.label
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.kind.value(x)
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        self.kind.derivative(x)
    }

    pub fn is_increasing(&self) -> bool {
        self.kind.is_increasing()
    }

    /// Image of the closed domain.
    pub fn image(&self) -> Interval {
        let a = self.value(self.domain.lo);
        let b = self.value(self.domain.hi);
        Interval {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    /// Inverse branch on the closed image; `y` outside it is clamped.
    pub fn inverse(&self, y: f64) -> f64 {
        let x = match self.kind {
            BranchKind::Affine { slope, intercept } => (y - intercept) / slope,
            BranchKind::BetaPiece { beta, offset } => (y + offset as f64) / beta,
            BranchKind::LsvLeft { .. } => {
                return invert_monotone(
                    |x| self.value(x),
                    y,
                    self.domain.lo,
                    self.domain.hi,
                    INVERSE_TOL,
                )
            }
        };
        x.clamp(self.domain.lo, self.domain.hi)
    }
}

/// Result of [`MarkovMap::evaluate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub derivative: f64,
    pub label: usize,
}

/// Which side a one-sided quantity is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovMap {
    ambient: Interval,
    branches: Vec<Branch>,
    exceptional: Vec<f64>,
}

impl MarkovMap {
    /// Builds a map from branches listed left to right.
    ///
    /// `exceptional` declares the finitely many points where `|T'| <= 1` is
    /// allowed (for instance the neutral fixed point of an L-S-V map).
    pub fn new(ambient: Interval, branches: Vec<Branch>, exceptional: Vec<f64>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::MalformedMap("no branches".into()));
        }
        let scale = COVER_TOL * ambient.lo.abs().max(ambient.hi.abs()).max(1.0);
        if (branches[0].domain.lo - ambient.lo).abs() > scale {
            return Err(Error::MalformedMap(format!(
                "first branch starts at {} instead of {}",
                branches[0].domain.lo, ambient.lo
            )));
        }
        for (k, pair) in branches.windows(2).enumerate() {
            if (pair[0].domain.hi - pair[1].domain.lo).abs() > scale {
                return Err(Error::MalformedMap(format!(
                    "branches {} and {} leave a gap or overlap ({} vs {})",
                    k,
                    k + 1,
                    pair[0].domain.hi,
                    pair[1].domain.lo
                )));
            }
        }
        let last = branches[branches.len() - 1].domain.hi;
        if (last - ambient.hi).abs() > scale {
            return Err(Error::MalformedMap(format!(
                "last branch ends at {last} instead of {}",
                ambient.hi
            )));
        }
        Ok(MarkovMap {
            ambient,
            branches,
            exceptional,
        })
    }

    /// Affine Markov map from breakpoints `b_0 < ... < b_k` and per-branch
    /// slopes and intercepts.
    pub fn affine(breakpoints: &[f64], slopes: &[f64], intercepts: &[f64]) -> Result<Self> {
        let k = breakpoints.len().saturating_sub(1);
        if k == 0 || slopes.len() != k || intercepts.len() != k {
            return Err(Error::MalformedMap(format!(
                "{} breakpoints need {} slopes and intercepts, got {} and {}",
                breakpoints.len(),
                k,
                slopes.len(),
                intercepts.len()
            )));
        }
        let ambient = Interval::new(breakpoints[0], breakpoints[k])?;
        let branches = (0..k)
            .map(|j| {
                Branch::new(
                    Interval::new(breakpoints[j], breakpoints[j + 1])?,
                    BranchKind::Affine {
                        slope: slopes[j],
                        intercept: intercepts[j],
                    },
                    j + 1,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        MarkovMap::new(ambient, branches, Vec::new())
    }

    pub fn ambient(&self) -> Interval {
        self.ambient
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn exceptional(&self) -> &[f64] {
        &self.exceptional
    }

    /// Partition points `lo = c_0 < c_1 < ... < c_k = hi`.
    pub fn partition_points(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.branches.iter().map(|b| b.domain.lo).collect();
        pts.push(self.ambient.hi);
        pts
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        let slack = COVER_TOL * self.ambient.hi.abs().max(1.0);
        if !x.is_finite() || x < self.ambient.lo - slack || x > self.ambient.hi + slack {
            return Err(Error::Domain {
                x,
                lo: self.ambient.lo,
                hi: self.ambient.hi,
            });
        }
        Ok(())
    }

    /// Index of the branch whose half-open domain contains `x`.
    pub fn branch_index(&self, x: f64) -> Result<usize> {
        self.check_domain(x)?;
        let idx = self.branches.partition_point(|b| b.domain.hi <= x);
        Ok(idx.min(self.branches.len() - 1))
    }

    pub fn evaluate(&self, x: f64) -> Result<Evaluation> {
        let b = &self.branches[self.branch_index(x)?];
        Ok(Evaluation {
            value: b.value(x),
            derivative: b.derivative(x),
            label: b.label,
        })
    }

    /// One-sided derivative; the left derivative at the left end of `X`
    /// (and the right one at its right end) falls back to the other side.
    pub fn one_sided_derivative(&self, x: f64, side: Side) -> Result<f64> {
        let idx = self.branch_index(x)?;
        let b = &self.branches[idx];
        let at_lo = x <= b.domain.lo;
        let branch = match side {
            Side::Left if at_lo && idx > 0 => &self.branches[idx - 1],
            _ => b,
        };
        Ok(branch.derivative(x.clamp(branch.domain.lo, branch.domain.hi)))
    }

    /// Checks the Markov property and non-uniform expansion.
    pub fn validate_markov(&self, tol: f64) -> ValidationReport {
        let points = self.partition_points();
        let cells: Vec<Interval> = self.branches.iter().map(|b| b.domain).collect();
        let nearest = |y: f64| {
            points
                .iter()
                .map(|p| (p - y).abs())
                .fold(f64::INFINITY, f64::min)
        };
        let mut images = Vec::with_capacity(self.branches.len());
        for (k, b) in self.branches.iter().enumerate() {
            let image = b.image();
            let endpoint_mismatch = nearest(image.lo).max(nearest(image.hi));
            let covered_cells = cells
                .iter()
                .enumerate()
                .filter(|(_, c)| image.covers(c, tol))
                .map(|(j, _)| j)
                .collect();
            let inside = image.lo >= self.ambient.lo - tol && image.hi <= self.ambient.hi + tol;
            images.push(BranchImage {
                branch: k,
                image,
                covered_cells,
                endpoint_mismatch,
                ok: inside && endpoint_mismatch <= tol,
            });
        }

        const SAMPLES: usize = 1000;
        let mut non_expanding = Vec::new();
        for b in &self.branches {
            let d = b.domain;
            for s in 0..=SAMPLES {
                let x = d.lo + d.length() * (s as f64) / (SAMPLES as f64);
                if b.derivative(x).abs() <= 1.0 {
                    non_expanding.push(x);
                }
            }
        }
        non_expanding.sort_by(f64::total_cmp);
        non_expanding.dedup();
        let undeclared_non_expanding: Vec<f64> = non_expanding
            .iter()
            .copied()
            .filter(|x| !self.exceptional.iter().any(|e| (e - x).abs() <= tol))
            .collect();

        let passed = images.iter().all(|i| i.ok) && undeclared_non_expanding.is_empty();
        ValidationReport {
            branches: images,
            non_expanding,
            undeclared_non_expanding,
            passed,
        }
    }
}

/// Image data of one branch in a [`ValidationReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct BranchImage {
    pub branch: usize,
    pub image: Interval,
    /// Indices of the partition cells contained in the image.
    pub covered_cells: Vec<usize>,
    /// Largest distance from an image endpoint to a partition point.
    pub endpoint_mismatch: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub branches: Vec<BranchImage>,
    /// Sampled points with `|T'| <= 1`.
    pub non_expanding: Vec<f64>,
    /// Those of them not in the declared exceptional set.
    pub undeclared_non_expanding: Vec<f64>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn max_endpoint_mismatch(&self) -> f64 {
        self.branches
            .iter()
            .map(|b| b.endpoint_mismatch)
            .fold(0.0, f64::max)
    }
}

/// The doubling map `x -> 2x mod 1` on `[0, 1]`.
pub fn doubling_map() -> MarkovMap {
    MarkovMap::affine(&[0.0, 0.5, 1.0], &[2.0, 2.0], &[0.0, -1.0]).expect("doubling map is well formed")
}
