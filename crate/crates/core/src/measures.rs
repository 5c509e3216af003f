//! Finitely supported and piecewise-constant probability measures on `X`,
//! the Kolmogorov distance between them, the Ulam discretisation of the
//! averaged transfer operator, and Pelikan's expansion-on-average index.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::maps::{Interval, Side};
use crate::symbolic::RandomSystem;
use crate::tolerances::{DENSITY_MASS_TOL, MASS_TOL};

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `log(sum exp(v))`, `-inf` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut acc = CompensatedSum::default();
    for &v in values {
        acc.add((v - max).exp());
    }
    max + acc.value().ln()
}

/// Cumulative distribution queries shared by both measure types.
pub trait Cdf {
    /// `F(x) = mu((-inf, x])`
    fn cdf(&self, x: f64) -> f64;
    /// `F(x-) = mu((-inf, x))`
    fn cdf_left(&self, x: f64) -> f64;
    /// Points where `F` may fail to be affine.
    fn knots(&self) -> Vec<f64>;
}

/// A probability measure with finitely many atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPointMeasure {
    points: Vec<f64>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl WeightedPointMeasure {
    /// Atoms must have positive weights summing to one.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let m = Self::build(atoms)?;
        let total = m.total_mass();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::Numerical(format!("atoms carry mass {total}, not 1")));
        }
        Ok(m)
    }

    /// Rescales positive weights to unit mass; zero weights are dropped.
    pub fn normalized(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let mut acc = CompensatedSum::default();
        for &(_, w) in &atoms {
            acc.add(w);
        }
        let total = acc.value();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::EmptyMeasure(format!("total weight {total}")));
        }
        Self::build(atoms.into_iter().map(|(x, w)| (x, w / total)).collect())
    }

    pub fn dirac(x: f64) -> Self {
        WeightedPointMeasure {
            points: vec![x],
            weights: vec![1.0],
            cumulative: vec![1.0],
        }
    }

    fn build(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if let Some(&(x, w)) = atoms
            .iter()
            .find(|(x, w)| !x.is_finite() || !w.is_finite() || *w < 0.0)
        {
            return Err(Error::Numerical(format!("invalid atom ({x}, {w})")));
        }
        atoms.retain(|&(_, w)| w > 0.0);
        if atoms.is_empty() {
            return Err(Error::EmptyMeasure("no atoms with positive weight".into()));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut points: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match points.last() {
                Some(&last) if last == x => *weights.last_mut().unwrap() += w,
                _ => {
                    points.push(x);
                    weights.push(w);
                }
            }
        }
        let mut acc = CompensatedSum::default();
        let cumulative = weights
            .iter()
            .map(|&w| {
                acc.add(w);
                acc.value()
            })
            .collect();
        Ok(WeightedPointMeasure {
            points,
            weights,
            cumulative,
        })
    }

    /// Weighted mixture of measures; weights are normalised.
    pub fn mixture(parts: &[(f64, &WeightedPointMeasure)]) -> Result<Self> {
        let atoms = parts
            .iter()
            .flat_map(|(c, m)| m.atoms().map(move |(x, w)| (x, c * w)))
            .collect();
        Self::normalized(atoms)
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Mass of `[lo, hi)`.
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        (self.cdf_left(hi) - self.cdf_left(lo)).max(0.0)
    }

    /// Integral of `f` against the measure.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let mut acc = CompensatedSum::default();
        for (x, w) in self.atoms() {
            acc.add(w * f(x));
        }
        acc.value()
    }
}

impl Cdf for WeightedPointMeasure {
    fn cdf(&self, x: f64) -> f64 {
        let k = self.points.partition_point(|&p| p <= x);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    fn cdf_left(&self, x: f64) -> f64 {
        let k = self.points.partition_point(|&p| p < x);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    fn knots(&self) -> Vec<f64> {
        self.points.clone()
    }
}

/// Density with respect to Lebesgue measure, constant on each cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantDensity {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    cumulative: Vec<f64>,
}

impl PiecewiseConstantDensity {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 || values.len() + 1 != breakpoints.len() {
            return Err(Error::Parameter(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len().saturating_sub(1),
                values.len()
            )));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Parameter("breakpoints must increase strictly".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Parameter("density values must be finite and >= 0".into()));
        }
        let mut acc = CompensatedSum::default();
        let mut cumulative = Vec::with_capacity(breakpoints.len());
        cumulative.push(0.0);
        for (k, v) in values.iter().enumerate() {
            acc.add(v * (breakpoints[k + 1] - breakpoints[k]));
            cumulative.push(acc.value());
        }
        let total = acc.value();
        if (total - 1.0).abs() > DENSITY_MASS_TOL {
            return Err(Error::Numerical(format!("density integrates to {total}, not 1")));
        }
        Ok(PiecewiseConstantDensity {
            breakpoints,
            values,
            cumulative,
        })
    }

    /// Density from cell masses (normalised to total one).
    pub fn from_masses(breakpoints: Vec<f64>, masses: &[f64]) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(Error::EmptyMeasure("cell masses vanish".into()));
        }
        let values = masses
            .iter()
            .enumerate()
            .map(|(k, m)| m / total / (breakpoints[k + 1] - breakpoints[k]))
            .collect();
        Self::new(breakpoints, values)
    }

    /// Normalised Lebesgue measure on `x`.
    pub fn uniform(x: Interval) -> Self {
        Self::new(vec![x.lo(), x.hi()], vec![1.0 / x.length()]).expect("uniform density")
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> Interval {
        Interval::new(self.breakpoints[0], *self.breakpoints.last().unwrap()).expect("nonempty")
    }

    /// Cells as `(lo, hi, value)`.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, &v)| (w[0], w[1], v))
    }

    /// Density value, left-closed cells; zero outside the support.
    pub fn value_at(&self, x: f64) -> f64 {
        let n = self.values.len();
        if x < self.breakpoints[0] || x > self.breakpoints[n] {
            return 0.0;
        }
        let k = self.breakpoints.partition_point(|&b| b <= x);
        self.values[(k.max(1) - 1).min(n - 1)]
    }

    /// Measure of `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        (self.cdf(b) - self.cdf(a)).max(0.0)
    }

    /// Image of the density under `x -> lo + hi - x`.
    pub fn reflect(&self) -> Self {
        let (lo, hi) = (self.breakpoints[0], *self.breakpoints.last().unwrap());
        let breakpoints = self.breakpoints.iter().rev().map(|b| lo + hi - b).collect();
        let values = self.values.iter().rev().copied().collect();
        Self::new(breakpoints, values).expect("reflection preserves mass")
    }

    /// Sup-norm distance on the common refinement, skipping cells that come
    /// within `margin` of any point in `avoid`.
    pub fn sup_distance(&self, other: &PiecewiseConstantDensity, avoid: &[f64], margin: f64) -> f64 {
        let mut knots: Vec<f64> = self
            .breakpoints
            .iter()
            .chain(other.breakpoints.iter())
            .copied()
            .collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let lo = self.breakpoints[0].max(other.breakpoints[0]);
        let hi = self.breakpoints[self.breakpoints.len() - 1].min(other.breakpoints[other.breakpoints.len() - 1]);
        knots
            .windows(2)
            .filter(|w| w[1] > w[0] && w[0] >= lo && w[1] <= hi)
            .filter(|w| {
                !avoid
                    .iter()
                    .any(|&p| p > w[0] - margin && p < w[1] + margin)
            })
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                (self.value_at(mid) - other.value_at(mid)).abs()
            })
            .fold(0.0, f64::max)
    }
}

impl Cdf for PiecewiseConstantDensity {
    fn cdf(&self, x: f64) -> f64 {
        let n = self.values.len();
        if x <= self.breakpoints[0] {
            return 0.0;
        }
        if x >= self.breakpoints[n] {
            return self.cumulative[n];
        }
        let k = self.breakpoints.partition_point(|&b| b <= x) - 1;
        self.cumulative[k] + self.values[k] * (x - self.breakpoints[k])
    }

    fn cdf_left(&self, x: f64) -> f64 {
        self.cdf(x)
    }

    fn knots(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }
}

/// `sup_x |F_a(x) - F_b(x)|`, checked at every knot from both sides.
pub fn kolmogorov_distance(a: &dyn Cdf, b: &dyn Cdf) -> f64 {
    let mut knots = a.knots();
    knots.extend(b.knots());
    knots
        .into_iter()
        .map(|x| {
            let right = (a.cdf(x) - b.cdf(x)).abs();
            let left = (a.cdf_left(x) - b.cdf_left(x)).abs();
            right.max(left)
        })
        .fold(0.0, f64::max)
}

/// `sup_x sum_i p_i / |T_i'(x)|` over a uniform grid of `grid + 1` points
/// plus every partition point from both sides. Values below one certify
/// expansion on average.
pub fn pelikan_index(system: &RandomSystem, grid: usize) -> f64 {
    let x = system.ambient();
    let mut points: Vec<f64> = (0..=grid)
        .map(|k| x.lo() + x.length() * k as f64 / grid.max(1) as f64)
        .collect();
    for m in system.maps() {
        points.extend(m.partition_points());
    }
    let probs = system.probs();
    points
        .into_iter()
        .flat_map(|pt| [(pt, Side::Left), (pt, Side::Right)])
        .map(|(pt, side)| {
            system
                .maps()
                .iter()
                .zip(probs)
                .map(|(m, p)| {
                    let d = m.one_sided_derivative(pt, side).unwrap_or(f64::INFINITY);
                    p / d.abs()
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Uniform grid of `cells` cells with the nearest edge moved onto each
/// interior partition point of the system's maps.
fn ulam_grid(system: &RandomSystem, cells: usize) -> Vec<f64> {
    let x = system.ambient();
    let h = x.length() / cells as f64;
    let mut edges: Vec<f64> = (0..=cells).map(|j| x.lo() + h * j as f64).collect();
    edges[cells] = x.hi();
    let mut snapped = vec![false; cells + 1];
    let mut points: Vec<f64> = system
        .maps()
        .iter()
        .flat_map(|m| m.partition_points())
        .filter(|&p| p > x.lo() && p < x.hi())
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    for p in points {
        let j = ((p - x.lo()) / h).round() as usize;
        if j == 0 || j >= cells || snapped[j] {
            continue;
        }
        if p > edges[j - 1] && p < edges[j + 1] {
            edges[j] = p;
            snapped[j] = true;
        }
    }
    edges
}

/// Row-stochastic Ulam matrix of the averaged transfer operator, rows as
/// sparse `(column, probability)` lists.
pub fn ulam_matrix(system: &RandomSystem, edges: &[f64]) -> Vec<Vec<(usize, f64)>> {
    let cells = edges.len() - 1;
    let find_cell = |y: f64| -> usize {
        let k = edges.partition_point(|&e| e <= y);
        (k.max(1) - 1).min(cells - 1)
    };
    (0..cells)
        .into_par_iter()
        .map(|j| {
            let (a, b) = (edges[j], edges[j + 1]);
            let len = b - a;
            let mut row: Vec<(usize, f64)> = Vec::new();
            for (map, &p) in system.maps().iter().zip(system.probs()) {
                for br in map.branches() {
                    let d = br.domain();
                    let (s0, s1) = (a.max(d.lo()), b.min(d.hi()));
                    if s1 <= s0 {
                        continue;
                    }
                    let (y0, y1) = {
                        let (u, v) = (br.value(s0), br.value(s1));
                        (u.min(v), u.max(v))
                    };
                    let first = find_cell(y0);
                    let last = find_cell(y1);
                    for k in first..=last {
                        let t0 = y0.max(edges[k]);
                        let t1 = y1.min(edges[k + 1]);
                        if t1 <= t0 {
                            continue;
                        }
                        let pre = (br.inverse(t1) - br.inverse(t0)).abs();
                        let w = p * pre / len;
                        if w > 0.0 {
                            match row.iter_mut().find(|(c, _)| *c == k) {
                                Some(entry) => entry.1 += w,
                                None => row.push((k, w)),
                            }
                        }
                    }
                }
            }
            let total: f64 = row.iter().map(|e| e.1).sum();
            for e in &mut row {
                e.1 /= total;
            }
            row.sort_by_key(|e| e.0);
            row
        })
        .collect()
}

/// Stationary density of the averaged transfer operator by Ulam's method:
/// power iteration from the uniform density until the L1 change of the cell
/// masses drops below `tol`.
pub fn ulam_stationary(
    system: &RandomSystem,
    cells: usize,
    tol: f64,
    max_iter: usize,
) -> Result<PiecewiseConstantDensity> {
    if cells < 2 {
        return Err(Error::Parameter(format!("Ulam needs at least 2 cells, got {cells}")));
    }
    let edges = ulam_grid(system, cells);
    let rows = ulam_matrix(system, &edges);
    let total = system.ambient().length();
    let mut mass: Vec<f64> = edges.windows(2).map(|w| (w[1] - w[0]) / total).collect();
    let mut next = vec![0.0; cells];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (j, row) in rows.iter().enumerate() {
            let m = mass[j];
            if m == 0.0 {
                continue;
            }
            for &(k, w) in row {
                next[k] += m * w;
            }
        }
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= s);
        residual = mass.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut mass, &mut next);
        if residual < tol {
            return PiecewiseConstantDensity::from_masses(edges, &mass);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}
