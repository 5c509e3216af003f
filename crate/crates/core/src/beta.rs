//! The random β-transformation: greedy and lazy maps on
//! `X = [0, ⌊β⌋/(β-1)]`, digits of random β-expansions, and the statistics
//! built from them.

use crate::cycles::Cycle;
use crate::error::{Error, Result};
use crate::maps::{Branch, BranchKind, Interval, MarkovMap};
use crate::measures::{PiecewiseConstantDensity, WeightedPointMeasure};
use crate::symbolic::{RandomSystem, SampleWord, SymbolicSystem};

const ORBIT_SNAP: f64 = 1e-9;
const MERGE_TOL: f64 = 1e-12;

pub fn golden_ratio() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

fn upper_end(beta: f64) -> f64 {
    beta.floor() / (beta - 1.0)
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 1.0 && beta.is_finite()) || beta.fract() == 0.0 {
        return Err(Error::Parameter(format!(
            "beta must be a non-integer > 1, got {beta}"
        )));
    }
    Ok(())
}

/// Greedy digit of the branch containing `x`: `⌊βx⌋` below 1, `⌊β⌋` above.
fn greedy_offset(beta: f64, x: f64) -> i64 {
    let fb = beta.floor() as i64;
    if x < 1.0 {
        ((beta * x).floor() as i64).min(fb)
    } else {
        fb
    }
}

/// Orbit of 1 under the greedy map, ending at 0. Products within 1e-9 of
/// an integer are snapped onto it.
pub fn greedy_orbit_of_one(beta: f64, depth_bound: usize) -> Result<Vec<f64>> {
    check_beta(beta)?;
    let fb = beta.floor();
    let mut orbit = vec![1.0];
    let mut x = 1.0f64;
    for _ in 0..depth_bound {
        let mut y = beta * x;
        if (y - y.round()).abs() <= ORBIT_SNAP {
            y = y.round();
        }
        x = if x < 1.0 { y - y.floor() } else { y - fb };
        if x.abs() <= ORBIT_SNAP {
            orbit.push(0.0);
            return Ok(orbit);
        }
        orbit.push(x);
    }
    Err(Error::InfiniteExpansion { depth: depth_bound })
}

fn merge_points(mut pts: Vec<f64>) -> Vec<f64> {
    pts.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(pts.len());
    for p in pts {
        match out.last() {
            Some(&last) if (p - last).abs() <= MERGE_TOL => {}
            _ => out.push(p),
        }
    }
    out
}

/// Markov partition shared by the greedy and lazy maps: `0`, the upper end,
/// the cuts `k/β` and `1`, the greedy orbit of 1, and all their reflections,
/// closed under branch images until stable.
pub fn beta_partition(beta: f64, depth_bound: usize) -> Result<Vec<f64>> {
    let orbit = greedy_orbit_of_one(beta, depth_bound)?;
    let c = upper_end(beta);
    let fb = beta.floor() as i64;
    let mut canonical = vec![0.0, c];
    canonical.extend((1..=fb).map(|k| k as f64));
    canonical.extend((1..=fb).map(|k| k as f64 / beta));
    let mut pts = canonical.clone();
    pts.extend(orbit);
    // rounding in reflections must not displace the exact cuts
    let snap = |x: f64| {
        canonical
            .iter()
            .copied()
            .find(|k| (k - x).abs() <= MERGE_TOL)
            .unwrap_or(x)
    };
    let reflect = |p: &Vec<f64>| -> Vec<f64> {
        let mut all = p.clone();
        all.extend(p.iter().map(|x| c - x));
        merge_points(
            all.into_iter()
                .filter(|x| *x >= -MERGE_TOL && *x <= c + MERGE_TOL)
                .map(|x| snap(x.clamp(0.0, c)))
                .collect(),
        )
    };
    let mut pts = reflect(&pts);
    for _ in 0..depth_bound {
        let mut missing = Vec::new();
        for map in [build_map(beta, &pts, false)?, build_map(beta, &pts, true)?] {
            for b in map.branches() {
                let img = b.image();
                for y in [img.lo(), img.hi()] {
                    if !pts.iter().any(|p| (p - y).abs() <= ORBIT_SNAP) {
                        missing.push(y);
                    }
                }
            }
        }
        if missing.is_empty() {
            return Ok(pts);
        }
        pts.extend(missing);
        pts = reflect(&pts);
    }
    Err(Error::InfiniteExpansion { depth: depth_bound })
}

fn build_map(beta: f64, partition: &[f64], lazy: bool) -> Result<MarkovMap> {
    let c = upper_end(beta);
    let fb = beta.floor() as i64;
    let ambient = Interval::new(0.0, c)?;
    let branches = partition
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let mid = 0.5 * (w[0] + w[1]);
            let offset = if lazy {
                fb - greedy_offset(beta, c - mid)
            } else {
                greedy_offset(beta, mid)
            };
            Branch::new(Interval::new(w[0], w[1])?, BranchKind::BetaPiece { beta, offset }, k + 1)
        })
        .collect::<Result<Vec<_>>>()?;
    MarkovMap::new(ambient, branches, Vec::new())
}

/// Greedy map `T_1` on its Markov partition.
pub fn greedy_map(beta: f64, depth_bound: usize) -> Result<MarkovMap> {
    build_map(beta, &beta_partition(beta, depth_bound)?, false)
}

/// Lazy map `T_2 = u ∘ T_1 ∘ u` on the same partition.
pub fn lazy_map(beta: f64, depth_bound: usize) -> Result<MarkovMap> {
    build_map(beta, &beta_partition(beta, depth_bound)?, true)
}

/// Golden-ratio random β-transformation with probabilities `p`.
pub fn golden_system(p: &[f64]) -> Result<RandomSystem> {
    Ok(BetaSystem::new(golden_ratio(), p, crate::tolerances::BETA_DEPTH_BOUND)?.system)
}

#[derive(Debug, Clone)]
pub struct BetaSystem {
    beta: f64,
    system: RandomSystem,
    greedy_orbit_of_one: Vec<f64>,
    partition: Vec<f64>,
}

impl BetaSystem {
    /// Greedy (map 0) and lazy (map 1) β-maps chosen with probabilities
    /// `p = (p_1, p_2)`.
    pub fn new(beta: f64, p: &[f64], depth_bound: usize) -> Result<Self> {
        let greedy_orbit_of_one = greedy_orbit_of_one(beta, depth_bound)?;
        let partition = beta_partition(beta, depth_bound)?;
        let greedy = build_map(beta, &partition, false)?;
        let lazy = build_map(beta, &partition, true)?;
        for (name, m) in [("greedy", &greedy), ("lazy", &lazy)] {
            let report = m.validate_markov(crate::tolerances::MARKOV_TOL);
            if !report.passed {
                return Err(Error::Consistency(format!(
                    "{name} map for beta = {beta} is not Markov (mismatch {:.3e})",
                    report.max_endpoint_mismatch()
                )));
            }
        }
        let system = RandomSystem::new(vec![greedy, lazy], p.to_vec())?;
        let bs = BetaSystem {
            beta,
            system,
            greedy_orbit_of_one,
            partition,
        };
        bs.check_conjugacy()?;
        Ok(bs)
    }

    /// `T_2 = u ∘ T_1 ∘ u` on a grid, away from partition points where the
    /// half-open conventions of the two maps differ.
    fn check_conjugacy(&self) -> Result<()> {
        let c = self.upper();
        let [greedy, lazy] = [&self.system.maps()[0], &self.system.maps()[1]];
        for k in 1..1000 {
            let x = c * k as f64 / 1000.0;
            if self.partition.iter().any(|p| (p - x).abs() < 1e-9) {
                continue;
            }
            let direct = lazy.evaluate(x)?.value;
            let conj = c - greedy.evaluate(c - x)?.value;
            if (direct - conj).abs() > 1e-10 {
                return Err(Error::Consistency(format!(
                    "lazy map differs from u T1 u at {x}: {direct} vs {conj}"
                )));
            }
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn max_digit(&self) -> u32 {
        self.beta.floor() as u32
    }

    /// Right end `⌊β⌋/(β-1)` of `X`.
    pub fn upper(&self) -> f64 {
        upper_end(self.beta)
    }

    /// The reflection `u(x) = ⌊β⌋/(β-1) - x`.
    pub fn reflect(&self, x: f64) -> f64 {
        self.upper() - x
    }

    pub fn system(&self) -> &RandomSystem {
        &self.system
    }

    pub fn into_system(self) -> RandomSystem {
        self.system
    }

    pub fn greedy_orbit_of_one(&self) -> &[f64] {
        &self.greedy_orbit_of_one
    }

    pub fn partition(&self) -> &[f64] {
        &self.partition
    }

    /// Digit `e_i(x)`: the offset of the branch of map `i` containing `x`.
    pub fn digit(&self, map: usize, x: f64) -> Result<u32> {
        let m = &self.system.maps()[map];
        match m.branches()[m.branch_index(x)?].kind() {
            BranchKind::BetaPiece { offset, .. } => Ok(offset as u32),
            other => Err(Error::Consistency(format!("non-beta branch {other:?}"))),
        }
    }

    /// The digit functions written out: `e_1(x) = ⌊βx⌋` on `[0, ⌊β⌋/β)`
    /// and `⌊β⌋` beyond; `e_2(x) = ⌊β⌋ - e_1(u(x))`.
    pub fn digit_formula(&self, map: usize, x: f64) -> u32 {
        let fb = self.beta.floor();
        let e1 = |y: f64| {
            if y < fb / self.beta {
                (self.beta * y).floor().min(fb) as u32
            } else {
                fb as u32
            }
        };
        if map == 0 {
            e1(x)
        } else {
            fb as u32 - e1(self.reflect(x))
        }
    }

    /// Digit cells `L_i` as `[lo, hi]` intervals.
    pub fn digit_cells(&self) -> Vec<(f64, f64)> {
        let fb = self.max_digit();
        (0..=fb)
            .map(|i| {
                let lo = i as f64 / self.beta;
                let hi = if i < fb {
                    (i + 1) as f64 / self.beta
                } else {
                    self.upper()
                };
                (lo, hi)
            })
            .collect()
    }
}

/// Digits of a random β-expansion together with their source.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitSequence {
    pub digits: Vec<u32>,
    pub omega: SampleWord,
    pub x: f64,
}

impl DigitSequence {
    /// Digits read off the branches a cycle's word passes through.
    pub fn from_cycle(sym: &SymbolicSystem, cycle: &Cycle) -> Result<Self> {
        let digits = cycle
            .word
            .iter()
            .map(|&a| match sym.branch(a).kind() {
                BranchKind::BetaPiece { offset, .. } => Ok(offset as u32),
                other => Err(Error::Consistency(format!("non-beta branch {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DigitSequence {
            digits,
            omega: sym.maps_of(&cycle.word),
            x: cycle.point,
        })
    }

    /// Digits `e_{ω_k}(T_ω^{k-1} x)` along the orbit of `x`; also returns
    /// the final point `T_ω^n x`.
    pub fn from_orbit(bs: &BetaSystem, omega: &SampleWord, x: f64) -> Result<(Self, f64)> {
        let mut y = x;
        let mut digits = Vec::with_capacity(omega.len());
        for &i in omega.letters() {
            let e = bs.system.maps()[i].evaluate(y)?;
            digits.push(bs.digit(i, y)?);
            y = e.value;
        }
        Ok((
            DigitSequence {
                digits,
                omega: omega.clone(),
                x,
            },
            y,
        ))
    }

    /// `sum_k d_k β^{-k} + β^{-n} tail`.
    pub fn reconstruct(&self, beta: f64, tail: f64) -> f64 {
        let mut scale = 1.0;
        let mut acc = 0.0;
        for &d in &self.digits {
            scale /= beta;
            acc += d as f64 * scale;
        }
        acc + scale * tail
    }
}

/// Relative digit frequencies, symmetric mean and mean distance of a block.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitStats {
    pub freq: Vec<f64>,
    pub symmetric_mean: f64,
    pub mean_distance: f64,
}

/// Statistics of `digits` over the alphabet `0..=max_digit`.
pub fn digit_stats(digits: &[u32], max_digit: u32) -> Result<DigitStats> {
    let n = digits.len();
    if n < 2 {
        return Err(Error::Parameter(format!(
            "symmetric mean and mean distance need at least 2 digits, got {n}"
        )));
    }
    let mut counts = vec![0u64; max_digit as usize + 1];
    for &d in digits {
        if d > max_digit {
            return Err(Error::Parameter(format!("digit {d} exceeds {max_digit}")));
        }
        counts[d as usize] += 1;
    }
    let nf = n as f64;
    let pairs = nf * (nf - 1.0) / 2.0;
    let sum: f64 = digits.iter().map(|&d| d as f64).sum();
    let sum_sq: f64 = digits.iter().map(|&d| (d as f64).powi(2)).sum();
    // sum_{i<j} a_i a_j = ((sum a)^2 - sum a^2) / 2
    let symmetric_mean = (sum * sum - sum_sq) / 2.0 / pairs;
    let mut dist = 0.0;
    for i in 0..counts.len() {
        for j in i + 1..counts.len() {
            dist += (j - i) as f64 * counts[i] as f64 * counts[j] as f64;
        }
    }
    Ok(DigitStats {
        freq: counts.iter().map(|&c| c as f64 / nf).collect(),
        symmetric_mean,
        mean_distance: dist / pairs,
    })
}

/// Closed-form digit frequencies for the golden ratio:
/// `q_i = (1 + (2 p_{i+1} - 1)/√5) / 2`.
pub fn q_closed_form_golden(p1: f64) -> (f64, f64) {
    let s5 = 5f64.sqrt();
    let q0 = 0.5 * (1.0 + (2.0 * p1 - 1.0) / s5);
    let q1 = 0.5 * (1.0 + (2.0 * (1.0 - p1) - 1.0) / s5);
    (q0, q1)
}

/// Stationary density of the golden random β-transformation with respect
/// to Lebesgue measure on `[0, β]`:
/// `(p_1 β, 1, (1 - p_1) β) / (3 - β)` on `[0,1/β)`, `[1/β,1)`, `[1,β]`.
pub fn golden_density(p1: f64) -> PiecewiseConstantDensity {
    let beta = golden_ratio();
    let norm = 3.0 - beta;
    PiecewiseConstantDensity::new(
        vec![0.0, 1.0 / beta, 1.0, upper_end(beta)],
        vec![p1 * beta / norm, 1.0 / norm, (1.0 - p1) * beta / norm],
    )
    .expect("golden density integrates to one")
}

/// `q_i = p_1 λ(L_i) + p_2 λ(u(L_{⌊β⌋-i}))` for the stationary measure `λ`
/// with the given density.
pub fn q_from_density(bs: &BetaSystem, p: &[f64], density: &PiecewiseConstantDensity) -> Vec<f64> {
    let cells = bs.digit_cells();
    let fb = bs.max_digit() as usize;
    (0..=fb)
        .map(|i| {
            let (lo, hi) = cells[i];
            let (rlo, rhi) = cells[fb - i];
            p[0] * density.integrate(lo, hi)
                + p[1] * density.integrate(bs.reflect(rhi), bs.reflect(rlo))
        })
        .collect()
}

/// Limit of the averaged symmetric mean: `(sum_i i q_i)^2`.
pub fn symmetric_mean_limit(q: &[f64]) -> f64 {
    q.iter().enumerate().map(|(i, qi)| i as f64 * qi).sum::<f64>().powi(2)
}

/// Limit of the averaged mean distance: `2 sum_{i<j} (j - i) q_i q_j`.
pub fn mean_distance_limit(q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..q.len() {
        for j in i + 1..q.len() {
            acc += (j - i) as f64 * q[i] * q[j];
        }
    }
    2.0 * acc
}

/// Empirical law of `a_i - a_j` over all ordered pairs.
pub fn digit_difference_distribution(digits: &[u32], max_digit: u32) -> Result<WeightedPointMeasure> {
    let mut counts = vec![0.0f64; max_digit as usize + 1];
    for &d in digits {
        counts[d as usize] += 1.0;
    }
    difference_measure(&counts)
}

/// `sum_{i,j} q_i q_j δ_{i-j}`.
pub fn difference_limit(q: &[f64]) -> Result<WeightedPointMeasure> {
    difference_measure(q)
}

fn difference_measure(w: &[f64]) -> Result<WeightedPointMeasure> {
    let mut atoms = Vec::new();
    for (i, wi) in w.iter().enumerate() {
        for (j, wj) in w.iter().enumerate() {
            atoms.push((i as f64 - j as f64, wi * wj));
        }
    }
    WeightedPointMeasure::normalized(atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{kolmogorov_distance, Cdf};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn golden_partition_and_orbit() {
        let beta = golden_ratio();
        let bs = BetaSystem::new(beta, &[0.5, 0.5], 64).unwrap();
        let orbit = bs.greedy_orbit_of_one();
        assert_eq!(orbit.len(), 3);
        assert_relative_eq!(orbit[1], 1.0 / beta, epsilon = 1e-12);
        assert_eq!(orbit[2], 0.0);
        let part = bs.partition();
        assert_eq!(part.len(), 4);
        for (got, want) in part.iter().zip([0.0, 1.0 / beta, 1.0, beta]) {
            assert_relative_eq!(*got, want, epsilon = 1e-14);
        }
        for m in bs.system().maps() {
            assert_eq!(m.branches().len(), 3);
            for b in m.branches() {
                assert!(matches!(b.kind(), BranchKind::BetaPiece { beta: s, .. } if s == beta));
            }
        }
    }

    #[test]
    fn sqrt2_expansion_is_not_finite_at_depth_3() {
        assert!(matches!(
            BetaSystem::new(2f64.sqrt(), &[0.5, 0.5], 3),
            Err(Error::InfiniteExpansion { depth: 3 })
        ));
    }

    #[test]
    fn integer_beta_rejected() {
        assert!(matches!(BetaSystem::new(2.0, &[0.5, 0.5], 64), Err(Error::Parameter(_))));
    }

    #[test]
    fn silver_ratio_system() {
        // 1 + sqrt(2): 1 = 2/β + 1/β², two digits plus zero
        let beta = 1.0 + 2f64.sqrt();
        let bs = BetaSystem::new(beta, &[0.4, 0.6], 64).unwrap();
        assert_eq!(bs.max_digit(), 2);
        assert_eq!(bs.greedy_orbit_of_one().len(), 3);
        for m in bs.system().maps() {
            assert!(m.validate_markov(1e-9).passed);
        }
        let sym = SymbolicSystem::new(bs.system().clone(), 1e-9).unwrap();
        assert!(sym.mixing_index().is_some());
    }

    #[test]
    fn tribonacci_system() {
        // 1 = 1/β + 1/β² + 1/β³
        let mut beta: f64 = 1.8;
        for _ in 0..100 {
            beta -= (beta.powi(3) - beta.powi(2) - beta - 1.0) / (3.0 * beta * beta - 2.0 * beta - 1.0);
        }
        let bs = BetaSystem::new(beta, &[0.5, 0.5], 64).unwrap();
        assert_eq!(bs.greedy_orbit_of_one().len(), 4);
        SymbolicSystem::new(bs.system().clone(), 1e-9).unwrap();
    }

    #[test]
    fn digit_branch_offsets_match_formulas_off_the_partition() {
        for beta in [golden_ratio(), 1.0 + 2f64.sqrt()] {
            let bs = BetaSystem::new(beta, &[0.5, 0.5], 64).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            for _ in 0..2000 {
                let x = rng.gen::<f64>() * bs.upper();
                for map in 0..2 {
                    assert_eq!(bs.digit(map, x).unwrap(), bs.digit_formula(map, x), "x = {x}");
                }
            }
        }
    }

    #[test]
    fn greedy_digits_of_inverse_golden() {
        let beta = golden_ratio();
        let bs = BetaSystem::new(beta, &[0.5, 0.5], 64).unwrap();
        let (ds, _) = DigitSequence::from_orbit(&bs, &SampleWord::constant(0, 6), 1.0 / beta).unwrap();
        assert_eq!(ds.digits, vec![1, 0, 0, 0, 0, 0]);
        let (ds, _) = DigitSequence::from_orbit(&bs, &SampleWord::constant(0, 6), 0.0).unwrap();
        assert!(ds.digits.iter().all(|&d| d == 0));
    }

    #[test]
    fn orbit_digits_reconstruct() {
        let bs = BetaSystem::new(golden_ratio(), &[0.7, 0.3], 64).unwrap();
        let omega = SampleWord::sample(&[0.7, 0.3], 30, 5).unwrap();
        for x in [0.1, 0.77, 1.3, 1.6] {
            let (ds, tail) = DigitSequence::from_orbit(&bs, &omega, x).unwrap();
            assert!((ds.reconstruct(bs.beta(), tail) - x).abs() < 1e-9);
        }
    }

    #[test]
    fn digit_stats_examples() {
        let s = digit_stats(&[1, 0, 1], 1).unwrap();
        assert_relative_eq!(s.freq[0], 1.0 / 3.0);
        assert_relative_eq!(s.freq[1], 2.0 / 3.0);
        assert_relative_eq!(s.symmetric_mean, 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(s.mean_distance, 2.0 / 3.0, epsilon = 1e-15);
        let s = digit_stats(&[2, 2, 2, 2], 2).unwrap();
        assert_relative_eq!(s.symmetric_mean, 4.0);
        assert_eq!(s.mean_distance, 0.0);
        let s = digit_stats(&[0, 0, 0], 1).unwrap();
        assert_eq!((s.symmetric_mean, s.mean_distance), (0.0, 0.0));
        assert!(digit_stats(&[1], 1).is_err());
    }

    #[test]
    fn digit_stats_match_pair_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let digits: Vec<u32> = (0..57).map(|_| rng.gen_range(0..3)).collect();
        let n = digits.len() as f64;
        let (mut prod, mut dist) = (0.0, 0.0);
        for i in 0..digits.len() {
            for j in i + 1..digits.len() {
                prod += (digits[i] * digits[j]) as f64;
                dist += (digits[i] as f64 - digits[j] as f64).abs();
            }
        }
        let s = digit_stats(&digits, 2).unwrap();
        assert_relative_eq!(s.symmetric_mean, 2.0 * prod / (n * (n - 1.0)), epsilon = 1e-12);
        assert_relative_eq!(s.mean_distance, 2.0 * dist / (n * (n - 1.0)), epsilon = 1e-12);
    }

    #[test]
    fn closed_form_q() {
        assert_eq!(q_closed_form_golden(0.5), (0.5, 0.5));
        let (q0, q1) = q_closed_form_golden(0.7);
        assert_relative_eq!(q0, 0.5894427, epsilon = 1e-7);
        assert_relative_eq!(q1, 0.4105573, epsilon = 1e-7);
        assert_relative_eq!(q0 + q1, 1.0, epsilon = 1e-15);
        let (q0, _) = q_closed_form_golden(1.0);
        assert_relative_eq!(q0, (5.0 + 5f64.sqrt()) / 10.0, epsilon = 1e-15);
        assert_relative_eq!(q0, 0.7236068, epsilon = 1e-7);
    }

    #[test]
    fn golden_density_properties() {
        let beta = golden_ratio();
        for p1 in [0.0, 0.2, 0.5, 0.7, 1.0] {
            let d = golden_density(p1);
            assert_relative_eq!(d.cdf(beta), 1.0, epsilon = 1e-14);
        }
        // p1 = 1 is the Parry density (β on [0,1/β), 1 on [1/β,1)) up to scale
        let d = golden_density(1.0);
        assert_relative_eq!(d.values()[0] / d.values()[1], beta, epsilon = 1e-14);
        assert_eq!(d.values()[2], 0.0);
        // p1 = 1/2 is symmetric under u
        let d = golden_density(0.5);
        let r = d.reflect();
        for x in [0.1, 0.5, 0.9, 1.2, 1.5] {
            assert_relative_eq!(d.value_at(x), r.value_at(x), epsilon = 1e-14);
        }
    }

    #[test]
    fn q_from_golden_density_matches_closed_form() {
        let bs = BetaSystem::new(golden_ratio(), &[0.7, 0.3], 64).unwrap();
        let q = q_from_density(&bs, &[0.7, 0.3], &golden_density(0.7));
        let (q0, q1) = q_closed_form_golden(0.7);
        assert_relative_eq!(q[0], q0, epsilon = 1e-12);
        assert_relative_eq!(q[1], q1, epsilon = 1e-12);
        assert_relative_eq!(q[0], 0.5894427, epsilon = 1e-7);
        for p1 in [0.1, 0.35, 0.9] {
            let q = q_from_density(&bs, &[p1, 1.0 - p1], &golden_density(p1));
            assert_relative_eq!(q[0], q_closed_form_golden(p1).0, epsilon = 1e-12);
        }
    }

    #[test]
    fn q_sums_to_one_and_symmetric_case() {
        let bs = BetaSystem::new(golden_ratio(), &[0.5, 0.5], 64).unwrap();
        let dens = golden_density(0.5);
        let q = q_from_density(&bs, &[0.5, 0.5], &dens);
        assert_relative_eq!(q[0], 0.5, epsilon = 1e-12);
        let lopsided =
            PiecewiseConstantDensity::new(vec![0.0, 0.3, golden_ratio()], vec![2.0, 1.0 / (golden_ratio() - 0.3) * 0.4]).unwrap();
        let q = q_from_density(&bs, &[0.2, 0.8], &lopsided);
        assert_relative_eq!(q.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn limit_targets() {
        let (q0, q1) = q_closed_form_golden(0.7);
        // (sum i q_i)^2 and 2 sum_{i<j} (j - i) q_i q_j for two digits
        assert_relative_eq!(symmetric_mean_limit(&[q0, q1]), q1 * q1, epsilon = 1e-15);
        assert_relative_eq!(mean_distance_limit(&[q0, q1]), 2.0 * q0 * q1, epsilon = 1e-15);
        assert_relative_eq!(symmetric_mean_limit(&[q0, q1]), 0.1685573, epsilon = 1e-7);
        assert_relative_eq!(mean_distance_limit(&[q0, q1]), 0.4840043, epsilon = 1e-5);
    }

    #[test]
    fn long_orbit_digit_differences_follow_convolution() {
        let beta = golden_ratio();
        let p = [0.7, 0.3];
        let bs = BetaSystem::new(beta, &p, 64).unwrap();
        let (q0, q1) = q_closed_form_golden(0.7);
        let target = difference_limit(&[q0, q1]).unwrap();
        let mut total = 0.0;
        let seeds = 3;
        for seed in 0..seeds {
            let omega = SampleWord::sample(&p, 1_000_000, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let x = rng.gen::<f64>() * beta;
            let (ds, _) = DigitSequence::from_orbit(&bs, &omega, x).unwrap();
            let emp = digit_difference_distribution(&ds.digits, 1).unwrap();
            total += kolmogorov_distance(&emp, &target);
        }
        let avg = total / seeds as f64;
        assert!(avg <= 0.02, "distance {avg}");
    }
}
