//! Random cycles: points `x` with `T_ω^n(x) = x`, one per cylinder, their
//! derivative weights `|(T_ω^n)'x|^{-1}`, and the measures and averages
//! built from them.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{log_sum_exp, WeightedPointMeasure};
use crate::symbolic::{SampleWord, Span, SymbolicSystem};
use crate::tolerances::{CYCLE_TOL, DEDUPE_TOL, ENUMERATION_GUARD};

/// A random cycle found in the cylinder of `word`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cycle {
    pub word: Vec<usize>,
    pub point: f64,
    /// `-sum_k log|T'_{ω_{k+1}}(T_ω^k x)|`
    pub log_weight: f64,
    /// `x, T_ω x, ..., T_ω^{n-1} x`
    pub orbit: Vec<f64>,
}

impl Cycle {
    pub fn weight(&self) -> f64 {
        self.log_weight.exp()
    }

    pub fn period(&self) -> usize {
        self.word.len()
    }
}

/// All random cycles of period `n` for one sample word.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleSet {
    pub omega: SampleWord,
    /// Sorted by word.
    pub cycles: Vec<Cycle>,
    /// `log Z_{ω,n}`; `-inf` when there are no cycles.
    pub log_z: f64,
    /// Cycles dropped because another cylinder found the same point.
    pub duplicates_removed: usize,
}

impl CycleSet {
    pub fn period(&self) -> usize {
        self.omega.len()
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn z(&self) -> f64 {
        self.log_z.exp()
    }

    /// `w(x) / Z_{ω,n}`
    pub fn normalized_weight(&self, c: &Cycle) -> f64 {
        (c.log_weight - self.log_z).exp()
    }

    pub fn points(&self) -> Vec<f64> {
        self.cycles.iter().map(|c| c.point).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationOptions {
    pub dedupe: bool,
    pub dedupe_tol: f64,
    /// Worker threads; `None` uses the ambient rayon pool.
    pub threads: Option<usize>,
    /// Refuse enumerations estimated above this many words.
    pub guard: f64,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            dedupe: true,
            dedupe_tol: DEDUPE_TOL,
            threads: None,
            guard: ENUMERATION_GUARD,
        }
    }
}

impl EnumerationOptions {
    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    pub fn without_dedupe(mut self) -> Self {
        self.dedupe = false;
        self
    }

    fn run<T: Send>(&self, job: impl FnOnce() -> T + Send) -> Result<T> {
        match self.threads {
            Some(t) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(t.max(1))
                    .build()
                    .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
                Ok(pool.install(job))
            }
            None => Ok(job()),
        }
    }
}

/// `f_{a_1...a_n}(x)` and its derivative through the word's branch formulas.
/// Intermediate points are clamped to each branch domain so that rounding at
/// a cylinder end cannot leave it.
fn compose(sym: &SymbolicSystem, word: &[usize], x: f64) -> (f64, f64) {
    let mut y = x;
    let mut d = 1.0;
    for &a in word {
        let b = sym.branch(a);
        y = y.clamp(b.domain().lo(), b.domain().hi());
        d *= b.derivative(y);
        y = b.value(y);
    }
    (y, d)
}

fn build_cycle(sym: &SymbolicSystem, word: &[usize], x: f64) -> Cycle {
    let mut orbit = Vec::with_capacity(word.len());
    let mut y = x;
    let mut log_weight = 0.0;
    for &a in word {
        let b = sym.branch(a);
        y = y.clamp(b.domain().lo(), b.domain().hi());
        orbit.push(y);
        log_weight -= b.derivative(y).abs().ln();
        y = b.value(y);
    }
    Cycle {
        word: word.to_vec(),
        point: x,
        log_weight,
        orbit,
    }
}

/// Unique fixed point of `f_word` on the closure of its cylinder, if any.
///
/// A root sitting on an open end of the cylinder belongs to the neighbouring
/// cylinder and is not reported here.
fn solve_on_cylinder(sym: &SymbolicSystem, word: &[usize], span: Span) -> Option<Cycle> {
    let (lo, hi) = (span.lo, span.hi);
    let g = |x: f64| compose(sym, word, x).0 - x;
    let (f_lo, d_lo) = compose(sym, word, lo);
    let (f_hi, d_hi) = compose(sym, word, hi);
    let (g_lo, g_hi) = (f_lo - lo, f_hi - hi);
    let zero_at = |gv: f64, d: f64, x: f64| gv.abs() <= CYCLE_TOL * (1.0 + d.abs()) * x.abs().max(1.0);
    let x_tol = CYCLE_TOL * lo.abs().max(hi.abs()).max(1.0);

    let root = if zero_at(g_lo, d_lo, lo) {
        if !span.lo_closed {
            return None;
        }
        lo
    } else if zero_at(g_hi, d_hi, hi) {
        if !span.hi_closed {
            return None;
        }
        hi
    } else if (g_lo < 0.0) != (g_hi < 0.0) {
        let (a, b) = crate::roots::bisect_sign_change(g, lo, hi, g_lo, CYCLE_TOL);
        let mut x = 0.5 * (a + b);
        // one Newton step with the chain-rule derivative
        let (fx, dx) = compose(sym, word, x);
        if dx != 1.0 {
            let polished = x - (fx - x) / (dx - 1.0);
            if polished >= a && polished <= b {
                x = polished;
            }
        }
        if (!span.lo_closed && x - lo <= x_tol) || (!span.hi_closed && hi - x <= x_tol) {
            return None;
        }
        x
    } else {
        return None;
    };
    Some(build_cycle(sym, word, root))
}

/// Fixed point of `f_{a_1...a_n}` in the cylinder of an admissible word.
pub fn find_cycle_in_cylinder(sym: &SymbolicSystem, word: &[usize]) -> Result<Option<Cycle>> {
    let cyl = sym.cylinder(word)?;
    let span = Span {
        lo: cyl.interval.lo(),
        hi: cyl.interval.hi(),
        lo_closed: cyl.lo_closed,
        hi_closed: cyl.hi_closed,
    };
    Ok(solve_on_cylinder(sym, word, span))
}

/// Backward depth-first search: fills `word[pos]` with symbols of map
/// `omega[pos]` that may precede `word[pos + 1]`, carrying the cylinder.
fn search_back(
    sym: &SymbolicSystem,
    omega: &[usize],
    pos: usize,
    span: Span,
    word: &mut Vec<usize>,
    out: &mut Vec<Cycle>,
) {
    let next = word[pos + 1];
    for a in sym.alphabet().symbols_of(omega[pos]) {
        if !sym.matrix().get(a, next) {
            continue;
        }
        let Some(pulled) = sym.pull_back(a, span) else {
            continue;
        };
        word[pos] = a;
        if pos == 0 {
            if let Some(c) = solve_on_cylinder(sym, word, pulled) {
                out.push(c);
            }
        } else {
            search_back(sym, omega, pos - 1, pulled, word, out);
        }
    }
}

/// Suffixes of length up to `depth`, with their spans, used as independent
/// work units.
fn work_units(sym: &SymbolicSystem, omega: &[usize], depth: usize) -> Vec<(Vec<usize>, Span)> {
    let n = omega.len();
    let mut units: Vec<(Vec<usize>, Span)> = sym
        .alphabet()
        .symbols_of(omega[n - 1])
        .map(|a| (vec![a], sym.cell_span(a)))
        .collect();
    for level in 1..depth.min(n) {
        let pos = n - 1 - level;
        let mut next_units = Vec::new();
        for (suffix, span) in &units {
            for a in sym.alphabet().symbols_of(omega[pos]) {
                if !sym.matrix().get(a, suffix[0]) {
                    continue;
                }
                if let Some(pulled) = sym.pull_back(a, *span) {
                    let mut s = Vec::with_capacity(suffix.len() + 1);
                    s.push(a);
                    s.extend_from_slice(suffix);
                    next_units.push((s, pulled));
                }
            }
        }
        units = next_units;
    }
    units
}

fn collect_raw(sym: &SymbolicSystem, omega: &[usize]) -> Vec<Cycle> {
    let n = omega.len();
    let units = work_units(sym, omega, 3);
    let per_unit: Vec<Vec<Cycle>> = units
        .into_par_iter()
        .map(|(suffix, span)| {
            let mut out = Vec::new();
            let mut word = vec![0; n];
            let start = n - suffix.len();
            word[start..].copy_from_slice(&suffix);
            if start == 0 {
                if let Some(c) = solve_on_cylinder(sym, &word, span) {
                    out.push(c);
                }
            } else {
                search_back(sym, omega, start - 1, span, &mut word, &mut out);
            }
            out
        })
        .collect();
    per_unit.into_iter().flatten().collect()
}

/// Merges cycles whose points agree within `tol` (the two ends of `X` count
/// as one point when the system identifies them), keeping the
/// lexicographically first word. Output is sorted by word.
fn dedupe_cycles(sym: &SymbolicSystem, mut cycles: Vec<Cycle>, tol: f64) -> (Vec<Cycle>, usize) {
    let x = sym.system().ambient();
    let identify = sym.system().identifies_endpoints();
    let key = |p: f64| {
        if identify && (p - x.hi()).abs() <= tol {
            x.lo()
        } else {
            p
        }
    };
    cycles.sort_by(|a, b| key(a.point).total_cmp(&key(b.point)).then_with(|| a.word.cmp(&b.word)));
    let mut kept: Vec<Cycle> = Vec::with_capacity(cycles.len());
    let mut removed = 0;
    let mut cluster_start_key = f64::NAN;
    for c in cycles {
        let k = key(c.point);
        match kept.last_mut() {
            Some(last) if (k - cluster_start_key).abs() <= tol => {
                removed += 1;
                if c.word < last.word {
                    *last = c;
                }
            }
            _ => {
                cluster_start_key = k;
                kept.push(c);
            }
        }
    }
    kept.sort_by(|a, b| a.word.cmp(&b.word));
    (kept, removed)
}

fn finish_set(sym: &SymbolicSystem, omega: &SampleWord, raw: Vec<Cycle>, opts: &EnumerationOptions) -> Result<CycleSet> {
    let (cycles, duplicates_removed) = if opts.dedupe {
        dedupe_cycles(sym, raw, opts.dedupe_tol)
    } else {
        let mut raw = raw;
        raw.sort_by(|a, b| a.word.cmp(&b.word));
        (raw, 0)
    };
    let n = omega.len();
    if cycles.is_empty() && sym.mixing_index().is_some_and(|n0| n >= n0) {
        return Err(Error::Consistency(format!(
            "no cycles for ω = {} although n = {n} reaches the mixing index",
            omega.display()
        )));
    }
    let logs: Vec<f64> = cycles.iter().map(|c| c.log_weight).collect();
    Ok(CycleSet {
        omega: omega.clone(),
        log_z: log_sum_exp(&logs),
        cycles,
        duplicates_removed,
    })
}

/// All random cycles of period `|ω|` for the sample word `omega`.
pub fn enumerate_cycles(sym: &SymbolicSystem, omega: &SampleWord, opts: &EnumerationOptions) -> Result<CycleSet> {
    if omega.is_empty() {
        return Err(Error::Parameter("period must be at least 1".into()));
    }
    let estimated = sym.count_admissible(omega);
    if estimated > opts.guard {
        return Err(Error::SizeGuard {
            estimated,
            limit: opts.guard,
        });
    }
    let raw = opts.run(|| collect_raw(sym, omega.letters()))?;
    finish_set(sym, omega, raw, opts)
}

/// `ξ_n^ω`: every cycle spread evenly over its orbit, weighted by
/// `w(x)/Z_{ω,n}`.
pub fn cycle_measure_xi(cs: &CycleSet) -> Result<WeightedPointMeasure> {
    if cs.is_empty() {
        return Err(Error::EmptyMeasure(format!("no cycles for ω = {}", cs.omega.display())));
    }
    let n = cs.period() as f64;
    let atoms = cs
        .cycles
        .iter()
        .flat_map(|c| {
            let w = cs.normalized_weight(c) / n;
            c.orbit.iter().map(move |&y| (y, w))
        })
        .collect();
    WeightedPointMeasure::new(atoms)
}

/// `μ_{ω,n}`: atoms at the cycle points with weights `w(x)/Z_{ω,n}`.
pub fn cycle_point_measure(cs: &CycleSet) -> Result<WeightedPointMeasure> {
    if cs.is_empty() {
        return Err(Error::EmptyMeasure(format!("no cycles for ω = {}", cs.omega.display())));
    }
    WeightedPointMeasure::new(cs.cycles.iter().map(|c| (c.point, cs.normalized_weight(c))).collect())
}

/// Cycles of one sample word inside a skew-product enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaCycles {
    /// `log Q_p(ω_1 ... ω_n)`
    pub log_q: f64,
    pub cycles: CycleSet,
}

/// `Fix(R^n)` indexed by sample words, with `Z_{p,n} = sum_ω Q_p(ω) Z_{ω,n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewFixedPoints {
    pub period: usize,
    pub per_omega: Vec<OmegaCycles>,
    pub log_z: f64,
}

impl SkewFixedPoints {
    pub fn total_cycles(&self) -> usize {
        self.per_omega.iter().map(|o| o.cycles.len()).sum()
    }

    /// Annealed measure `ζ_{p,n}`: cycles weighted by `Q_p(ω) w(x) / Z_{p,n}`
    /// and spread over their orbits.
    pub fn zeta(&self) -> Result<WeightedPointMeasure> {
        let n = self.period as f64;
        let atoms: Vec<(f64, f64)> = self
            .per_omega
            .iter()
            .flat_map(|o| {
                o.cycles.cycles.iter().flat_map(move |c| {
                    let w = (o.log_q + c.log_weight - self.log_z).exp() / n;
                    c.orbit.iter().map(move |&y| (y, w))
                })
            })
            .collect();
        if atoms.is_empty() {
            return Err(Error::EmptyMeasure("no skew fixed points".into()));
        }
        WeightedPointMeasure::new(atoms)
    }
}

/// Enumerates cycles for every sample word of length `n`.
pub fn enumerate_skew_fixed_points(sym: &SymbolicSystem, n: usize, opts: &EnumerationOptions) -> Result<SkewFixedPoints> {
    if n == 0 {
        return Err(Error::Parameter("period must be at least 1".into()));
    }
    let estimated = sym.matrix().word_count(n);
    if estimated > opts.guard {
        return Err(Error::SizeGuard {
            estimated,
            limit: opts.guard,
        });
    }
    let probs = sym.system().probs().to_vec();
    let n_maps = sym.system().n_maps();
    let inner = EnumerationOptions {
        threads: None,
        ..*opts
    };
    let per_omega = opts.run(|| {
        SampleWord::all(n_maps, n)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|omega| {
                let raw = collect_raw_sequential(sym, omega.letters());
                let cycles = finish_set(sym, &omega, raw, &inner)?;
                Ok(OmegaCycles {
                    log_q: omega.log_probability(&probs),
                    cycles,
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let logs: Vec<f64> = per_omega
        .iter()
        .filter(|o| !o.cycles.is_empty())
        .map(|o| o.log_q + o.cycles.log_z)
        .collect();
    Ok(SkewFixedPoints {
        period: n,
        log_z: log_sum_exp(&logs),
        per_omega,
    })
}

fn collect_raw_sequential(sym: &SymbolicSystem, omega: &[usize]) -> Vec<Cycle> {
    let n = omega.len();
    let mut out = Vec::new();
    let mut word = vec![0; n];
    for a in sym.alphabet().symbols_of(omega[n - 1]) {
        word[n - 1] = a;
        let span = sym.cell_span(a);
        if n == 1 {
            if let Some(c) = solve_on_cylinder(sym, &word, span) {
                out.push(c);
            }
        } else {
            search_back(sym, omega, n - 2, span, &mut word, &mut out);
        }
    }
    out
}

/// `log Z_{p,n}` by a forward walk over periodic admissible words of the
/// whole alphabet (`m_{a_n a_1} = 1`), grouping the cycles found by the
/// sample word their symbols spell.
pub fn annealed_log_z_direct(sym: &SymbolicSystem, n: usize, opts: &EnumerationOptions) -> Result<f64> {
    if n == 0 {
        return Err(Error::Parameter("period must be at least 1".into()));
    }
    let estimated = sym.matrix().word_count(n);
    if estimated > opts.guard {
        return Err(Error::SizeGuard {
            estimated,
            limit: opts.guard,
        });
    }
    let k = sym.alphabet().len();
    let mut groups: BTreeMap<Vec<usize>, Vec<Cycle>> = BTreeMap::new();
    let mut word = Vec::with_capacity(n);
    let mut stack: Vec<usize> = vec![0];
    // iterative odometer over words with consecutive transitions allowed
    while let Some(&cand) = stack.last() {
        if cand >= k {
            stack.pop();
            word.pop();
            if let Some(top) = stack.last_mut() {
                *top += 1;
            }
            continue;
        }
        let ok = word.last().is_none_or(|&prev| sym.matrix().get(prev, cand));
        if !ok {
            *stack.last_mut().unwrap() += 1;
            continue;
        }
        word.push(cand);
        if word.len() == n {
            if sym.matrix().get(word[n - 1], word[0]) {
                if let Some(c) = find_cycle_in_cylinder(sym, &word)? {
                    groups.entry(sym.maps_of(&word).letters().to_vec()).or_default().push(c);
                }
            }
            word.pop();
            *stack.last_mut().unwrap() += 1;
        } else {
            stack.push(0);
        }
    }
    let probs = sym.system().probs();
    let mut logs = Vec::new();
    for (letters, cycles) in groups {
        let cycles = if opts.dedupe {
            dedupe_cycles(sym, cycles, opts.dedupe_tol).0
        } else {
            cycles
        };
        let log_q: f64 = letters.iter().map(|&i| probs[i].ln()).sum();
        logs.extend(cycles.iter().map(|c| log_q + c.log_weight));
    }
    Ok(log_sum_exp(&logs))
}

/// Equal-weight mixture of `ξ_n^ω` over sample words drawn from `seeds`.
pub fn sample_averaged_measure(
    sym: &SymbolicSystem,
    n: usize,
    seeds: &[u64],
    opts: &EnumerationOptions,
) -> Result<WeightedPointMeasure> {
    if seeds.is_empty() {
        return Err(Error::Parameter("at least one seed is required".into()));
    }
    let probs = sym.system().probs();
    let measures = seeds
        .iter()
        .map(|&s| {
            let omega = SampleWord::sample(probs, n, s)?;
            cycle_measure_xi(&enumerate_cycles(sym, &omega, opts)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let parts: Vec<(f64, &WeightedPointMeasure)> = measures.iter().map(|m| (1.0, m)).collect();
    WeightedPointMeasure::mixture(&parts)
}

/// A preimage `x` of `x0` under `T_ω^n` with its orbit and log weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Preimage {
    pub point: f64,
    pub orbit: Vec<f64>,
    pub log_weight: f64,
}

/// All `x` with `T_ω^n(x) = x0`, found by pulling `x0` back through every
/// branch whose image contains it.
pub fn preimages(sym: &SymbolicSystem, omega: &SampleWord, x0: f64) -> Result<Vec<Preimage>> {
    let x = sym.system().ambient();
    if !(x0 > x.lo() && x0 < x.hi()) {
        return Err(Error::Domain {
            x: x0,
            lo: x.lo(),
            hi: x.hi(),
        });
    }
    let boundary_tol = 1e-12 * x.length().max(1.0);
    for s in sym.alphabet().symbols() {
        if (s.cell.lo() - x0).abs() <= boundary_tol || (s.cell.hi() - x0).abs() <= boundary_tol {
            return Err(Error::BoundaryPoint(x0));
        }
    }
    let n = omega.len();
    let mut out = Vec::new();
    let mut chain = vec![0.0; n];
    pull_preimages(sym, omega.letters(), n, x0, 0.0, &mut chain, &mut out);
    Ok(out)
}

fn pull_preimages(
    sym: &SymbolicSystem,
    omega: &[usize],
    pos: usize,
    y: f64,
    log_weight: f64,
    chain: &mut Vec<f64>,
    out: &mut Vec<Preimage>,
) {
    if pos == 0 {
        out.push(Preimage {
            point: chain.first().copied().unwrap_or(y),
            orbit: chain.clone(),
            log_weight,
        });
        return;
    }
    let map = omega[pos - 1];
    for a in sym.alphabet().symbols_of(map) {
        let b = sym.branch(a);
        if !b.image().contains(y) {
            continue;
        }
        let s = sym.alphabet().symbol(a);
        let x = b.inverse(y);
        if !s.hi_closed && x >= s.cell.hi() {
            continue;
        }
        chain[pos - 1] = x;
        let lw = log_weight - b.derivative(x).abs().ln();
        pull_preimages(sym, omega, pos - 1, x, lw, chain, out);
    }
}

/// Preimages of `x0` weighted by `|(T_ω^n)'x|^{-1}`, each spread over its
/// orbit `x, ..., T_ω^{n-1} x`. For `n = 0` this is `δ_{x0}`.
pub fn enumerate_preimages(sym: &SymbolicSystem, omega: &SampleWord, x0: f64) -> Result<WeightedPointMeasure> {
    let pre = preimages(sym, omega, x0)?;
    if omega.is_empty() {
        return Ok(WeightedPointMeasure::dirac(x0));
    }
    let logs: Vec<f64> = pre.iter().map(|p| p.log_weight).collect();
    let log_z = log_sum_exp(&logs);
    if !log_z.is_finite() {
        return Err(Error::EmptyMeasure(format!("no preimages of {x0}")));
    }
    let n = omega.len() as f64;
    let atoms = pre
        .iter()
        .flat_map(|p| {
            let w = (p.log_weight - log_z).exp() / n;
            p.orbit.iter().map(move |&y| (y, w))
        })
        .collect();
    WeightedPointMeasure::new(atoms)
}

/// `(1/n) log Z_{ω,n}` and, when the skew enumeration fits the guard,
/// `(1/n) log Z_{p,n}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pressure {
    pub per_sample: f64,
    pub annealed: Option<f64>,
}

pub fn pressure_from_cycles(sym: &SymbolicSystem, omega: &SampleWord, opts: &EnumerationOptions) -> Result<Pressure> {
    let cs = enumerate_cycles(sym, omega, opts)?;
    let n = omega.len();
    let annealed = if sym.matrix().word_count(n) <= opts.guard {
        Some(enumerate_skew_fixed_points(sym, n, opts)?.log_z / n as f64)
    } else {
        None
    };
    Ok(Pressure {
        per_sample: cs.log_z / n as f64,
        annealed,
    })
}

/// `Z^{-1} sum_x w(x) F(cycle)` for a functional of the cycle.
pub fn weighted_functional_average<F>(cs: &CycleSet, functional: F) -> Result<f64>
where
    F: Fn(&SampleWord, &Cycle) -> f64,
{
    if cs.is_empty() {
        return Err(Error::EmptyMeasure(format!("no cycles for ω = {}", cs.omega.display())));
    }
    let mut acc = crate::measures::CompensatedSum::default();
    for c in &cs.cycles {
        let v = functional(&cs.omega, c);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                cycle: format!("word {:?} at x = {}", c.word, c.point),
                value: v,
            });
        }
        acc.add(cs.normalized_weight(c) * v);
    }
    Ok(acc.value())
}

/// Birkhoff sums of an observable `φ(ω_1, x)` along the skew orbit.
fn birkhoff_sum<O: Fn(usize, f64) -> f64>(obs: &O, omega: &SampleWord, c: &Cycle) -> f64 {
    omega
        .letters()
        .iter()
        .zip(&c.orbit)
        .map(|(&i, &y)| obs(i, y))
        .sum()
}

/// `S_n φ / S_n ψ` along the cycle.
pub fn birkhoff_ratio<P, Q>(phi: P, psi: Q) -> impl Fn(&SampleWord, &Cycle) -> f64
where
    P: Fn(usize, f64) -> f64,
    Q: Fn(usize, f64) -> f64,
{
    move |omega, c| birkhoff_sum(&phi, omega, c) / birkhoff_sum(&psi, omega, c)
}

/// `(S_n φ / n)(S_n ψ / n)` along the cycle.
pub fn birkhoff_product<P, Q>(phi: P, psi: Q) -> impl Fn(&SampleWord, &Cycle) -> f64
where
    P: Fn(usize, f64) -> f64,
    Q: Fn(usize, f64) -> f64,
{
    move |omega, c| {
        let n = c.period() as f64;
        birkhoff_sum(&phi, omega, c) / n * birkhoff_sum(&psi, omega, c) / n
    }
}

/// `n^{-2} sum_{j,k} g(π_1(R^j) + π_2(R^k))` along the cycle.
pub fn convolution_statistic<P, Q, G>(pi1: P, pi2: Q, g: G) -> impl Fn(&SampleWord, &Cycle) -> f64
where
    P: Fn(usize, f64) -> f64,
    Q: Fn(usize, f64) -> f64,
    G: Fn(f64) -> f64,
{
    move |omega, c| {
        let n = c.period() as f64;
        let a: Vec<f64> = omega.letters().iter().zip(&c.orbit).map(|(&i, &y)| pi1(i, y)).collect();
        let b: Vec<f64> = omega.letters().iter().zip(&c.orbit).map(|(&i, &y)| pi2(i, y)).collect();
        let mut acc = 0.0;
        for &u in &a {
            for &v in &b {
                acc += g(u + v);
            }
        }
        acc / (n * n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beta::{golden_ratio, golden_system};
    use crate::lsv::{build_lsv_system, LsvSpec};
    use crate::maps::doubling_map;
    use crate::measures::Cdf;
    use crate::symbolic::RandomSystem;
    use approx::assert_relative_eq;

    fn doubling() -> SymbolicSystem {
        let sys = RandomSystem::deterministic(doubling_map()).with_identified_endpoints(true);
        SymbolicSystem::new(sys, 1e-9).unwrap()
    }

    fn golden(p: &[f64]) -> SymbolicSystem {
        SymbolicSystem::new(golden_system(p).unwrap(), 1e-9).unwrap()
    }

    fn opts() -> EnumerationOptions {
        EnumerationOptions::default()
    }

    #[test]
    fn doubling_cycle_one_seventh() {
        let c = find_cycle_in_cylinder(&doubling(), &[0, 0, 1]).unwrap().unwrap();
        assert_relative_eq!(c.point, 1.0 / 7.0, epsilon = 1e-14);
        assert_relative_eq!(c.weight(), 1.0 / 8.0, epsilon = 1e-14);
        assert_relative_eq!(c.orbit[1], 2.0 / 7.0, epsilon = 1e-14);
        assert_relative_eq!(c.orbit[2], 4.0 / 7.0, epsilon = 1e-14);
    }

    #[test]
    fn lsv_neutral_cycle() {
        let sys = build_lsv_system(&LsvSpec::new(vec![0.5], vec![1.0]).unwrap()).unwrap();
        let sym = SymbolicSystem::new(sys, 1e-9).unwrap();
        let c = find_cycle_in_cylinder(&sym, &[0]).unwrap().unwrap();
        assert_eq!(c.point, 0.0);
        assert_eq!(c.weight(), 1.0);
        let c = find_cycle_in_cylinder(&sym, &[0, 0, 0, 0]).unwrap().unwrap();
        assert_eq!(c.point, 0.0);
        assert_eq!(c.log_weight, 0.0);
    }

    #[test]
    fn golden_greedy_top_fixed_point() {
        let beta = golden_ratio();
        let c = find_cycle_in_cylinder(&golden(&[0.5, 0.5]), &[2]).unwrap().unwrap();
        assert_relative_eq!(c.point, beta, epsilon = 1e-14);
        assert_relative_eq!(c.weight(), 1.0 / beta, epsilon = 1e-14);
    }

    #[test]
    fn open_end_roots_are_not_cycles() {
        // greedy word [1/β², 1/β) has f(x) = β²x - 1 with root 1/β at its open end
        let g = golden(&[0.5, 0.5]);
        assert!(find_cycle_in_cylinder(&g, &[0, 1]).unwrap().is_none());
        let beta = golden_ratio();
        // greedy fixes only 0 and β at period 2
        let cs = enumerate_cycles(&g, &SampleWord::constant(0, 2), &opts()).unwrap();
        let pts = cs.points();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0], 0.0);
        assert_relative_eq!(pts[1], beta, epsilon = 1e-14);
    }

    #[test]
    fn doubling_period_three() {
        let cs = enumerate_cycles(&doubling(), &SampleWord::constant(0, 3), &opts()).unwrap();
        let mut pts = cs.points();
        pts.sort_by(f64::total_cmp);
        assert_eq!(pts.len(), 7);
        for (k, p) in pts.iter().enumerate() {
            assert_relative_eq!(*p, k as f64 / 7.0, epsilon = 1e-14);
        }
        for c in &cs.cycles {
            assert_relative_eq!(c.weight(), 0.125, epsilon = 1e-15);
        }
        assert_relative_eq!(cs.z(), 7.0 / 8.0, epsilon = 1e-14);
        assert_eq!(cs.duplicates_removed, 1);
    }

    #[test]
    fn doubling_without_identification_keeps_right_end() {
        let sys = RandomSystem::deterministic(doubling_map());
        let sym = SymbolicSystem::new(sys, 1e-9).unwrap();
        let cs = enumerate_cycles(&sym, &SampleWord::constant(0, 3), &opts()).unwrap();
        assert_eq!(cs.len(), 8);
    }

    #[test]
    fn dedupe_count_is_consistent() {
        let d = doubling();
        for n in 1..=6 {
            let omega = SampleWord::constant(0, n);
            let on = enumerate_cycles(&d, &omega, &opts()).unwrap();
            let off = enumerate_cycles(&d, &omega, &opts().without_dedupe()).unwrap();
            assert_eq!(off.len() - on.len(), on.duplicates_removed);
        }
        let g = golden(&[0.7, 0.3]);
        for seed in 0..5 {
            let omega = SampleWord::sample(&[0.7, 0.3], 10, seed).unwrap();
            let on = enumerate_cycles(&g, &omega, &opts()).unwrap();
            let off = enumerate_cycles(&g, &omega, &opts().without_dedupe()).unwrap();
            assert_eq!(off.len() - on.len(), on.duplicates_removed);
        }
    }

    #[test]
    fn golden_constant_greedy_weights() {
        let beta = golden_ratio();
        let g = golden(&[0.5, 0.5]);
        for n in 1..=10 {
            let cs = enumerate_cycles(&g, &SampleWord::constant(0, n), &opts()).unwrap();
            assert_relative_eq!(cs.z(), cs.len() as f64 * beta.powi(-(n as i32)), max_relative = 1e-12);
        }
    }

    #[test]
    fn nonempty_from_mixing_index() {
        let g = golden(&[0.7, 0.3]);
        let n0 = g.mixing_index().unwrap();
        for seed in 0..20 {
            for n in n0..n0 + 4 {
                let omega = SampleWord::sample(&[0.7, 0.3], n, seed).unwrap();
                assert!(!enumerate_cycles(&g, &omega, &opts()).unwrap().is_empty());
            }
        }
    }

    #[test]
    fn xi_doubling_uniform() {
        let cs = enumerate_cycles(&doubling(), &SampleWord::constant(0, 3), &opts()).unwrap();
        let xi = cycle_measure_xi(&cs).unwrap();
        // 21 orbit atoms of mass 1/21, three on each k/7
        for k in 0..7 {
            let x = k as f64 / 7.0;
            assert_relative_eq!(xi.mass_in(x - 1e-9, x + 1e-9), 3.0 / 21.0, epsilon = 1e-14);
        }
        assert_relative_eq!(xi.total_mass(), 1.0, epsilon = 1e-14);
        let mu = cycle_point_measure(&cs).unwrap();
        for w in mu.weights() {
            assert_relative_eq!(*w, 1.0 / 7.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn xi_of_single_cycle_is_orbit_measure() {
        let sys = build_lsv_system(&LsvSpec::new(vec![0.5], vec![1.0]).unwrap()).unwrap();
        let sym = SymbolicSystem::new(sys, 1e-9).unwrap();
        let cs = enumerate_cycles(&sym, &SampleWord::constant(0, 1), &opts()).unwrap();
        // period 1: the neutral point 0 and the fixed point 1 of 2x - 1
        assert_eq!(cs.len(), 2);
        let single = CycleSet {
            cycles: vec![cs.cycles[0].clone()],
            log_z: cs.cycles[0].log_weight,
            ..cs.clone()
        };
        let xi = cycle_measure_xi(&single).unwrap();
        assert_eq!(xi.points(), &[0.0]);
    }

    #[test]
    fn masses_are_one() {
        let g = golden(&[0.7, 0.3]);
        let omega = SampleWord::sample(&[0.7, 0.3], 12, 42).unwrap();
        let cs = enumerate_cycles(&g, &omega, &opts()).unwrap();
        assert!((cycle_measure_xi(&cs).unwrap().total_mass() - 1.0).abs() <= 1e-12);
        assert!((cycle_point_measure(&cs).unwrap().total_mass() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn empty_set_measure_errors() {
        let cs = CycleSet {
            omega: SampleWord::constant(0, 2),
            cycles: vec![],
            log_z: f64::NEG_INFINITY,
            duplicates_removed: 0,
        };
        assert!(matches!(cycle_measure_xi(&cs), Err(Error::EmptyMeasure(_))));
        assert!(matches!(cycle_point_measure(&cs), Err(Error::EmptyMeasure(_))));
    }

    #[test]
    fn skew_n1_doubling_equals_single() {
        let d = doubling();
        let skew = enumerate_skew_fixed_points(&d, 3, &opts()).unwrap();
        let single = enumerate_cycles(&d, &SampleWord::constant(0, 3), &opts()).unwrap();
        assert_eq!(skew.per_omega.len(), 1);
        assert_eq!(skew.per_omega[0].cycles, single);
        assert_relative_eq!(skew.log_z, single.log_z, epsilon = 1e-15);
    }

    #[test]
    fn skew_golden_equiprobable_words() {
        let g = golden(&[0.5, 0.5]);
        let skew = enumerate_skew_fixed_points(&g, 2, &opts()).unwrap();
        assert_eq!(skew.per_omega.len(), 4);
        for o in &skew.per_omega {
            assert_relative_eq!(o.log_q.exp(), 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn annealed_paths_agree() {
        for p in [[0.5, 0.5], [0.7, 0.3]] {
            let g = golden(&p);
            for n in 1..=8 {
                let a = enumerate_skew_fixed_points(&g, n, &opts()).unwrap().log_z;
                let b = annealed_log_z_direct(&g, n, &opts()).unwrap();
                assert!(((a - b).exp() - 1.0).abs() < 1e-10, "n = {n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn skew_guard_refuses() {
        let g = golden(&[0.5, 0.5]);
        let tight = EnumerationOptions { guard: 100.0, ..opts() };
        assert!(matches!(
            enumerate_skew_fixed_points(&g, 8, &tight),
            Err(Error::SizeGuard { .. })
        ));
        assert!(matches!(
            enumerate_cycles(&g, &SampleWord::constant(0, 20), &tight),
            Err(Error::SizeGuard { .. })
        ));
    }

    #[test]
    fn sample_average_properties() {
        let g = golden(&[0.7, 0.3]);
        let one = sample_averaged_measure(&g, 8, &[5], &opts()).unwrap();
        let omega = SampleWord::sample(&[0.7, 0.3], 8, 5).unwrap();
        let direct = cycle_measure_xi(&enumerate_cycles(&g, &omega, &opts()).unwrap()).unwrap();
        assert_eq!(one.points(), direct.points());
        for (a, b) in one.weights().iter().zip(direct.weights()) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
        let d = doubling();
        let a = sample_averaged_measure(&d, 6, &[1], &opts()).unwrap();
        let b = sample_averaged_measure(&d, 6, &[99, 7], &opts()).unwrap();
        assert_eq!(a.points(), b.points());
        assert!(sample_averaged_measure(&d, 6, &[], &opts()).is_err());
    }

    #[test]
    fn doubling_preimages_of_one_third() {
        let d = doubling();
        let pre = preimages(&d, &SampleWord::constant(0, 2), 1.0 / 3.0).unwrap();
        let mut pts: Vec<f64> = pre.iter().map(|p| p.point).collect();
        pts.sort_by(f64::total_cmp);
        let want = [1.0 / 12.0, 1.0 / 3.0, 7.0 / 12.0, 5.0 / 6.0];
        assert_eq!(pts.len(), 4);
        for (a, b) in pts.iter().zip(want) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
        for p in &pre {
            assert_relative_eq!(p.log_weight.exp(), 0.25, epsilon = 1e-15);
        }
        let m = enumerate_preimages(&d, &SampleWord::constant(0, 2), 1.0 / 3.0).unwrap();
        assert!((m.total_mass() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn preimage_edge_cases() {
        let d = doubling();
        let m = enumerate_preimages(&d, &SampleWord::constant(0, 0), 0.3).unwrap();
        assert_eq!(m.points(), &[0.3]);
        assert!(matches!(
            enumerate_preimages(&d, &SampleWord::constant(0, 2), 0.5),
            Err(Error::BoundaryPoint(_))
        ));
        assert!(enumerate_preimages(&d, &SampleWord::constant(0, 2), 0.0).is_err());
    }

    #[test]
    fn preimages_map_to_target() {
        let g = golden(&[0.7, 0.3]);
        let omega = SampleWord::sample(&[0.7, 0.3], 9, 3).unwrap();
        for p in preimages(&g, &omega, 0.4).unwrap() {
            let y = g.system().compose(omega.letters(), p.point).unwrap();
            assert!((y - 0.4).abs() < 1e-9);
        }
    }

    #[test]
    fn doubling_pressure() {
        let d = doubling();
        let p = pressure_from_cycles(&d, &SampleWord::constant(0, 3), &opts()).unwrap();
        assert_relative_eq!(p.per_sample, (7.0f64 / 8.0).ln() / 3.0, epsilon = 1e-14);
        assert_relative_eq!(p.per_sample, -0.0445190, epsilon = 1e-5);
        assert_relative_eq!(p.annealed.unwrap(), p.per_sample, epsilon = 1e-14);
        let p = pressure_from_cycles(&d, &SampleWord::constant(0, 10), &opts()).unwrap();
        assert_relative_eq!(p.per_sample, (1023.0f64 / 1024.0).ln() / 10.0, epsilon = 1e-14);
    }

    #[test]
    fn golden_pressure_identity() {
        let beta = golden_ratio();
        let g = golden(&[0.7, 0.3]);
        let omega = SampleWord::constant(0, 9);
        let cs = enumerate_cycles(&g, &omega, &opts()).unwrap();
        let p = pressure_from_cycles(&g, &omega, &opts()).unwrap();
        assert_relative_eq!(p.per_sample, ((cs.len() as f64).ln() - 9.0 * beta.ln()) / 9.0, epsilon = 1e-12);
        let long = pressure_from_cycles(&g, &SampleWord::constant(0, 30), &opts()).unwrap();
        assert!(long.annealed.is_none());
    }

    #[test]
    fn functional_averages() {
        let cs = enumerate_cycles(&doubling(), &SampleWord::constant(0, 3), &opts()).unwrap();
        assert_relative_eq!(weighted_functional_average(&cs, |_, _| 1.0).unwrap(), 1.0, epsilon = 1e-14);
        let c = 2.5;
        let prod = birkhoff_product(move |_, _| c, move |_, _| c);
        assert_relative_eq!(weighted_functional_average(&cs, prod).unwrap(), c * c, epsilon = 1e-12);
        let mean = birkhoff_ratio(|_, x| x, |_, _| 1.0);
        assert_relative_eq!(weighted_functional_average(&cs, mean).unwrap(), 3.0 / 7.0, epsilon = 1e-12);
        let conv = convolution_statistic(|_, x| x, |_, x| -x, |v: f64| v.abs());
        assert!(weighted_functional_average(&cs, conv).unwrap() > 0.0);
        let bad = weighted_functional_average(&cs, |_, c| 1.0 / c.point);
        assert!(matches!(bad, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let g = golden(&[0.7, 0.3]);
        let omega = SampleWord::sample(&[0.7, 0.3], 14, 9).unwrap();
        let a = enumerate_cycles(&g, &omega, &opts().with_threads(1)).unwrap();
        let b = enumerate_cycles(&g, &omega, &opts().with_threads(4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.log_z.to_bits(), b.log_z.to_bits());
    }

    #[test]
    fn cylinder_cdf_sanity() {
        let cs = enumerate_cycles(&doubling(), &SampleWord::constant(0, 4), &opts()).unwrap();
        let xi = cycle_measure_xi(&cs).unwrap();
        assert_relative_eq!(xi.cdf(1.0), 1.0, epsilon = 1e-12);
    }
}
