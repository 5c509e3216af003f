//! Symbolic coding of a random system: the disjoint-union alphabet of all
//! branches, its transition matrix, admissible words and cylinders.

use std::ops::Range;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::maps::{Interval, MarkovMap};
use crate::tolerances::{COVER_TOL, PROB_SUM_TOL};

/// Finitely many Markov maps on a common interval, chosen i.i.d. with
/// probabilities `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSystem {
    ambient: Interval,
    maps: Vec<MarkovMap>,
    probs: Vec<f64>,
    identify_endpoints: bool,
}

impl RandomSystem {
    pub fn new(maps: Vec<MarkovMap>, probs: Vec<f64>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidSystem("at least one map is required".into()));
        }
        if maps.len() != probs.len() {
            return Err(Error::InvalidSystem(format!(
                "{} maps but {} probabilities",
                maps.len(),
                probs.len()
            )));
        }
        if probs.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidSystem(format!(
                "probabilities must be positive, got {probs:?}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidSystem(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let ambient = maps[0].ambient();
        let scale = COVER_TOL * ambient.hi().abs().max(1.0);
        for (i, m) in maps.iter().enumerate() {
            let a = m.ambient();
            if (a.lo() - ambient.lo()).abs() > scale || (a.hi() - ambient.hi()).abs() > scale {
                return Err(Error::InvalidSystem(format!(
                    "map {i} lives on [{}, {}], expected [{}, {}]",
                    a.lo(),
                    a.hi(),
                    ambient.lo(),
                    ambient.hi()
                )));
            }
        }
        Ok(RandomSystem {
            ambient,
            maps,
            probs,
            identify_endpoints: false,
        })
    }

    /// A single map with probability one.
    pub fn deterministic(map: MarkovMap) -> Self {
        RandomSystem::new(vec![map], vec![1.0]).expect("one map with p = 1 is valid")
    }

    /// Treat `X` as a circle: its two endpoints are the same point when
    /// collecting cycles (the doubling map modulo 1).
    pub fn with_identified_endpoints(mut self, identify: bool) -> Self {
        self.identify_endpoints = identify;
        self
    }

    pub fn ambient(&self) -> Interval {
        self.ambient
    }

    pub fn maps(&self) -> &[MarkovMap] {
        &self.maps
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n_maps(&self) -> usize {
        self.maps.len()
    }

    pub fn identifies_endpoints(&self) -> bool {
        self.identify_endpoints
    }

    /// `T_omega^n(x)` through the maps' own branch dispatch.
    pub fn compose(&self, omega: &[usize], x: f64) -> Result<f64> {
        omega
            .iter()
            .try_fold(x, |y, &i| Ok(self.maps[i].evaluate(y)?.value))
    }
}

/// A finite sample word over the map indices `0..N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SampleWord {
    letters: Vec<usize>,
}

impl SampleWord {
    pub fn new(letters: Vec<usize>, n_maps: usize) -> Result<Self> {
        if let Some(&bad) = letters.iter().find(|&&l| l >= n_maps) {
            return Err(Error::Parameter(format!(
                "letter {bad} out of range for {n_maps} maps"
            )));
        }
        Ok(SampleWord { letters })
    }

    pub fn constant(letter: usize, len: usize) -> Self {
        SampleWord {
            letters: vec![letter; len],
        }
    }

    /// First `len` letters of the i.i.d. stream with law `probs` driven by
    /// ChaCha8 seeded with `seed`. Prefixes agree across lengths.
    pub fn sample(probs: &[f64], len: usize, seed: u64) -> Result<Self> {
        let dist = WeightedIndex::new(probs)
            .map_err(|e| Error::Parameter(format!("bad probability vector: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(SampleWord {
            letters: (0..len).map(|_| dist.sample(&mut rng)).collect(),
        })
    }

    /// All `n_maps^len` words in lexicographic order.
    pub fn all(n_maps: usize, len: usize) -> impl Iterator<Item = SampleWord> {
        let total = n_maps.checked_pow(len as u32).unwrap_or(usize::MAX);
        (0..total).map(move |mut code| {
            let mut letters = vec![0; len];
            for slot in letters.iter_mut().rev() {
                *slot = code % n_maps;
                code /= n_maps;
            }
            SampleWord { letters }
        })
    }

    pub fn letters(&self) -> &[usize] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn prefix(&self, len: usize) -> SampleWord {
        SampleWord {
            letters: self.letters[..len.min(self.letters.len())].to_vec(),
        }
    }

    /// `log Q_p(omega) = sum_k log p_{omega_k}`.
    pub fn log_probability(&self, probs: &[f64]) -> f64 {
        self.letters.iter().map(|&i| probs[i].ln()).sum()
    }

    /// 1-based letters joined without separator, e.g. `1121`.
    pub fn display(&self) -> String {
        self.letters
            .iter()
            .map(|l| (l + 1).to_string())
            .collect::<Vec<_>>()
            .join("")
    }
}

/// A global symbol: one branch of one map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Symbol {
    pub map: usize,
    pub branch: usize,
    pub cell: Interval,
    /// Whether the cell contains its right endpoint.
    pub hi_closed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alphabet {
    symbols: Vec<Symbol>,
    ranges: Vec<Range<usize>>,
}

impl Alphabet {
    fn new(system: &RandomSystem) -> Self {
        let mut symbols = Vec::new();
        let mut ranges = Vec::new();
        for (i, m) in system.maps().iter().enumerate() {
            let start = symbols.len();
            let nb = m.branches().len();
            for (k, b) in m.branches().iter().enumerate() {
                symbols.push(Symbol {
                    map: i,
                    branch: k,
                    cell: b.domain(),
                    hi_closed: k + 1 == nb,
                });
            }
            ranges.push(start..symbols.len());
        }
        Alphabet { symbols, ranges }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbol(&self, a: usize) -> &Symbol {
        &self.symbols[a]
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    /// Global indices of the symbols owned by `map`.
    pub fn symbols_of(&self, map: usize) -> Range<usize> {
        self.ranges[map].clone()
    }
}

/// 0/1 matrix `m_ab = 1` iff the closed image of `J(a)` contains `J(b)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionMatrix {
    size: usize,
    entries: Vec<bool>,
}

impl TransitionMatrix {
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let size = rows.len();
        if rows.iter().any(|r| r.len() != size) {
            return Err(Error::Parameter("transition matrix must be square".into()));
        }
        Ok(TransitionMatrix {
            size,
            entries: rows.iter().flatten().map(|&v| v != 0).collect(),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> bool {
        self.entries[a * self.size + b]
    }

    pub fn row(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.size).filter(move |&b| self.get(a, b))
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.size)
            .map(|a| (0..self.size).map(|b| self.get(a, b) as u8).collect())
            .collect()
    }

    fn bool_product(&self, other: &[bool]) -> Vec<bool> {
        let n = self.size;
        let mut out = vec![false; n * n];
        for a in 0..n {
            for c in 0..n {
                if other[a * n + c] {
                    for b in 0..n {
                        if self.entries[c * n + b] {
                            out[a * n + b] = true;
                        }
                    }
                }
            }
        }
        out
    }

    /// Smallest `n0 <= n_max` with `M^{n0}` entrywise positive.
    pub fn mixing_index(&self, n_max: usize) -> Option<usize> {
        if self.size == 0 {
            return None;
        }
        let mut power = self.entries.clone();
        for n in 1..=n_max {
            if power.iter().all(|&v| v) {
                return Some(n);
            }
            let next = self.bool_product(&power);
            if next == power {
                return None;
            }
            power = next;
        }
        None
    }

    pub fn is_irreducible(&self) -> bool {
        let n = self.size;
        (0..n).all(|start| {
            let mut seen = vec![false; n];
            let mut stack = vec![start];
            while let Some(a) = stack.pop() {
                for b in self.row(a) {
                    if !seen[b] {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
            seen.iter().all(|&s| s)
        })
    }

    /// `1^T M^{n-1} 1` in floating point: the number of admissible words of
    /// length `n` over the whole alphabet.
    pub fn word_count(&self, n: usize) -> f64 {
        if n == 0 {
            return 1.0;
        }
        let mut v = vec![1.0f64; self.size];
        for _ in 1..n {
            let mut next = vec![0.0; self.size];
            for (a, &va) in v.iter().enumerate() {
                if va > 0.0 {
                    for b in self.row(a) {
                        next[b] += va;
                    }
                }
            }
            v = next;
        }
        v.iter().sum()
    }
}

/// Smallest `n0 <= n_max` with `M^{n0}` entrywise positive.
pub fn mixing_index(m: &TransitionMatrix, n_max: usize) -> Option<usize> {
    m.mixing_index(n_max)
}

/// Interval with explicit endpoint membership.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Span {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Span {
    fn intersect(self, other: Span, snap: f64) -> Span {
        let (lo, lo_closed) = if (self.lo - other.lo).abs() <= snap {
            (self.lo.max(other.lo), self.lo_closed && other.lo_closed)
        } else if self.lo > other.lo {
            (self.lo, self.lo_closed)
        } else {
            (other.lo, other.lo_closed)
        };
        let (hi, hi_closed) = if (self.hi - other.hi).abs() <= snap {
            (self.hi.min(other.hi), self.hi_closed && other.hi_closed)
        } else if self.hi < other.hi {
            (self.hi, self.hi_closed)
        } else {
            (other.hi, other.hi_closed)
        };
        Span {
            lo,
            hi,
            lo_closed,
            hi_closed,
        }
    }
}

/// An admissible word with its cylinder `J(a_1 ... a_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cylinder {
    pub word: Vec<usize>,
    pub interval: Interval,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

/// A random system together with its coding.
#[derive(Debug, Clone)]
pub struct SymbolicSystem {
    system: RandomSystem,
    alphabet: Alphabet,
    matrix: TransitionMatrix,
    mixing: Option<usize>,
    snap: f64,
}

impl SymbolicSystem {
    /// Builds the alphabet and transition matrix, failing when some branch
    /// image is not a union of cells.
    pub fn new(system: RandomSystem, tol: f64) -> Result<Self> {
        for (i, m) in system.maps().iter().enumerate() {
            let report = m.validate_markov(tol);
            if let Some(bad) = report.branches.iter().find(|b| !b.ok) {
                return Err(Error::MarkovViolation {
                    map: i,
                    branch: bad.branch,
                    reason: format!(
                        "image [{}, {}] misses the partition by {:.3e}",
                        bad.image.lo(),
                        bad.image.hi(),
                        bad.endpoint_mismatch
                    ),
                });
            }
        }
        let alphabet = Alphabet::new(&system);
        let size = alphabet.len();
        let mut entries = vec![false; size * size];
        for (a, sa) in alphabet.symbols().iter().enumerate() {
            let image = system.maps()[sa.map].branches()[sa.branch].image();
            for (b, sb) in alphabet.symbols().iter().enumerate() {
                if image.covers(&sb.cell, tol) {
                    entries[a * size + b] = true;
                } else if image.overlap(&sb.cell) > tol {
                    return Err(Error::MarkovViolation {
                        map: sa.map,
                        branch: sa.branch,
                        reason: format!(
                            "image [{}, {}] partially overlaps cell [{}, {}] of map {}",
                            image.lo(),
                            image.hi(),
                            sb.cell.lo(),
                            sb.cell.hi(),
                            sb.map
                        ),
                    });
                }
            }
        }
        let matrix = TransitionMatrix { size, entries };
        let bound = (size.saturating_sub(1)).pow(2) + 1;
        let mixing = matrix.mixing_index(bound);
        let snap = 1e-13 * system.ambient().length().max(1.0);
        Ok(SymbolicSystem {
            system,
            alphabet,
            matrix,
            mixing,
            snap,
        })
    }

    pub fn system(&self) -> &RandomSystem {
        &self.system
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn matrix(&self) -> &TransitionMatrix {
        &self.matrix
    }

    /// Mixing index of the transition matrix, searched up to Wielandt's bound.
    pub fn mixing_index(&self) -> Option<usize> {
        self.mixing
    }

    pub fn branch(&self, a: usize) -> &crate::maps::Branch {
        let s = self.alphabet.symbol(a);
        &self.system.maps()[s.map].branches()[s.branch]
    }

    /// Admissible words over `omega`, in lexicographic order.
    pub fn admissible_words<'a>(&'a self, omega: &SampleWord) -> AdmissibleWords<'a> {
        AdmissibleWords::new(self, omega.letters().to_vec())
    }

    /// Number of admissible words over `omega` from products of blocks of M.
    pub fn count_admissible(&self, omega: &SampleWord) -> f64 {
        let letters = omega.letters();
        if letters.is_empty() {
            return 1.0;
        }
        let mut v = vec![0.0f64; self.alphabet.len()];
        for a in self.alphabet.symbols_of(letters[0]) {
            v[a] = 1.0;
        }
        for &l in &letters[1..] {
            let mut next = vec![0.0; v.len()];
            for b in self.alphabet.symbols_of(l) {
                next[b] = v
                    .iter()
                    .enumerate()
                    .filter(|&(a, &va)| va > 0.0 && self.matrix.get(a, b))
                    .map(|(_, &va)| va)
                    .sum();
            }
            v = next;
        }
        v.iter().sum()
    }

    pub(crate) fn cell_span(&self, a: usize) -> Span {
        let s = self.alphabet.symbol(a);
        Span {
            lo: s.cell.lo(),
            hi: s.cell.hi(),
            lo_closed: true,
            hi_closed: s.hi_closed,
        }
    }

    /// `J(a) ∩ f_a^{-1}(target)`, or `None` when empty.
    pub(crate) fn pull_back(&self, a: usize, target: Span) -> Option<Span> {
        let b = self.branch(a);
        let image = b.image();
        let snap = self.snap;
        let unbounded_lo = (f64::NEG_INFINITY, true);
        let unbounded_hi = (f64::INFINITY, true);
        let pre = if b.is_increasing() {
            let (lo, lo_closed) = if target.lo < image.lo() - snap {
                unbounded_lo
            } else {
                (b.inverse(target.lo), target.lo_closed)
            };
            let (hi, hi_closed) = if target.hi > image.hi() + snap {
                unbounded_hi
            } else {
                (b.inverse(target.hi), target.hi_closed)
            };
            Span {
                lo,
                hi,
                lo_closed,
                hi_closed,
            }
        } else {
            let (lo, lo_closed) = if target.hi > image.hi() + snap {
                unbounded_lo
            } else {
                (b.inverse(target.hi), target.hi_closed)
            };
            let (hi, hi_closed) = if target.lo < image.lo() - snap {
                unbounded_hi
            } else {
                (b.inverse(target.lo), target.lo_closed)
            };
            Span {
                lo,
                hi,
                lo_closed,
                hi_closed,
            }
        };
        let out = self.cell_span(a).intersect(pre, snap);
        if out.hi - out.lo > snap {
            Some(out)
        } else {
            None
        }
    }

    /// Cylinder of an admissible word, pulled back from its last symbol.
    pub fn cylinder(&self, word: &[usize]) -> Result<Cylinder> {
        let Some((&last, rest)) = word.split_last() else {
            let x = self.system.ambient();
            return Ok(Cylinder {
                word: Vec::new(),
                interval: x,
                lo_closed: true,
                hi_closed: true,
            });
        };
        if let Some(&bad) = word.iter().find(|&&a| a >= self.alphabet.len()) {
            return Err(Error::Inadmissible(format!("unknown symbol {bad}")));
        }
        for pair in word.windows(2) {
            if !self.matrix.get(pair[0], pair[1]) {
                return Err(Error::Inadmissible(format!(
                    "transition {} -> {} is forbidden",
                    pair[0], pair[1]
                )));
            }
        }
        let mut span = self.cell_span(last);
        for &a in rest.iter().rev() {
            span = self.pull_back(a, span).ok_or_else(|| {
                Error::Inadmissible(format!("empty cylinder for word {word:?}"))
            })?;
        }
        Ok(Cylinder {
            word: word.to_vec(),
            interval: Interval::new(span.lo, span.hi)?,
            lo_closed: span.lo_closed,
            hi_closed: span.hi_closed,
        })
    }

    pub fn cylinder_interval(&self, word: &[usize]) -> Result<Interval> {
        Ok(self.cylinder(word)?.interval)
    }

    /// Maps driven by the symbols of `word`.
    pub fn maps_of(&self, word: &[usize]) -> SampleWord {
        SampleWord {
            letters: word.iter().map(|&a| self.alphabet.symbol(a).map).collect(),
        }
    }
}

/// Depth-first lexicographic stream of admissible words over a sample word.
pub struct AdmissibleWords<'a> {
    sys: &'a SymbolicSystem,
    omega: Vec<usize>,
    word: Vec<usize>,
    cursor: Vec<usize>,
    done: bool,
}

impl<'a> AdmissibleWords<'a> {
    fn new(sys: &'a SymbolicSystem, omega: Vec<usize>) -> Self {
        let mut cursor = vec![0; omega.len()];
        if let Some(&first) = omega.first() {
            cursor[0] = sys.alphabet.symbols_of(first).start;
        }
        AdmissibleWords {
            sys,
            omega,
            word: Vec::new(),
            cursor,
            done: false,
        }
    }
}

impl Iterator for AdmissibleWords<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let n = self.omega.len();
        if n == 0 {
            self.done = true;
            return Some(Vec::new());
        }
        loop {
            let depth = self.word.len();
            let range = self.sys.alphabet.symbols_of(self.omega[depth]);
            let mut c = self.cursor[depth];
            let mut found = None;
            while c < range.end {
                let ok = depth == 0 || self.sys.matrix.get(self.word[depth - 1], c);
                c += 1;
                if ok {
                    found = Some(c - 1);
                    break;
                }
            }
            self.cursor[depth] = c;
            match found {
                Some(sym) => {
                    self.word.push(sym);
                    if depth + 1 == n {
                        let out = self.word.clone();
                        self.word.pop();
                        return Some(out);
                    }
                    self.cursor[depth + 1] =
                        self.sys.alphabet.symbols_of(self.omega[depth + 1]).start;
                }
                None => {
                    if depth == 0 {
                        self.done = true;
                        return None;
                    }
                    self.word.pop();
                }
            }
        }
    }
}
