//! The refined Markov partition `P_o` and its cylinder sets.
//!
//! `I_0 = [0, a_1]` is cut at the backward orbit `b_0 = a_1`, `T(b_{k+1}) =
//! b_k`, giving `I_{-k} = [b_k, b_{k-1}]`. With the expanding branches `I_j`,
//! `j ≥ 1`, this is a Markov partition: `T(I_{-1}) = J`, `T(I_{-k}) =
//! I_{-k+1}` and `T(I_j) = [0, 1]`.
//!
//! Symbols use left-closed elements `[lo, hi)` (the last branch also keeps
//! the point 1). Points below `b_{K_max}` get the underflow symbol.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::map::MapSpec;
use crate::stats::{loglog_fit, stream_rng, LineFit};

/// Cylinders narrower than this are treated as empty.
pub const EMPTY_WIDTH: f64 = 1e-14;
pub const DEFAULT_FRONTIER_CAP: usize = 100_000;

/// Signed index of an element of `P_o`: `-k` for `I_{-k}`, `j ≥ 1` for `I_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Symbol(pub i64);

pub type Word = Vec<Symbol>;

impl Symbol {
    pub const UNDERFLOW: Symbol = Symbol(i64::MIN);

    pub fn is_underflow(self) -> bool {
        self == Symbol::UNDERFLOW
    }

    /// `true` for elements of `J`.
    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    /// Branch of `T` acting on this element.
    pub fn branch(self) -> usize {
        if self.0 > 0 {
            self.0 as usize
        } else {
            0
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_underflow() {
            f.write_str("underflow")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for Symbol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let v: i64 = s
            .trim()
            .replace('\u{2212}', "-")
            .parse()
            .map_err(|_| Error::Parse(format!("bad symbol `{s}`")))?;
        if v == 0 {
            return Err(Error::Parse("symbol 0 is not in the refined index set".into()));
        }
        Ok(Symbol(v))
    }
}

/// Parses `"-2,-1,1"` (parentheses optional).
pub fn parse_word(text: &str) -> Result<Word> {
    text.trim()
        .trim_start_matches('(')
        .trim_end_matches(')')
        .split(',')
        .map(str::parse)
        .collect()
}

pub fn format_word(word: &[Symbol]) -> String {
    let parts: Vec<String> = word.iter().map(ToString::to_string).collect();
    format!("({})", parts.join(","))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cylinder {
    pub word: Word,
    /// Realized interval; `None` when the word is not admissible.
    pub interval: Option<(f64, f64)>,
}

impl Cylinder {
    pub fn is_empty(&self) -> bool {
        self.interval.is_none()
    }

    pub fn length(&self) -> f64 {
        self.interval.map_or(0.0, |(lo, hi)| hi - lo)
    }

    pub fn midpoint(&self) -> Option<f64> {
        self.interval.map(|(lo, hi)| 0.5 * (lo + hi))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinedPartition {
    map: MapSpec,
    /// `b_0 = a_1 > b_1 > … > b_{K_max}`.
    b: Vec<f64>,
}

/// Builds `P_o` down to depth `k_max`.
pub fn compute_b_sequence(map: &MapSpec, k_max: usize) -> Result<RefinedPartition> {
    RefinedPartition::new(map, k_max)
}

impl RefinedPartition {
    pub fn new(map: &MapSpec, k_max: usize) -> Result<Self> {
        if k_max < 1 {
            return Err(invalid("K_max must be at least 1"));
        }
        let mut b = Vec::with_capacity(k_max + 1);
        b.push(map.a1());
        for k in 0..k_max {
            let next = map.inverse_branch(0, b[k])?;
            if !(next < b[k]) || next <= 0.0 {
                return Err(invalid(format!("b-sequence stalled at k = {}", k + 1)));
            }
            b.push(next);
        }
        Ok(RefinedPartition { map: map.clone(), b })
    }

    pub fn map(&self) -> &MapSpec {
        &self.map
    }

    pub fn k_max(&self) -> usize {
        self.b.len() - 1
    }

    pub fn b(&self, k: usize) -> f64 {
        self.b[k]
    }

    pub fn b_values(&self) -> &[f64] {
        &self.b
    }

    /// Number of expanding branches, i.e. positive symbols `1..=n`.
    pub fn positive_symbols(&self) -> usize {
        self.map.num_branches() - 1
    }

    /// Closed interval of the element `I_s`.
    pub fn element(&self, s: Symbol) -> Option<(f64, f64)> {
        match s.0 {
            k if k < 0 && k != i64::MIN && ((-k) as usize) <= self.k_max() => {
                let k = (-k) as usize;
                Some((self.b[k], self.b[k - 1]))
            }
            j if j > 0 && (j as usize) < self.map.num_branches() => {
                let j = j as usize;
                Some((self.map.a(j), self.map.a(j + 1)))
            }
            _ => None,
        }
    }

    /// `|I_s|`; for negative symbols this is `L_{-k} = b_{k-1} - b_k`.
    pub fn length(&self, s: Symbol) -> Option<f64> {
        self.element(s).map(|(lo, hi)| hi - lo)
    }

    /// `L_{-m}` for `m ≥ 1` and `L_0 = |J| = 1 - a_1`.
    pub fn young_length(&self, m: usize) -> f64 {
        if m == 0 {
            1.0 - self.map.a1()
        } else {
            self.b[m - 1] - self.b[m]
        }
    }

    /// `T(I_s)` as a closed interval.
    pub fn image_of(&self, s: Symbol) -> (f64, f64) {
        match s.0 {
            -1 => (self.map.a1(), 1.0),
            k if k < -1 => self.element(Symbol(k + 1)).unwrap_or((0.0, 0.0)),
            _ => (0.0, 1.0),
        }
    }

    /// Markov compatibility of the transition `s → t`.
    pub fn allowed(s: Symbol, t: Symbol) -> bool {
        match s.0 {
            j if j > 0 => true,
            -1 => t.is_positive(),
            k => t.0 == k + 1,
        }
    }

    pub fn symbol_of(&self, x: f64) -> Symbol {
        let a1 = self.map.a1();
        if x >= a1 {
            let breaks = self.map.breaks();
            let idx = breaks.partition_point(|&a| a <= x);
            let j = idx.clamp(2, breaks.len() - 1) - 1;
            return Symbol(j as i64);
        }
        // b is decreasing: count b_1..b_K lying strictly above x.
        let above = self.b[1..].partition_point(|&bk| bk > x);
        let k = above + 1;
        if k > self.k_max() {
            Symbol::UNDERFLOW
        } else {
            Symbol(-(k as i64))
        }
    }

    pub fn itinerary(&self, x: f64, n: usize) -> Result<Word> {
        let mut word = Vec::with_capacity(n);
        let mut y = x;
        for step in 0..n {
            let s = self.symbol_of(y);
            if s.is_underflow() {
                return Err(Error::Underflow { step, k_max: self.k_max() });
            }
            word.push(s);
            y = self.map.eval(y);
        }
        Ok(word)
    }

    /// Applies the branch of `T` that belongs to `s`.
    pub fn step(&self, s: Symbol, x: f64) -> f64 {
        self.map.branch(s.branch()).eval(x)
    }

    pub fn slope(&self, s: Symbol, x: f64) -> f64 {
        self.map.branch(s.branch()).deriv(x)
    }

    /// `I_s ∩ T^{-1}(lo, hi)` as an interval, if non-empty.
    pub fn pull_back(&self, s: Symbol, (lo, hi): (f64, f64)) -> Result<Option<(f64, f64)>> {
        let (ilo, ihi) = self.image_of(s);
        let (clo, chi) = (lo.max(ilo), hi.min(ihi));
        if !(chi - clo >= EMPTY_WIDTH) {
            return Ok(None);
        }
        let branch = self.map.branch(s.branch());
        let (p, q) = (branch.inverse(clo)?, branch.inverse(chi)?);
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        Ok((hi - lo >= EMPTY_WIDTH).then_some((lo, hi)))
    }

    pub fn cylinder_of(&self, word: &[Symbol]) -> Result<Cylinder> {
        let last = *word.last().ok_or_else(|| invalid("cylinder of an empty word"))?;
        let mut interval = self.element(last);
        if interval.is_none() {
            return Err(invalid(format!("symbol {last} is not in the partition")));
        }
        for &s in word[..word.len() - 1].iter().rev() {
            if self.element(s).is_none() {
                return Err(invalid(format!("symbol {s} is not in the partition")));
            }
            let Some(current) = interval else { break };
            interval = self.pull_back(s, current)?;
        }
        Ok(Cylinder { word: word.to_vec(), interval })
    }

    /// Every symbol that may precede `t`.
    pub fn predecessors(&self, t: Symbol) -> impl Iterator<Item = Symbol> + '_ {
        let deeper = if t.is_positive() {
            Some(Symbol(-1))
        } else if ((-t.0) as usize) < self.k_max() {
            Some(Symbol(t.0 - 1))
        } else {
            None
        };
        (1..=self.positive_symbols() as i64).map(Symbol).chain(deeper)
    }

    /// `(k, b_k, L_{-k})` for `k = 0..=K_max` (`L_{-0}` reported as `|J|`).
    pub fn b_rows(&self) -> Vec<(usize, f64, f64)> {
        (0..=self.k_max()).map(|k| (k, self.b[k], self.young_length(k))).collect()
    }

    /// Log-log fit of `b_k` against `k` over `k_lo..=k_hi`.
    pub fn b_slope(&self, k_lo: usize, k_hi: usize) -> Option<LineFit> {
        let k_hi = k_hi.min(self.k_max());
        let ks: Vec<f64> = (k_lo.max(1)..=k_hi).map(|k| k as f64).collect();
        let bs: Vec<f64> = (k_lo.max(1)..=k_hi).map(|k| self.b[k]).collect();
        loglog_fit(&ks, &bs)
    }

    /// Range of `Δb_k / b_k^{β+2}` over `k_lo..=k_hi`.
    pub fn length_law_band(&self, k_lo: usize, k_hi: usize) -> (f64, f64) {
        let e = self.map.beta() + 2.0;
        (k_lo.max(1)..=k_hi.min(self.k_max()))
            .map(|k| (self.b[k - 1] - self.b[k]) / self.b[k].powf(e))
            .fold((f64::INFINITY, 0.0), |(lo, hi), r| (lo.min(r), hi.max(r)))
    }

    /// Largest number of intervals `[(n+1)^{-α}, n^{-α})` met by a single
    /// `I_{-k}` (`k_lo..=k_hi`), and largest number of those `I_{-k}` met by
    /// a single such interval.
    pub fn bracketing_counts(&self, k_lo: usize, k_hi: usize) -> (usize, usize) {
        let alpha = self.map.alpha();
        let k_hi = k_hi.min(self.k_max());
        let k_lo = k_lo.max(1);
        if k_lo > k_hi {
            return (0, 0);
        }
        let n_of = |x: f64| n_index(x, alpha);
        let n_min = n_of(self.b[k_lo - 1]);
        let n_max = n_of(self.b[k_hi]);
        let mut per_n = vec![0usize; (n_max - n_min + 1) as usize];
        let mut per_k = 0;
        for k in k_lo..=k_hi {
            let (hi_n, lo_n) = (n_of(self.b[k]), n_of(self.b[k - 1]));
            per_k = per_k.max((hi_n - lo_n + 1) as usize);
            for n in lo_n..=hi_n {
                per_n[(n - n_min) as usize] += 1;
            }
        }
        // The outermost n-intervals are only partially covered by the range.
        let inner = if per_n.len() > 2 { &per_n[1..per_n.len() - 1] } else { &per_n[..] };
        (per_k, inner.iter().copied().max().unwrap_or(0))
    }

    /// Maximum cylinder length found at each depth `1..=n_max`
    /// (index 0 of the result is depth 1).
    ///
    /// Words are grown by prepending admissible symbols, which costs one
    /// pull-back per child; the frontier keeps the `frontier_cap` longest
    /// cylinders. Itineraries of `seeds` random points add their own nested
    /// cylinders. A depth-`m` cylinder is contained in its depth-`n` prefix
    /// for `n < m`, so each depth also takes the maximum over deeper finds.
    pub fn max_cylinder_lengths(
        &self,
        n_max: usize,
        frontier_cap: usize,
        seeds: usize,
        seed: u64,
    ) -> Result<Vec<f64>> {
        if n_max == 0 {
            return Ok(Vec::new());
        }
        let mut found = vec![0.0f64; n_max];

        let mut frontier: Vec<(Symbol, (f64, f64))> = (1..=self.k_max() as i64)
            .map(|k| Symbol(-k))
            .chain((1..=self.positive_symbols() as i64).map(Symbol))
            .filter_map(|s| self.element(s).map(|iv| (s, iv)))
            .collect();
        found[0] = frontier.iter().map(|(_, (lo, hi))| hi - lo).fold(0.0, f64::max);

        for depth in 1..n_max {
            let children: Result<Vec<Vec<(Symbol, (f64, f64))>>> = frontier
                .par_iter()
                .map(|&(first, iv)| {
                    let mut out = Vec::new();
                    for s in self.predecessors(first) {
                        if let Some(child) = self.pull_back(s, iv)? {
                            out.push((s, child));
                        }
                    }
                    Ok(out)
                })
                .collect();
            let mut next: Vec<(Symbol, (f64, f64))> = children?.into_iter().flatten().collect();
            next.sort_by(|a, b| {
                let (la, lb) = (a.1 .1 - a.1 .0, b.1 .1 - b.1 .0);
                lb.total_cmp(&la).then(a.1 .0.total_cmp(&b.1 .0))
            });
            next.truncate(frontier_cap);
            found[depth] = next.first().map_or(0.0, |(_, (lo, hi))| hi - lo);
            frontier = next;
            if frontier.is_empty() {
                break;
            }
        }

        let seeded: Result<Vec<Vec<f64>>> = (0..seeds as u64)
            .into_par_iter()
            .map(|i| {
                let x: f64 = stream_rng(seed, i).gen_range(0.0..1.0);
                let word = match self.itinerary(x, n_max) {
                    Ok(w) => w,
                    Err(Error::Underflow { .. }) => return Ok(Vec::new()),
                    Err(e) => return Err(e),
                };
                (1..=n_max).map(|d| Ok(self.cylinder_of(&word[..d])?.length())).collect()
            })
            .collect();
        for lengths in seeded? {
            for (d, len) in lengths.into_iter().enumerate() {
                found[d] = found[d].max(len);
            }
        }

        for d in (0..n_max - 1).rev() {
            found[d] = found[d].max(found[d + 1]);
        }
        Ok(found)
    }

    pub fn max_cylinder_length(&self, n: usize, frontier_cap: usize, seeds: usize, seed: u64) -> Result<f64> {
        Ok(self.max_cylinder_lengths(n, frontier_cap, seeds, seed)?.last().copied().unwrap_or(0.0))
    }
}

/// The `n` with `x ∈ [(n+1)^{-α}, n^{-α})`.
pub fn n_index(x: f64, alpha: f64) -> u64 {
    let mut n = x.powf(-1.0 / alpha).floor().max(1.0) as u64;
    while n > 1 && x >= (n as f64).powf(-alpha) {
        n -= 1;
    }
    while x < ((n + 1) as f64).powf(-alpha) {
        n += 1;
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{build_family, Family};

    fn pm_partition(s: f64, k_max: usize) -> RefinedPartition {
        compute_b_sequence(&build_family(&Family::pm(s)).unwrap(), k_max).unwrap()
    }

    #[test]
    fn b_sequence_start() {
        let p = pm_partition(1.0, 50);
        assert_eq!(p.b(0), 0.5);
        assert!((p.b(1) - (5f64.sqrt() - 1.0) / 4.0).abs() < 1e-13);
        for k in 0..50 {
            assert!(p.b(k + 1) < p.b(k));
            assert!((p.map().eval(p.b(k + 1)) - p.b(k)).abs() < 1e-10);
        }
        assert!(compute_b_sequence(p.map(), 0).is_err());
    }

    #[test]
    fn lengths_sum_to_one_up_to_truncation() {
        let p = pm_partition(1.0, 1000);
        let neg: f64 = (1..=1000).map(|k| p.length(Symbol(-(k as i64))).unwrap()).sum();
        let pos = p.length(Symbol(1)).unwrap();
        assert!((neg + pos + p.b(1000) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symbols() {
        let p = pm_partition(1.0, 100);
        assert_eq!(p.symbol_of(0.75), Symbol(1));
        assert_eq!(p.symbol_of(0.4), Symbol(-1));
        assert_eq!(p.symbol_of(0.31), Symbol(-1));
        assert_eq!(p.symbol_of(0.30), Symbol(-2));
        assert_eq!(p.symbol_of(0.5), Symbol(1));
        assert_eq!(p.symbol_of(1.0), Symbol(1));
        assert!(p.symbol_of(p.b(100) * 0.5).is_underflow());
        assert_eq!(p.symbol_of(p.b(100)), Symbol(-100));
    }

    #[test]
    fn geo_symbols() {
        let m = build_family(&Family::geo(1.0, 0.5)).unwrap();
        let p = compute_b_sequence(&m, 10).unwrap();
        assert_eq!(p.symbol_of(0.6), Symbol(1));
        assert_eq!(p.symbol_of(0.75), Symbol(2));
        assert_eq!(p.symbol_of(0.8), Symbol(2));
        assert_eq!(p.symbol_of(1.0), Symbol(19));
    }

    #[test]
    fn itineraries() {
        let p = pm_partition(1.0, 100);
        assert_eq!(p.itinerary(0.75, 1).unwrap(), vec![Symbol(1)]);
        assert_eq!(p.itinerary(0.4, 2).unwrap(), vec![Symbol(-1), Symbol(1)]);
        let x = 0.5 * (p.b(5) + p.b(4));
        let w = p.itinerary(x, 6).unwrap();
        assert_eq!(w[..5], [Symbol(-5), Symbol(-4), Symbol(-3), Symbol(-2), Symbol(-1)]);
        assert!(w[5].is_positive());
        assert!(matches!(p.itinerary(1e-9, 3), Err(Error::Underflow { step: 0, .. })));
    }

    #[test]
    fn cylinder_examples() {
        let p = pm_partition(1.0, 100);
        let c = p.cylinder_of(&[Symbol(1)]).unwrap();
        assert_eq!(c.interval, Some((0.5, 1.0)));
        let c = p.cylinder_of(&[Symbol(-3)]).unwrap();
        assert_eq!(c.interval, Some((p.b(3), p.b(2))));
        assert!(p.cylinder_of(&[Symbol(-1), Symbol(-1)]).unwrap().is_empty());
        assert!(p.cylinder_of(&[Symbol(-3), Symbol(1)]).unwrap().is_empty());
        let c = p.cylinder_of(&[Symbol(1), Symbol(1)]).unwrap();
        let (lo, hi) = c.interval.unwrap();
        assert!((lo - 0.75).abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
        let c = p.cylinder_of(&[Symbol(1), Symbol(1), Symbol(-1)]).unwrap();
        let (lo, hi) = c.interval.unwrap();
        assert!((lo - (0.75 + p.b(1) / 4.0)).abs() < 1e-15 && (hi - 0.875).abs() < 1e-15);
        assert!(p.cylinder_of(&[]).is_err());
        assert!(p.cylinder_of(&[Symbol(-101)]).is_err());
        assert!(p.cylinder_of(&[Symbol(2)]).is_err());
    }

    #[test]
    fn cylinder_midpoints_follow_their_word() {
        let p = pm_partition(1.0, 200);
        let words = [
            "1,-3,-2,-1,1",
            "-2,-1,1,1,-1,1",
            "1,1,1,-5,-4,-3",
            "-1,1,-2,-1,1,-1",
        ];
        for w in words {
            let word = parse_word(w).unwrap();
            let c = p.cylinder_of(&word).unwrap();
            let mid = c.midpoint().unwrap();
            assert_eq!(p.itinerary(mid, word.len()).unwrap(), word, "{w}");
        }
    }

    #[test]
    fn word_text() {
        let w = parse_word("(-2,\u{2212}1,1)").unwrap();
        assert_eq!(w, vec![Symbol(-2), Symbol(-1), Symbol(1)]);
        assert_eq!(format_word(&w), "(-2,-1,1)");
        assert!(parse_word("1,0").is_err());
    }

    #[test]
    fn transitions() {
        assert!(RefinedPartition::allowed(Symbol(1), Symbol(-7)));
        assert!(RefinedPartition::allowed(Symbol(-1), Symbol(2)));
        assert!(!RefinedPartition::allowed(Symbol(-1), Symbol(-1)));
        assert!(RefinedPartition::allowed(Symbol(-3), Symbol(-2)));
        assert!(!RefinedPartition::allowed(Symbol(-3), Symbol(1)));
        let p = pm_partition(1.0, 10);
        let pred: Vec<Symbol> = p.predecessors(Symbol(-3)).collect();
        assert_eq!(pred, vec![Symbol(1), Symbol(-4)]);
        let pred: Vec<Symbol> = p.predecessors(Symbol(-10)).collect();
        assert_eq!(pred, vec![Symbol(1)]);
    }

    #[test]
    fn max_cylinder_lengths_decay() {
        let p = pm_partition(1.0, 2000);
        let seq = p.max_cylinder_lengths(12, 20_000, 200, 1).unwrap();
        assert_eq!(seq[0], 0.5);
        assert!(seq.windows(2).all(|w| w[1] <= w[0]));
        assert!(seq[11] < seq[4]);
    }

    #[test]
    fn n_index_brackets() {
        for &(x, alpha) in &[(0.5, 1.0), (0.3, 1.0), (0.01, 0.5), (0.2, 0.5), (1.0 / 3.0, 1.0)] {
            let n = n_index(x, alpha);
            assert!(x >= ((n + 1) as f64).powf(-alpha) && x < (n as f64).powf(-alpha));
        }
        assert_eq!(n_index(0.5, 1.0), 1);
    }
}
