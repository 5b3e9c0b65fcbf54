//! Excursion parsing and empirical distortion constants.
//!
//! An itinerary is cut at every visit to `J`; each piece is a frame. Frame 0
//! starting in `I_0` is Type 1, a frame of length one is Type 3 (a visit to
//! `J` followed by another), longer frames are complete excursions (Type 2)
//! and the final frame is always Type 4.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::partition::{n_index, RefinedPartition, Symbol, Word};
use crate::stats::stream_rng;

/// Relative agreement required between the log-sum and the chain-rule
/// product, with the denominator floored at 1.
pub const TELESCOPE_TOL: f64 = 1e-8;
const MAX_SAMPLE_ATTEMPTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FrameType {
    Type1,
    Type2,
    Type3,
    Type4,
}

impl FrameType {
    pub const ALL: [FrameType; 4] = [FrameType::Type1, FrameType::Type2, FrameType::Type3, FrameType::Type4];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Indices `start..end` of the itinerary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Frame {
    pub start: usize,
    pub end: usize,
    pub kind: FrameType,
}

impl Frame {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParsedOrbit {
    pub word: Word,
    pub frames: Vec<Frame>,
}

impl ParsedOrbit {
    pub fn count(&self, kind: FrameType) -> usize {
        self.frames.iter().filter(|f| f.kind == kind).count()
    }
}

pub fn parse_excursions(word: &[Symbol]) -> Result<ParsedOrbit> {
    if word.is_empty() {
        return Err(invalid("cannot parse an empty itinerary"));
    }
    if !word.iter().any(|s| s.is_positive()) {
        return Err(Error::TrivialParsing);
    }
    let starts: Vec<usize> = std::iter::once(0)
        .chain((1..word.len()).filter(|&k| word[k].is_positive()))
        .collect();
    let frames = starts
        .iter()
        .enumerate()
        .map(|(i, &start)| {
            let last = i + 1 == starts.len();
            let end = if last { word.len() } else { starts[i + 1] };
            let kind = if last {
                FrameType::Type4
            } else if i == 0 && !word[0].is_positive() {
                FrameType::Type1
            } else if end - start == 1 {
                FrameType::Type3
            } else {
                FrameType::Type2
            };
            Frame { start, end, kind }
        })
        .collect();
    Ok(ParsedOrbit { word: word.to_vec(), frames })
}

/// Orbit `x_0..=x_{n+1}` following the branches named by `word`.
pub fn guided_orbit(partition: &RefinedPartition, word: &[Symbol], x: f64) -> Vec<f64> {
    let mut orbit = Vec::with_capacity(word.len() + 1);
    orbit.push(x);
    for (k, &s) in word.iter().enumerate() {
        orbit.push(partition.step(s, orbit[k]));
    }
    orbit
}

/// Per-step `log(|T'(x_k)| / |T'(y_k)|)` along `word`.
fn log_ratios(partition: &RefinedPartition, word: &[Symbol], xs: &[f64], ys: &[f64]) -> Vec<f64> {
    word.iter()
        .enumerate()
        .map(|(k, &s)| (partition.slope(s, xs[k]).abs() / partition.slope(s, ys[k]).abs()).ln())
        .collect()
}

/// `log |(T^{n+1})'(x)|` from the running product of derivatives, kept as a
/// mantissa in `[1, 2)` and a binary exponent.
pub fn log_derivative_product(partition: &RefinedPartition, word: &[Symbol], x: f64) -> f64 {
    let mut mantissa = 1.0f64;
    let mut exponent = 0i64;
    let mut y = x;
    for &s in word {
        mantissa *= partition.slope(s, y).abs();
        let shift = mantissa.log2().floor();
        mantissa /= shift.exp2();
        exponent += shift as i64;
        y = partition.step(s, y);
    }
    mantissa.ln() + exponent as f64 * std::f64::consts::LN_2
}

/// `Σ_{k≤n} log(|T'(x_k)|/|T'(y_k)|)` along a shared word.
pub fn log_distortion_along(partition: &RefinedPartition, word: &[Symbol], x: f64, y: f64) -> f64 {
    let xs = guided_orbit(partition, word, x);
    let ys = guided_orbit(partition, word, y);
    log_ratios(partition, word, &xs, &ys).iter().sum()
}

/// Log-distortion of `T^{n+1}` between two points with the same depth-`n+1`
/// itinerary.
pub fn log_distortion(partition: &RefinedPartition, x: f64, y: f64, n: usize) -> Result<f64> {
    let wx = partition.itinerary(x, n + 1)?;
    let wy = partition.itinerary(y, n + 1)?;
    if let Some(index) = wx.iter().zip(&wy).position(|(a, b)| a != b) {
        return Err(Error::ItineraryMismatch { index });
    }
    Ok(log_distortion_along(partition, &wx, x, y))
}

/// Whether the two routes to the log-distortion agree.
pub fn telescopes(sum: f64, product_diff: f64) -> bool {
    relative_gap(sum, product_diff) <= TELESCOPE_TOL
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Frame-level maxima for one or more pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameStats {
    /// Largest `|x_{k_i} - y_{k_i}| / |x_{k_{i+1}} - y_{k_{i+1}}|` per type
    /// (Type 4 has no successor and stays 0).
    pub eta: [f64; 4],
    /// Largest frame `|Σ log| / |x_{k_{i+1}} - y_{k_{i+1}}|` per type, plain
    /// `|Σ log|` for Type 4.
    pub kappa: [f64; 4],
    pub counts: [u64; 4],
}

impl Default for FrameStats {
    fn default() -> Self {
        FrameStats { eta: [0.0; 4], kappa: [0.0; 4], counts: [0; 4] }
    }
}

impl FrameStats {
    pub fn merge(mut self, other: &FrameStats) -> FrameStats {
        for t in 0..4 {
            self.eta[t] = self.eta[t].max(other.eta[t]);
            self.kappa[t] = self.kappa[t].max(other.kappa[t]);
            self.counts[t] += other.counts[t];
        }
        self
    }

    pub fn eta_hat(&self) -> f64 {
        self.eta.iter().copied().fold(0.0, f64::max)
    }

    pub fn kappa_hat(&self) -> f64 {
        self.kappa.iter().copied().fold(0.0, f64::max)
    }

    /// `κ̂ / (1 - η̂)`, when `η̂ < 1`.
    pub fn c_hat(&self) -> Option<f64> {
        let eta = self.eta_hat();
        (eta < 1.0).then(|| self.kappa_hat() / (1.0 - eta))
    }
}

fn frame_stats(parsed: &ParsedOrbit, xs: &[f64], ys: &[f64], logs: &[f64]) -> FrameStats {
    let mut stats = FrameStats::default();
    for frame in &parsed.frames {
        let t = frame.kind.index();
        stats.counts[t] += 1;
        let sum: f64 = logs[frame.start..frame.end].iter().sum();
        if frame.kind == FrameType::Type4 {
            stats.kappa[t] = stats.kappa[t].max(sum.abs());
            continue;
        }
        let gap_next = (xs[frame.end] - ys[frame.end]).abs();
        if gap_next > 0.0 {
            let gap = (xs[frame.start] - ys[frame.start]).abs();
            stats.eta[t] = stats.eta[t].max(gap / gap_next);
            stats.kappa[t] = stats.kappa[t].max(sum.abs() / gap_next);
        }
    }
    stats
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortionReport {
    pub depth: usize,
    pub cylinders: u64,
    pub pairs: u64,
    /// Largest `|Σ log ratio|` over full words.
    pub max_abs_log: f64,
    /// Same, indexed by cylinder depth minus one.
    pub max_by_depth: Vec<f64>,
    /// Largest `|Σ log ratio|` with the final factor dropped.
    pub max_abs_log_prefix: f64,
    pub d_hat: f64,
    pub frames: FrameStats,
    pub eta_hat: f64,
    pub kappa_hat: f64,
    pub c_hat: Option<f64>,
    /// Pairs whose observed `|Σ log|` exceeds `c_hat`.
    pub c_hat_violations: u64,
    pub telescope_max_gap: f64,
    pub telescope_failures: u64,
    pub measure_checks: u64,
    pub measure_violations: u64,
}

impl DistortionReport {
    fn empty(depth: usize) -> Self {
        DistortionReport {
            depth,
            cylinders: 0,
            pairs: 0,
            max_abs_log: 0.0,
            max_by_depth: vec![0.0; depth],
            max_abs_log_prefix: 0.0,
            d_hat: 1.0,
            frames: FrameStats::default(),
            eta_hat: 0.0,
            kappa_hat: 0.0,
            c_hat: None,
            c_hat_violations: 0,
            telescope_max_gap: 0.0,
            telescope_failures: 0,
            measure_checks: 0,
            measure_violations: 0,
        }
    }

    /// Combines two partial reports; associative and commutative.
    pub fn merge(mut self, other: &DistortionReport) -> DistortionReport {
        self.cylinders += other.cylinders;
        self.pairs += other.pairs;
        self.max_abs_log = self.max_abs_log.max(other.max_abs_log);
        if self.max_by_depth.len() < other.max_by_depth.len() {
            self.max_by_depth.resize(other.max_by_depth.len(), 0.0);
        }
        for (m, o) in self.max_by_depth.iter_mut().zip(&other.max_by_depth) {
            *m = m.max(*o);
        }
        self.max_abs_log_prefix = self.max_abs_log_prefix.max(other.max_abs_log_prefix);
        self.frames = self.frames.merge(&other.frames);
        self.telescope_max_gap = self.telescope_max_gap.max(other.telescope_max_gap);
        self.telescope_failures += other.telescope_failures;
        self.measure_checks += other.measure_checks;
        self.measure_violations += other.measure_violations;
        self.c_hat_violations += other.c_hat_violations;
        self.depth = self.depth.max(other.depth);
        self.finish()
    }

    fn finish(mut self) -> Self {
        self.d_hat = self.max_abs_log.max(self.max_abs_log_prefix).exp();
        self.eta_hat = self.frames.eta_hat();
        self.kappa_hat = self.frames.kappa_hat();
        self.c_hat = self.frames.c_hat();
        self
    }
}

/// Random admissible word of length `d` with at least one positive symbol.
fn random_word(p: &RefinedPartition, d: usize, rng: &mut ChaCha8Rng) -> Word {
    let npos = p.positive_symbols() as i64;
    let kcap = p.k_max();
    let positive = |rng: &mut ChaCha8Rng| Symbol(rng.gen_range(1..=npos));
    let mut word = Vec::with_capacity(d);
    let first = if d == 1 || rng.gen_bool(0.5) {
        positive(rng)
    } else {
        Symbol(-(rng.gen_range(1..=(d - 1).min(kcap)) as i64))
    };
    word.push(first);
    while word.len() < d {
        let next = match word[word.len() - 1].0 {
            -1 => positive(rng),
            k if k < -1 => Symbol(k + 1),
            _ if rng.gen_bool(0.5) => positive(rng),
            _ => {
                let reach = (2 * (d - word.len())).min(kcap).max(1);
                Symbol(-(rng.gen_range(1..=reach) as i64))
            }
        };
        word.push(next);
    }
    word
}

/// Itinerary of a Lebesgue-random point, if it has a positive symbol.
fn lebesgue_word(p: &RefinedPartition, d: usize, rng: &mut ChaCha8Rng) -> Option<Word> {
    let x: f64 = rng.gen_range(0.0..1.0);
    p.itinerary(x, d).ok().filter(|w| w.iter().any(|s| s.is_positive()))
}

fn sample_cylinder(
    p: &RefinedPartition,
    depth: usize,
    from_lebesgue: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Option<(Word, (f64, f64))>> {
    for _ in 0..MAX_SAMPLE_ATTEMPTS {
        let d = rng.gen_range(1..=depth);
        let word = if from_lebesgue { lebesgue_word(p, d, rng) } else { Some(random_word(p, d, rng)) };
        let Some(word) = word else { continue };
        if let Some(iv) = p.cylinder_of(&word)?.interval {
            return Ok(Some((word, iv)));
        }
    }
    Ok(None)
}

fn sample_pairs((lo, hi): (f64, f64), extra: usize, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let mid = 0.5 * (lo + hi);
    let mut pairs = vec![(lo, hi), (lo, mid), (mid, hi)];
    for _ in 0..extra {
        pairs.push((rng.gen_range(lo..=hi), rng.gen_range(lo..=hi)));
    }
    pairs
}

struct PairOutcome {
    full: f64,
    prefix: f64,
    gap: f64,
    stats: FrameStats,
}

fn analyse_pair(p: &RefinedPartition, parsed: &ParsedOrbit, x: f64, y: f64) -> PairOutcome {
    let word = &parsed.word;
    let xs = guided_orbit(p, word, x);
    let ys = guided_orbit(p, word, y);
    let logs = log_ratios(p, word, &xs, &ys);
    let full: f64 = logs.iter().sum();
    let prefix: f64 = logs[..logs.len() - 1].iter().sum();
    let product = log_derivative_product(p, word, x) - log_derivative_product(p, word, y);
    PairOutcome { full, prefix, gap: relative_gap(full, product), stats: frame_stats(parsed, &xs, &ys, &logs) }
}

/// Samples `trials` cylinders of depth `1..=depth` with a positive symbol
/// (half from itineraries of uniform points, half from random admissible
/// words), measures distortion on endpoint, midpoint and random pairs, then
/// checks the conditional-measure bounds on random sub-intervals.
pub fn verify_lem_dist(
    partition: &RefinedPartition,
    depth: usize,
    trials: usize,
    extra_pairs: usize,
    seed: u64,
) -> Result<DistortionReport> {
    if depth == 0 || trials == 0 {
        return Err(invalid("depth and trials must be positive"));
    }
    let outcomes: Result<Vec<(DistortionReport, Option<(Word, (f64, f64), u64)>)>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t);
            let mut report = DistortionReport::empty(depth);
            let Some((word, iv)) = sample_cylinder(partition, depth, t % 2 == 0, &mut rng)? else {
                return Ok((report, None));
            };
            let parsed = parse_excursions(&word)?;
            report.cylinders = 1;
            let mut worst = 0.0f64;
            for (x, y) in sample_pairs(iv, extra_pairs, &mut rng) {
                let out = analyse_pair(partition, &parsed, x, y);
                report.pairs += 1;
                worst = worst.max(out.full.abs());
                report.max_abs_log_prefix = report.max_abs_log_prefix.max(out.prefix.abs());
                report.telescope_max_gap = report.telescope_max_gap.max(out.gap);
                report.telescope_failures += u64::from(out.gap > TELESCOPE_TOL);
                report.frames = report.frames.merge(&out.stats);
            }
            report.max_abs_log = worst;
            report.max_by_depth[word.len() - 1] = worst;
            Ok((report.finish(), Some((word, iv, t))))
        })
        .collect();
    let outcomes = outcomes?;

    let mut report = outcomes
        .iter()
        .fold(DistortionReport::empty(depth), |acc, (r, _)| acc.merge(r));

    let d_hat = report.d_hat;
    let c_hat = report.c_hat;
    let checks: Vec<(u64, u64, u64)> = outcomes
        .par_iter()
        .filter_map(|(r, s)| s.as_ref().map(|s| (r, s)))
        .map(|(r, (word, iv, t))| {
            let mut rng = stream_rng(seed ^ 0x9e37_79b9_7f4a_7c15, *t);
            let violations_c = match c_hat {
                Some(c) if r.max_abs_log > c * (1.0 + 1e-12) => 1,
                _ => 0,
            };
            let (checks, violations) = conditional_measure_checks(partition, word, *iv, d_hat, &mut rng);
            (checks, violations, violations_c)
        })
        .collect();
    for (c, v, vc) in checks {
        report.measure_checks += c;
        report.measure_violations += v;
        report.c_hat_violations += vc;
    }
    Ok(report)
}

/// Compares `Leb(T^n B | I_{j_n})` with `Leb(B | I_{j^{n+1}})` in both
/// directions for random sub-intervals `B` of the cylinder.
fn conditional_measure_checks(
    p: &RefinedPartition,
    word: &[Symbol],
    (lo, hi): (f64, f64),
    d_hat: f64,
    rng: &mut ChaCha8Rng,
) -> (u64, u64) {
    let n = word.len() - 1;
    let Some(target) = p.length(word[n]) else { return (0, 0) };
    let push = |x: f64| guided_orbit(p, &word[..n], x)[n];
    let slack = 1.0 + 1e-9;
    let mut subsets = vec![(lo, hi)];
    for _ in 0..2 {
        let (u, v) = (rng.gen_range(lo..=hi), rng.gen_range(lo..=hi));
        subsets.push((u.min(v), u.max(v)));
    }
    let mut violations = 0;
    for &(u, v) in &subsets {
        if v - u <= 0.0 {
            continue;
        }
        let image = (push(v) - push(u)).abs() / target;
        let relative = (v - u) / (hi - lo);
        if image > d_hat * relative * slack || relative > d_hat * image * slack {
            violations += 1;
        }
    }
    (subsets.len() as u64, violations)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentReport {
    pub pairs: u64,
    pub skipped: u64,
    pub frames: FrameStats,
    pub eta_hat: f64,
    pub kappa_hat: f64,
    pub type3_eta: f64,
    pub type3_kappa: f64,
}

/// Frame estimates over pairs whose depth-`n+1` itineraries agree; other
/// pairs are counted as skipped.
pub fn verify_segment_estimates(
    partition: &RefinedPartition,
    pairs: &[(f64, f64)],
    n: usize,
) -> Result<SegmentReport> {
    let mut frames = FrameStats::default();
    let (mut used, mut skipped) = (0, 0);
    for &(x, y) in pairs {
        let (wx, wy) = match (partition.itinerary(x, n + 1), partition.itinerary(y, n + 1)) {
            (Ok(a), Ok(b)) if a == b => (a, b),
            _ => {
                skipped += 1;
                continue;
            }
        };
        drop(wy);
        let parsed = match parse_excursions(&wx) {
            Ok(p) => p,
            Err(Error::TrivialParsing) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let xs = guided_orbit(partition, &wx, x);
        let ys = guided_orbit(partition, &wx, y);
        let logs = log_ratios(partition, &wx, &xs, &ys);
        frames = frames.merge(&frame_stats(&parsed, &xs, &ys, &logs));
        used += 1;
    }
    let t3 = FrameType::Type3.index();
    Ok(SegmentReport {
        pairs: used,
        skipped,
        eta_hat: frames.eta_hat(),
        kappa_hat: frames.kappa_hat(),
        type3_eta: frames.eta[t3],
        type3_kappa: frames.kappa[t3],
        frames,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YoungCheckRecord {
    pub j_max: usize,
    pub pairs_per_j: usize,
    /// `n_k` for `k = 1..=j_max`.
    pub n_k: Vec<u64>,
    /// `Δb_k / Δ(n^{-α})` at `n = n_k`, for `k = 1..=j_max`.
    pub delta_ratio: Vec<f64>,
    /// Largest `|log ratio| · L_{p-j} / |T^p x - T^p y|` over `p` and pairs,
    /// for `j = 1..=j_max`.
    pub envelope_by_j: Vec<f64>,
    /// Largest `|log ratio|` for `j = 1..=j_max`.
    pub abs_envelope_by_j: Vec<f64>,
    pub c_prime: f64,
    /// Largest ratio between the extremes of `|T^i x - T^i y| / L_{i-j}`
    /// along one pair's orbit.
    pub comparability_spread: f64,
    /// `Σ_{m ≤ K_max} b_m^{2β+2}` and its share from `m > K_max/2`.
    pub c3: f64,
    pub c3_tail: f64,
}

/// Checks the bounded-distortion estimate for orbits of `I_{-j}` up to their
/// exit to `J`, for every `j ≤ j_max`.
pub fn verify_young(partition: &RefinedPartition, j_max: usize, pairs_per_j: usize, seed: u64) -> Result<YoungCheckRecord> {
    if j_max == 0 || j_max > partition.k_max() {
        return Err(invalid(format!("j_max must lie in 1..={}", partition.k_max())));
    }
    let alpha = partition.map().alpha();
    let beta = partition.map().beta();
    let b = partition.b_values();

    let n_k: Vec<u64> = (1..=j_max).map(|k| n_index(b[k], alpha)).collect();
    let delta_ratio = n_k
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let k = i + 1;
            let dn = (n as f64).powf(-alpha) - ((n + 1) as f64).powf(-alpha);
            (b[k - 1] - b[k]) / dn
        })
        .collect();

    let per_j: Vec<(f64, f64, f64)> = (1..=j_max)
        .into_par_iter()
        .map(|j| young_stratum(partition, j, pairs_per_j, &mut stream_rng(seed, j as u64)))
        .collect();

    let e = 2.0 * beta + 2.0;
    let terms: Vec<f64> = b[1..].iter().map(|bm| bm.powf(e)).collect();
    let half = terms.len() / 2;

    Ok(YoungCheckRecord {
        j_max,
        pairs_per_j,
        n_k,
        delta_ratio,
        envelope_by_j: per_j.iter().map(|r| r.0).collect(),
        abs_envelope_by_j: per_j.iter().map(|r| r.1).collect(),
        c_prime: per_j.iter().map(|r| r.0.max(r.1)).fold(0.0, f64::max),
        comparability_spread: per_j.iter().map(|r| r.2).fold(1.0, f64::max),
        c3: terms.iter().sum(),
        c3_tail: terms[half..].iter().sum(),
    })
}

fn young_stratum(p: &RefinedPartition, j: usize, pairs: usize, rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
    let (lo, hi) = (p.b(j), p.b(j - 1));
    let word = vec![Symbol(0); j];
    let mut candidates = sample_pairs((lo, hi), pairs.saturating_sub(3), rng);
    candidates.truncate(pairs.max(1));
    let (mut quotient, mut absolute, mut spread) = (0.0f64, 0.0f64, 1.0f64);
    for (x, y) in candidates {
        if x == y {
            continue;
        }
        let xs = guided_orbit(p, &word, x);
        let ys = guided_orbit(p, &word, y);
        let (mut cum, mut rmin, mut rmax) = (0.0f64, f64::INFINITY, 0.0f64);
        for i in 0..=j {
            let gap = (xs[i] - ys[i]).abs();
            let scaled = gap / p.young_length(j - i);
            rmin = rmin.min(scaled);
            rmax = rmax.max(scaled);
            if gap > 0.0 {
                quotient = quotient.max(cum.abs() / scaled);
            }
            absolute = absolute.max(cum.abs());
            if i < j {
                cum += (p.slope(Symbol(0), xs[i]) / p.slope(Symbol(0), ys[i])).ln();
            }
        }
        if rmin > 0.0 {
            spread = spread.max(rmax / rmin);
        }
    }
    (quotient, absolute, spread)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{build_family, Family};
    use crate::partition::{compute_b_sequence, parse_word};

    fn pm1(k_max: usize) -> RefinedPartition {
        compute_b_sequence(&build_family(&Family::pm(1.0)).unwrap(), k_max).unwrap()
    }

    fn kinds(text: &str) -> Vec<(usize, usize, FrameType)> {
        parse_excursions(&parse_word(text).unwrap())
            .unwrap()
            .frames
            .iter()
            .map(|f| (f.start, f.end, f.kind))
            .collect()
    }

    #[test]
    fn parsing_examples() {
        use FrameType::*;
        assert_eq!(kinds("1,2,1"), vec![(0, 1, Type3), (1, 2, Type3), (2, 3, Type4)]);
        assert_eq!(kinds("-2,-1,1,-1,1"), vec![(0, 2, Type1), (2, 4, Type2), (4, 5, Type4)]);
        assert_eq!(kinds("1,-1,-2"), vec![(0, 3, Type4)]);
        assert_eq!(kinds("1,-2,-1,1,1"), vec![(0, 3, Type2), (3, 4, Type3), (4, 5, Type4)]);
        assert_eq!(
            parse_excursions(&parse_word("-3,-2,-1").unwrap()),
            Err(Error::TrivialParsing)
        );
        assert!(parse_excursions(&[]).is_err());
    }

    #[test]
    fn distortion_examples() {
        let p = pm1(200);
        assert_eq!(log_distortion(&p, 0.3, 0.3, 5).unwrap(), 0.0);
        assert_eq!(log_distortion(&p, 0.6, 0.7, 0).unwrap(), 0.0);
        assert_eq!(log_distortion(&p, 0.6, 0.8, 1), Err(Error::ItineraryMismatch { index: 1 }));
        let v = log_distortion(&p, 0.35, 0.4, 0).unwrap();
        assert!((v - (2.4f64 / 2.6).ln()).abs() < 1e-14);
    }

    #[test]
    fn product_route_agrees() {
        let p = pm1(500);
        let word = parse_word("-3,-2,-1,1,1,-1,1").unwrap();
        let (lo, hi) = p.cylinder_of(&word).unwrap().interval.unwrap();
        let sum = log_distortion_along(&p, &word, lo, hi);
        let prod = log_derivative_product(&p, &word, lo) - log_derivative_product(&p, &word, hi);
        assert!(telescopes(sum, prod), "{sum} vs {prod}");
        let direct: f64 = {
            let (mut x, mut d) = (lo, 1.0);
            for &s in &word {
                d *= p.slope(s, x);
                x = p.step(s, x);
            }
            d.ln()
        };
        assert!((log_derivative_product(&p, &word, lo) - direct).abs() < 1e-12);
    }

    #[test]
    fn lem_dist_depth_one() {
        let p = pm1(200);
        let r = verify_lem_dist(&p, 1, 50, 0, 3).unwrap();
        assert!(r.d_hat >= 1.0);
        assert_eq!(r.measure_violations, 0);
        assert_eq!(r.max_abs_log, 0.0);
    }

    #[test]
    fn lem_dist_is_sound() {
        let p = pm1(5000);
        let r = verify_lem_dist(&p, 12, 400, 2, 11).unwrap();
        assert_eq!(r.cylinders, 400);
        assert!(r.max_abs_log.is_finite() && r.max_abs_log > 0.0);
        assert_eq!(r.telescope_failures, 0);
        let c = r.c_hat.expect("eta below one");
        assert!(c >= r.max_abs_log);
        assert_eq!(r.c_hat_violations, 0);
        assert!(r.eta_hat < 1.0);
    }

    #[test]
    fn merge_is_order_independent() {
        let p = pm1(2000);
        let a = verify_lem_dist(&p, 8, 60, 1, 5).unwrap();
        let b = verify_lem_dist(&p, 10, 60, 1, 6).unwrap();
        assert_eq!(a.clone().merge(&b), b.clone().merge(&a));
    }

    #[test]
    fn segment_estimates_pm1() {
        let p = pm1(2000);
        let mut pairs = Vec::new();
        for i in 0..200 {
            let x = 0.5 + 0.5 * (i as f64 + 0.3) / 200.0;
            pairs.push((x, x + 1e-7));
            pairs.push((x * 0.6, x * 0.6 + 1e-8));
        }
        let r = verify_segment_estimates(&p, &pairs, 6).unwrap();
        assert!(r.pairs > 100);
        assert!(r.type3_eta <= 0.5 + 1e-9);
        assert!(r.type3_kappa <= 1e-12);
        assert!(r.eta_hat < 1.0);
    }

    #[test]
    fn young_small() {
        let p = pm1(2000);
        let rec = verify_young(&p, 30, 40, 1).unwrap();
        assert_eq!(rec.envelope_by_j.len(), 30);
        assert!(rec.c_prime.is_finite() && rec.c_prime > 0.0);
        for (i, &n) in rec.n_k.iter().enumerate() {
            let b = p.b(i + 1);
            assert!(b >= ((n + 1) as f64).powi(-1) && b < (n as f64).powi(-1));
        }
        assert!(rec.c3_tail < 0.01 * rec.c3);
        assert!(verify_young(&p, 0, 10, 1).is_err());
        assert!(verify_young(&p, 3000, 10, 1).is_err());
    }
}
