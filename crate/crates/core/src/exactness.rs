//! Finite unions of closed intervals, exact forward images under `T`, and
//! the intersection profile `n ↦ Leb(T^{n+1}A ∩ T^n A)`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Result};
use crate::map::MapSpec;

/// Components closer than this are merged.
pub const MERGE_TOL: f64 = 1e-12;
pub const DEFAULT_COMPONENT_CAP: usize = 4096;
pub const DEFAULT_POSITIVITY_TOL: f64 = 1e-12;

/// Sorted, pairwise disjoint closed intervals in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalSet {
    parts: Vec<(f64, f64)>,
    measure: f64,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet::default()
    }

    pub fn unit() -> Self {
        IntervalSet { parts: vec![(0.0, 1.0)], measure: 1.0 }
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        IntervalSet::new([(lo, hi)])
    }

    /// Validates and canonicalizes arbitrary intervals.
    pub fn new(parts: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let parts: Vec<(f64, f64)> = parts.into_iter().collect();
        for &(lo, hi) in &parts {
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return Err(invalid(format!("[{lo}, {hi}] is not a sub-interval of [0, 1]")));
            }
        }
        Ok(IntervalSet::canonical(parts))
    }

    fn canonical(mut parts: Vec<(f64, f64)>) -> Self {
        parts.retain(|(lo, hi)| hi > lo);
        parts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(parts.len());
        for (lo, hi) in parts {
            match merged.last_mut() {
                Some(last) if lo - last.1 < MERGE_TOL => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        let measure = merged.iter().fold(0.0, |acc, (lo, hi)| acc + (hi - lo));
        IntervalSet { parts: merged, measure }
    }

    pub fn parts(&self) -> &[(f64, f64)] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn contains(&self, x: f64) -> bool {
        let i = self.parts.partition_point(|&(_, hi)| hi < x);
        self.parts.get(i).is_some_and(|&(lo, _)| lo <= x)
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let (a, b) = (&self.parts, &other.parts);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let lo = a[i].0.max(b[j].0);
            let hi = a[i].1.min(b[j].1);
            if hi > lo {
                out.push((lo, hi));
            }
            if a[i].1 < b[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet::canonical(out)
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        IntervalSet::canonical(self.parts.iter().chain(&other.parts).copied().collect())
    }

    /// Fills the `len() - cap` smallest gaps; returns the set and the filler.
    fn coarsen(&self, cap: usize) -> (IntervalSet, IntervalSet) {
        let cap = cap.max(1);
        if self.len() <= cap {
            return (self.clone(), IntervalSet::empty());
        }
        let mut gaps: Vec<(f64, f64)> = self.parts.windows(2).map(|w| (w[0].1, w[1].0)).collect();
        gaps.sort_by(|a, b| (a.1 - a.0).total_cmp(&(b.1 - b.0)).then(a.0.total_cmp(&b.0)));
        gaps.truncate(self.len() - cap);
        let filler = IntervalSet::canonical(gaps);
        (self.union(&filler), filler)
    }
}

impl Serialize for IntervalSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.parts.iter().map(|&(lo, hi)| [lo, hi]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntervalSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        IntervalSet::new(pairs.into_iter().map(|[lo, hi]| (lo, hi))).map_err(serde::de::Error::custom)
    }
}

/// Result of one forward step.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub set: IntervalSet,
    /// Gaps filled to respect the component cap (empty when none were).
    pub filler: IntervalSet,
}

/// `T(set)`: each component is cut at the branch breaks and mapped through
/// its branch by its endpoint images.
pub fn forward_image(map: &MapSpec, set: &IntervalSet, cap: usize) -> Image {
    let mut pieces = Vec::new();
    for &(lo, hi) in set.parts() {
        let first = map.branch_index(lo);
        let last = map.branch_index(hi);
        for j in first..=last {
            let branch = map.branch(j);
            let (u, v) = (lo.max(branch.lo), hi.min(branch.hi));
            if v <= u {
                continue;
            }
            let (p, q) = (branch.eval(u), branch.eval(v));
            let (p, q) = if p <= q { (p, q) } else { (q, p) };
            pieces.push((p.clamp(0.0, 1.0), q.clamp(0.0, 1.0)));
        }
    }
    let (set, filler) = IntervalSet::canonical(pieces).coarsen(cap);
    Image { set, filler }
}

/// `T^n(set)` for `n = 0..=n_max`, each with a superset of the
/// over-approximation accumulated so far.
pub fn image_sequence(map: &MapSpec, set: &IntervalSet, n_max: usize, cap: usize) -> Vec<(IntervalSet, IntervalSet)> {
    let mut out = Vec::with_capacity(n_max + 1);
    let (first, filler) = set.coarsen(cap);
    out.push((first, filler));
    for n in 0..n_max {
        let (current, excess) = &out[n];
        let next = forward_image(map, current, cap);
        let pushed = forward_image(map, excess, cap).set;
        let excess = pushed.union(&next.filler);
        out.push((next.set, excess));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileRow {
    pub n: usize,
    /// `Leb(T^{n+1}A ∩ T^n A)` on the computed sets.
    pub measure: f64,
    /// Bound on how much of `measure` may come from coarsening.
    pub slack: f64,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntersectionProfile {
    pub rows: Vec<ProfileRow>,
    pub n_star: Option<usize>,
    /// Every row from `n_star` on is positive.
    pub persistent: bool,
    pub coarsened: bool,
}

pub fn mn_test(map: &MapSpec, a: &IntervalSet, n_max: usize, tol: f64, cap: usize) -> Result<IntersectionProfile> {
    if !(a.measure() > 0.0) {
        return Err(invalid("the test set must have positive measure"));
    }
    if n_max == 0 || !(tol >= 0.0) {
        return Err(invalid("need n_max >= 1 and tol >= 0"));
    }
    let images = image_sequence(map, a, n_max + 1, cap);
    let rows: Vec<ProfileRow> = (0..=n_max)
        .map(|n| {
            let (now, excess_now) = &images[n];
            let (next, excess_next) = &images[n + 1];
            let measure = next.intersect(now).measure();
            let slack = excess_now.measure() + excess_next.measure();
            ProfileRow { n, measure, slack, positive: measure > tol + slack }
        })
        .collect();
    let n_star = rows.iter().position(|r| r.positive);
    let persistent = n_star.map_or(true, |s| rows[s..].iter().all(|r| r.positive));
    let coarsened = images.iter().any(|(_, e)| !e.is_empty());
    Ok(IntersectionProfile { rows, n_star, persistent, coarsened })
}

/// `δ = D / (D + Leb(I_j̄))`.
pub fn delta_threshold(d_hat: f64, j_bar: usize, map: &MapSpec) -> Result<f64> {
    if !(d_hat >= 1.0) {
        return Err(invalid("the distortion constant must be at least 1"));
    }
    if j_bar == 0 || j_bar >= map.num_branches() {
        return Err(invalid(format!("j_bar must lie in 1..{}", map.num_branches())));
    }
    Ok(delta_from_length(d_hat, map.a(j_bar + 1) - map.a(j_bar)))
}

pub fn delta_from_length(d_hat: f64, length: f64) -> f64 {
    d_hat / (d_hat + length)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageRow {
    pub n: usize,
    /// `Leb(T^n A ∩ I_j̄) / Leb(I_j̄)`.
    pub conditional: f64,
    pub slack: f64,
}

pub fn density_coverage_test(
    map: &MapSpec,
    a: &IntervalSet,
    j_bar: usize,
    n_list: &[usize],
    cap: usize,
) -> Result<Vec<CoverageRow>> {
    if !(a.measure() > 0.0) {
        return Err(invalid("the test set must have positive measure"));
    }
    if j_bar == 0 || j_bar >= map.num_branches() {
        return Err(invalid(format!("j_bar must lie in 1..{}", map.num_branches())));
    }
    let (lo, hi) = (map.a(j_bar), map.a(j_bar + 1));
    let cell = IntervalSet::interval(lo, hi)?;
    let n_max = n_list.iter().copied().max().unwrap_or(0);
    let images = image_sequence(map, a, n_max, cap);
    Ok(n_list
        .iter()
        .map(|&n| {
            let (set, excess) = &images[n];
            CoverageRow {
                n,
                conditional: set.intersect(&cell).measure() / (hi - lo),
                slack: excess.measure() / (hi - lo),
            }
        })
        .collect())
}
