//! Quasi-lifts and their displacement, first returns to `J`, Ulam
//! approximations of the invariant density, and mean square displacement.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::map::MapSpec;
use crate::stats::{log_spaced, loglog_fit, stream_rng, LineFit};

/// Trajectories per RNG stream in ensemble simulations.
const CHUNK: usize = 256;
/// Tail points with fewer surviving orbits than this are left out of fits.
pub const MIN_TAIL_COUNT: u64 = 20;
pub const DEFAULT_FIXED_POINT_TOL: f64 = 1e-10;

/// A piece of `[0, 1]` where the lift is `τ = T + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiftPiece {
    pub lo: f64,
    pub hi: f64,
    pub offset: i64,
}

/// Translation-invariant extension of `T` to the real line, described by an
/// integer offset on each piece of `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftSpec {
    map: MapSpec,
    pieces: Vec<LiftPiece>,
}

impl LiftSpec {
    /// Pieces must tile `[0, 1]` in order, each inside a single branch.
    pub fn new(map: &MapSpec, pieces: Vec<LiftPiece>) -> Result<Self> {
        if pieces.is_empty() || pieces[0].lo != 0.0 || pieces[pieces.len() - 1].hi != 1.0 {
            return Err(invalid("lift pieces must cover [0, 1]"));
        }
        for w in pieces.windows(2) {
            if w[0].hi != w[1].lo {
                return Err(invalid("lift pieces must be contiguous"));
            }
        }
        for p in &pieces {
            if !(p.hi > p.lo) {
                return Err(invalid("lift pieces must have positive width"));
            }
            let j = map.branch_index(0.5 * (p.lo + p.hi));
            let b = map.branch(j);
            if p.lo < b.lo || p.hi > b.hi {
                return Err(invalid(format!("lift piece [{}, {}] straddles a branch break", p.lo, p.hi)));
            }
        }
        Ok(LiftSpec { map: map.clone(), pieces })
    }

    /// One offset per branch.
    pub fn branch_offsets(map: &MapSpec, offsets: &[i64]) -> Result<Self> {
        if offsets.len() != map.num_branches() {
            return Err(invalid(format!("expected {} offsets, got {}", map.num_branches(), offsets.len())));
        }
        let pieces = map
            .branches()
            .iter()
            .zip(offsets)
            .map(|(b, &offset)| LiftPiece { lo: b.lo, hi: b.hi, offset })
            .collect();
        LiftSpec::new(map, pieces)
    }

    pub fn uniform(map: &MapSpec, offset: i64) -> Self {
        LiftSpec::branch_offsets(map, &vec![offset; map.num_branches()]).expect("branches tile [0, 1]")
    }

    /// 0 on the neutral branch, then `+1, -1, +1, …` on the others.
    pub fn default_for(map: &MapSpec) -> Self {
        let offsets: Vec<i64> = (0..map.num_branches())
            .map(|j| match j {
                0 => 0,
                j if j % 2 == 1 => 1,
                _ => -1,
            })
            .collect();
        LiftSpec::branch_offsets(map, &offsets).expect("branches tile [0, 1]")
    }

    /// 0 on the neutral branch; `-1` on the left half and `+1` on the right
    /// half of every other branch.
    pub fn symmetric_halves(map: &MapSpec) -> Self {
        let mut pieces = vec![LiftPiece { lo: 0.0, hi: map.a1(), offset: 0 }];
        for b in &map.branches()[1..] {
            let mid = 0.5 * (b.lo + b.hi);
            pieces.push(LiftPiece { lo: b.lo, hi: mid, offset: -1 });
            pieces.push(LiftPiece { lo: mid, hi: b.hi, offset: 1 });
        }
        LiftSpec::new(map, pieces).expect("halves tile [0, 1]")
    }

    pub fn map(&self) -> &MapSpec {
        &self.map
    }

    pub fn pieces(&self) -> &[LiftPiece] {
        &self.pieces
    }

    pub fn offset(&self, x: f64) -> i64 {
        let i = self.pieces.partition_point(|p| p.hi < x);
        self.pieces[i.min(self.pieces.len() - 1)].offset
    }

    /// `τ(x) = T(x) + offset(x)` on `[0, 1]`.
    pub fn tau(&self, x: f64) -> f64 {
        self.map.eval(x) + self.offset(x) as f64
    }

    /// Discrete displacement `f = ⌊τ⌋`.
    pub fn displacement(&self, x: f64) -> i64 {
        self.tau(x).floor() as i64
    }

    /// One step of `β̄` on the state `(cell, frac)`.
    pub fn step(&self, (cell, frac): (i64, f64)) -> (i64, f64) {
        let t = self.map.eval(frac);
        let jump = self.offset(frac) + i64::from(t >= 1.0);
        (cell + jump, if t >= 1.0 { t - 1.0 } else { t })
    }

    /// `β̄` on the real line, evaluated directly from `τ`.
    pub fn beta_bar(&self, x: f64) -> f64 {
        let cell = x.floor();
        self.tau(x - cell) + cell
    }
}

/// States `(cell, frac)` of `β̄^k(x0)` for `k = 0..=n`.
pub fn lift_orbit(lift: &LiftSpec, x0: f64, n: usize) -> Result<Vec<(i64, f64)>> {
    if !(0.0..1.0).contains(&x0) {
        return Err(invalid("x0 must lie in [0, 1)"));
    }
    let mut out = Vec::with_capacity(n + 1);
    out.push((0, x0));
    for k in 0..n {
        out.push(lift.step(out[k]));
    }
    Ok(out)
}

/// Running sums `S_k = Σ_{i<k} f(T^i x0)` for `k = 0..=n` and the final
/// `T^n x0`.
pub fn birkhoff_sum<F, V>(map: &MapSpec, f: F, x0: f64, n: usize) -> (Vec<V>, f64)
where
    F: Fn(f64) -> V,
    V: Copy + Default + std::ops::Add<Output = V>,
{
    let mut sums = Vec::with_capacity(n + 1);
    let mut acc = V::default();
    let mut x = x0;
    sums.push(acc);
    for _ in 0..n {
        acc = acc + f(x);
        x = step_mod1(map, x);
        sums.push(acc);
    }
    (sums, x)
}

/// `T` on the circle: an image equal to 1 wraps to 0.
pub fn step_mod1(map: &MapSpec, x: f64) -> f64 {
    let t = map.eval(x);
    if t >= 1.0 {
        t - 1.0
    } else {
        t
    }
}

/// `|β̄^n(x) - (S_n + T^n x)|` with `β̄^n` from the lifted state and the
/// right-hand side from an independent Birkhoff sum.
pub fn lift_identity_gap(lift: &LiftSpec, x0: f64, n: usize) -> Result<f64> {
    let (cell, frac) = *lift_orbit(lift, x0, n)?.last().expect("orbit has n + 1 states");
    let (sums, tn) = birkhoff_sum(lift.map(), |x| lift.displacement(x), x0, n);
    Ok(((cell - sums[n]) as f64 + (frac - tn)).abs())
}

/// Smallest `R ≥ 1` with `T^R(x0) ∈ J`.
pub fn first_return(map: &MapSpec, x0: f64, cap: u64) -> Result<u64> {
    if !(x0 >= map.a1() && x0 <= 1.0) {
        return Err(invalid(format!("x0 = {x0} is not in J")));
    }
    if cap == 0 {
        return Err(invalid("cap must be at least 1"));
    }
    let a1 = map.a1();
    let mut x = x0;
    for r in 1..=cap {
        x = map.eval(x);
        if x >= a1 {
            return Ok(r);
        }
    }
    Err(Error::CapExceeded { cap })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnTimeHistogram {
    pub ensemble: u64,
    pub cap: u64,
    /// Return time → number of starts.
    pub counts: BTreeMap<u64, u64>,
    /// Starts with no return within `cap`.
    pub censored: u64,
    /// `(n, P(R > n))` on the fitting grid.
    pub tail: Vec<(u64, f64)>,
    pub fit: Option<LineFit>,
}

impl ReturnTimeHistogram {
    pub fn returned_fraction(&self) -> f64 {
        1.0 - self.censored as f64 / self.ensemble as f64
    }

    /// Number of starts with `R > n`.
    pub fn surviving(&self, n: u64) -> u64 {
        self.censored + self.counts.range(n + 1..).map(|(_, c)| c).sum::<u64>()
    }

    pub fn survival(&self, n: u64) -> f64 {
        self.surviving(n) as f64 / self.ensemble as f64
    }
}

/// First returns of `ensemble` uniform starts in `J`, with a log-log fit of
/// `P(R > n)` on `n ∈ [10, cap/10]` over points backed by at least
/// [`MIN_TAIL_COUNT`] orbits.
pub fn return_time_tail(map: &MapSpec, ensemble: usize, cap: u64, seed: u64) -> Result<ReturnTimeHistogram> {
    if ensemble == 0 || cap == 0 {
        return Err(invalid("ensemble and cap must be positive"));
    }
    let a1 = map.a1();
    let chunks = ensemble.div_ceil(CHUNK);
    let partial: Vec<(BTreeMap<u64, u64>, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let size = CHUNK.min(ensemble - c * CHUNK);
            let mut counts = BTreeMap::new();
            let mut censored = 0;
            for _ in 0..size {
                let x0 = a1 + (1.0 - a1) * rng.gen_range(0.0..1.0);
                match first_return(map, x0, cap) {
                    Ok(r) => *counts.entry(r).or_insert(0) += 1,
                    Err(_) => censored += 1,
                }
            }
            (counts, censored)
        })
        .collect();
    let mut counts = BTreeMap::new();
    let mut censored = 0;
    for (c, z) in partial {
        for (r, k) in c {
            *counts.entry(r).or_insert(0) += k;
        }
        censored += z;
    }
    let mut hist = ReturnTimeHistogram { ensemble: ensemble as u64, cap, counts, censored, tail: Vec::new(), fit: None };
    let grid = log_spaced(10, (cap / 10).max(10), 40);
    let kept: Vec<u64> = grid.into_iter().filter(|&n| hist.surviving(n) >= MIN_TAIL_COUNT).collect();
    hist.tail = kept.iter().map(|&n| (n, hist.survival(n))).collect();
    let xs: Vec<f64> = kept.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = hist.tail.iter().map(|&(_, s)| s).collect();
    hist.fit = loglog_fit(&xs, &ys);
    Ok(hist)
}

/// Row-stochastic Ulam matrix, stored by rows and by columns.
#[derive(Debug, Clone, PartialEq)]
pub struct UlamMatrix {
    pub m: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
    columns: Vec<Vec<(usize, f64)>>,
}

impl UlamMatrix {
    /// `P_ik = Leb(C_i ∩ T^{-1} C_k) / Leb(C_i)` from exact branch
    /// preimages of the grid points.
    pub fn assemble(map: &MapSpec, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(invalid("grid must have at least two cells"));
        }
        let preimages: Vec<Vec<f64>> = (0..map.num_branches())
            .map(|j| (0..=m).map(|k| map.inverse_branch(j, k as f64 / m as f64)).collect::<Result<Vec<f64>>>())
            .collect::<Result<_>>()?;
        let h = 1.0 / m as f64;
        let rows: Vec<Vec<(usize, f64)>> = (0..m)
            .into_par_iter()
            .map(|i| {
                let (lo, hi) = (i as f64 * h, (i + 1) as f64 * h);
                let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
                for (j, z) in preimages.iter().enumerate() {
                    let b = map.branch(j);
                    let (u, v) = (lo.max(b.lo), hi.min(b.hi));
                    if v <= u {
                        continue;
                    }
                    let (p, q) = (b.eval(u), b.eval(v));
                    let (p, q) = (p.min(q), p.max(q));
                    let k_lo = ((p * m as f64).floor() as usize).min(m - 1);
                    let k_hi = ((q * m as f64).ceil() as usize).clamp(k_lo + 1, m);
                    for k in k_lo..k_hi {
                        let (s, t) = (z[k].min(z[k + 1]), z[k].max(z[k + 1]));
                        let overlap = v.min(t) - u.max(s);
                        if overlap > 0.0 {
                            *acc.entry(k).or_insert(0.0) += overlap;
                        }
                    }
                }
                let total: f64 = acc.values().sum();
                acc.into_iter().map(|(k, w)| (k, w / total)).collect()
            })
            .collect();
        let mut columns = vec![Vec::new(); m];
        for (i, row) in rows.iter().enumerate() {
            for &(k, w) in row {
                columns[k].push((i, w));
            }
        }
        Ok(UlamMatrix { m, rows, columns })
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.rows[i].iter().map(|(_, w)| w).sum()
    }

    /// `p ↦ pP`.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        self.columns.iter().map(|col| col.iter().map(|&(i, w)| p[i] * w).sum()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UlamDensity {
    pub m: usize,
    pub epsilon: f64,
    pub sweeps: usize,
    /// `‖pP - p‖₁` for the returned stationary vector.
    pub residual: f64,
    /// Stationary probability vector on the grid.
    pub stationary: Vec<f64>,
    /// Cell densities scaled so the cells inside `[ε, 1]` integrate to 1.
    pub density: Vec<f64>,
    /// First cell whose left edge is at least `ε`.
    pub first_cell: usize,
    pub sup: f64,
}

impl UlamDensity {
    /// Mass of `[eps, 1]` (cells with left edge at least `eps`) in the
    /// normalization where `[ε, 1]` has mass 1.
    pub fn mass_above(&self, eps: f64) -> f64 {
        let first = first_cell_at(eps, self.m);
        self.density[first..].iter().sum::<f64>() / self.m as f64
    }

    /// [`mass_above`](Self::mass_above) at each `eps`, in the given order.
    pub fn mass_profile(&self, eps: &[f64]) -> Vec<(f64, f64)> {
        eps.iter().map(|&e| (e, self.mass_above(e))).collect()
    }
}

fn first_cell_at(eps: f64, m: usize) -> usize {
    ((eps * m as f64).ceil() as usize).min(m)
}

/// Stationary vector of the Ulam chain by Gauss–Seidel sweeps in increasing
/// cell order, each followed by normalization. Stops when successive sweeps
/// differ by less than `tol` in `ℓ¹` and `pP` is within `tol` of `p`.
pub fn stationary_vector(matrix: &UlamMatrix, max_sweeps: usize, tol: f64) -> Result<(Vec<f64>, usize, f64)> {
    let m = matrix.m;
    let mut p = vec![1.0 / m as f64; m];
    for sweep in 1..=max_sweeps {
        let previous = p.clone();
        for k in 0..m {
            let mut inflow = 0.0;
            let mut stay = 0.0;
            for &(i, w) in &matrix.columns[k] {
                if i == k {
                    stay = w;
                } else {
                    inflow += p[i] * w;
                }
            }
            p[k] = if stay < 1.0 { inflow / (1.0 - stay) } else { p[k] };
        }
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);
        let change: f64 = p.iter().zip(&previous).map(|(a, b)| (a - b).abs()).sum();
        if change < tol {
            let residual: f64 = matrix.apply(&p).iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
            if residual < tol {
                return Ok((p, sweep, residual));
            }
        }
    }
    Err(Error::NoConvergence { what: "Ulam stationary vector", iterations: max_sweeps })
}

pub fn ulam_density(map: &MapSpec, m: usize, epsilon: f64, max_sweeps: usize) -> Result<UlamDensity> {
    if m < 1 << 10 {
        return Err(invalid("Ulam grid needs at least 2^10 cells"));
    }
    if !(epsilon > 0.0 && epsilon < map.a1()) {
        return Err(invalid(format!("epsilon must lie in (0, {})", map.a1())));
    }
    let matrix = UlamMatrix::assemble(map, m)?;
    let (stationary, sweeps, residual) = stationary_vector(&matrix, max_sweeps, DEFAULT_FIXED_POINT_TOL)?;
    let first_cell = first_cell_at(epsilon, m);
    let upper: f64 = stationary[first_cell..].iter().sum();
    let density: Vec<f64> = stationary.iter().map(|p| p / upper * m as f64).collect();
    let sup = density[first_cell..].iter().copied().fold(0.0, f64::max);
    Ok(UlamDensity { m, epsilon, sweeps, residual, stationary, density, first_cell, sup })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffusionRecord {
    pub ensemble: usize,
    pub n_max: usize,
    /// `MSD(n)` for `n = 0..=n_max`.
    pub msd: Vec<f64>,
    /// Ensemble mean of `S_n`.
    pub mean: Vec<f64>,
    pub fit: Option<LineFit>,
    /// `γ̂ ± 2·stderr`.
    pub gamma_band: Option<(f64, f64)>,
}

impl DiffusionRecord {
    pub fn gamma_hat(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }
}

/// Mean square of the Birkhoff sums of the discrete displacement over
/// `ensemble` uniform starts; `γ̂` is fitted on `n ∈ [n_max/100, n_max]`.
pub fn msd_estimate(lift: &LiftSpec, ensemble: usize, n_max: usize, seed: u64) -> Result<DiffusionRecord> {
    if ensemble == 0 || n_max == 0 {
        return Err(invalid("ensemble and n_max must be positive"));
    }
    let chunks = ensemble.div_ceil(CHUNK);
    let zero = || (vec![0i128; n_max + 1], vec![0i128; n_max + 1]);
    let (sum, sum_sq) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let size = CHUNK.min(ensemble - c * CHUNK);
            let (mut s1, mut s2) = zero();
            for _ in 0..size {
                let mut state = (0i64, rng.gen_range(0.0..1.0));
                for n in 1..=n_max {
                    state = lift.step(state);
                    let s = state.0 as i128;
                    s1[n] += s;
                    s2[n] += s * s;
                }
            }
            (s1, s2)
        })
        .reduce(zero, |(mut a1, mut a2), (b1, b2)| {
            for n in 0..=n_max {
                a1[n] += b1[n];
                a2[n] += b2[n];
            }
            (a1, a2)
        });
    let count = ensemble as f64;
    let msd: Vec<f64> = sum_sq.iter().map(|&s| s as f64 / count).collect();
    let mean: Vec<f64> = sum.iter().map(|&s| s as f64 / count).collect();
    let grid = log_spaced((n_max / 100).max(1) as u64, n_max as u64, 40);
    let xs: Vec<f64> = grid.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = grid.iter().map(|&n| msd[n as usize]).collect();
    let fit = loglog_fit(&xs, &ys).filter(|f| f.points == grid.len());
    let gamma_band = fit.map(|f| (f.slope - 2.0 * f.slope_stderr, f.slope + 2.0 * f.slope_stderr));
    Ok(DiffusionRecord { ensemble, n_max, msd, mean, fit, gamma_band })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{build_family, Family};
    use crate::partition::compute_b_sequence;

    fn pm(s: f64) -> MapSpec {
        build_family(&Family::pm(s)).unwrap()
    }

    #[test]
    fn lift_basics() {
        let m = pm(1.0);
        let lift = LiftSpec::default_for(&m);
        assert_eq!(lift_orbit(&lift, 0.3, 0).unwrap(), vec![(0, 0.3)]);
        assert!(lift_orbit(&lift, 1.0, 3).is_err());
        assert_eq!(lift.displacement(0.2), 0);
        assert_eq!(lift.displacement(0.7), 1);
        assert_eq!(lift.step((0, 0.75)), (1, 0.5));
        assert_eq!(lift.step((0, 0.5)), (1, 0.0));
        let zero = LiftSpec::uniform(&m, 0);
        let orbit = lift_orbit(&zero, 0.01, 20).unwrap();
        let mut x = 0.01;
        for &(cell, frac) in &orbit[1..] {
            x = m.eval(x);
            if x >= 0.5 {
                break;
            }
            assert_eq!((cell, frac), (0, x));
        }
    }

    #[test]
    fn lift_identity_and_real_line() {
        let m = pm(1.0);
        let lift = LiftSpec::symmetric_halves(&m);
        for &x in &[0.1, 0.37, 0.52, 0.9] {
            assert!(lift_identity_gap(&lift, x, 1000).unwrap() <= 1e-9);
            let orbit = lift_orbit(&lift, x, 8).unwrap();
            let mut y = x;
            for &(cell, frac) in &orbit[1..] {
                y = lift.beta_bar(y);
                assert!((y - (cell as f64 + frac)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn lift_pieces_validated() {
        let m = pm(1.0);
        assert!(LiftSpec::new(&m, vec![LiftPiece { lo: 0.0, hi: 1.0, offset: 0 }]).is_err());
        assert!(LiftSpec::branch_offsets(&m, &[0]).is_err());
        let lift = LiftSpec::default_for(&build_family(&Family::geo(1.0, 0.5)).unwrap());
        assert_eq!(lift.pieces()[2].offset, -1);
    }

    #[test]
    fn birkhoff_trivial() {
        let m = pm(1.0);
        let (s, _) = birkhoff_sum(&m, |_| 0i64, 0.3, 50);
        assert!(s.iter().all(|&v| v == 0));
        let (s, _) = birkhoff_sum(&m, |_| 1i64, 0.3, 50);
        assert_eq!(s[50], 50);
    }

    #[test]
    fn return_examples() {
        let m = pm(1.0);
        let p = compute_b_sequence(&m, 100).unwrap();
        assert_eq!(first_return(&m, 0.75, 10).unwrap(), 1);
        for k in 1..6 {
            let y = 0.5 * (p.b(k) + p.b(k - 1));
            let x0 = 0.5 * (y + 1.0);
            assert_eq!(first_return(&m, x0, 100).unwrap(), k as u64 + 1);
        }
        assert_eq!(first_return(&m, 0.5 + 1e-12, 10), Err(Error::CapExceeded { cap: 10 }));
        assert!(first_return(&m, 0.2, 10).is_err());
    }

    #[test]
    fn return_histogram_counts_everything() {
        let m = pm(1.0);
        let h = return_time_tail(&m, 3000, 10_000, 9).unwrap();
        let total: u64 = h.counts.values().sum::<u64>() + h.censored;
        assert_eq!(total, 3000);
        assert!(h.tail.windows(2).all(|w| w[1].1 <= w[0].1));
        let again = return_time_tail(&m, 3000, 10_000, 9).unwrap();
        assert_eq!(h, again);
    }

    #[test]
    fn ulam_rows_are_stochastic() {
        let m = pm(1.0);
        let u = UlamMatrix::assemble(&m, 1024).unwrap();
        for i in 0..1024 {
            assert!((u.row_sum(i) - 1.0).abs() <= 1e-14, "row {i}");
        }
        let d = ulam_density(&m, 1024, 0.1, 10_000).unwrap();
        assert!(d.residual < 1e-10);
        assert!(d.density.iter().all(|&v| v >= 0.0));
        assert!((d.mass_above(0.1) - 1.0).abs() < 1e-12);
        assert!(ulam_density(&m, 512, 0.1, 10).is_err());
        assert!(ulam_density(&m, 1024, 0.6, 10).is_err());
    }

    #[test]
    fn msd_trivial_cases() {
        let m = pm(1.0);
        let r = msd_estimate(&LiftSpec::uniform(&m, 0), 300, 200, 1).unwrap();
        assert!(r.msd.iter().all(|&v| v == 0.0));
        assert!(r.fit.is_none());
        let r = msd_estimate(&LiftSpec::uniform(&m, 1), 300, 200, 1).unwrap();
        for n in [1, 10, 200] {
            assert!((r.msd[n] - (n * n) as f64).abs() / ((n * n) as f64) < 0.05);
        }
        assert!((r.gamma_hat().unwrap() - 2.0).abs() < 0.05);
    }
}
