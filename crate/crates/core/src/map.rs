//! Piecewise-monotone interval maps with a neutral fixed point at 0.
//!
//! A [`MapSpec`] is an ordered list of full branches `τ_j : [a_j, a_{j+1}] →
//! [0, 1]`. Branch 0 is the neutral branch (`τ_0(0) = 0`, `τ_0'(0) = 1`),
//! every other branch is uniformly expanding. Shared endpoints `a_j` are
//! evaluated with the branch on their left.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::stats::{least_squares, loglog_fit};

/// Bisection stops once the bracket is this narrow; Newton takes over.
const BISECT_WIDTH: f64 = 1e-8;
const MAX_ROOT_ITERS: usize = 200;

/// Tolerance for the surjectivity check at branch endpoints.
pub const ENDPOINT_TOL: f64 = 1e-12;
/// Accepted gap between the declared and the fitted neutral exponent.
pub const BETA_TOL: f64 = 0.05;
/// `max / min` of `τ_0''(x) / x^β` allowed on the fitting grid.
pub const BETA_RATIO_BAND: f64 = 10.0;
/// Largest tail the truncated countable family may fold into its last branch.
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BranchShape {
    /// `x + coef * x^(exponent + 1)`, defined on `[0, a_1]`.
    Neutral { coef: f64, exponent: f64 },
    /// The affine bijection of the branch domain onto `[0, 1]`.
    Affine,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchSpec {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    pub shape: BranchShape,
    pub monotonicity: Monotonicity,
}

impl BranchSpec {
    pub fn neutral(hi: f64, coef: f64, exponent: f64) -> Self {
        BranchSpec {
            index: 0,
            lo: 0.0,
            hi,
            shape: BranchShape::Neutral { coef, exponent },
            monotonicity: Monotonicity::Increasing,
        }
    }

    pub fn affine(index: usize, lo: f64, hi: f64, monotonicity: Monotonicity) -> Self {
        BranchSpec { index, lo, hi, shape: BranchShape::Affine, monotonicity }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn eval(&self, x: f64) -> f64 {
        match (self.shape, self.monotonicity) {
            (BranchShape::Neutral { coef, exponent }, _) => x + coef * x.powf(exponent + 1.0),
            (BranchShape::Affine, Monotonicity::Increasing) => (x - self.lo) / self.width(),
            (BranchShape::Affine, Monotonicity::Decreasing) => (self.hi - x) / self.width(),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match (self.shape, self.monotonicity) {
            (BranchShape::Neutral { coef, exponent }, _) => {
                1.0 + coef * (exponent + 1.0) * x.powf(exponent)
            }
            (BranchShape::Affine, Monotonicity::Increasing) => 1.0 / self.width(),
            (BranchShape::Affine, Monotonicity::Decreasing) => -1.0 / self.width(),
        }
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        match self.shape {
            BranchShape::Neutral { coef, exponent } => {
                coef * (exponent + 1.0) * exponent * x.powf(exponent - 1.0)
            }
            BranchShape::Affine => 0.0,
        }
    }

    /// The unique `x` in the branch domain with `τ(x) = y`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&y) {
            return Err(invalid(format!("inverse target {y} outside [0, 1]")));
        }
        match (self.shape, self.monotonicity) {
            (BranchShape::Affine, Monotonicity::Increasing) => Ok(self.lo + y * self.width()),
            (BranchShape::Affine, Monotonicity::Decreasing) => Ok(self.hi - y * self.width()),
            (BranchShape::Neutral { .. }, _) => self.solve_monotone(y),
        }
    }

    /// Bisection down to `BISECT_WIDTH`, then Newton kept inside the bracket.
    fn solve_monotone(&self, y: f64) -> Result<f64> {
        let sign = match self.monotonicity {
            Monotonicity::Increasing => 1.0,
            Monotonicity::Decreasing => -1.0,
        };
        let g = |x: f64| sign * (self.eval(x) - y);
        let (mut lo, mut hi) = (self.lo, self.hi);
        if g(lo) >= 0.0 {
            return Ok(lo);
        }
        if g(hi) <= 0.0 {
            return Ok(hi);
        }
        let mut iters = 0;
        while hi - lo > BISECT_WIDTH {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            iters += 1;
        }
        let mut x = 0.5 * (lo + hi);
        loop {
            iters += 1;
            if iters > MAX_ROOT_ITERS {
                return Err(Error::NoConvergence { what: "inverse branch", iterations: iters });
            }
            let d = self.deriv(x);
            if d == 0.0 || !d.is_finite() {
                return Err(Error::NoConvergence { what: "inverse branch", iterations: iters });
            }
            let next = (x - (self.eval(x) - y) / d).clamp(lo, hi);
            let settled = (next - x).abs() <= 4.0 * f64::EPSILON * next.abs().max(f64::MIN_POSITIVE);
            x = next;
            if settled {
                return Ok(x);
            }
        }
    }
}

/// Parameterized families of maps satisfying the map axioms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Family {
    /// Two branches: `x (1 + 2^s x^s)` on `[0, 1/2]` and `2x - 1` on `[1/2, 1]`.
    PomeauManneville { s: f64 },
    /// Neutral branch on `[0, a1]` followed by affine branches on geometric
    /// intervals of ratio `r`, truncated after `j_max` expanding branches.
    CountableGeometric { s: f64, r: f64, a1: f64, j_max: usize },
}

impl Family {
    pub fn pm(s: f64) -> Self {
        Family::PomeauManneville { s }
    }

    pub fn geo(s: f64, r: f64) -> Self {
        Family::CountableGeometric { s, r, a1: 0.5, j_max: auto_j_max(r, 0.5) }
    }

    pub fn build(&self) -> Result<MapSpec> {
        build_family(self)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::PomeauManneville { s } => write!(f, "pm:s={s}"),
            Family::CountableGeometric { s, r, a1, j_max } => {
                write!(f, "geo:s={s},r={r},a1={a1},jmax={j_max}")
            }
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let (tag, params) = text.split_once(':').unwrap_or((text, ""));
        let mut s = None;
        let mut r = None;
        let mut a1 = None;
        let mut j_max = None;
        for item in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{item}`")))?;
            let num = || {
                value
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad number `{value}` for `{key}`")))
            };
            match key.trim() {
                "s" => s = Some(num()?),
                "r" => r = Some(num()?),
                "a1" => a1 = Some(num()?),
                "jmax" => {
                    j_max = Some(value.trim().parse::<usize>().map_err(|_| {
                        Error::Parse(format!("bad integer `{value}` for `jmax`"))
                    })?)
                }
                other => return Err(Error::Parse(format!("unknown map parameter `{other}`"))),
            }
        }
        match tag.trim() {
            "pm" => {
                if r.is_some() || a1.is_some() || j_max.is_some() {
                    return Err(Error::Parse("pm takes only `s`".into()));
                }
                Ok(Family::PomeauManneville { s: s.unwrap_or(1.0) })
            }
            "geo" => {
                let (r, a1) = (r.unwrap_or(0.5), a1.unwrap_or(0.5));
                Ok(Family::CountableGeometric {
                    s: s.unwrap_or(1.0),
                    r,
                    a1,
                    j_max: j_max.unwrap_or_else(|| auto_j_max(r, a1)),
                })
            }
            other => Err(Error::Parse(format!("unknown map family `{other}`"))),
        }
    }
}

impl From<Family> for String {
    fn from(f: Family) -> String {
        f.to_string()
    }
}

impl TryFrom<String> for Family {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum IndexSet {
    Finite(usize),
    /// Countable index set cut after `j_max` expanding branches; the last one
    /// absorbs the tail of length `residual`.
    Truncated { j_max: usize, residual: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapSpec {
    branches: Vec<BranchSpec>,
    /// `a_0 = 0 < a_1 < … < a_N = 1`.
    breaks: Vec<f64>,
    index_set: IndexSet,
    beta: f64,
    lambda: f64,
    distortion_k: f64,
    family: Option<Family>,
}

impl MapSpec {
    /// Assembles a map from explicit branches. Branch 0 must be the neutral
    /// branch; the domains must tile `[0, 1]` in order.
    pub fn from_branches(branches: Vec<BranchSpec>, beta: f64) -> Result<MapSpec> {
        let n = branches.len();
        MapSpec::assemble(branches, beta, IndexSet::Finite(n), None)
    }

    fn assemble(
        mut branches: Vec<BranchSpec>,
        beta: f64,
        index_set: IndexSet,
        family: Option<Family>,
    ) -> Result<MapSpec> {
        if branches.len() < 2 {
            return Err(invalid("a map needs the neutral branch and at least one expanding branch"));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(invalid(format!("neutral exponent β = {beta} must be ≥ 0")));
        }
        if !matches!(branches[0].shape, BranchShape::Neutral { .. }) || branches[0].lo != 0.0 {
            return Err(invalid("branch 0 must be the neutral branch starting at 0"));
        }
        let mut breaks = vec![0.0];
        for (j, b) in branches.iter_mut().enumerate() {
            b.index = j;
            if b.lo != *breaks.last().unwrap() || !(b.hi > b.lo) {
                return Err(invalid(format!("branch {j} domain [{}, {}] breaks the tiling", b.lo, b.hi)));
            }
            breaks.push(b.hi);
        }
        if *breaks.last().unwrap() != 1.0 {
            return Err(invalid("branch domains must end at 1"));
        }
        let lambda = branches[1..]
            .iter()
            .map(|b| b.deriv(b.lo).abs().min(b.deriv(b.hi).abs()))
            .fold(f64::INFINITY, f64::min);
        let distortion_k = 1.05 * declared_distortion(&branches);
        Ok(MapSpec { branches, breaks, index_set, beta, lambda, distortion_k, family })
    }

    pub fn branches(&self) -> &[BranchSpec] {
        &self.branches
    }

    pub fn branch(&self, j: usize) -> &BranchSpec {
        &self.branches[j]
    }

    pub fn num_branches(&self) -> usize {
        self.branches.len()
    }

    /// `a_j`; `a(num_branches())` is 1.
    pub fn a(&self, j: usize) -> f64 {
        self.breaks[j]
    }

    pub fn a1(&self) -> f64 {
        self.breaks[1]
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn index_set(&self) -> IndexSet {
        self.index_set
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alpha(&self) -> f64 {
        1.0 / (self.beta + 1.0)
    }

    /// Declared expansion constant: the smallest slope over branches `j ≥ 1`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Declared bound for `|τ''| / |τ'|²`.
    pub fn distortion_k(&self) -> f64 {
        self.distortion_k
    }

    pub fn family(&self) -> Option<Family> {
        self.family
    }

    /// Index of the branch whose domain contains `x`; shared endpoints go left.
    pub fn branch_index(&self, x: f64) -> usize {
        let idx = self.breaks.partition_point(|&a| a < x);
        idx.clamp(1, self.branches.len()) - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.branches[self.branch_index(x)].eval(x)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.branches[self.branch_index(x)].deriv(x)
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        self.branches[self.branch_index(x)].deriv2(x)
    }

    pub fn inverse_branch(&self, j: usize, y: f64) -> Result<f64> {
        self.branches
            .get(j)
            .ok_or_else(|| invalid(format!("branch {j} does not exist")))?
            .inverse(y)
    }

    /// Empirical check of the map axioms on sampled grids.
    pub fn validate_axioms(&self, grid_size: usize) -> Result<ValidationReport> {
        if grid_size < 1000 {
            return Err(invalid(format!("grid_size {grid_size} < 1000")));
        }
        let uniform = |b: &BranchSpec| {
            let (lo, hi) = (b.lo, b.hi);
            (0..=grid_size).map(move |i| lo + (hi - lo) * i as f64 / grid_size as f64)
        };

        let mut surjectivity_residual: f64 = 0.0;
        let mut monotone_ok = true;
        let mut lambda_hat = f64::INFINITY;
        let mut k_hat: f64 = 0.0;
        for b in &self.branches {
            let (lo_img, hi_img) = (b.eval(b.lo), b.eval(b.hi));
            let (want_lo, want_hi) = match b.monotonicity {
                Monotonicity::Increasing => (0.0, 1.0),
                Monotonicity::Decreasing => (1.0, 0.0),
            };
            surjectivity_residual = surjectivity_residual
                .max((lo_img - want_lo).abs())
                .max((hi_img - want_hi).abs());
            let sign = match b.monotonicity {
                Monotonicity::Increasing => 1.0,
                Monotonicity::Decreasing => -1.0,
            };
            for x in uniform(b) {
                let d = b.deriv(x);
                if !(sign * d > 0.0) {
                    monotone_ok = false;
                }
                if b.index >= 1 {
                    lambda_hat = lambda_hat.min(d.abs());
                }
                k_hat = k_hat.max(b.deriv2(x).abs() / (d * d));
            }
        }
        let tiling_ok = self.breaks[0] == 0.0
            && *self.breaks.last().unwrap() == 1.0
            && self.breaks.windows(2).all(|w| w[0] < w[1]);

        let b0 = &self.branches[0];
        let fixed_point_residual = b0.eval(0.0).abs();
        let neutral_slope_residual = (b0.deriv(0.0) - 1.0).abs();
        let interior: Vec<f64> = uniform(b0).skip(1).collect();
        let expanding_off_zero = interior.iter().all(|&x| b0.deriv(x) > 1.0);
        let convex_ok = uniform(b0).all(|x| b0.deriv2(x) >= 0.0);

        // Geometric grid toward 0 for the exponent of τ_0''.
        let xs: Vec<f64> = (0..grid_size)
            .map(|i| self.a1() * 10f64.powf(-4.0 + 3.0 * i as f64 / (grid_size - 1) as f64))
            .collect();
        let d2: Vec<f64> = xs.iter().map(|&x| b0.deriv2(x)).collect();
        let beta_hat = if d2.iter().all(|v| *v > 0.0) {
            loglog_fit(&xs, &d2).map(|f| f.slope).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        let ratios: Vec<f64> = xs.iter().zip(&d2).map(|(x, v)| v / x.powf(self.beta)).collect();
        let rmin = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let rmax = ratios.iter().cloned().fold(0.0, f64::max);
        let beta_ratio_spread = if rmin > 0.0 { rmax / rmin } else { f64::INFINITY };

        let a1 = tiling_ok && surjectivity_residual <= ENDPOINT_TOL && monotone_ok;
        let a2 = lambda_hat > 1.0;
        let a3 = k_hat.is_finite() && k_hat <= self.distortion_k;
        let a4 = fixed_point_residual <= ENDPOINT_TOL
            && neutral_slope_residual <= ENDPOINT_TOL
            && expanding_off_zero
            && convex_ok
            && (beta_hat - self.beta).abs() <= BETA_TOL
            && beta_ratio_spread <= BETA_RATIO_BAND;

        Ok(ValidationReport {
            family: self.family.map(|f| f.to_string()),
            grid_size,
            tiling_ok,
            surjectivity_residual,
            monotone_ok,
            lambda_hat,
            lambda_declared: self.lambda,
            k_hat,
            k_declared: self.distortion_k,
            fixed_point_residual,
            neutral_slope_residual,
            expanding_off_zero,
            convex_ok,
            beta_declared: self.beta,
            beta_hat,
            beta_ratio_spread,
            truncation_residual: match self.index_set {
                IndexSet::Truncated { residual, .. } => residual,
                IndexSet::Finite(_) => 0.0,
            },
            a1,
            a2,
            a3,
            a4,
        })
    }
}

/// Sampled `sup |τ''| / |τ'|²` over all branches (affine branches contribute 0).
fn declared_distortion(branches: &[BranchSpec]) -> f64 {
    let mut k: f64 = 0.0;
    for b in branches.iter().filter(|b| !matches!(b.shape, BranchShape::Affine)) {
        let w = b.width();
        let pts = (0..=4096)
            .map(|i| b.lo + w * i as f64 / 4096.0)
            .chain((0..=4096).map(|i| b.lo + w * 10f64.powf(-12.0 + 12.0 * i as f64 / 4096.0)));
        for x in pts {
            let d = b.deriv(x);
            k = k.max(b.deriv2(x).abs() / (d * d));
        }
    }
    k
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub family: Option<String>,
    pub grid_size: usize,
    pub tiling_ok: bool,
    pub surjectivity_residual: f64,
    pub monotone_ok: bool,
    pub lambda_hat: f64,
    pub lambda_declared: f64,
    pub k_hat: f64,
    pub k_declared: f64,
    pub fixed_point_residual: f64,
    pub neutral_slope_residual: f64,
    pub expanding_off_zero: bool,
    pub convex_ok: bool,
    pub beta_declared: f64,
    pub beta_hat: f64,
    pub beta_ratio_spread: f64,
    pub truncation_residual: f64,
    pub a1: bool,
    pub a2: bool,
    pub a3: bool,
    pub a4: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.a1 && self.a2 && self.a3 && self.a4
    }
}

/// Builds a concrete map of the given family.
pub fn build_family(family: &Family) -> Result<MapSpec> {
    match *family {
        Family::PomeauManneville { s } => {
            check_exponent(s)?;
            let a1 = 0.5;
            let branches = vec![
                BranchSpec::neutral(a1, 2f64.powf(s), s),
                BranchSpec::affine(1, a1, 1.0, Monotonicity::Increasing),
            ];
            MapSpec::assemble(branches, s - 1.0, IndexSet::Finite(2), Some(*family))
        }
        Family::CountableGeometric { s, r, a1, j_max } => {
            check_exponent(s)?;
            if !(r > 0.0 && r < 1.0) {
                return Err(invalid(format!("ratio r = {r} must lie in (0, 1)")));
            }
            if !(a1 > 0.0 && a1 < 1.0) {
                return Err(invalid(format!("a1 = {a1} must lie in (0, 1)")));
            }
            if j_max < 2 {
                return Err(invalid(format!("j_max = {j_max} must be at least 2")));
            }
            let residual = (1.0 - a1) * r.powi(j_max as i32);
            if residual > DEFAULT_TRUNCATION_TOL {
                return Err(invalid(format!(
                    "j_max = {j_max} leaves a tail of {residual:.3e} > {DEFAULT_TRUNCATION_TOL:e}; raise j_max"
                )));
            }
            // Makes τ_0(a1) = 1.
            let coef = (1.0 - a1) / a1.powf(s + 1.0);
            let mut branches = vec![BranchSpec::neutral(a1, coef, s)];
            let a = |j: usize| a1 + (1.0 - a1) * (1.0 - r.powi(j as i32 - 1));
            for j in 1..=j_max {
                let hi = if j == j_max { 1.0 } else { a(j + 1) };
                if !(hi > a(j)) {
                    return Err(invalid(format!("branch {j} of geo is narrower than f64 resolution; lower j_max")));
                }
                branches.push(BranchSpec::affine(j, a(j), hi, Monotonicity::Increasing));
            }
            MapSpec::assemble(
                branches,
                s - 1.0,
                IndexSet::Truncated { j_max, residual },
                Some(*family),
            )
        }
    }
}

/// Smallest `j_max ≥ 2` whose truncated tail `(1 - a1) r^{j_max}` is within
/// [`DEFAULT_TRUNCATION_TOL`]; falls back to 2 for out-of-range inputs.
pub fn auto_j_max(r: f64, a1: f64) -> usize {
    if !(r > 0.0 && r < 1.0 && a1 > 0.0 && a1 < 1.0) {
        return 2;
    }
    let j = ((DEFAULT_TRUNCATION_TOL / (1.0 - a1)).ln() / r.ln()).ceil();
    let mut j = (j.max(2.0) as usize).max(2);
    while (1.0 - a1) * r.powi(j as i32) > DEFAULT_TRUNCATION_TOL {
        j += 1;
    }
    j
}

fn check_exponent(s: f64) -> Result<()> {
    if s >= 1.0 && s.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("neutral exponent s = {s} must be finite and ≥ 1")))
    }
}

/// Empirical convergence order of central differences against `deriv`
/// at `x`, using steps `h` and `h / 10`.
pub fn finite_difference_order(map: &MapSpec, x: f64, h: f64) -> (f64, f64, f64) {
    let err = |h: f64| (map.deriv(x) - (map.eval(x + h) - map.eval(x - h)) / (2.0 * h)).abs();
    let (e1, e2) = (err(h), err(h / 10.0));
    let order = least_squares(&[h.ln(), (h / 10.0).ln()], &[e1.ln(), e2.ln()])
        .map(|f| f.slope)
        .unwrap_or(f64::NAN);
    (e1, e2, order)
}
