use anyhow::Context;
use intmaps::distortion::{verify_lem_dist, verify_young, FrameType};
use intmaps::ergodic::{lift_identity_gap, msd_estimate, return_time_tail, ulam_density, LiftSpec};
use intmaps::exactness::{delta_threshold, density_coverage_test, mn_test, DEFAULT_COMPONENT_CAP};
use intmaps::partition::{format_word, parse_word};
use intmaps::stats::stream_rng;
use intmaps::{build_family, compute_b_sequence, IntervalSet, MapSpec};
use rand::Rng;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{float, OutDir};
use crate::ConfigError;

/// Depth of the bounded-distortion check on `I_{-j}`.
const YOUNG_J_MAX: usize = 200;
/// Extra random pairs per sampled cylinder.
const EXTRA_PAIRS: usize = 2;
/// Number of starting points for the lift identity check.
const IDENTITY_POINTS: u64 = 100;
const IDENTITY_STEPS: usize = 1000;
const COVERAGE_STEPS: usize = 64;

fn map_of(cfg: &RunConfig) -> anyhow::Result<MapSpec> {
    let family = cfg.family().map_err(|e| ConfigError(e.to_string()))?;
    Ok(build_family(&family)?)
}

pub fn validate(cfg: &RunConfig, out: &mut OutDir) -> anyhow::Result<u8> {
    let map = map_of(cfg)?;
    let report = map.validate_axioms(cfg.grid.max(1000))?;
    out.json("validation.json", &report)?;
    println!(
        "{}: {} (Λ̂ = {:.6}, K̂ = {:.6}, β̂ = {:.4} vs {:.4})",
        cfg.map,
        if report.passed() { "pass" } else { "FAIL" },
        report.lambda_hat,
        report.k_hat,
        report.beta_hat,
        report.beta_declared,
    );
    Ok(if report.passed() { 0 } else { 2 })
}

pub fn partition(cfg: &RunConfig, out: &mut OutDir) -> anyhow::Result<u8> {
    let map = map_of(cfg)?;
    let p = compute_b_sequence(&map, cfg.kmax)?;
    out.csv(
        "b_sequence.csv",
        &["k", "b_k", "L_minus_k"],
        p.b_rows().into_iter().map(|(k, b, l)| vec![k.to_string(), float(b), float(l)]),
    )?;
    let lengths = p.max_cylinder_lengths(cfg.depth, cfg.frontier, cfg.seeds, cfg.seed)?;
    out.csv(
        "cylinder_lengths.csv",
        &["depth", "max_length"],
        lengths.iter().enumerate().map(|(d, l)| vec![(d + 1).to_string(), float(*l)]),
    )?;
    let k_lo = if cfg.kmax >= 1000 { 100 } else { 1 };
    let fit = p.b_slope(k_lo, cfg.kmax);
    let (law_lo, law_hi) = p.length_law_band(10.min(cfg.kmax), cfg.kmax);
    let bracketing = p.bracketing_counts(10.min(cfg.kmax), cfg.kmax);
    let cylinder = match &cfg.word {
        Some(text) => {
            let word = parse_word(text)?;
            let c = p.cylinder_of(&word)?;
            println!("cylinder {} = {:?}", format_word(&word), c.interval);
            Some(json!({ "word": format_word(&word), "interval": c.interval, "length": c.length() }))
        }
        None => None,
    };
    out.json(
        "partition.json",
        &json!({
            "map": cfg.map,
            "k_max": cfg.kmax,
            "b_1": p.b(1),
            "b_k_max": p.b(cfg.kmax),
            "slope_fit": fit,
            "slope_range": [k_lo, cfg.kmax],
            "expected_slope": -map.alpha(),
            "length_law_band": [law_lo, law_hi],
            "bracketing": { "per_k": bracketing.0, "per_n": bracketing.1 },
            "max_cylinder_length": lengths.last(),
            "cylinder_lengths_non_increasing": lengths.windows(2).all(|w| w[1] <= w[0]),
            "cylinder": cylinder,
        }),
    )?;
    println!(
        "b_1 = {:.5}, slope {:.4} (expected {:.4}), depth-{} max cylinder {:.3e}",
        p.b(1),
        fit.map_or(f64::NAN, |f| f.slope),
        -map.alpha(),
        cfg.depth,
        lengths.last().copied().unwrap_or(f64::NAN),
    );
    Ok(0)
}

pub fn distortion(cfg: &RunConfig, out: &mut OutDir) -> anyhow::Result<u8> {
    let map = map_of(cfg)?;
    let p = compute_b_sequence(&map, cfg.kmax)?;
    let report = verify_lem_dist(&p, cfg.depth, cfg.trials, EXTRA_PAIRS, cfg.seed)?;
    out.csv(
        "distortion_depth.csv",
        &["depth", "max_abs_log"],
        report.max_by_depth.iter().enumerate().map(|(d, v)| vec![(d + 1).to_string(), float(*v)]),
    )?;
    out.csv(
        "frames.csv",
        &["type", "count", "eta", "kappa"],
        FrameType::ALL.iter().map(|t| {
            let i = t.index();
            vec![
                format!("{t:?}"),
                report.frames.counts[i].to_string(),
                float(report.frames.eta[i]),
                float(report.frames.kappa[i]),
            ]
        }),
    )?;
    out.json("distortion.json", &report)?;

    let j_max = YOUNG_J_MAX.min(cfg.kmax);
    let young = verify_young(&p, j_max, cfg.pairs, cfg.seed)?;
    out.csv(
        "young.csv",
        &["j", "n_j", "delta_ratio", "envelope", "abs_envelope"],
        (0..j_max).map(|i| {
            vec![
                (i + 1).to_string(),
                young.n_k[i].to_string(),
                float(young.delta_ratio[i]),
                float(young.envelope_by_j[i]),
                float(young.abs_envelope_by_j[i]),
            ]
        }),
    )?;
    out.json(
        "young.json",
        &json!({
            "j_max": young.j_max,
            "pairs_per_j": young.pairs_per_j,
            "c_prime": young.c_prime,
            "comparability_spread": young.comparability_spread,
            "c3": young.c3,
            "c3_tail": young.c3_tail,
            "kappa_hat": report.kappa_hat,
            "kappa_reference": map.distortion_k() + young.c_prime / (1.0 - map.a1()),
        }),
    )?;
    println!(
        "{} cylinders, {} pairs: max |log ratio| {:.6}, D̂ = {:.6}, η̂ = {:.4}, κ̂ = {:.4}, Ĉ′ = {:.4}",
        report.cylinders, report.pairs, report.max_abs_log, report.d_hat, report.eta_hat, report.kappa_hat, young.c_prime,
    );
    Ok(0)
}

pub fn exactness(cfg: &RunConfig, out: &mut OutDir) -> anyhow::Result<u8> {
    let map = map_of(cfg)?;
    let set: IntervalSet =
        serde_json::from_str(&cfg.set).map_err(|e| ConfigError(format!("`set` is not a list of [lo, hi] pairs: {e}")))?;
    let profile = mn_test(&map, &set, cfg.nmax, cfg.tol, DEFAULT_COMPONENT_CAP)?;
    out.csv(
        "profile.csv",
        &["n", "measure", "slack", "positive"],
        profile.rows.iter().map(|r| vec![r.n.to_string(), float(r.measure), float(r.slack), r.positive.to_string()]),
    )?;
    let steps: Vec<usize> = (0..=cfg.nmax.min(COVERAGE_STEPS)).collect();
    let coverage = density_coverage_test(&map, &set, cfg.jbar, &steps, DEFAULT_COMPONENT_CAP)?;
    out.csv(
        "coverage.csv",
        &["n", "conditional", "slack"],
        coverage.iter().map(|r| vec![r.n.to_string(), float(r.conditional), float(r.slack)]),
    )?;
    let p = compute_b_sequence(&map, cfg.kmax)?;
    let d_hat = verify_lem_dist(&p, cfg.depth, cfg.trials, EXTRA_PAIRS, cfg.seed)?.d_hat;
    let delta = delta_threshold(d_hat, cfg.jbar, &map)?;
    out.json(
        "exactness.json",
        &json!({
            "set": set,
            "n_star": profile.n_star,
            "persistent": profile.persistent,
            "coarsened": profile.coarsened,
            "j_bar": cfg.jbar,
            "d_hat": d_hat,
            "delta": delta,
        }),
    )?;
    match profile.n_star {
        Some(n) => println!("n* = {n}, persistent = {}, δ = {delta:.6}", profile.persistent),
        None => println!("no positive intersection within n = {}; δ = {delta:.6}", cfg.nmax),
    }
    Ok(0)
}

fn lift_of(cfg: &RunConfig, map: &MapSpec) -> anyhow::Result<LiftSpec> {
    let spec = cfg.lift.trim();
    Ok(match spec {
        "default" => LiftSpec::default_for(map),
        "halves" => LiftSpec::symmetric_halves(map),
        "zero" => LiftSpec::uniform(map, 0),
        "one" => LiftSpec::uniform(map, 1),
        other => {
            let list = other
                .strip_prefix("offsets:")
                .ok_or_else(|| ConfigError(format!("unknown lift `{other}`")))?;
            let offsets = list
                .split(',')
                .map(|v| v.trim().parse::<i64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| ConfigError(format!("bad offsets in `{other}`")))?;
            LiftSpec::branch_offsets(map, &offsets)?
        }
    })
}

pub fn diffusion(cfg: &RunConfig, out: &mut OutDir) -> anyhow::Result<u8> {
    let map = map_of(cfg)?;
    let lift = lift_of(cfg, &map)?;
    let record = msd_estimate(&lift, cfg.ensemble, cfg.nmax, cfg.seed)?;
    out.csv(
        "msd.csv",
        &["n", "msd", "mean"],
        record.msd.iter().zip(&record.mean).enumerate().map(|(n, (m, s))| vec![n.to_string(), float(*m), float(*s)]),
    )?;
    let mut rng = stream_rng(cfg.seed, u64::MAX);
    let mut identity_gap = 0.0f64;
    for _ in 0..IDENTITY_POINTS {
        let x: f64 = rng.gen_range(0.0..1.0);
        identity_gap = identity_gap.max(lift_identity_gap(&lift, x, IDENTITY_STEPS)?);
    }
    out.json(
        "diffusion.json",
        &json!({
            "lift": cfg.lift,
            "ensemble": record.ensemble,
            "n_max": record.n_max,
            "gamma_hat": record.gamma_hat(),
            "gamma_band": record.gamma_band,
            "fit": record.fit,
            "identity_max_gap": identity_gap,
        }),
    )?;
    match (record.gamma_hat(), record.gamma_band) {
        (Some(g), Some((lo, hi))) => println!("γ̂ = {g:.4} [{lo:.4}, {hi:.4}]; identity gap {identity_gap:.2e}"),
        _ => println!("MSD vanishes; no exponent fitted; identity gap {identity_gap:.2e}"),
    }
    Ok(0)
}

pub fn density(cfg: &RunConfig, out: &mut OutDir) -> anyhow::Result<u8> {
    let map = map_of(cfg)?;
    let d = ulam_density(&map, cfg.grid, cfg.epsilon, cfg.sweeps)?;
    let h = 1.0 / d.m as f64;
    out.csv(
        "density.csv",
        &["bin", "left", "density"],
        d.density.iter().enumerate().map(|(i, v)| vec![i.to_string(), float(i as f64 * h), float(*v)]),
    )?;
    let eps: Vec<f64> = (0..8)
        .map(|i| cfg.epsilon / f64::from(1u32 << i))
        .take_while(|&e| e * d.m as f64 >= 4.0)
        .collect();
    let profile = d.mass_profile(&eps);
    let increasing = profile.windows(2).all(|w| w[1].1 > w[0].1);
    out.json(
        "density.json",
        &json!({
            "m": d.m,
            "epsilon": d.epsilon,
            "sup": d.sup,
            "sweeps": d.sweeps,
            "residual": d.residual,
            "mass_above": profile,
            "mass_increasing_as_epsilon_shrinks": increasing,
        }),
    )?;
    println!("sup h on [{}, 1] = {:.6} ({} sweeps, residual {:.1e})", cfg.epsilon, d.sup, d.sweeps, d.residual);
    Ok(0)
}

pub fn returns(cfg: &RunConfig, out: &mut OutDir) -> anyhow::Result<u8> {
    let map = map_of(cfg)?;
    let hist = return_time_tail(&map, cfg.ensemble, cfg.cap, cfg.seed).context("return-time run")?;
    out.csv(
        "returns.csv",
        &["n", "survival"],
        hist.tail.iter().map(|&(n, s)| vec![n.to_string(), float(s)]),
    )?;
    out.csv(
        "histogram.csv",
        &["r", "count"],
        hist.counts.iter().map(|(r, c)| vec![r.to_string(), c.to_string()]),
    )?;
    out.json(
        "returns.json",
        &json!({
            "ensemble": hist.ensemble,
            "cap": hist.cap,
            "censored": hist.censored,
            "returned_fraction": hist.returned_fraction(),
            "fit": hist.fit,
            "expected_slope": -map.alpha(),
        }),
    )?;
    println!(
        "P(R > n) slope {:.4} (expected {:.4}); {} of {} censored at {}",
        hist.fit.map_or(f64::NAN, |f| f.slope),
        -map.alpha(),
        hist.censored,
        hist.ensemble,
        hist.cap,
    );
    Ok(0)
}
