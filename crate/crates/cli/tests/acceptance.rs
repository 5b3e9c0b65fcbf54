//! One PASS/FAIL line per acceptance criterion, written to stderr past the
//! test harness capture.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use intmaps::distortion::{verify_lem_dist, verify_young};
use intmaps::ergodic::{lift_identity_gap, return_time_tail, ulam_density, LiftSpec};
use intmaps::exactness::{mn_test, DEFAULT_COMPONENT_CAP};
use intmaps::partition::DEFAULT_FRONTIER_CAP;
use intmaps::stats::stream_rng;
use intmaps::{build_family, compute_b_sequence, Family, IntervalSet, MapSpec};
use rand::Rng;

const SEED: u64 = 20_240_601;

fn pm(s: f64) -> MapSpec {
    build_family(&Family::pm(s)).unwrap()
}

fn report(n: u32, ok: bool, detail: String) {
    let line = format!("{} criterion {n}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    std::io::stderr().lock().write_all(line.as_bytes()).unwrap();
    assert!(ok, "criterion {n} failed: {detail}");
}

#[test]
fn criterion_01_axiom_suite() {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, family, expanding) in [
        ("PM(1)", Family::pm(1.0), true),
        ("PM(2)", Family::pm(2.0), true),
        ("geo(1,0.5)", Family::geo(1.0, 0.5), false),
    ] {
        let started = Instant::now();
        let map = build_family(&family).unwrap();
        let r = map.validate_axioms(4096).unwrap();
        let secs = started.elapsed().as_secs_f64();
        let good = r.passed()
            && (!expanding || r.lambda_hat >= 2.0)
            && (r.beta_hat - r.beta_declared).abs() <= 0.05
            && secs < 5.0;
        ok &= good;
        lines.push(format!("{name} Λ̂={:.4} β̂={:.4} ({secs:.2}s)", r.lambda_hat, r.beta_hat));
    }
    report(1, ok, lines.join("; "));
}

#[test]
fn criterion_02_b_sequence_slope() {
    let started = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for s in [1.0, 2.0] {
        let map = pm(s);
        let p = compute_b_sequence(&map, 10_000).unwrap();
        let slope = p.b_slope(100, 10_000).unwrap().slope;
        let expected = -map.alpha();
        ok &= (slope - expected).abs() <= 0.05 * expected.abs();
        lines.push(format!("PM({s}) slope {slope:.4} vs {expected:.4}"));
    }
    let secs = started.elapsed().as_secs_f64();
    ok &= secs < 10.0;
    report(2, ok, format!("{} ({secs:.2}s)", lines.join("; ")));
}

#[test]
fn criterion_03_cylinder_decay() {
    let p = compute_b_sequence(&pm(1.0), 10_000).unwrap();
    let lengths = p.max_cylinder_lengths(20, DEFAULT_FRONTIER_CAP, 1000, SEED).unwrap();
    let last = *lengths.last().unwrap();
    let monotone = lengths.windows(2).all(|w| w[1] <= w[0]);
    report(
        3,
        lengths.len() == 20 && last < 0.01 && monotone,
        format!("depth-20 max {last:.3e}, non-increasing over 1..20: {monotone}"),
    );
}

#[test]
fn criterion_04_distortion_bounded() {
    let p = compute_b_sequence(&pm(1.0), 10_000).unwrap();
    let r20 = verify_lem_dist(&p, 20, 1000, 2, SEED).unwrap();
    let r25 = verify_lem_dist(&p, 25, 1000, 2, SEED + 1).unwrap();
    let (m20, m25) = (r20.max_abs_log, r25.max_abs_log);
    let stable = (m20 - m25).abs() <= 0.1 * m25;
    let enough = r20.cylinders >= 1000 && r25.cylinders >= 1000;
    let failures = r20.telescope_failures + r25.telescope_failures;
    let gap = r20.telescope_max_gap.max(r25.telescope_max_gap);
    report(
        4,
        stable && enough && failures == 0,
        format!(
            "max|log| depth 20 {m20:.4} vs depth 25 {m25:.4}; {} pairs; sum vs product gap {gap:.1e}, {failures} failures",
            r20.pairs + r25.pairs
        ),
    );
}

#[test]
fn criterion_05_young_bound() {
    let p = compute_b_sequence(&pm(1.0), 10_000).unwrap();
    let rec = verify_young(&p, 200, 1000, SEED).unwrap();
    let (e100, e200) = (rec.envelope_by_j[99], rec.envelope_by_j[199]);
    let flat = rec.c_prime.is_finite() && (e200 - e100).abs() <= 0.1 * e100;
    let (c1, c2) = p.length_law_band(10, 10_000);
    let banded = c1 > 0.0 && c2.is_finite();
    report(
        5,
        flat && banded,
        format!("envelope j=100 {e100:.4}, j=200 {e200:.4}, Ĉ′={:.4}; Δb/b^(β+2) in [{c1:.6}, {c2:.6}]", rec.c_prime),
    );
}

#[test]
fn criterion_06_mn_criterion() {
    let map = pm(1.0);
    let sets = [(0.60, 0.61), (0.25, 0.26), (map.a1(), 1.0)];
    let mut ok = true;
    let mut lines = Vec::new();
    for (lo, hi) in sets {
        let a = IntervalSet::interval(lo, hi).unwrap();
        let prof = mn_test(&map, &a, 40, 1e-12, DEFAULT_COMPONENT_CAP).unwrap();
        let good = match prof.n_star {
            Some(n) => n <= 10 && prof.persistent && prof.rows[n..].iter().all(|r| r.measure > 1e-12 + r.slack),
            None => false,
        };
        ok &= good;
        lines.push(format!("[{lo}, {hi}] n*={:?}", prof.n_star));
    }
    report(6, ok, lines.join("; "));
}

#[test]
fn criterion_07_lift_identity() {
    let map = pm(1.0);
    let mut rng = stream_rng(SEED, 7);
    let mut worst = 0.0f64;
    for lift in [LiftSpec::default_for(&map), LiftSpec::symmetric_halves(&map)] {
        for _ in 0..100 {
            let x: f64 = rng.gen_range(0.0..1.0);
            worst = worst.max(lift_identity_gap(&lift, x, 1000).unwrap());
        }
    }
    report(7, worst <= 1e-9, format!("max gap {worst:.2e} over 200 orbits of length 1000"));
}

#[test]
fn criterion_08_return_tail() {
    let started = Instant::now();
    let mut ok = true;
    let mut lines = Vec::new();
    for (s, expected) in [(1.0, -1.0), (2.0, -0.5)] {
        let h = return_time_tail(&pm(s), 100_000, 1_000_000, SEED).unwrap();
        let slope = h.fit.map_or(f64::NAN, |f| f.slope);
        ok &= (slope - expected).abs() <= 0.15;
        lines.push(format!("PM({s}) slope {slope:.4}"));
    }
    let secs = started.elapsed().as_secs_f64();
    ok &= secs < 60.0;
    report(8, ok, format!("{} ({secs:.2}s)", lines.join("; ")));
}

#[test]
fn criterion_09_density() {
    let map = pm(1.0);
    let coarse = ulam_density(&map, 1 << 12, 0.1, 100_000).unwrap();
    let fine = ulam_density(&map, 1 << 13, 0.1, 100_000).unwrap();
    let agree = (coarse.sup - fine.sup).abs() <= 0.1 * fine.sup;
    let eps: Vec<f64> = (0..6).map(|i| 0.1 / f64::from(1u32 << i)).collect();
    let masses = fine.mass_profile(&eps);
    let growing = masses.windows(2).all(|w| w[1].1 > w[0].1);
    let profile: Vec<String> = masses.iter().map(|(_, m)| format!("{m:.3}")).collect();
    report(
        9,
        agree && growing,
        format!("sup 2^12 {:.4}, 2^13 {:.4}; mass profile [{}]", coarse.sup, fine.sup, profile.join(", ")),
    );
}

fn run_all(out: &Path, threads: &str) {
    let runs: [&[&str]; 5] = [
        &["partition", "--kmax", "2000", "--depth", "8", "--set-key", "frontier=5000", "--set-key", "seeds=100"],
        &["distortion", "--kmax", "2000", "--depth", "10", "--trials", "100", "--set-key", "pairs=50"],
        &["diffusion", "--lift", "halves", "--ensemble", "500", "--nmax", "500"],
        &["density", "--grid", "2048"],
        &["returns", "--ensemble", "5000", "--cap", "100000"],
    ];
    for args in runs {
        let dir = out.join(args[0]);
        let status = Command::new(env!("CARGO_BIN_EXE_intmaps"))
            .args(args)
            .args(["--seed", "11", "--out"])
            .arg(&dir)
            .env("INTMAPS_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
    }
}

fn csv_files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    for sub in fs::read_dir(root).unwrap() {
        for f in fs::read_dir(sub.unwrap().path()).unwrap() {
            let path = f.unwrap().path();
            if path.extension().is_some_and(|e| e == "csv") {
                files.push((path.strip_prefix(root).unwrap().display().to_string(), fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn criterion_10_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    run_all(&a, "1");
    run_all(&b, "1");
    run_all(&c, "3");
    let (fa, fb, fc) = (csv_files(&a), csv_files(&b), csv_files(&c));
    let same = !fa.is_empty() && fa == fb;
    let thread_free = fa == fc;
    report(
        10,
        same && thread_free,
        format!("{} CSVs byte-identical across repeated runs: {same}; across thread counts: {thread_free}", fa.len()),
    );
}
