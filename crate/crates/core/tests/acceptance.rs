//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Statistical criteria run on a primary seed; on failure they are re-run on
//! three fixed alternate seeds and pass on a majority.

mod common;

use std::fs;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lattice_box::lattice::{
    count_points_bruteforce, count_points_formula, delta, delta_tilde, normalized_error,
    reduction_gap_bound, BoxSpec, Translation, DEFAULT_ENUMERATION_BUDGET,
};
use lattice_box::laws::{GaussLegendre, LimitLaw};
use lattice_box::sampling::{convergence_sweep, generate_batch, BatchOptions, RhoSpec, Scenario};

const ALTERNATE_SEEDS: [u64; 3] = [0x5EED_0001, 0x5EED_0002, 0x5EED_0003];

type Outcome = Result<(bool, String), String>;
type Criterion = fn() -> (bool, String);
type LawCase = (LimitLaw, Box<dyn Fn(f64) -> f64>, String);

struct Line {
    id: usize,
    title: &'static str,
    passed: bool,
    detail: String,
}

/// Primary seed first, then a majority over the alternates.
fn with_seed_policy(primary: u64, run: impl Fn(u64) -> Outcome) -> (bool, String) {
    match run(primary) {
        Ok((true, d)) => (true, format!("seed {primary}: {d}")),
        Ok((false, d)) => {
            let mut notes = vec![format!("seed {primary} failed: {d}")];
            let mut wins = 0;
            for s in ALTERNATE_SEEDS {
                match run(s) {
                    Ok((ok, d)) => {
                        wins += usize::from(ok);
                        notes.push(format!(
                            "seed {s:#x} {}: {d}",
                            if ok { "ok" } else { "fail" }
                        ));
                    }
                    Err(e) => notes.push(format!("seed {s:#x} error: {e}")),
                }
            }
            (
                wins >= 2,
                format!("{}; alternates {wins}/3", notes.join("; ")),
            )
        }
        Err(e) => (false, format!("error: {e}")),
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ks(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |acc, (i, &x)| {
        let f = cdf(x);
        acc.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

fn emp_cf(samples: &[f64], u: f64) -> (f64, f64) {
    let n = samples.len() as f64;
    let (c, s) = samples.iter().fold((0.0, 0.0), |(c, s), &z| {
        (c + (u * z).cos(), s + (u * z).sin())
    });
    (c / n, s / n)
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + step * k as f64).collect()
}

fn diagonal_cf(d: usize, y: f64, u: f64) -> f64 {
    let b = d as f64 * 2f64.powi(d as i32 - 1);
    let v = b * u;
    if v == 0.0 {
        return 1.0;
    }
    ((v * y).sin() + (v * (1.0 - y)).sin()) / v
}

fn iid_cf(d: usize, u: f64) -> f64 {
    let v = 2f64.powi(d as i32 - 1) * u;
    if v == 0.0 {
        return 1.0;
    }
    (2.0 * (1.0 - v.cos()) / (v * v)).powi(d as i32)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// CDF of `s (U_1 + ... + U_2d - d)`.
fn scaled_irwin_hall_cdf(d: usize, z: f64) -> f64 {
    let n = 2 * d;
    let x = z / 2f64.powi(d as i32 - 1) + d as f64;
    if x <= 0.0 {
        return 0.0;
    }
    if x >= n as f64 {
        return 1.0;
    }
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    let sum: f64 = (0..=x.floor() as usize)
        .map(|k| (-1f64).powi(k as i32) * binomial(n, k) * (x - k as f64).powi(n as i32))
        .sum();
    sum / fact
}

fn criterion_1() -> (bool, String) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    let mut total = 0;
    for d in 1..=3 {
        for _ in 0..1000 {
            let a = [0.5, 1.0, 2.0][rng.gen_range(0..3)];
            let t = 15.0 * (1.0 - rng.gen::<f64>());
            let x = Translation::new((0..d).map(|_| rng.gen_range(-2.0..=2.0)).collect()).unwrap();
            let b = BoxSpec::new(d, a).unwrap();
            let f = count_points_formula(&b, t, &x);
            let e = count_points_bruteforce(&b, t, &x, DEFAULT_ENUMERATION_BUDGET);
            match (f, e) {
                (Ok(f), Ok(e)) if f == e => {}
                (Ok(_), Ok(_)) => mismatches += 1,
                (Err(e), _) | (_, Err(e)) => return (false, format!("error: {e}")),
            }
            total += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        mismatches == 0 && secs < 60.0,
        format!("{mismatches}/{total} mismatches in {secs:.2}s"),
    )
}

fn criterion_2() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 1_000_000;
    let mut bad = 0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..n {
        let t = 1e3 * (1.0 - rng.gen::<f64>());
        let x = rng.gen_range(-50.0..50.0);
        match delta_tilde(t, x) {
            Ok(v) => {
                lo = lo.min(v);
                hi = hi.max(v);
                if !(v > -1.0 && v <= 1.0) {
                    bad += 1;
                }
            }
            Err(e) => return (false, format!("error: {e}")),
        }
    }
    (
        bad == 0,
        format!("{bad} violations in {n} draws; observed range [{lo:.6}, {hi:.6}]"),
    )
}

/// `(2t+1)^(d-i) - (2t-1)^(d-i)` summed with weights `2^(i-1) / t^(d-i)`.
fn envelope(d: usize, t: f64) -> f64 {
    (1..d)
        .map(|i| {
            let k = (d - i) as i32;
            2f64.powi(i as i32 - 1) * ((2.0 * t + 1.0).powi(k) - (2.0 * t - 1.0).powi(k))
                / t.powi(k)
        })
        .sum()
}

fn criterion_3() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let gap = |d: usize, t: f64, x: &Translation| -> f64 {
        let b = BoxSpec::unit(d).unwrap();
        (normalized_error(&b, t, x).unwrap() - delta(&b, t, x).unwrap()).abs()
    };
    let mut bad = 0;
    let mut bound_mismatch = 0.0f64;
    for _ in 0..10_000 {
        let d = rng.gen_range(1..=5);
        let t = rng.gen_range(1.0..=1e3);
        let x = Translation::new((0..d).map(|_| rng.gen_range(-3.0..3.0)).collect()).unwrap();
        let env = envelope(d, t);
        bound_mismatch = bound_mismatch.max((reduction_gap_bound(d, t).unwrap() - env).abs());
        if gap(d, t, &x) > env + 1e-9 * (1.0 + env) {
            bad += 1;
        }
    }
    let mut trend_ok = true;
    let mut trend = Vec::new();
    for d in 2..=5 {
        let mut prev = f64::INFINITY;
        let mut sups = Vec::new();
        for k in 1..=4 {
            let t0 = 10f64.powi(k);
            let sup = (0..1000)
                .map(|_| {
                    // integer t gives zero gap, so jitter within the decade point
                    let t = t0 + rng.gen::<f64>();
                    let x = Translation::new((0..d).map(|_| rng.gen_range(-3.0..3.0)).collect())
                        .unwrap();
                    gap(d, t, &x)
                })
                .fold(0.0, f64::max);
            trend_ok &= sup < prev;
            prev = sup;
            sups.push(format!("{sup:.2e}"));
        }
        trend.push(format!("d{d}[{}]", sups.join(",")));
    }
    (
        bad == 0 && trend_ok && bound_mismatch < 1e-9,
        format!(
            "{bad} violations in 10000 draws; sup gap at t~10^1..10^4: {}",
            trend.join(" ")
        ),
    )
}

fn criterion_4() -> (bool, String) {
    let start = Instant::now();
    let scenario = Scenario::Diagonal { d: 1, x0: 0.0 };
    let (ok, detail) = with_seed_policy(42, |seed| {
        let b = generate_batch(scenario, 1e4, 100_000, &RhoSpec::Uniform01, seed).map_err(e2s)?;
        let k = ks(&b.delta_samples, |z| ((z + 1.0) / 2.0).clamp(0.0, 1.0));
        Ok((k <= 0.01, format!("ks {k:.5} (limit 0.01)")))
    });
    (
        ok,
        format!("{detail}; {:.2}s", start.elapsed().as_secs_f64()),
    )
}

fn criterion_5() -> (bool, String) {
    let scenario = Scenario::Diagonal { d: 2, x0: 0.25 };
    with_seed_policy(5, |seed| {
        let b = generate_batch(scenario, 1e4, 200_000, &RhoSpec::Uniform01, seed).map_err(e2s)?;
        let (mut sup, mut at) = (0.0f64, 0.0);
        for u in grid(-20.0, 20.0, 0.25) {
            let (re, im) = emp_cf(&b.delta_samples, u);
            let g = (re - diagonal_cf(2, 0.5, u)).hypot(im);
            if g > sup {
                sup = g;
                at = u;
            }
        }
        Ok((
            sup <= 0.02,
            format!("sup gap {sup:.5} at u={at} (limit 0.02)"),
        ))
    })
}

fn criterion_6() -> (bool, String) {
    let mut all = true;
    let mut parts = Vec::new();
    for d in 1..=3 {
        let scenario = Scenario::IidUniform { d };
        let var_target = d as f64 * 4f64.powi(d as i32 - 1) / 6.0;
        let exact = common::SharedDilationLaw::new(d);
        let (ok, detail) = with_seed_policy(7, |seed| {
            let b =
                generate_batch(scenario, 1e4, 100_000, &RhoSpec::Uniform01, seed).map_err(e2s)?;
            let xs = &b.delta_samples;
            let k = ks(xs, |z| scaled_irwin_hall_cdf(d, z));
            let k_exact = ks(xs, |z| exact.cdf(z));
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let rel = (var / var_target - 1.0).abs();
            Ok((
                k <= 0.015 && rel <= 0.05,
                format!("ks {k:.5} (limit 0.015), var rel err {rel:.4}; ks vs shared-dilation law {k_exact:.5}"),
            ))
        });
        all &= ok;
        parts.push(format!(
            "d={d} {} [{detail}]",
            if ok { "ok" } else { "fail" }
        ));
    }
    (all, parts.join("; "))
}

fn criterion_7() -> (bool, String) {
    let rule = GaussLegendre::new(10);
    let us = grid(-50.0, 50.0, 0.1);
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    let mut cases: Vec<LawCase> = Vec::new();
    for d in 1..=3 {
        for y in [0.0, 0.25, 0.5, 1.0] {
            let law = LimitLaw::Diagonal(lattice_box::laws::DiagonalLimitLaw::new(d, y).unwrap());
            cases.push((
                law,
                Box::new(move |u| diagonal_cf(d, y, u)),
                format!("diagonal d={d} y={y}"),
            ));
        }
        cases.push((
            LimitLaw::iid_uniform(d).unwrap(),
            Box::new(move |u| iid_cf(d, u)),
            format!("iid d={d}"),
        ));
    }
    for (law, cf, name) in &cases {
        let (lo, hi) = law.support();
        // 400 equal panels across the support, refined at the density kinks
        let mut cuts: Vec<f64> = law.breakpoints();
        let m = 400;
        cuts.extend((0..=m).map(|k| lo + (hi - lo) * k as f64 / m as f64));
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        for &u in &us {
            let f = |z: f64| law.pdf(z) * (u * z).cos();
            let numeric: f64 = cuts
                .windows(2)
                .map(|w| rule.integrate(&f, w[0], w[1]))
                .sum();
            let g = (numeric - cf(u)).abs();
            if g > worst {
                worst = g;
                worst_at = format!("{name} u={u:.1}");
            }
        }
    }
    (
        worst <= 1e-6,
        format!(
            "worst sup gap {worst:.3e} at {worst_at} over {} laws (limit 1e-6)",
            cases.len()
        ),
    )
}

fn criterion_8() -> (bool, String) {
    let horizons = [1e2, 1e3, 1e4];
    let mut all = true;
    let mut parts = Vec::new();
    for scenario in [
        Scenario::Diagonal { d: 2, x0: 0.25 },
        Scenario::IidUniform { d: 2 },
    ] {
        let (ok, detail) = with_seed_policy(8, |seed| {
            let reports = convergence_sweep(
                scenario,
                &RhoSpec::Uniform01,
                &horizons,
                100_000,
                seed,
                &BatchOptions::default(),
            )
            .map_err(e2s)?;
            let ks: Vec<f64> = reports.iter().map(|r| r.ks_delta).collect();
            let ok = ks.windows(2).all(|w| w[1] <= 1.5 * w[0]);
            let shown: Vec<String> = ks.iter().map(|k| format!("{k:.5}")).collect();
            Ok((ok, format!("ks_delta [{}]", shown.join(", "))))
        });
        all &= ok;
        parts.push(format!(
            "{} {} [{detail}]",
            scenario.describe(),
            if ok { "ok" } else { "fail" }
        ));
    }
    (all, parts.join("; "))
}

fn run_bin(args: &[&str]) -> Result<Vec<u8>, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_lattice-box"))
        .env_remove("LATTICE_BOX_OUTPUT_DIR")
        .args(args)
        .output()
        .map_err(e2s)?;
    match o.status.code() {
        Some(0) => Ok(o.stdout),
        c => Err(format!(
            "{args:?} exited {c:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        )),
    }
}

fn criterion_9() -> (bool, String) {
    let check = || -> Result<String, String> {
        let dir = tempfile::tempdir().map_err(e2s)?;
        let mut differing = Vec::new();
        let mut compared = 0;
        for format in ["csv", "json"] {
            let scenarios: [&[&str]; 2] = [
                &["--scenario", "diagonal", "--d", "2", "--x0", "0.25"],
                &["--scenario", "iid-uniform", "--d", "3"],
            ];
            for scenario in scenarios {
                let mut outputs = Vec::new();
                for (run, workers) in [(0, "1"), (1, "1"), (2, "4")] {
                    let path = dir
                        .path()
                        .join(format!("{format}-{}-{run}.out", scenario[1]));
                    let p = path.to_str().unwrap();
                    let mut args = vec!["sample"];
                    args.extend_from_slice(scenario);
                    args.extend([
                        "--T",
                        "1000",
                        "--N",
                        "20000",
                        "--seed",
                        "99",
                        "--workers",
                        workers,
                        "--format",
                        format,
                        "--output",
                        p,
                    ]);
                    run_bin(&args)?;
                    let meta = fs::read(format!("{p}.meta.json")).map_err(e2s)?;
                    outputs.push((fs::read(&path).map_err(e2s)?, meta));
                }
                for o in &outputs[1..] {
                    compared += 1;
                    if *o != outputs[0] {
                        differing.push(format!("sample {format} {}", scenario[1]));
                    }
                }
            }
            let mut sweeps = Vec::new();
            for workers in ["1", "1", "4"] {
                sweeps.push(run_bin(&[
                    "convergence",
                    "--scenario",
                    "diagonal",
                    "--d",
                    "2",
                    "--x0",
                    "0.25",
                    "--horizons",
                    "100,1000",
                    "--N",
                    "20000",
                    "--seed",
                    "99",
                    "--workers",
                    workers,
                    "--format",
                    format,
                ])?);
            }
            let mut cfs = Vec::new();
            for workers in ["1", "1", "4"] {
                cfs.push(run_bin(&[
                    "cf",
                    "--scenario",
                    "iid-uniform",
                    "--d",
                    "1",
                    "--T",
                    "1000",
                    "--N",
                    "20000",
                    "--seed",
                    "99",
                    "--workers",
                    workers,
                    "--format",
                    format,
                ])?);
            }
            for (name, outs) in [("convergence", &sweeps), ("cf", &cfs)] {
                for o in &outs[1..] {
                    compared += 1;
                    if *o != outs[0] {
                        differing.push(format!("{name} {format}"));
                    }
                }
            }
        }
        if differing.is_empty() {
            Ok(format!(
                "{compared} repeated-run comparisons byte-identical (workers 1 and 4)"
            ))
        } else {
            Err(format!("outputs differ: {}", differing.join(", ")))
        }
    };
    match check() {
        Ok(d) => (true, d),
        Err(e) => (false, e),
    }
}

fn main() -> ExitCode {
    let criteria: [(&'static str, Criterion); 9] = [
        ("oracle equivalence", criterion_1),
        ("per-axis discrepancy range", criterion_2),
        ("reduction envelope and trend", criterion_3),
        ("diagonal law, d=1 x=0", criterion_4),
        ("diagonal law CF, d=2 y=0.5", criterion_5),
        ("iid-uniform law KS and variance", criterion_6),
        ("density/CF consistency", criterion_7),
        ("convergence trend", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut lines = Vec::new();
    for (i, (title, f)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let (passed, detail) = f();
        let line = Line {
            id: i + 1,
            title,
            passed,
            detail,
        };
        println!(
            "criterion {} {:<34} {}  ({:.1}s) {}",
            line.id,
            line.title,
            if line.passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            line.detail
        );
        lines.push(line);
    }
    let passed = lines.iter().filter(|l| l.passed).count();
    println!("acceptance: {passed}/{} criteria passed", lines.len());
    if passed == lines.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
