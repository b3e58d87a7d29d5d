//! Self-check suites run by `lattice-box verify`.
//!
//! Each suite samples from a fixed-seed generator, so a given build always
//! reports the same outcome.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lattice::{
    self, count_points_bruteforce, count_points_formula, is_boundary_degenerate, normalized_error,
    reduction_gap_bound, BoxSpec, Translation, DEFAULT_ENUMERATION_BUDGET,
};
use crate::laws::{
    cf_delta_tilde_fixed_x, cf_delta_tilde_uniform, cf_numeric_from_density, integrate_piecewise,
    DiagonalLimitLaw, GaussLegendre, IidUniformLimitLaw, LimitLaw, QuadratureConfig,
};

const VERIFY_SEED: u64 = 0x5645_5249_4659;

/// Functions under test. Swappable so a corrupted kernel can be shown to fail.
#[derive(Clone, Copy)]
pub struct Kernels {
    pub delta: fn(&BoxSpec, f64, &Translation) -> Result<f64>,
    pub delta_tilde: fn(f64, f64) -> Result<f64>,
}

impl Default for Kernels {
    fn default() -> Self {
        Self {
            delta: lattice::delta,
            delta_tilde: lattice::delta_tilde,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub quick: bool,
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn outcome(name: &str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        name: name.into(),
        passed,
        detail,
    }
}

fn error_outcome(name: &str, e: crate::Error) -> CheckOutcome {
    outcome(name, false, format!("error: {e}"))
}

/// Draw a translation in `[-w, w]^d` that is not boundary-degenerate at `t`.
fn clean_translation(rng: &mut ChaCha8Rng, b: &BoxSpec, t: f64, w: f64) -> Translation {
    loop {
        let x = Translation::new((0..b.dim()).map(|_| rng.gen_range(-w..=w)).collect())
            .expect("finite coordinates");
        if !is_boundary_degenerate(b, t, &x) {
            return x;
        }
    }
}

/// Closed-form count equals enumeration on random instances.
pub fn check_oracle_equivalence(per_dim: usize) -> CheckOutcome {
    let name = "formula_vs_bruteforce";
    let mut rng = ChaCha8Rng::seed_from_u64(VERIFY_SEED);
    let mut mismatches = 0usize;
    let mut total = 0usize;
    for d in 1..=3 {
        for _ in 0..per_dim {
            let a = [0.5, 1.0, 2.0][rng.gen_range(0..3)];
            let b = BoxSpec::new(d, a).expect("valid box");
            let t = 15.0 * (1.0 - rng.gen::<f64>());
            let x = clean_translation(&mut rng, &b, t, 2.0);
            let lhs = count_points_formula(&b, t, &x);
            let rhs = count_points_bruteforce(&b, t, &x, DEFAULT_ENUMERATION_BUDGET);
            match (lhs, rhs) {
                (Ok(l), Ok(r)) if l == r => {}
                (Ok(_), Ok(_)) => mismatches += 1,
                (Err(e), _) | (_, Err(e)) => return error_outcome(name, e),
            }
            total += 1;
        }
    }
    outcome(
        name,
        mismatches == 0,
        format!("{mismatches} mismatches in {total} instances"),
    )
}

/// `delta_tilde(t, x)` lies in `(-1, 1]`.
pub fn check_delta_tilde_range(kernels: &Kernels, samples: usize) -> CheckOutcome {
    let name = "delta_tilde_range";
    let mut rng = ChaCha8Rng::seed_from_u64(VERIFY_SEED ^ 1);
    let mut violations = 0usize;
    for _ in 0..samples {
        let t = 1e4 * (1.0 - rng.gen::<f64>());
        let x = rng.gen_range(-100.0..100.0);
        match (kernels.delta_tilde)(t, x) {
            Ok(v) if v > -1.0 && v <= 1.0 => {}
            Ok(_) => violations += 1,
            Err(e) => return error_outcome(name, e),
        }
    }
    outcome(
        name,
        violations == 0,
        format!("{violations} violations in {samples} draws"),
    )
}

/// `|R/t^(d-1) - Delta| <= envelope` on random instances, and the sup gap at
/// `t ~ 10^k` shrinks like `1/t`.
pub fn check_reduction(kernels: &Kernels, samples: usize, per_decade: usize) -> CheckOutcome {
    let name = "reduction_envelope";
    let mut rng = ChaCha8Rng::seed_from_u64(VERIFY_SEED ^ 2);
    let gap_at = |d: usize, t: f64, x: &Translation| -> Result<f64> {
        let b = BoxSpec::unit(d)?;
        Ok((normalized_error(&b, t, x)? - (kernels.delta)(&b, t, x)?).abs())
    };
    let mut violations = 0usize;
    for _ in 0..samples {
        let d = rng.gen_range(1..=5);
        let t = rng.gen_range(1.0..=1e3);
        let x = clean_translation(&mut rng, &BoxSpec::unit(d).expect("d >= 1"), t, 3.0);
        let bound = match reduction_gap_bound(d, t) {
            Ok(b) => b,
            Err(e) => return error_outcome(name, e),
        };
        match gap_at(d, t, &x) {
            Ok(g) if g <= bound + 1e-9 * (1.0 + bound) => {}
            Ok(_) => violations += 1,
            Err(e) => return error_outcome(name, e),
        }
    }
    let mut trend_ok = true;
    let mut trend = Vec::new();
    for d in 2..=5 {
        let limit = 10.0 * reduction_gap_bound(d, 10.0).expect("t >= 1/2");
        let mut prev = f64::INFINITY;
        for k in 1..=4 {
            let t0 = 10f64.powi(k);
            let b = BoxSpec::unit(d).expect("d >= 1");
            let mut sup = 0.0f64;
            for _ in 0..per_decade {
                // integer t makes every axis count exactly 2t
                let t = t0 + rng.gen::<f64>();
                let x = clean_translation(&mut rng, &b, t, 3.0);
                match gap_at(d, t, &x) {
                    Ok(g) => sup = sup.max(g),
                    Err(e) => return error_outcome(name, e),
                }
            }
            trend_ok &= sup < prev && sup * t0 <= limit;
            prev = sup;
            trend.push(format!("d{d}@1e{k}={sup:.3e}"));
        }
    }
    outcome(
        name,
        violations == 0 && trend_ok,
        format!(
            "{violations} envelope violations in {samples} draws; sup gaps {}",
            trend.join(" ")
        ),
    )
}

/// CF axioms, factorisation and scaling identities.
pub fn check_cf_axioms(samples: usize) -> CheckOutcome {
    let name = "cf_axioms";
    let mut rng = ChaCha8Rng::seed_from_u64(VERIFY_SEED ^ 3);
    let mut failures = 0usize;
    for _ in 0..samples {
        let u = rng.gen_range(-100.0..100.0);
        let y = rng.gen::<f64>();
        let d = rng.gen_range(1..=6);
        let diag = DiagonalLimitLaw::new(d, y).expect("valid law");
        let iid = IidUniformLimitLaw::new(d).expect("valid law");
        let b = d as f64 * 2f64.powi(d as i32 - 1);
        let s = 2f64.powi(d as i32 - 1);
        let ok = (|| -> Result<bool> {
            let c1 = diag.cf(u)?;
            let c2 = iid.cf(u);
            Ok(diag.cf(0.0)? == 1.0
                && iid.cf(0.0) == 1.0
                && c1.abs() <= 1.0 + 1e-15
                && c2.abs() <= 1.0 + 1e-15
                && c1 == diag.cf(-u)?
                && c2 == iid.cf(-u)
                && c1 == cf_delta_tilde_fixed_x(b * u, y)?
                && (c2 - cf_delta_tilde_uniform(s * u).powi(d as i32)).abs() <= 1e-15)
        })();
        match ok {
            Ok(true) => {}
            Ok(false) => failures += 1,
            Err(e) => return error_outcome(name, e),
        }
    }
    outcome(
        name,
        failures == 0,
        format!("{failures} failures in {samples} draws"),
    )
}

fn reference_laws() -> Vec<LimitLaw> {
    let mut laws = Vec::new();
    for d in 1..=3 {
        for y in [0.0, 0.25, 0.5, 1.0] {
            laws.push(LimitLaw::Diagonal(
                DiagonalLimitLaw::new(d, y).expect("valid law"),
            ));
        }
        laws.push(LimitLaw::iid_uniform(d).expect("valid law"));
    }
    laws
}

/// Sup over `u in [-50, 50]` of `|numeric CF of density - analytic CF|`.
pub fn density_cf_sup_gap(law: &LimitLaw, u_step: f64) -> Result<f64> {
    let cfg = QuadratureConfig::default();
    let bps = law.breakpoints();
    let steps = (100.0 / u_step).round() as i64;
    let mut sup = 0.0f64;
    for k in 0..=steps {
        let u = -50.0 + u_step * k as f64;
        let numeric = cf_numeric_from_density(|z| law.pdf(z), &bps, u, &cfg)?;
        sup = sup.max((numeric - law.cf(u)?).abs());
    }
    Ok(sup)
}

/// Derived densities reproduce the analytic CFs.
pub fn check_density_cf(u_step: f64) -> CheckOutcome {
    let name = "density_cf_consistency";
    let mut worst = 0.0f64;
    for law in reference_laws() {
        match density_cf_sup_gap(&law, u_step) {
            Ok(g) => worst = worst.max(g),
            Err(e) => return error_outcome(name, e),
        }
    }
    outcome(
        name,
        worst <= 1e-6,
        format!("worst sup gap {worst:.3e} (tolerance 1e-6)"),
    )
}

/// Unit mass, zero mean and closed-form variance by quadrature.
pub fn check_normalization() -> CheckOutcome {
    let rule = GaussLegendre::new(10);
    let mut worst_mass = 0.0f64;
    let mut worst_moment = 0.0f64;
    for law in reference_laws() {
        let bps = law.breakpoints();
        let f = |z: f64| law.pdf(z);
        let mass = integrate_piecewise(&rule, &f, &bps, |_| 4);
        let mean = integrate_piecewise(&rule, &|z| z * f(z), &bps, |_| 4);
        let second = integrate_piecewise(&rule, &|z| z * z * f(z), &bps, |_| 4);
        let (m, v) = law.moments();
        worst_mass = worst_mass.max((mass - 1.0).abs());
        worst_moment = worst_moment.max((mean - m).abs()).max((second - v).abs());
    }
    outcome(
        "normalization_and_moments",
        worst_mass <= 1e-9 && worst_moment <= 1e-8,
        format!("mass err {worst_mass:.3e}, moment err {worst_moment:.3e}"),
    )
}

pub fn run_suites(quick: bool) -> VerifyReport {
    run_suites_with(&Kernels::default(), quick)
}

pub fn run_suites_with(kernels: &Kernels, quick: bool) -> VerifyReport {
    let (per_dim, range_n, red_n, per_decade, cf_n, u_step) = if quick {
        (200, 100_000, 2_000, 200, 1_000, 1.0)
    } else {
        (1_000, 1_000_000, 10_000, 1_000, 10_000, 0.1)
    };
    VerifyReport {
        quick,
        checks: vec![
            check_oracle_equivalence(per_dim),
            check_delta_tilde_range(kernels, range_n),
            check_reduction(kernels, red_n, per_decade),
            check_cf_axioms(cf_n),
            check_density_cf(u_step),
            check_normalization(),
        ],
    }
}
