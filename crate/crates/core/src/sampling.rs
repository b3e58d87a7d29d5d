//! Seeded Monte Carlo engine for the two randomisation regimes.
//!
//! A batch draws `t ~ (1/T) rho(t/T) dt` on `(0, T]` and a translation `X`
//! (diagonal or independent uniform coordinates), then records `Delta(t, X)`
//! and `R / t^(d-1)` for each draw.
//!
//! Reproducibility: the sample index range `[0, N)` is cut into fixed chunks
//! of [`CHUNK_LEN`] draws. Chunk `c` owns a `ChaCha8Rng` seeded with
//! [`stream_seed`]`(seed, c)`. Chunks are independent of the worker count, so
//! any number of workers yields bit-identical batches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{count_lattice, pow2, reduction_gap_bound, BoxSpec, Translation};
use crate::laws::LimitLaw;

/// Draws per independently seeded stream.
pub const CHUNK_LEN: usize = 4096;

/// Default ceiling on the number of draws in one batch.
pub const DEFAULT_MAX_SAMPLES: usize = 50_000_000;

/// Generator identification recorded in every batch.
pub const GENERATOR_NAME: &str =
    "ChaCha8Rng (rand_chacha 0.3); chunk seed = splitmix64(seed ^ splitmix64(chunk)); chunk = 4096 draws";

/// Integration tolerance for trapezoid normalisation of a tabulated density.
pub const RHO_NORMALIZATION_TOL: f64 = 1e-6;

const SWEEP_DOMAIN: u64 = 0x5357_4545_5000_0001;

/// SplitMix64 finaliser.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `index` under master seed `master`.
pub fn stream_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

/// Seed used for the `k`-th horizon of a convergence sweep.
pub fn sweep_seed(master: u64, k: usize) -> u64 {
    stream_seed(master ^ SWEEP_DOMAIN, k as u64)
}

/// Density `rho` on `[0, 1]` weighting the dilation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RhoSpec {
    #[default]
    Uniform01,
    /// Piecewise-linear density through `(knots[i], values[i])`, zero outside
    /// `[knots[0], knots[last]]`.
    Tabulated { knots: Vec<f64>, values: Vec<f64> },
}

impl RhoSpec {
    pub fn tabulated(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let rho = Self::Tabulated { knots, values };
        rho.validate()?;
        Ok(rho)
    }

    pub fn validate(&self) -> Result<()> {
        let Self::Tabulated { knots, values } = self else {
            return Ok(());
        };
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::Config(format!(
                "tabulated rho needs at least two knots and one value per knot ({} knots, {} values)",
                knots.len(),
                values.len()
            )));
        }
        if knots.iter().any(|k| !(0.0..=1.0).contains(k)) {
            return Err(Error::Config("rho knots must lie in [0, 1]".into()));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config(
                "rho knots must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config(
                "rho values must be finite and non-negative".into(),
            ));
        }
        let mass = trapezoid_mass(knots, values);
        if (mass - 1.0).abs() > RHO_NORMALIZATION_TOL {
            return Err(Error::Config(format!(
                "rho integrates to {mass}, expected 1 within {RHO_NORMALIZATION_TOL:e}"
            )));
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Uniform01 => "uniform".into(),
            Self::Tabulated { knots, .. } => format!("tabulated({} knots)", knots.len()),
        }
    }

    pub fn sampler(&self) -> Result<RhoSampler> {
        self.validate()?;
        Ok(match self {
            Self::Uniform01 => RhoSampler::Uniform,
            Self::Tabulated { knots, values } => {
                let mut cumulative = Vec::with_capacity(knots.len());
                cumulative.push(0.0);
                for i in 1..knots.len() {
                    let seg = 0.5 * (values[i - 1] + values[i]) * (knots[i] - knots[i - 1]);
                    cumulative.push(cumulative[i - 1] + seg);
                }
                RhoSampler::Tabulated {
                    knots: knots.clone(),
                    values: values.clone(),
                    cumulative,
                }
            }
        })
    }
}

fn trapezoid_mass(knots: &[f64], values: &[f64]) -> f64 {
    knots
        .windows(2)
        .zip(values.windows(2))
        .map(|(k, v)| 0.5 * (v[0] + v[1]) * (k[1] - k[0]))
        .sum()
}

/// Prepared inverse-CDF sampler for a validated [`RhoSpec`].
#[derive(Debug, Clone)]
pub enum RhoSampler {
    Uniform,
    Tabulated {
        knots: Vec<f64>,
        values: Vec<f64>,
        cumulative: Vec<f64>,
    },
}

impl RhoSampler {
    /// Quantile of `rho` at probability `p` in `(0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            Self::Uniform => p,
            Self::Tabulated {
                knots,
                values,
                cumulative,
            } => {
                let total = *cumulative.last().expect("at least two knots");
                let r = p * total;
                // first segment whose cumulative upper end reaches r
                let i = cumulative[1..]
                    .partition_point(|&c| c < r)
                    .min(knots.len() - 2);
                let (k0, k1) = (knots[i], knots[i + 1]);
                let (v0, v1) = (values[i], values[i + 1]);
                let rem = (r - cumulative[i]).max(0.0);
                let slope = (v1 - v0) / (k1 - k0);
                // solve v0 tau + slope tau^2 / 2 = rem in the stable form
                let disc = (v0 * v0 + 2.0 * slope * rem).max(0.0);
                let denom = v0 + disc.sqrt();
                let tau = if denom > 0.0 { 2.0 * rem / denom } else { 0.0 };
                (k0 + tau).clamp(k0, k1)
            }
        }
    }

    /// Draw `t` on `(0, horizon]`.
    pub fn sample<R: Rng + ?Sized>(&self, horizon: f64, rng: &mut R) -> f64 {
        let p = 1.0 - rng.gen::<f64>();
        (horizon * self.quantile(p)).max(f64::MIN_POSITIVE)
    }
}

/// Draw one dilation `t ~ (1/T) rho(t/T) dt`.
pub fn sample_t<R: Rng + ?Sized>(horizon: f64, rho: &RhoSpec, rng: &mut R) -> Result<f64> {
    check_horizon(horizon)?;
    Ok(rho.sampler()?.sample(horizon, rng))
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon.is_finite() && horizon > 0.0 {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "horizon T must be finite and positive, got {horizon}"
        )))
    }
}

/// How translations are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum Scenario {
    /// `X = (x0, ..., x0)`.
    Diagonal { d: usize, x0: f64 },
    /// Independent `U[-1/2, 1/2]` coordinates, independent of `t`.
    IidUniform { d: usize },
}

impl Scenario {
    pub fn dim(&self) -> usize {
        match *self {
            Self::Diagonal { d, .. } | Self::IidUniform { d } => d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::Argument(
                "scenario dimension must be at least 1".into(),
            ));
        }
        if let Self::Diagonal { x0, .. } = self {
            if !x0.is_finite() {
                return Err(Error::Argument(format!(
                    "diagonal x0 must be finite, got {x0}"
                )));
            }
        }
        Ok(())
    }

    /// The limit law this scenario converges to.
    pub fn limit_law(&self) -> Result<LimitLaw> {
        match *self {
            Self::Diagonal { d, x0 } => LimitLaw::diagonal(d, x0),
            Self::IidUniform { d } => LimitLaw::iid_uniform(d),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Diagonal { d, x0 } => format!("diagonal(d={d}, x0={x0})"),
            Self::IidUniform { d } => format!("iid_uniform(d={d})"),
        }
    }
}

/// Execution knobs that never change a batch's contents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchOptions {
    pub workers: usize,
    pub max_samples: usize,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            max_samples: DEFAULT_MAX_SAMPLES,
        }
    }
}

/// One Monte Carlo batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub scenario: Scenario,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    pub rho: RhoSpec,
    pub generator: String,
    pub t_samples: Vec<f64>,
    pub delta_samples: Vec<f64>,
    pub normalized_error_samples: Vec<f64>,
}

/// Slack added to the reduction envelope to absorb binary64 rounding in
/// `count - volume`.
const GAP_ROUNDING_SLACK: f64 = 1e-9;

struct Draw {
    t: f64,
    delta: f64,
    normalized_error: f64,
}

fn draw_one<R: Rng>(
    scenario: &Scenario,
    unit: &BoxSpec,
    horizon: f64,
    rho: &RhoSampler,
    rng: &mut R,
) -> Result<Draw> {
    let t = rho.sample(horizon, rng);
    let x = match *scenario {
        Scenario::Diagonal { d, x0 } => Translation::diagonal(d, x0)?,
        Scenario::IidUniform { d } => {
            Translation::new((0..d).map(|_| rng.gen::<f64>() - 0.5).collect())?
        }
    };
    let r = count_lattice(unit, t, &x)?;
    let delta = r.delta.expect("unit box always yields delta");
    Ok(Draw {
        t,
        delta,
        normalized_error: r.normalized_error,
    })
}

fn check_draw(d: usize, k: usize, draw: &Draw) -> Result<()> {
    let b = d as f64 * pow2(d - 1);
    if !(draw.delta > -b && draw.delta <= b) {
        return Err(Error::Numeric(format!(
            "sample {k}: delta {} outside (-{b}, {b}] at t = {}",
            draw.delta, draw.t
        )));
    }
    if draw.t >= 1.0 {
        let bound = reduction_gap_bound(d, draw.t)?;
        let gap = (draw.normalized_error - draw.delta).abs();
        if gap > bound + GAP_ROUNDING_SLACK * (1.0 + bound) {
            return Err(Error::Numeric(format!(
                "sample {k}: reduction gap {gap} exceeds envelope {bound} at t = {}",
                draw.t
            )));
        }
    }
    Ok(())
}

/// [`generate_batch_with`] using default options.
pub fn generate_batch(
    scenario: Scenario,
    horizon: f64,
    n: usize,
    rho: &RhoSpec,
    seed: u64,
) -> Result<SampleBatch> {
    generate_batch_with(scenario, horizon, n, rho, seed, &BatchOptions::default())
}

/// Draw `n` samples; output depends only on `(scenario, horizon, n, rho, seed)`.
pub fn generate_batch_with(
    scenario: Scenario,
    horizon: f64,
    n: usize,
    rho: &RhoSpec,
    seed: u64,
    options: &BatchOptions,
) -> Result<SampleBatch> {
    scenario.validate()?;
    check_horizon(horizon)?;
    if n == 0 {
        return Err(Error::Argument("sample count N must be at least 1".into()));
    }
    if n > options.max_samples {
        return Err(Error::Resource(format!(
            "N = {n} exceeds the configured limit of {} samples",
            options.max_samples
        )));
    }
    let sampler = rho.sampler()?;
    let d = scenario.dim();
    let unit = BoxSpec::unit(d)?;
    let chunks = n.div_ceil(CHUNK_LEN);

    let run_chunk = |c: usize| -> Result<Vec<Draw>> {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, c as u64));
        let start = c * CHUNK_LEN;
        let end = (start + CHUNK_LEN).min(n);
        (start..end)
            .map(|k| {
                let draw = draw_one(&scenario, &unit, horizon, &sampler, &mut rng)?;
                check_draw(d, k, &draw)?;
                Ok(draw)
            })
            .collect()
    };

    let per_chunk: Vec<Vec<Draw>> = if options.workers <= 1 {
        (0..chunks).map(run_chunk).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.workers)
            .build()
            .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))?;
        pool.install(|| {
            (0..chunks)
                .into_par_iter()
                .map(run_chunk)
                .collect::<Result<_>>()
        })?
    };

    let mut batch = SampleBatch {
        scenario,
        horizon,
        n,
        seed,
        rho: rho.clone(),
        generator: GENERATOR_NAME.into(),
        t_samples: Vec::with_capacity(n),
        delta_samples: Vec::with_capacity(n),
        normalized_error_samples: Vec::with_capacity(n),
    };
    for draw in per_chunk.into_iter().flatten() {
        batch.t_samples.push(draw.t);
        batch.delta_samples.push(draw.delta);
        batch.normalized_error_samples.push(draw.normalized_error);
    }
    Ok(batch)
}

/// Empirical characteristic function `(1/N) sum exp(i u z_k)` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCf {
    pub u: Vec<f64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl EmpiricalCf {
    /// Real part as a [`CurveTable`](crate::laws::CurveTable).
    pub fn real_table(&self) -> Result<crate::laws::CurveTable> {
        crate::laws::CurveTable::new(crate::laws::CurveKind::Cf, self.u.clone(), self.re.clone())
    }
}

pub fn empirical_cf(samples: &[f64], u_grid: &[f64]) -> Result<EmpiricalCf> {
    if samples.is_empty() {
        return Err(Error::Argument(
            "empirical CF needs at least one sample".into(),
        ));
    }
    let n = samples.len() as f64;
    let (re, im): (Vec<f64>, Vec<f64>) = u_grid
        .par_iter()
        .map(|&u| {
            let (c, s) = samples.iter().fold((0.0, 0.0), |(c, s), &z| {
                let (sin, cos) = (u * z).sin_cos();
                (c + cos, s + sin)
            });
            (c / n, s / n)
        })
        .unzip();
    Ok(EmpiricalCf {
        u: u_grid.to_vec(),
        re,
        im,
    })
}

/// The grid `u = -20, -19.75, ..., 20`.
pub fn default_u_grid() -> Vec<f64> {
    u_grid(-20.0, 20.0, 0.25)
}

/// `lo, lo + step, ...` up to `hi` (inclusive within a rounding margin).
/// Empty when `hi < lo` or `step` is not positive.
pub fn u_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Vec::new();
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|k| lo + step * k as f64).collect()
}

/// Kolmogorov-Smirnov distance between the sample's empirical CDF and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Argument(
            "KS distance needs at least one sample".into(),
        ));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted.iter().enumerate().fold(0.0, |acc: f64, (i, &z)| {
        let f = cdf(z);
        let upper = ((i + 1) as f64 / n - f).abs();
        let lower = (i as f64 / n - f).abs();
        acc.max(upper).max(lower)
    }))
}

fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// Statistical comparison of one batch against its limit law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario: Scenario,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    pub ks_delta: f64,
    pub ks_error: f64,
    /// `sup_u |empirical CF of delta - analytic CF|` on the default grid.
    pub cf_sup_gap: f64,
    /// `sup_u |imaginary part of the empirical CF|`.
    pub cf_imag_sup: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Largest `|empirical - analytic|` (complex modulus) over the grid.
pub fn cf_sup_gap(emp: &EmpiricalCf, law: &LimitLaw) -> Result<f64> {
    emp.u
        .iter()
        .zip(emp.re.iter().zip(&emp.im))
        .try_fold(0.0f64, |acc, (&u, (&re, &im))| {
            let a = law.cf(u)?;
            Ok(acc.max((re - a).hypot(im)))
        })
}

fn law_matches(scenario: &Scenario, law: &LimitLaw) -> Result<bool> {
    Ok(match (scenario, law) {
        (Scenario::Diagonal { d, x0 }, LimitLaw::Diagonal(l)) => {
            *d == l.dim() && (crate::lattice::gap_y(*x0)? - l.y()).abs() < 1e-12
        }
        (Scenario::IidUniform { d }, LimitLaw::IidUniform(l)) => *d == l.dim(),
        _ => false,
    })
}

pub fn compare_batch(batch: &SampleBatch, law: &LimitLaw) -> Result<ComparisonReport> {
    if !law_matches(&batch.scenario, law)? {
        return Err(Error::Argument(format!(
            "law {} does not match scenario {}",
            law.describe(),
            batch.scenario.describe()
        )));
    }
    let ks_delta = ks_distance(&batch.delta_samples, |z| law.cdf(z))?;
    let ks_error = ks_distance(&batch.normalized_error_samples, |z| law.cdf(z))?;
    let emp = empirical_cf(&batch.delta_samples, &default_u_grid())?;
    let cf_sup_gap = cf_sup_gap(&emp, law)?;
    let cf_imag_sup = emp.im.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let (mean, variance) = mean_variance(&batch.delta_samples);
    Ok(ComparisonReport {
        scenario: batch.scenario,
        horizon: batch.horizon,
        n: batch.n,
        seed: batch.seed,
        ks_delta,
        ks_error,
        cf_sup_gap,
        cf_imag_sup,
        mean,
        variance,
    })
}

/// One report per horizon; horizon `k` uses seed [`sweep_seed`]`(seed, k)`.
pub fn convergence_sweep(
    scenario: Scenario,
    rho: &RhoSpec,
    horizons: &[f64],
    n: usize,
    seed: u64,
    options: &BatchOptions,
) -> Result<Vec<ComparisonReport>> {
    if horizons.len() < 2 {
        return Err(Error::Argument(
            "a convergence sweep needs at least two horizons".into(),
        ));
    }
    if horizons.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Argument(
            "horizons must be strictly increasing".into(),
        ));
    }
    let law = scenario.limit_law()?;
    horizons
        .iter()
        .enumerate()
        .map(|(k, &horizon)| {
            let batch =
                generate_batch_with(scenario, horizon, n, rho, sweep_seed(seed, k), options)?;
            compare_batch(&batch, &law)
        })
        .collect()
}
