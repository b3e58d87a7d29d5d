//! Limit laws of `Delta(t, X)` (and hence of `R / t^(d-1)`) as `T -> inf`.
//!
//! Two regimes are covered:
//!
//! * diagonal translation `X = (x, ..., x)`, whose limit has characteristic
//!   function `(sin(b u y) + sin(b u (1-y))) / (b u)` with `b = d 2^(d-1)` and
//!   `y = |1 - 2{x}|`;
//! * independent uniform coordinates on `[-1/2, 1/2]`, whose limit has
//!   characteristic function `(2 (1 - cos(s u)) / (s u)^2)^d` with
//!   `s = 2^(d-1)`.
//!
//! The densities and CDFs here are derived from those characteristic
//! functions, not stated with them: the diagonal law is a two-component
//! mixture of centred uniforms, the uniform-coordinate law is a centred,
//! scaled Irwin-Hall law with `2d` summands. [`cf_numeric_from_density`]
//! recomputes the characteristic function from each density by quadrature so
//! the two routes can be checked against each other.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::lattice::{gap_y, pow2};

/// Below this magnitude the `sin(v)/v` and `2(1-cos v)/v^2` kernels switch to
/// their Taylor polynomials.
pub const SERIES_THRESHOLD: f64 = 1e-4;

/// Largest dimension accepted by the uniform-coordinate law (`2d <= 40`
/// summands keeps the alternating Irwin-Hall sum accurate in binary64).
pub const MAX_IRWIN_HALL_DIM: usize = 20;

/// `sin(v) / v`, equal to 1 at the origin.
pub fn sinc(v: f64) -> f64 {
    if v.abs() < SERIES_THRESHOLD {
        let v2 = v * v;
        1.0 - v2 / 6.0 + v2 * v2 / 120.0
    } else {
        v.sin() / v
    }
}

/// `2 (1 - cos v) / v^2`, equal to 1 at the origin.
pub fn triangle_cf(v: f64) -> f64 {
    if v.abs() < SERIES_THRESHOLD {
        let v2 = v * v;
        1.0 - v2 / 12.0 + v2 * v2 / 360.0
    } else {
        // half-angle form avoids the cancellation in 1 - cos v
        let s = sinc(0.5 * v);
        s * s
    }
}

fn check_y(y: f64) -> Result<()> {
    if (0.0..=1.0).contains(&y) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "gap parameter y must lie in [0, 1], got {y}"
        )))
    }
}

/// Limit characteristic function of `delta_tilde(t, x)` for fixed `x`:
/// `(sin(u y) + sin(u (1-y))) / u`.
pub fn cf_delta_tilde_fixed_x(u: f64, y: f64) -> Result<f64> {
    check_y(y)?;
    ensure_finite("u", u)?;
    Ok(y * sinc(u * y) + (1.0 - y) * sinc(u * (1.0 - y)))
}

/// Limit characteristic function of `delta_tilde(t, x)` with `x` uniform on
/// `[-1/2, 1/2]`: `2 (1 - cos u) / u^2`.
pub fn cf_delta_tilde_uniform(u: f64) -> f64 {
    triangle_cf(u)
}

/// Limit law for diagonal translations `X = (x, ..., x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagonalLimitLaw {
    d: usize,
    y: f64,
    b: f64,
}

impl DiagonalLimitLaw {
    pub fn new(d: usize, y: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("dimension d must be at least 1".into()));
        }
        check_y(y)?;
        Ok(Self {
            d,
            y,
            b: d as f64 * pow2(d - 1),
        })
    }

    /// Law for the diagonal translation with coordinate `x0`.
    pub fn from_translation(d: usize, x0: f64) -> Result<Self> {
        Self::new(d, gap_y(x0)?)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    /// Support scale `d 2^(d-1)`.
    pub fn scale(&self) -> f64 {
        self.b
    }

    pub fn cf(&self, u: f64) -> Result<f64> {
        cf_delta_tilde_fixed_x(self.b * u, self.y)
    }

    /// Mixture of `U[-b y, b y]` (weight `y`) and `U[-b(1-y), b(1-y)]`
    /// (weight `1-y`).
    pub fn pdf(&self, z: f64) -> f64 {
        let (w1, w2) = self.half_widths();
        // a zero-width component carries no mass
        let ind = |w: f64| if w > 0.0 && z.abs() <= w { 1.0 } else { 0.0 };
        (ind(w1) + ind(w2)) / (2.0 * self.b)
    }

    pub fn cdf(&self, z: f64) -> f64 {
        let (w1, w2) = self.half_widths();
        let v = 0.5 + (z.clamp(-w1, w1) + z.clamp(-w2, w2)) / (2.0 * self.b);
        v.clamp(0.0, 1.0)
    }

    pub fn variance(&self) -> f64 {
        let y = self.y;
        self.b * self.b * (y.powi(3) + (1.0 - y).powi(3)) / 3.0
    }

    fn half_widths(&self) -> (f64, f64) {
        (self.b * self.y, self.b * (1.0 - self.y))
    }
}

/// Limit law for independent `U[-1/2, 1/2]` translation coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IidUniformLimitLaw {
    d: usize,
    s: f64,
    n: usize,
}

impl IidUniformLimitLaw {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 || d > MAX_IRWIN_HALL_DIM {
            return Err(Error::Domain(format!(
                "dimension must lie in 1..={MAX_IRWIN_HALL_DIM}, got {d}"
            )));
        }
        Ok(Self {
            d,
            s: pow2(d - 1),
            n: 2 * d,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Per-axis scale `2^(d-1)`.
    pub fn scale(&self) -> f64 {
        self.s
    }

    /// Number of uniform summands, `2d`.
    pub fn summands(&self) -> usize {
        self.n
    }

    pub fn cf(&self, u: f64) -> f64 {
        cf_delta_tilde_uniform(self.s * u).powi(self.d as i32)
    }

    /// `(1/s) f_IH(z/s + d; 2d)`.
    pub fn pdf(&self, z: f64) -> f64 {
        irwin_hall_pdf(z / self.s + self.d as f64, self.n) / self.s
    }

    pub fn cdf(&self, z: f64) -> f64 {
        irwin_hall_cdf(z / self.s + self.d as f64, self.n)
    }

    pub fn variance(&self) -> f64 {
        self.d as f64 * pow2(2 * (self.d - 1)) / 6.0
    }
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => {
            let (l, r) = xs.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// `sum_{k=0}^{floor x} (-1)^k C(n, k) (x - k)^p`.
fn alternating_sum(x: f64, n: usize, p: usize) -> f64 {
    let top = (x.floor() as usize).min(n);
    let terms: Vec<f64> = (0..=top)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(n, k) * (x - k as f64).powi(p as i32)
        })
        .collect();
    pairwise_sum(&terms)
}

/// Density of the sum of `n` independent `U[0, 1]` variables.
pub fn irwin_hall_pdf(x: f64, n: usize) -> f64 {
    let nf = n as f64;
    if n == 0 || !(0.0..=nf).contains(&x) {
        return 0.0;
    }
    if n == 1 {
        return 1.0;
    }
    let x = x.min(nf - x);
    (alternating_sum(x, n, n - 1) / factorial(n - 1)).max(0.0)
}

/// CDF of the sum of `n` independent `U[0, 1]` variables.
pub fn irwin_hall_cdf(x: f64, n: usize) -> f64 {
    let nf = n as f64;
    if n == 0 || x <= 0.0 {
        return 0.0;
    }
    if x >= nf {
        return 1.0;
    }
    let lower = |v: f64| (alternating_sum(v, n, n) / factorial(n)).clamp(0.0, 1.0);
    if x <= 0.5 * nf {
        lower(x)
    } else {
        1.0 - lower(nf - x)
    }
}

/// Either of the two limit laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum LimitLaw {
    Diagonal(DiagonalLimitLaw),
    IidUniform(IidUniformLimitLaw),
}

impl LimitLaw {
    pub fn diagonal(d: usize, x0: f64) -> Result<Self> {
        DiagonalLimitLaw::from_translation(d, x0).map(Self::Diagonal)
    }

    pub fn iid_uniform(d: usize) -> Result<Self> {
        IidUniformLimitLaw::new(d).map(Self::IidUniform)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Diagonal(l) => l.dim(),
            Self::IidUniform(l) => l.dim(),
        }
    }

    pub fn cf(&self, u: f64) -> Result<f64> {
        match self {
            Self::Diagonal(l) => l.cf(u),
            Self::IidUniform(l) => {
                ensure_finite("u", u)?;
                Ok(l.cf(u))
            }
        }
    }

    pub fn pdf(&self, z: f64) -> f64 {
        match self {
            Self::Diagonal(l) => l.pdf(z),
            Self::IidUniform(l) => l.pdf(z),
        }
    }

    pub fn cdf(&self, z: f64) -> f64 {
        match self {
            Self::Diagonal(l) => l.cdf(z),
            Self::IidUniform(l) => l.cdf(z),
        }
    }

    /// Closed interval carrying all the mass.
    pub fn support(&self) -> (f64, f64) {
        let hi = match self {
            Self::Diagonal(l) => l.b * l.y.max(1.0 - l.y),
            Self::IidUniform(l) => l.s * l.d as f64,
        };
        (-hi, hi)
    }

    /// Sorted points where the density is not smooth (including the support
    /// endpoints).
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = match self {
            Self::Diagonal(l) => {
                let (w1, w2) = l.half_widths();
                vec![-w1, w1, -w2, w2]
            }
            Self::IidUniform(l) => (0..=l.n).map(|k| l.s * (k as f64 - l.d as f64)).collect(),
        };
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// `(mean, variance)`; both laws are symmetric, so the mean is 0.
    pub fn moments(&self) -> (f64, f64) {
        let var = match self {
            Self::Diagonal(l) => l.variance(),
            Self::IidUniform(l) => l.variance(),
        };
        (0.0, var)
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Diagonal(l) => format!("diagonal(d={}, y={})", l.d, l.y),
            Self::IidUniform(l) => format!("iid_uniform(d={})", l.d),
        }
    }

    pub fn pdf_table(&self, steps: usize) -> Result<CurveTable> {
        let z = self.support_grid(steps)?;
        let v = z.iter().map(|&z| self.pdf(z)).collect();
        CurveTable::new(CurveKind::Pdf, z, v)
    }

    pub fn cdf_table(&self, steps: usize) -> Result<CurveTable> {
        let z = self.support_grid(steps)?;
        let v = z.iter().map(|&z| self.cdf(z)).collect();
        CurveTable::new(CurveKind::Cdf, z, v)
    }

    pub fn cf_table(&self, u_grid: &[f64]) -> Result<CurveTable> {
        let v = u_grid.iter().map(|&u| self.cf(u)).collect::<Result<_>>()?;
        CurveTable::new(CurveKind::Cf, u_grid.to_vec(), v)
    }

    fn support_grid(&self, steps: usize) -> Result<Vec<f64>> {
        if steps < 2 {
            return Err(Error::Argument(format!(
                "a curve needs at least 2 points, got {steps}"
            )));
        }
        let (lo, hi) = self.support();
        if hi <= lo {
            // y = 1/2 never collapses; only reachable for a zero-width law
            return Err(Error::Argument("law has degenerate support".into()));
        }
        Ok(linspace(lo, hi, steps))
    }
}

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Cf,
    Pdf,
    Cdf,
}

/// A tabulated curve (characteristic function, density or CDF).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveTable {
    pub kind: CurveKind,
    pub abscissae: Vec<f64>,
    pub values: Vec<f64>,
}

impl CurveTable {
    pub fn new(kind: CurveKind, abscissae: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if abscissae.len() != values.len() {
            return Err(Error::Argument(format!(
                "curve has {} abscissae but {} values",
                abscissae.len(),
                values.len()
            )));
        }
        if abscissae.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Argument(
                "curve abscissae must be strictly increasing".into(),
            ));
        }
        match kind {
            CurveKind::Pdf if values.iter().any(|&v| !(v >= 0.0)) => {
                return Err(Error::Argument(
                    "density values must be non-negative".into(),
                ));
            }
            CurveKind::Cdf
                if values.iter().any(|v| !(0.0..=1.0).contains(v))
                    || values.windows(2).any(|w| w[1] < w[0]) =>
            {
                return Err(Error::Argument(
                    "cdf values must be non-decreasing in [0, 1]".into(),
                ));
            }
            _ => {}
        }
        Ok(Self {
            kind,
            abscissae,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            // Chebyshev initial guess, then Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite quadrature settings for [`cf_numeric_from_density`].
#[derive(Debug, Clone)]
pub struct QuadratureConfig {
    pub rule: GaussLegendre,
    /// Upper bound on `|u| * panel width`.
    pub max_phase_per_panel: f64,
    pub min_panels_per_segment: usize,
    /// Largest accepted difference between the `m`- and `2m`-panel estimates.
    pub tolerance: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rule: GaussLegendre::new(10),
            max_phase_per_panel: 1.0,
            min_panels_per_segment: 2,
            tolerance: 1e-11,
        }
    }
}

/// Integral of `f` over `[breakpoints[0], breakpoints[last]]`, splitting each
/// segment between consecutive breakpoints into `panels` equal panels.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(
    rule: &GaussLegendre,
    f: &F,
    breakpoints: &[f64],
    panels: impl Fn(f64) -> usize,
) -> f64 {
    breakpoints
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let m = panels(b - a).max(1);
            let h = (b - a) / m as f64;
            (0..m)
                .map(|j| rule.integrate(f, a + h * j as f64, a + h * (j + 1) as f64))
                .sum::<f64>()
        })
        .sum()
}

/// `int cos(u z) f(z) dz` over the support described by `breakpoints`.
///
/// The integral is evaluated twice, with `m` and `2m` panels per segment; a
/// disagreement above `config.tolerance` is reported as a numeric error.
pub fn cf_numeric_from_density<F: Fn(f64) -> f64>(
    density: F,
    breakpoints: &[f64],
    u: f64,
    config: &QuadratureConfig,
) -> Result<f64> {
    ensure_finite("u", u)?;
    if breakpoints.len() < 2 || breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Argument(
            "breakpoints must be a strictly increasing sequence of at least two points".into(),
        ));
    }
    let integrand = |z: f64| (u * z).cos() * density(z);
    let panels = |len: f64| {
        let by_phase = (len * u.abs() / config.max_phase_per_panel).ceil() as usize;
        by_phase.max(config.min_panels_per_segment)
    };
    let coarse = integrate_piecewise(&config.rule, &integrand, breakpoints, panels);
    let fine = integrate_piecewise(&config.rule, &integrand, breakpoints, |len| 2 * panels(len));
    let estimate = (fine - coarse).abs();
    if estimate > config.tolerance {
        return Err(Error::Numeric(format!(
            "quadrature at u = {u} did not converge: estimated error {estimate:e} exceeds {:e}",
            config.tolerance
        )));
    }
    Ok(fine)
}
