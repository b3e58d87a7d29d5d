//! Exact counting of `Z^d` points in a dilated, translated hypercube and the
//! error functionals built on top of it.
//!
//! The box is `C(a) = [-a, a]^d`. Its dilation by `t` and translation by `X`
//! meets the lattice in a product of per-axis integer intervals, so the count
//! factorises axis by axis:
//!
//! ```text
//! N = prod_i ( floor(a t + x_i) - ceil(-a t + x_i) + 1 )
//! ```
//!
//! All floors and ceilings are taken on the computed binary64 sums
//! `a t + x_i` and `-a t + x_i`. Inputs where one of these sums lies within
//! [`BOUNDARY_EPS`] of an integer are reported as boundary-degenerate.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Distance to an integer below which a boundary sum is considered degenerate.
pub const BOUNDARY_EPS: f64 = 1e-9;

/// Default cap on the number of candidate tuples visited by
/// [`count_points_bruteforce`].
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 100_000_000;

/// Dimension and half side length of the hypercube `C(a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    d: usize,
    a: f64,
}

impl BoxSpec {
    pub fn new(d: usize, a: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("dimension d must be at least 1".into()));
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Domain(format!(
                "half side a must be finite and positive, got {a}"
            )));
        }
        Ok(Self { d, a })
    }

    /// The unit-half-side cube `C(1)` in dimension `d`.
    pub fn unit(d: usize) -> Result<Self> {
        Self::new(d, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn half_side(&self) -> f64 {
        self.a
    }

    fn is_unit(&self) -> bool {
        self.a == 1.0
    }
}

/// Translation vector `X = (x_1, ..., x_d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Translation(Vec<f64>);

impl Translation {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Argument(
                "translation must have at least one coordinate".into(),
            ));
        }
        for (i, &x) in coords.iter().enumerate() {
            ensure_finite(&format!("x_{}", i + 1), x)?;
        }
        Ok(Self(coords))
    }

    /// `X = (x, ..., x)` in dimension `d`.
    pub fn diagonal(d: usize, x: f64) -> Result<Self> {
        Self::new(vec![x; d])
    }

    pub fn origin(d: usize) -> Result<Self> {
        Self::diagonal(d, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

/// Everything known about one `(box, t, X)` instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeCountResult {
    pub t: f64,
    pub count: u128,
    pub volume: f64,
    pub error: f64,
    pub normalized_error: f64,
    /// `Delta(t, X)`; only defined for the unit half side `a = 1`.
    pub delta: Option<f64>,
    /// `delta_tilde(a t, x_i)` for each axis.
    pub per_axis_delta_tilde: Vec<f64>,
    pub boundary_degenerate: bool,
}

/// `{x} = x - floor(x)`, in `[0, 1)`.
pub fn fractional_part(x: f64) -> Result<f64> {
    ensure_finite("x", x)?;
    let f = x - x.floor();
    // x - floor(x) rounds to 1.0 for tiny negative x
    Ok(if f >= 1.0 { 0.0 } else { f })
}

/// Gap parameter `y = |1 - 2{x}|` of the diagonal limit law.
pub fn gap_y(x: f64) -> Result<f64> {
    Ok((1.0 - 2.0 * fractional_part(x)?).abs())
}

fn check_t(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "dilation t must be finite and positive, got {t}"
        )))
    }
}

fn check_dims(box_spec: &BoxSpec, x: &Translation) -> Result<()> {
    if box_spec.dim() == x.dim() {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "translation has {} coordinates but the box has dimension {}",
            x.dim(),
            box_spec.dim()
        )))
    }
}

/// Number of integers in `[-h + x, h + x]`.
fn axis_count(h: f64, x: f64) -> u128 {
    let hi = (h + x).floor();
    let lo = (-h + x).ceil();
    let len = hi - lo + 1.0;
    if len > 0.0 {
        len as u128
    } else {
        0
    }
}

fn near_integer(v: f64) -> bool {
    (v - v.round()).abs() < BOUNDARY_EPS
}

/// True when some `a t + x_i` or `-a t + x_i` is within [`BOUNDARY_EPS`] of
/// an integer.
pub fn is_boundary_degenerate(box_spec: &BoxSpec, t: f64, x: &Translation) -> bool {
    let h = box_spec.half_side() * t;
    x.coords()
        .iter()
        .any(|&xi| near_integer(h + xi) || near_integer(-h + xi))
}

/// Closed-form count of `Z^d` points in `t C(a) + X`.
pub fn count_points_formula(box_spec: &BoxSpec, t: f64, x: &Translation) -> Result<u128> {
    check_t(t)?;
    check_dims(box_spec, x)?;
    let h = box_spec.half_side() * t;
    x.coords().iter().try_fold(1u128, |acc, &xi| {
        acc.checked_mul(axis_count(h, xi))
            .ok_or_else(|| Error::Resource("lattice count overflows u128".into()))
    })
}

/// Count by visiting every candidate integer tuple of the bounding box.
///
/// Independent of the factorised formula: each tuple is tested coordinate by
/// coordinate against `-a t + x_i <= n_i <= a t + x_i`.
pub fn count_points_bruteforce(
    box_spec: &BoxSpec,
    t: f64,
    x: &Translation,
    budget: u64,
) -> Result<u128> {
    check_t(t)?;
    check_dims(box_spec, x)?;
    let h = box_spec.half_side() * t;
    let bounds: Vec<(f64, f64)> = x.coords().iter().map(|&xi| (-h + xi, h + xi)).collect();
    // truncation plus a margin of two always covers the closed interval
    let ranges: Vec<(i64, i64)> = bounds
        .iter()
        .map(|&(lo, hi)| (lo as i64 - 2, hi as i64 + 2))
        .collect();

    let mut candidates: u64 = 1;
    for &(lo, hi) in &ranges {
        candidates = candidates
            .checked_mul((hi - lo + 1) as u64)
            .filter(|&c| c <= budget)
            .ok_or_else(|| {
                Error::Resource(format!("enumeration exceeds the budget of {budget} tuples"))
            })?;
    }

    let d = ranges.len();
    let mut tuple: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    let mut count: u128 = 0;
    'outer: loop {
        let inside = tuple
            .iter()
            .zip(&bounds)
            .all(|(&n, &(lo, hi))| lo <= n as f64 && n as f64 <= hi);
        if inside {
            count += 1;
        }
        // odometer increment
        let mut axis = 0;
        loop {
            if axis == d {
                break 'outer;
            }
            if tuple[axis] < ranges[axis].1 {
                tuple[axis] += 1;
                break;
            }
            tuple[axis] = ranges[axis].0;
            axis += 1;
        }
    }
    Ok(count)
}

/// `R = N - (2 a t)^d`.
pub fn error_term(box_spec: &BoxSpec, t: f64, x: &Translation) -> Result<f64> {
    let count = count_points_formula(box_spec, t, x)?;
    Ok(count as f64 - volume(box_spec, t))
}

fn volume(box_spec: &BoxSpec, t: f64) -> f64 {
    (2.0 * box_spec.half_side() * t).powi(box_spec.dim() as i32)
}

/// `R / t^(d-1)`.
pub fn normalized_error(box_spec: &BoxSpec, t: f64, x: &Translation) -> Result<f64> {
    let r = error_term(box_spec, t, x)?;
    Ok(r / t.powi(box_spec.dim() as i32 - 1))
}

/// Per-axis discrepancy `floor(t + x) - ceil(-t + x) + 1 - 2t`, in `(-1, 1]`.
pub fn delta_tilde(t: f64, x: f64) -> Result<f64> {
    ensure_finite("t", t)?;
    ensure_finite("x", x)?;
    check_t(t)?;
    Ok(delta_tilde_unchecked(t, x))
}

fn delta_tilde_unchecked(t: f64, x: f64) -> f64 {
    ((t + x).floor() - (-t + x).ceil() + 1.0) - 2.0 * t
}

/// `Delta(t, X) = 2^(d-1) * sum_i delta_tilde(t, x_i)` for the unit cube.
///
/// For other half sides, rescale the dilation to `a t` and use `C(1)`.
pub fn delta(box_spec: &BoxSpec, t: f64, x: &Translation) -> Result<f64> {
    if !box_spec.is_unit() {
        return Err(Error::Argument(format!(
            "delta is defined for a = 1; rescale the dilation to t' = a t = {} and use a unit box",
            box_spec.half_side() * t
        )));
    }
    check_t(t)?;
    check_dims(box_spec, x)?;
    let sum: f64 = x
        .coords()
        .iter()
        .map(|&xi| delta_tilde_unchecked(t, xi))
        .sum();
    Ok(pow2(box_spec.dim() - 1) * sum)
}

pub(crate) fn pow2(k: usize) -> f64 {
    2f64.powi(k as i32)
}

/// Envelope on `|R / t^(d-1) - Delta(t, X)|` valid uniformly in `X`:
///
/// ```text
/// sum_{i=1}^{d-1} 2^(i-1) * ((2t+1)^(d-i) - (2t-1)^(d-i)) / t^(d-i)
/// ```
pub fn reduction_gap_bound(d: usize, t: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::Domain("dimension d must be at least 1".into()));
    }
    if !(t.is_finite() && t >= 0.5) {
        return Err(Error::Domain(format!(
            "gap envelope requires t >= 1/2, got {t}"
        )));
    }
    Ok((1..d)
        .map(|i| {
            let k = (d - i) as i32;
            pow2(i - 1) * ((2.0 * t + 1.0).powi(k) - (2.0 * t - 1.0).powi(k)) / t.powi(k)
        })
        .sum())
}

/// Count, error, normalised error and reductions in one pass.
pub fn count_lattice(box_spec: &BoxSpec, t: f64, x: &Translation) -> Result<LatticeCountResult> {
    let count = count_points_formula(box_spec, t, x)?;
    let volume = volume(box_spec, t);
    let error = count as f64 - volume;
    let normalized_error = error / t.powi(box_spec.dim() as i32 - 1);
    let h = box_spec.half_side() * t;
    let per_axis_delta_tilde: Vec<f64> = x
        .coords()
        .iter()
        .map(|&xi| delta_tilde_unchecked(h, xi))
        .collect();
    let delta = box_spec
        .is_unit()
        .then(|| pow2(box_spec.dim() - 1) * per_axis_delta_tilde.iter().sum::<f64>());
    Ok(LatticeCountResult {
        t,
        count,
        volume,
        error,
        normalized_error,
        delta,
        per_axis_delta_tilde,
        boundary_degenerate: is_boundary_degenerate(box_spec, t, x),
    })
}
