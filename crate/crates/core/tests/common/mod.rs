//! Exact limit law of the reduced statistic when every axis shares one
//! dilation `t` and the translation is uniform on the unit cube.
//!
//! With `w = {2t}`, each axis contributes `1 - w` with probability `w` and
//! `-w` otherwise, so `Delta / 2^(d-1) = K - d w` with `K | w ~ Bin(d, w)` and
//! `w ~ U[0, 1]` in the limit.

#![allow(dead_code)]

use lattice_box::laws::GaussLegendre;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub struct SharedDilationLaw {
    d: usize,
    s: f64,
    rule: GaussLegendre,
}

impl SharedDilationLaw {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            s: 2f64.powi(d as i32 - 1),
            rule: GaussLegendre::new(10),
        }
    }

    pub fn cdf(&self, z: f64) -> f64 {
        let d = self.d;
        let zs = z / self.s;
        // integrands are polynomials of degree d, integrated exactly
        let total: f64 = (0..=d)
            .map(|k| {
                let lo = ((k as f64 - zs) / d as f64).clamp(0.0, 1.0);
                let f = |w: f64| w.powi(k as i32) * (1.0 - w).powi((d - k) as i32);
                binomial(d, k) * self.rule.integrate(&f, lo, 1.0)
            })
            .sum();
        total.clamp(0.0, 1.0)
    }

    pub fn cf(&self, u: f64) -> f64 {
        let v = self.s * u;
        let d = self.d as i32;
        let re = |w: f64| {
            // w e^{iv(1-w)} + (1-w) e^{-ivw}, raised to the d-th power
            let (a, b) = (v * (1.0 - w), -v * w);
            let zr = w * a.cos() + (1.0 - w) * b.cos();
            let zi = w * a.sin() + (1.0 - w) * b.sin();
            let (r, th) = (zr.hypot(zi), zi.atan2(zr));
            r.powi(d) * (f64::from(d) * th).cos()
        };
        let panels = 64 + (v.abs().ceil() as usize) * 4;
        let h = 1.0 / panels as f64;
        (0..panels)
            .map(|i| self.rule.integrate(&re, i as f64 * h, (i + 1) as f64 * h))
            .sum()
    }

    pub fn variance(&self) -> f64 {
        self.d as f64 * 4f64.powi(self.d as i32 - 1) / 6.0
    }
}
