//! Test functions that drive the Rayleigh quotient to zero where the Poincare
//! inequality fails.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{ppow, Pair};
use crate::quad::integrate;

/// `int_x^1 s^(-2 d) ds` for `0 < x <= 1`.
pub fn eta(d1: f64, x: f64) -> f64 {
    let q = 1.0 - 2.0 * d1;
    if q == 0.0 {
        -x.ln()
    } else {
        -(q * x.ln()).exp_m1() / q
    }
}

fn check_chi_n(d1: f64, n: f64) -> Result<()> {
    if !(0.0..1.0).contains(&d1) {
        return invalid(format!("d1 = {d1} must lie in [0, 1)"));
    }
    if !(n >= 2.0) {
        return invalid(format!("n = {n} must be at least 2"));
    }
    Ok(())
}

/// Odd cut-off function: 0 on `|x| <= 1/n`, `1 - eta(x)/eta(1/n)` on `[1/n, 1]`, 1 beyond.
pub fn chi_n_value(d1: f64, n: f64, x: f64) -> f64 {
    let a = x.abs();
    let v = if a <= 1.0 / n {
        0.0
    } else if a >= 1.0 {
        1.0
    } else {
        1.0 - eta(d1, a) / eta(d1, 1.0 / n)
    };
    v.copysign(x)
}

pub fn chi_n(d1: f64, n: f64, grid: &[f64]) -> Result<Vec<f64>> {
    check_chi_n(d1, n)?;
    Ok(grid.iter().map(|&x| chi_n_value(d1, n, x)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayleighReport {
    pub energy: f64,
    pub variance: f64,
    pub ratio: f64,
}

/// Energy `int |x|^(2 d1) chi'^2` and variance of `chi_n` on `[-1, 1]`.
pub fn chi_n_rayleigh(d1: f64, n: f64) -> Result<RayleighReport> {
    check_chi_n(d1, n)?;
    let energy = 2.0 / eta(d1, 1.0 / n);
    // odd, so the mean vanishes
    let a = 1.0 / n;
    let f = |x: f64| {
        let v = chi_n_value(d1, n, x);
        v * v
    };
    // geometric break points resolve the logarithmic layer near 1/n
    let mut pts = vec![a];
    let mut x = a;
    while x < 1.0 {
        x = (x * 4.0).min(1.0);
        pts.push(x);
    }
    let mut half = 0.0;
    for w in pts.windows(2) {
        half += integrate(f, w[0], w[1], 1e-15, 1e-13)?.0;
    }
    let variance = 2.0 * half;
    Ok(RayleighReport { energy, variance, ratio: energy / variance })
}

/// Closed form of the `chi_n` variance at `d1 = 1/2`.
pub fn chi_n_variance_half(n: f64) -> f64 {
    let l = n.ln();
    2.0 * ((1.0 - 1.0 / n) + (2.0 / l) * (-1.0 + (l + 1.0) / n) + (1.0 / (l * l)) * (2.0 - (l * l + 2.0 * l + 2.0) / n))
}

fn check_chi_log(d1: f64, d1p: f64, t: f64) -> Result<()> {
    if !(0.0..0.5).contains(&d1) {
        return invalid(format!("d1 = {d1} must lie in [0, 1/2)"));
    }
    if !(0.5..1.0).contains(&d1p) {
        return invalid(format!("d1p = {d1p} must lie in [1/2, 1)"));
    }
    if !(t > 0.0) {
        return invalid("t must be positive");
    }
    Ok(())
}

/// Logarithmic profile for `d1p = 1/2`, odd saturating ramp for `d1p > 1/2`.
pub fn chi_log_value(d1: f64, d1p: f64, x: f64) -> f64 {
    let a = x.abs();
    let q = 1.0 - 2.0 * d1;
    let v = if d1p == 0.5 {
        if a <= 1.0 {
            a.powf(q) / q
        } else {
            1.0 / q + a.ln()
        }
    } else if a <= 1.0 {
        (FRAC_PI_2 * a).sin()
    } else {
        1.0
    };
    v.copysign(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiLogReport {
    pub t: f64,
    /// Half-width `t^(alpha, alpha')` of the interval.
    pub half_width: f64,
    pub energy: f64,
    pub variance: f64,
    pub ratio: f64,
    /// `ratio * t^2`, the quantity bounded below when the inequality holds.
    pub normalized: f64,
}

pub fn chi_log(d1: f64, d1p: f64, t: f64) -> Result<ChiLogReport> {
    check_chi_log(d1, d1p, t)?;
    let a = Pair::new(1.0 / (1.0 - d1), 1.0 / (1.0 - d1p));
    let tt = ppow(t, a);
    let q = 1.0 - 2.0 * d1;
    let (energy, variance) = if d1p == 0.5 {
        // int |x|^(-2 d1, -1) and int chi^2 over (-T, T)
        let (e, v) = if tt <= 1.0 {
            (tt.powf(q) / q, tt.powf(2.0 * q + 1.0) / (q * q * (2.0 * q + 1.0)))
        } else {
            let g = |x: f64| {
                let s = 1.0 / q + x.ln();
                x * (s * s - 2.0 * s + 2.0)
            };
            (1.0 / q + tt.ln(), 1.0 / (q * q * (2.0 * q + 1.0)) + g(tt) - g(1.0))
        };
        (2.0 * e, 2.0 * v)
    } else {
        let core = |x: f64| ppow(x, Pair::new(2.0 * d1, 2.0 * d1p)) * (FRAC_PI_2 * (FRAC_PI_2 * x).cos()).powi(2);
        let e = integrate(core, 0.0, tt.min(1.0), 1e-14, 1e-12)?.0;
        let v = if tt <= 1.0 {
            0.5 * tt - (std::f64::consts::PI * tt).sin() / (2.0 * std::f64::consts::PI)
        } else {
            0.5 + (tt - 1.0)
        };
        (2.0 * e, 2.0 * v)
    };
    let ratio = energy / variance;
    Ok(ChiLogReport { t, half_width: tt, energy, variance, ratio, normalized: ratio * t * t })
}
