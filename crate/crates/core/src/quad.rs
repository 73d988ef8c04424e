//! Adaptive Gauss-Kronrod (7/15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Integral of `f` over `[a, b]` to `max(abs_tol, rel_tol |I|)`; returns `(value, error estimate)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<(f64, f64)> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    let mut parts = vec![(a, b, kronrod(&f, a, b))];
    for _ in 0..20_000 {
        let total: f64 = parts.iter().map(|p| p.2 .0).sum();
        let err: f64 = parts.iter().map(|p| p.2 .1).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok((total, err));
        }
        let (k, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .expect("non-empty");
        let (lo, hi, _) = parts.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        parts.push((lo, mid, kronrod(&f, lo, mid)));
        parts.push((mid, hi, kronrod(&f, mid, hi)));
    }
    let total: f64 = parts.iter().map(|p| p.2 .0).sum();
    let err: f64 = parts.iter().map(|p| p.2 .1).sum();
    if err <= abs_tol.max(rel_tol * total.abs()) {
        Ok((total, err))
    } else {
        Err(Error::Quadrature(format!("on [{a}, {b}]: estimate {total:e} with error {err:e}")))
    }
}

/// Sum of [`integrate`] over consecutive break points.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, pts: &[f64], abs_tol: f64, rel_tol: f64) -> Result<f64> {
    let mut s = 0.0;
    for w in pts.windows(2) {
        s += integrate(&f, w[0], w[1], abs_tol, rel_tol)?.0;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_gaussian() {
        let (v, _) = integrate(|x| x.powi(6), -1.0, 1.0, 1e-14, 1e-14).unwrap();
        assert!((v - 2.0 / 7.0).abs() < 1e-14);
        let (v, _) = integrate(|x| (-x * x).exp(), -10.0, 10.0, 1e-13, 1e-13).unwrap();
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-12);
        let (v, _) = integrate(|x| x.sqrt(), 0.0, 1.0, 1e-12, 1e-12).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-11);
    }
}
